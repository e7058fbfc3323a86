"""Edge resampling ensembles at a chosen total weight."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import InputError, WeightedDigraph
from .seeding import derive_seed, make_rng

__all__ = ["DEFAULT_SAMPLES", "EdgeDistribution", "edge_distribution", "ensemble", "sample_graph"]

DEFAULT_SAMPLES = 300


@dataclass(frozen=True)
class EdgeDistribution:
    """Categorical distribution over the edges of a graph, p_e = w_e / W.

    Weights stay integers; sampling draws a uniform integer in ``[0, W)``
    and locates it in the cumulative weights, so the probabilities are
    exactly the integer ratios.
    """

    graph: WeightedDigraph
    cumulative: np.ndarray

    @property
    def total_weight(self) -> int:
        return int(self.cumulative[-1])

    @property
    def probabilities(self) -> np.ndarray:
        return self.graph.weight / self.total_weight

    def exact_probabilities(self) -> list[Fraction]:
        return [Fraction(int(w), self.total_weight) for w in self.graph.weight]


def edge_distribution(g: WeightedDigraph) -> EdgeDistribution:
    if g.total_weight <= 0:
        raise InputError("cannot resample a graph without edges")
    return EdgeDistribution(g, np.cumsum(g.weight))


def sample_graph(dist: EdgeDistribution, m: int, seed) -> WeightedDigraph:
    """Draw ``m`` edges with replacement; an edge's weight is its draw count.

    The vertex set is the source graph's, so undrawn vertices stay as isolates.
    """
    if m < 0:
        raise InputError("sample size must be non-negative")
    g = dist.graph
    rng = make_rng(seed)
    draws = rng.integers(0, dist.total_weight, size=int(m), dtype=np.int64)
    edge_idx = np.searchsorted(dist.cumulative, draws, side="right")
    counts = np.bincount(edge_idx, minlength=g.n_edges)
    keep = counts > 0
    return WeightedDigraph.from_arrays(g.vertices, g.src[keep], g.dst[keep], counts[keep],
                                       {**g.metadata, "bootstrap_size": int(m)})


def sample_seed(master_seed: int, index: int) -> int:
    return derive_seed(master_seed, "bootstrap", index)


def ensemble(g: WeightedDigraph, m: int | None = None, n_samples: int = DEFAULT_SAMPLES,
             master_seed: int = 0) -> list[WeightedDigraph]:
    """``n_samples`` resampled graphs of total weight ``m`` (default: ``g``'s own).

    Sample ``k`` uses its own stream derived from ``(master_seed, k)``, so
    any subset of samples can be regenerated independently.
    """
    dist = edge_distribution(g)
    size = dist.total_weight if m is None else int(m)
    return [sample_graph(dist, size, sample_seed(master_seed, k)) for k in range(n_samples)]
