"""Significance filtering of weighted digraphs.

Null model: every unit of weight is an independent draw that leaves vertex
``i`` with probability ``s_out(i) / W`` and lands on ``j`` with probability
``s_in(j) / W``. The weight of an edge is then Binomial(W, s_out s_in / W^2)
with mean ``s_out(i) s_in(j) / W``; an edge's p-value is the upper tail at its
observed weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .model import InputError, WeightedDigraph, strengths

__all__ = ["EdgeScore", "binomial_upper_tail", "extract_backbone", "score_edges"]


@dataclass(frozen=True)
class EdgeScore:
    src: str
    dst: str
    weight: int
    expected_weight: float
    p_value: float


def binomial_upper_tail(k, n, p):
    """P[X >= k] for X ~ Binomial(n, p), via the regularized incomplete beta."""
    k = np.asarray(k, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    p = np.asarray(p, dtype=float)
    tail = special.bdtrc(np.maximum(k - 1, 0), n, p)
    return np.where(k <= 0, 1.0, np.where(p >= 1.0, (k <= n).astype(float), tail))


def _scores(g: WeightedDigraph):
    W = g.total_weight
    if W <= 0:
        return np.zeros(0), np.zeros(0)
    st = strengths(g)
    s_out = st.out_strength[g.src].astype(float)
    s_in = st.in_strength[g.dst].astype(float)
    expected = s_out * s_in / W
    p_edge = np.minimum(expected / W, 1.0)
    pvals = binomial_upper_tail(g.weight, W, p_edge)
    return expected, np.clip(pvals, 0.0, 1.0)


def score_edges(g: WeightedDigraph) -> list[EdgeScore]:
    """Expected weight and upper-tail p-value of every edge, in (src, dst) order."""
    expected, pvals = _scores(g)
    return [EdgeScore(s, d, w, float(e), float(p))
            for (s, d, w), e, p in zip(g.edges(), expected, pvals)]


def extract_backbone(g: WeightedDigraph, alpha: float = 0.1) -> WeightedDigraph:
    """Binary backbone: keep edges with p < alpha, set their weights to 1.

    All vertices are kept.
    """
    if not (0 < alpha <= 1):
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    _, pvals = _scores(g)
    keep = pvals < alpha
    if alpha == 1.0:
        keep = np.ones_like(keep, dtype=bool)
    return WeightedDigraph.from_arrays(g.vertices, g.src[keep], g.dst[keep],
                                       np.ones(int(keep.sum()), dtype=np.int64),
                                       {**g.metadata, "backbone_alpha": alpha})
