"""Level mixing matrices, within-organization densities, and neighborhood overlaps."""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .model import DegenerateAnalysisError, InputError, Level, OrgType, Roster, WeightedDigraph
from .temporal import MeanDifference, group_mean_difference

__all__ = [
    "LEVEL_AGGREGATES",
    "MixingMatrix",
    "OrgSummary",
    "aggregate_contrast",
    "mixing_matrix",
    "org_density",
    "org_mean_overlap",
    "overlap",
]

# Level unions used for the official/personal and main/side contrasts.
LEVEL_AGGREGATES: dict[str, tuple[Level, ...]] = {
    "official": (Level.OrgMain, Level.OrgSide),
    "personal": (Level.IndMain, Level.IndSide),
    "main": (Level.OrgMain, Level.IndMain),
    "side": (Level.OrgSide, Level.IndSide),
}


@dataclass(frozen=True)
class MixingMatrix:
    """Directed edge probabilities between levels (rows send, columns receive).

    ``probabilities`` is nan where the dyad count is zero; ``undefined``
    marks those cells.
    """

    probabilities: np.ndarray
    counts: np.ndarray
    dyads: np.ndarray
    level_sizes: np.ndarray

    @property
    def undefined(self) -> np.ndarray:
        return self.dyads == 0


def mixing_matrix(g: WeightedDigraph, roster: Roster) -> MixingMatrix:
    """Binary directed edge counts per ordered level pair over directed dyads.

    Organization membership is ignored. Vertices not in the roster are skipped.
    """
    lvl = np.array([roster[v].level.index if v in roster else -1 for v in g.vertices], dtype=np.int64)
    sizes = np.bincount(lvl[lvl >= 0], minlength=4)
    counts = np.zeros((4, 4), dtype=np.int64)
    if g.n_edges:
        a, b = lvl[g.src], lvl[g.dst]
        ok = (a >= 0) & (b >= 0)
        np.add.at(counts, (a[ok], b[ok]), 1)
    dyads = np.outer(sizes, sizes)
    dyads[np.diag_indices(4)] = sizes * (sizes - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(dyads > 0, counts / np.maximum(dyads, 1), np.nan)
    return MixingMatrix(probs, counts, dyads, sizes)


@dataclass(frozen=True)
class OrgSummary:
    """Per-organization values and their unweighted mean over organizations."""

    per_org: dict[str, float]
    mean: float


def _org_accounts(g: WeightedDigraph, roster: Roster, level: Level) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for org, accounts in roster.members(level).items():
        idx = [g.index(a) for a in accounts if a in g]
        if len(idx) >= 2:
            groups[org] = idx
    if not groups:
        raise DegenerateAnalysisError(f"density undefined at level {level.value}: "
                                      "no organization has two or more accounts")
    return groups


def org_density(g: WeightedDigraph, roster: Roster, level: Level) -> OrgSummary:
    """Share of directed dyads among an organization's level accounts that carry
    an edge; organizations with fewer than two accounts are skipped."""
    level = Level.parse(level)
    groups = _org_accounts(g, roster, level)
    adj = g.adjacency
    per_org = {}
    for org, idx in groups.items():
        sub = adj[idx][:, idx]
        n = len(idx)
        per_org[org] = float(sub.count_nonzero()) / (n * (n - 1))
    return OrgSummary(per_org, float(np.mean(list(per_org.values()))))


def _row(sym, i):
    lo, hi = sym.indptr[i], sym.indptr[i + 1]
    return sym.indices[lo:hi], sym.data[lo:hi]


def _pair_overlap(sym, i: int, j: int, mode: str) -> float:
    ni, wi = _row(sym, i)
    nj, wj = _row(sym, j)
    common, ci, cj = np.intersect1d(ni, nj, assume_unique=True, return_indices=True)
    if mode == "weighted":
        s_i, s_j = wi.sum(), wj.sum()
        pos = np.searchsorted(ni, j)
        w_ij = wi[pos] if pos < len(ni) and ni[pos] == j else 0
        denom = s_i + s_j + 2 * w_ij
        if denom == 0:
            return 0.0
        return float((wi[ci].sum() + wj[cj].sum()) / denom)
    n_ij = len(common)
    if n_ij == 0:
        return 0.0
    k_i, k_j = len(ni), len(nj)
    adjacent = np.any(ni == j)
    denom = (k_i - 1) + (k_j - 1) - n_ij if adjacent else k_i + k_j - n_ij
    return float(n_ij / denom)


def overlap(g: WeightedDigraph, i: str, j: str, mode: str = "weighted") -> float:
    """Neighborhood overlap of two vertices on the symmetrized weight view.

    ``weighted``: common-neighbor weight of both vertices over
    ``s_i + s_j + 2 w_ij``. ``unweighted``: common neighbors over the union of
    neighborhoods, excluding the pair's own edge when the two are adjacent.
    Pairs without common neighbors give 0.
    """
    if mode not in ("weighted", "unweighted"):
        raise InputError(f"unknown overlap mode {mode!r}")
    a, b = g.index(i), g.index(j)
    if a == b:
        raise InputError("overlap needs two distinct vertices")
    return _pair_overlap(g.symmetrized, a, b, mode)


def org_mean_overlap(g: WeightedDigraph, roster: Roster, level: Level, mode: str = "weighted") -> OrgSummary:
    """Mean overlap over all account pairs inside each organization, then over organizations."""
    if mode not in ("weighted", "unweighted"):
        raise InputError(f"unknown overlap mode {mode!r}")
    level = Level.parse(level)
    groups = _org_accounts(g, roster, level)
    sym = g.symmetrized
    per_org = {}
    for org, idx in groups.items():
        vals = [_pair_overlap(sym, a, b, mode) for a, b in itertools.combinations(idx, 2)]
        per_org[org] = float(np.mean(vals))
    return OrgSummary(per_org, float(np.mean(list(per_org.values()))))


def aggregate_contrast(values: Mapping[str, float], roster: Roster, first, second,
                       org_type: OrgType | None = None, confidence: float = 0.95) -> MeanDifference:
    """Difference of mean per-account values between two level aggregates.

    ``first``/``second`` are keys of :data:`LEVEL_AGGREGATES` or iterables of
    levels; ``org_type`` restricts both sides to one organization type.
    """
    def levels(spec):
        if isinstance(spec, str) and spec in LEVEL_AGGREGATES:
            return set(LEVEL_AGGREGATES[spec])
        if isinstance(spec, (str, Level)):
            return {Level.parse(spec)}
        return {Level.parse(x) for x in spec}

    la, lb = levels(first), levels(second)
    xs, ys = [], []
    for acc, val in values.items():
        entry = roster.get(acc)
        if entry is None or (org_type is not None and entry.org_type is not OrgType.parse(org_type)):
            continue
        if entry.level in la:
            xs.append(val)
        if entry.level in lb:
            ys.append(val)
    return group_mean_difference(xs, ys, confidence)
