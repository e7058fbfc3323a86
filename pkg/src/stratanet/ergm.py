"""Exponential random graph models on undirected binary organization graphs.

Terms
-----
edges
    number of edges.
sector_activity(s)
    sum over edges of the number of endpoints in sector ``s``.
homophily
    edges whose endpoints share a sector.
closure
    edges whose endpoints have at least one common neighbor (edgewise
    shared partners >= 1).

Estimation is by maximum pseudolikelihood: a logistic regression of each
dyad's state on its change statistics, fitted by iteratively reweighted least
squares. For dyad-independent term sets this is the exact MLE; with the
closure term it is the usual MPLE approximation.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .model import CollapsedGraph, DegenerateAnalysisError, InputError, Roster, Sector
from .seeding import make_rng

__all__ = [
    "CLOSURE",
    "EDGES",
    "HOMOPHILY",
    "ErgmEnsemble",
    "ErgmFit",
    "ErgmTerm",
    "bootstrap_ergm",
    "change_statistics",
    "count_statistics",
    "default_terms",
    "degeneracy_report",
    "dyad_change_matrix",
    "fit_mple",
    "sector_activity",
    "simulate_ergm",
]


@dataclass(frozen=True)
class ErgmTerm:
    kind: str
    sector: Sector | None = None

    def __post_init__(self):
        if self.kind not in ("edges", "sector_activity", "homophily", "closure"):
            raise InputError(f"unknown ERGM term {self.kind!r}")
        if (self.kind == "sector_activity") != (self.sector is not None):
            raise InputError("sector_activity needs a sector and only it takes one")

    @property
    def name(self) -> str:
        return f"sector_activity.{self.sector.value}" if self.sector else self.kind

    @property
    def dyad_independent(self) -> bool:
        return self.kind != "closure"


EDGES = ErgmTerm("edges")
HOMOPHILY = ErgmTerm("homophily")
CLOSURE = ErgmTerm("closure")


def sector_activity(sector) -> ErgmTerm:
    return ErgmTerm("sector_activity", Sector.parse(sector))


def default_terms(sectors: Sequence) -> list[ErgmTerm]:
    """Edges, activity for every present sector but the first (reference), homophily, closure."""
    present = []
    for s in sectors:
        s = Sector.parse(s)
        if s not in present:
            present.append(s)
    ordered = [s for s in Sector if s in present]
    return [EDGES, *(sector_activity(s) for s in ordered[1:]), HOMOPHILY, CLOSURE]


def _adjacency(graph) -> np.ndarray:
    if isinstance(graph, CollapsedGraph):
        a = graph.adjacency()
    else:
        a = np.asarray(graph.toarray() if hasattr(graph, "toarray") else graph)
    a = (np.asarray(a) != 0).astype(np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise InputError("ERGM graphs must be undirected")
    np.fill_diagonal(a, 0)
    return a


def _sector_codes(graph, sectors, n: int) -> np.ndarray:
    if isinstance(sectors, Roster):
        if not isinstance(graph, CollapsedGraph):
            raise InputError("a roster sector map needs a CollapsedGraph")
        seq = [sectors.sector(v) for v in graph.vertices]
    elif isinstance(sectors, Mapping):
        if not isinstance(graph, CollapsedGraph):
            raise InputError("a mapping sector map needs a CollapsedGraph")
        try:
            seq = [sectors[v] for v in graph.vertices]
        except KeyError as exc:
            raise InputError(f"missing sector for vertex {exc.args[0]!r}") from None
    else:
        seq = list(sectors)
    if len(seq) != n:
        raise InputError("sector map does not cover every vertex")
    if any(s is None for s in seq):
        raise InputError("missing sector")
    order = list(Sector)
    return np.array([order.index(Sector.parse(s)) for s in seq], dtype=np.int64)


def _closed_edges(a: np.ndarray) -> int:
    c = a @ a
    return int(((a > 0) & (c > 0)).sum() // 2)


def count_statistics(graph, terms: Sequence[ErgmTerm], sectors) -> np.ndarray:
    """Statistic vector h(G) in the order of ``terms``."""
    a = _adjacency(graph)
    codes = _sector_codes(graph, sectors, len(a))
    iu = np.triu_indices(len(a), 1)
    present = a[iu] > 0
    ci, cj = codes[iu[0]][present], codes[iu[1]][present]
    out = []
    for t in terms:
        if t.kind == "edges":
            out.append(present.sum())
        elif t.kind == "sector_activity":
            k = list(Sector).index(t.sector)
            out.append((ci == k).sum() + (cj == k).sum())
        elif t.kind == "homophily":
            out.append((ci == cj).sum())
        else:
            out.append(_closed_edges(a))
    return np.array(out, dtype=float)


def _closure_change(a: np.ndarray, i: int, j: int) -> int:
    """Closure change for adding (i, j) to ``a`` with a[i, j] == 0."""
    common = np.flatnonzero(a[i] & a[j])
    delta = int(len(common) > 0)
    for k in common:
        # the edge (i, k) gains partner j; it becomes closed if it had none
        if not np.any(a[i] & a[k]):
            delta += 1
        if not np.any(a[j] & a[k]):
            delta += 1
    return delta


def change_statistics(graph, dyad: tuple[int, int], terms: Sequence[ErgmTerm], sectors) -> np.ndarray:
    """h(G + ij) - h(G - ij) for the dyad of vertex indices ``(i, j)``."""
    a = _adjacency(graph).copy()
    codes = _sector_codes(graph, sectors, len(a))
    i, j = map(int, dyad)
    if i == j:
        raise InputError("a dyad needs two distinct vertices")
    a[i, j] = a[j, i] = 0
    out = []
    for t in terms:
        if t.kind == "edges":
            out.append(1)
        elif t.kind == "sector_activity":
            k = list(Sector).index(t.sector)
            out.append(int(codes[i] == k) + int(codes[j] == k))
        elif t.kind == "homophily":
            out.append(int(codes[i] == codes[j]))
        else:
            out.append(_closure_change(a, i, j))
    return np.array(out, dtype=float)


def dyad_change_matrix(a: np.ndarray, codes: np.ndarray, terms: Sequence[ErgmTerm]):
    """Change statistics of every dyad i < j, vectorized.

    Returns ``(X, y, (rows, cols))`` with one row of X per dyad.
    """
    n = len(a)
    iu = np.triu_indices(n, 1)
    y = a[iu].astype(float)
    cols = []
    closure_cols = None
    for t in terms:
        if t.kind == "edges":
            cols.append(np.ones(len(y)))
        elif t.kind == "sector_activity":
            k = list(Sector).index(t.sector)
            cols.append((codes[iu[0]] == k).astype(float) + (codes[iu[1]] == k))
        elif t.kind == "homophily":
            cols.append((codes[iu[0]] == codes[iu[1]]).astype(float))
        else:
            if closure_cols is None:
                c = a @ a
                zero = ((c == 0) & (a > 0)).astype(np.int64)
                one = ((c == 1) & (a > 0)).astype(np.int64)
                # dyads currently off: partners k whose edges (i,k), (j,k) have no partner yet;
                # dyads currently on: the same edges counted after removing (i,j).
                off = zero @ a + a @ zero
                on = one @ a + a @ one
                induced = np.where(a > 0, on, off)
                closure_cols = (c > 0).astype(float) + induced
            cols.append(closure_cols[iu])
    X = np.column_stack(cols) if cols else np.zeros((len(y), 0))
    return X, y, iu


@dataclass
class ErgmFit:
    terms: tuple[ErgmTerm, ...]
    theta: np.ndarray
    standard_errors: np.ndarray
    log_pseudolikelihood: float
    converged: bool
    iterations: int = 0
    message: str = ""
    divergence: dict = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {t.name: float(v) for t, v in zip(self.terms, self.theta)}


def _irls(X, y, max_iter=100, tol=1e-10):
    p = X.shape[1]
    theta = np.zeros(p)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = X @ theta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = mu * (1 - mu)
        info = X.T @ (X * w[:, None])
        grad = X.T @ (y - mu)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            return theta, info, False, it, "singular information matrix"
        theta = theta + step
        if np.max(np.abs(step)) < tol * (1 + np.max(np.abs(theta))):
            converged = True
            break
        if np.max(np.abs(theta)) > 50:
            return theta, info, False, it, "coefficients diverging (separation)"
    eta = X @ theta
    mu = 1.0 / (1.0 + np.exp(-eta))
    info = X.T @ (X * (mu * (1 - mu))[:, None])
    return theta, info, converged, it, "" if converged else "no convergence"


def _log_pl(X, y, theta) -> float:
    eta = X @ theta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_mple(graph, terms: Sequence[ErgmTerm], sectors, max_iter: int = 100) -> ErgmFit:
    """Maximum pseudolikelihood fit.

    Separation (including a complete or empty graph) gives a fit with
    ``converged=False`` and ``divergence`` mapping each diverging term to the
    sign of its drift.
    """
    terms = tuple(terms)
    a = _adjacency(graph)
    codes = _sector_codes(graph, sectors, len(a))
    X, y, _ = dyad_change_matrix(a, codes, terms)
    p = len(terms)
    nan = np.full(p, np.nan)
    if len(y) == 0:
        return ErgmFit(terms, nan, nan, math.nan, False, 0, "graph has no dyads")
    if y.min() == y.max():
        sign = 1.0 if y[0] == 1 else -1.0
        div = {t.name: sign for t in terms if t.kind == "edges"} or {terms[0].name: sign}
        return ErgmFit(terms, nan, nan, 0.0, False, 0,
                       "perfect separation: every dyad is " + ("present" if sign > 0 else "absent"), div)
    if np.linalg.matrix_rank(X) < p:
        return ErgmFit(terms, nan, nan, math.nan, False, 0, "collinear change statistics")
    theta, info, converged, it, msg = _irls(X, y, max_iter)
    if not converged:
        div = {t.name: float(np.sign(v)) for t, v in zip(terms, theta) if abs(v) > 10}
        return ErgmFit(terms, theta, nan, _log_pl(X, y, theta), False, it, msg, div)
    with np.errstate(invalid="ignore"):
        se = np.sqrt(np.diag(np.linalg.inv(info)))
    if not np.all(np.isfinite(se)):
        return ErgmFit(terms, theta, se, _log_pl(X, y, theta), False, it, "ill-conditioned information matrix")
    return ErgmFit(terms, theta, se, _log_pl(X, y, theta), True, it)


def simulate_ergm(theta, terms: Sequence[ErgmTerm], n_vertices: int, sectors, seed=0,
                  sweeps: int = 1, initial=None) -> np.ndarray:
    """Gibbs sampler over dyads; returns the final adjacency matrix.

    Each sweep updates every dyad once in random order from its full
    conditional ``logistic(theta . delta_h)``. Without a closure term the
    dyads are conditionally independent and a sweep is one exact draw.
    """
    if sweeps < 1:
        raise InputError("sweeps must be >= 1")
    terms = tuple(terms)
    theta = np.asarray(theta, dtype=float)
    if len(theta) != len(terms):
        raise InputError("theta and terms differ in length")
    rng = make_rng(seed)
    codes = _sector_codes(None, sectors, n_vertices)
    a = np.zeros((n_vertices, n_vertices), dtype=np.int64) if initial is None \
        else _adjacency(initial).copy()
    iu = np.triu_indices(n_vertices, 1)
    if all(t.dyad_independent for t in terms):
        X, _, _ = dyad_change_matrix(a, codes, terms)
        prob = 1.0 / (1.0 + np.exp(-(X @ theta)))
        for _ in range(sweeps):
            draw = (rng.random(len(prob)) < prob).astype(np.int64)
            a[iu] = draw
            a.T[iu] = draw
        return a
    n_dyads = len(iu[0])
    static = [k for k, t in enumerate(terms) if t.kind != "closure"]
    X_static, _, _ = dyad_change_matrix(a, codes, [terms[k] for k in static])
    eta_static = X_static @ theta[static]
    closure_k = [k for k, t in enumerate(terms) if t.kind == "closure"]
    for _ in range(sweeps):
        order = rng.permutation(n_dyads)
        u = rng.random(n_dyads)
        for pos, d in enumerate(order):
            i, j = iu[0][d], iu[1][d]
            a[i, j] = a[j, i] = 0
            eta = eta_static[d]
            if closure_k:
                eta += theta[closure_k].sum() * _closure_change(a, i, j)
            if u[pos] < 1.0 / (1.0 + math.exp(-eta)):
                a[i, j] = a[j, i] = 1
    return a


def degeneracy_report(graph, terms: Sequence[ErgmTerm], sectors) -> list[str]:
    """Reasons a graph cannot support a fit; empty when it is usable.

    Each term's statistic must lie strictly between 0 and its value on the
    complete graph, and there must be at least one present and one absent dyad.
    """
    a = _adjacency(graph)
    n = len(a)
    problems = []
    m = int(a.sum() // 2)
    if m == 0:
        problems.append("no edges")
    if m == n * (n - 1) // 2:
        problems.append("complete graph")
    h = count_statistics(a, terms, _sector_codes_seq(graph, sectors, n))
    full = np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)
    h_max = count_statistics(full, terms, _sector_codes_seq(graph, sectors, n))
    for t, lo_hi, val in zip(terms, h_max, h):
        if not 0 < val < lo_hi:
            problems.append(f"{t.name} statistic at its bound ({val:g})")
    return problems


def _sector_codes_seq(graph, sectors, n):
    order = list(Sector)
    return [order[c] for c in _sector_codes(graph, sectors, n)]


@dataclass
class ErgmEnsemble:
    """Coefficient distributions across bootstrap samples.

    ``estimates`` has one row per converged, non-degenerate sample.
    ``records`` keeps every sample's outcome, degenerate ones included.
    """

    terms: tuple[ErgmTerm, ...]
    estimates: np.ndarray
    sample_ids: np.ndarray
    records: list = field(default_factory=list)
    width_threshold: float = 10.0

    QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)

    def distribution(self, term) -> np.ndarray:
        name = term.name if isinstance(term, ErgmTerm) else term
        k = [t.name for t in self.terms].index(name)
        return self.estimates[:, k]

    def width(self, term) -> float:
        """Central 95% interval width of a term's estimates."""
        d = self.distribution(term)
        if len(d) < 2:
            return math.inf
        lo, hi = np.quantile(d, [0.025, 0.975])
        return float(hi - lo)

    def flat_and_wide(self) -> dict[str, bool]:
        return {t.name: self.width(t) > self.width_threshold for t in self.terms}

    def summary(self) -> dict:
        out = {}
        for t in self.terms:
            d = self.distribution(t)
            q = np.quantile(d, self.QUANTILES) if len(d) else [math.nan] * len(self.QUANTILES)
            out[t.name] = {
                "n": int(len(d)),
                "mean": float(d.mean()) if len(d) else math.nan,
                "quantiles": {f"{p:g}": float(v) for p, v in zip(self.QUANTILES, q)},
                "width95": self.width(t),
                "flat_and_wide": bool(self.width(t) > self.width_threshold),
            }
        return out

    @property
    def n_degenerate(self) -> int:
        return sum(1 for r in self.records if not r["usable"])


def bootstrap_ergm(graphs: Sequence, terms: Sequence[ErgmTerm], sectors,
                   width_threshold: float = 10.0) -> ErgmEnsemble:
    """Fit every graph of an ensemble and collect per-term coefficient distributions.

    Raises :class:`DegenerateAnalysisError` when no sample gives a usable fit.
    """
    terms = tuple(terms)
    rows, ids, records = [], [], []
    for k, g in enumerate(graphs):
        problems = degeneracy_report(g, terms, sectors)
        fit = None
        if not problems:
            fit = fit_mple(g, terms, sectors)
            if not fit.converged:
                problems = [fit.message]
        usable = not problems
        records.append({"sample_id": k, "usable": usable, "problems": problems, "fit": fit})
        if usable:
            rows.append(fit.theta)
            ids.append(k)
    if not rows:
        raise DegenerateAnalysisError("level too sparse: no bootstrap sample supports an ERGM fit")
    return ErgmEnsemble(terms, np.array(rows), np.array(ids), records, width_threshold)
