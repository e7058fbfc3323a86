"""Description length of the flat microcanonical degree-corrected SBM.

For an undirected simple graph with ``N`` vertices, ``E`` edges, block
assignment ``b`` with ``B`` non-empty blocks, block edge-count matrix
``e_rs`` (``e_rr`` counts internal edges twice), block degree sums ``e_r``
and block sizes ``n_r`` the description length in nats is

    S_t = sum_r log e_r! - sum_{r<s} log e_rs! - sum_r log e_rr!! - sum_i log k_i!
    L_b = log N! - sum_r log n_r! + log C(N-1, B-1) + log N
    L_e = log multiset(B(B+1)/2, E)
    L_k = sum_r log multiset(n_r, e_r)

with ``multiset(n, k) = C(n + k - 1, k)``. The sum is the code length of the
graph given the partition plus uniform priors on partitions, on block edge
counts and on degree sequences.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from ..model import CollapsedGraph, InputError, Partition

__all__ = ["GraphArrays", "as_graph_arrays", "block_matrices", "description_length"]


class GraphArrays:
    """Undirected simple graph in CSR form plus an edge list with i < j."""

    def __init__(self, n: int, edges: np.ndarray, vertices=None):
        self.n = int(n)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            keep = lo != hi
            pairs = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
        else:
            pairs = np.zeros((0, 2), dtype=np.int64)
        self.edges = pairs
        self.vertices = vertices
        self._dense = None
        both = np.concatenate([pairs, pairs[:, ::-1]]) if len(pairs) else pairs
        order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.zeros(0, dtype=np.int64)
        both = both[order]
        self.indices = both[:, 1].astype(np.int64).copy() if len(both) else np.zeros(0, dtype=np.int64)
        self.degree = np.bincount(both[:, 0], minlength=self.n).astype(np.int64) if len(both) \
            else np.zeros(self.n, dtype=np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(self.degree)]).astype(np.int64)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def dense(self) -> np.ndarray:
        """Symmetric int8 adjacency matrix; built once and shared, do not mutate."""
        if self._dense is not None:
            return self._dense
        a = np.zeros((self.n, self.n), dtype=np.int8)
        if self.n_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1
            a[self.edges[:, 1], self.edges[:, 0]] = 1
        a.flags.writeable = False
        self._dense = a
        return a


def as_graph_arrays(graph) -> GraphArrays:
    """Accept a CollapsedGraph, a GraphArrays, or a square adjacency matrix."""
    if isinstance(graph, GraphArrays):
        return graph
    if isinstance(graph, CollapsedGraph):
        return GraphArrays(graph.n_vertices, graph.edges, graph.vertices)
    a = np.asarray(graph.toarray() if hasattr(graph, "toarray") else graph)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("adjacency must be a square matrix")
    i, j = np.nonzero(np.triu(a + a.T, 1))
    return GraphArrays(a.shape[0], np.stack([i, j], axis=1))


def block_matrices(g: GraphArrays, b: np.ndarray, n_blocks: int):
    """Return ``(e, n_r, e_r)`` for assignment ``b`` over ``n_blocks`` labels."""
    e = np.zeros((n_blocks, n_blocks), dtype=np.int64)
    if g.n_edges:
        r, s = b[g.edges[:, 0]], b[g.edges[:, 1]]
        np.add.at(e, (r, s), 1)
        np.add.at(e, (s, r), 1)
    n_r = np.bincount(b, minlength=n_blocks).astype(np.int64)
    return e, n_r, e.sum(axis=1)


def _log_multiset(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    safe = np.maximum(n, 1.0)
    val = gammaln(safe + k) - gammaln(k + 1) - gammaln(safe)
    return np.where(n > 0, val, 0.0)


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def description_length(graph, partition) -> float:
    """Description length in nats, computed from scratch."""
    g = as_graph_arrays(graph)
    b = partition.assignment if isinstance(partition, Partition) else np.asarray(partition, dtype=np.int64)
    if len(b) != g.n:
        raise InputError("partition and graph differ in size")
    _, dense = np.unique(b, return_inverse=True)
    B = int(dense.max()) + 1
    e, n_r, e_r = block_matrices(g, dense, B)
    N, E = g.n, g.n_edges
    iu = np.triu_indices(B, 1)
    internal = np.diag(e) // 2
    s_t = (gammaln(e_r + 1).sum() - gammaln(e[iu] + 1).sum()
           - (internal * np.log(2.0) + gammaln(internal + 1)).sum()
           - gammaln(g.degree + 1).sum())
    l_b = gammaln(N + 1) - gammaln(n_r + 1).sum() + _log_binom(N - 1, B - 1) + np.log(N)
    l_e = _log_multiset(B * (B + 1) / 2, E)
    l_k = _log_multiset(n_r, e_r).sum()
    return float(s_t + l_b + l_e + l_k)
