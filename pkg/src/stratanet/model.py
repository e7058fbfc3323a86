"""Domain types and elementary graph algebra.

Graphs here are immutable. External vertex ids (account ids, organization
ids) are kept in a symbol table; internally everything is indexed by dense
integers so the numerical modules can work on plain arrays.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CollapsedGraph",
    "DegenerateAnalysisError",
    "Event",
    "EventKind",
    "InputError",
    "Level",
    "OrgType",
    "Partition",
    "Roster",
    "RosterEntry",
    "Sector",
    "SparsityWarning",
    "StratanetError",
    "Strengths",
    "WeightedDigraph",
    "induced_subgraph",
    "strengths",
]


class StratanetError(Exception):
    """Base class for errors raised by this package."""


class InputError(StratanetError, ValueError):
    """Malformed input: bad files, unknown ids, invalid parameters."""


class DegenerateAnalysisError(StratanetError):
    """The data do not support the requested statistic (too sparse, too small)."""


class SparsityWarning(UserWarning):
    """Emitted when a result is driven by the sparsity of the graph."""


class _ParsableEnum(enum.Enum):
    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        # CamelCase spellings such as "OrgMain" or "CivilSociety"
        squashed = key.replace("_", "")
        for member in cls:
            if squashed == member.name.lower():
                return member
        raise InputError(f"unknown {cls.__name__} {value!r}")

    def __str__(self):
        return self.value


class Level(_ParsableEnum):
    """Organizational level of an account. Declaration order is the matrix order."""

    OrgMain = "org_main"
    OrgSide = "org_side"
    IndMain = "ind_main"
    IndSide = "ind_side"

    @property
    def index(self) -> int:
        return _LEVEL_INDEX[self]


_LEVEL_INDEX = {level: i for i, level in enumerate(Level)}


class Sector(_ParsableEnum):
    Government = "government"
    Science = "science"
    Business = "business"
    CivilSociety = "civil_society"
    Media = "media"
    InterestGroup = "interest_group"
    PoliticalParty = "political_party"


class OrgType(_ParsableEnum):
    Party = "party"
    Government = "government"
    NGO = "ngo"
    InterestGroup = "interest_group"
    Corporation = "corporation"
    Science = "science"
    Media = "media"


class EventKind(_ParsableEnum):
    Tweet = "tweet"
    Retweet = "retweet"
    Reply = "reply"
    Quote = "quote"


@dataclass(frozen=True)
class Event:
    """One timestamped interaction. ``timestamp`` is timezone-aware UTC."""

    account_id: str
    target_account_id: str | None
    timestamp: datetime
    kind: EventKind
    text: str | None = None

    def __post_init__(self):
        if self.kind is EventKind.Retweet and not self.target_account_id:
            raise InputError(f"retweet by {self.account_id!r} has no target account")
        if self.timestamp.tzinfo is None:
            raise InputError("event timestamps must be timezone-aware")


@dataclass(frozen=True)
class RosterEntry:
    account_id: str
    organization_id: str
    level: Level
    sector: Sector
    org_type: OrgType


class Roster:
    """Account to organization assignment.

    Organizations keep the order in which they first appear, which fixes the
    vertex order of collapsed graphs.
    """

    def __init__(self, entries: Iterable[RosterEntry]):
        self.entries: tuple[RosterEntry, ...] = tuple(entries)
        self._by_account: dict[str, RosterEntry] = {}
        org_attrs: dict[str, tuple[Sector, OrgType]] = {}
        for entry in self.entries:
            if entry.account_id in self._by_account:
                raise InputError(f"duplicate roster account {entry.account_id!r}")
            self._by_account[entry.account_id] = entry
            attrs = (entry.sector, entry.org_type)
            known = org_attrs.setdefault(entry.organization_id, attrs)
            if known != attrs:
                raise InputError(
                    f"organization {entry.organization_id!r} has inconsistent sector/type"
                )
        self._org_attrs = org_attrs
        self.organizations: tuple[str, ...] = tuple(org_attrs)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, account_id) -> bool:
        return account_id in self._by_account

    def __getitem__(self, account_id: str) -> RosterEntry:
        try:
            return self._by_account[account_id]
        except KeyError:
            raise InputError(f"account {account_id!r} is not in the roster") from None

    def get(self, account_id: str) -> RosterEntry | None:
        return self._by_account.get(account_id)

    def accounts(self, level: Level | None = None) -> list[str]:
        return [e.account_id for e in self.entries if level is None or e.level is level]

    def sector(self, organization_id: str) -> Sector:
        return self._org_attrs[organization_id][0]

    def org_type(self, organization_id: str) -> OrgType:
        return self._org_attrs[organization_id][1]

    def members(self, level: Level | None = None) -> dict[str, list[str]]:
        """Organization id -> account ids (optionally at one level), in roster order."""
        out: dict[str, list[str]] = {org: [] for org in self.organizations}
        for e in self.entries:
            if level is None or e.level is level:
                out[e.organization_id].append(e.account_id)
        return out


class WeightedDigraph:
    """Directed graph with positive integer edge weights and no self-loops.

    Parameters
    ----------
    vertices : iterable of str
        Vertex ids. Order is preserved and defines the internal indices.
    edges : iterable of (src, dst, weight)
        Parallel entries for the same ordered pair are summed. Self-loops are
        dropped.
    metadata : mapping, optional
        Free-form provenance (level filter, time window, keyword hash, ...).
    """

    directed = True

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str, int]] = (),
                 metadata: Mapping | None = None):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        if len(self._index) != len(self.vertices):
            raise InputError("duplicate vertex ids")
        acc: dict[tuple[int, int], int] = {}
        for s, d, w in edges:
            w = _as_count(w)
            i, j = self.index(s), self.index(d)
            if i == j:
                continue
            acc[(i, j)] = acc.get((i, j), 0) + w
        keys = sorted(acc)
        self.src = np.array([k[0] for k in keys], dtype=np.int64)
        self.dst = np.array([k[1] for k in keys], dtype=np.int64)
        self.weight = np.array([acc[k] for k in keys], dtype=np.int64)
        self.metadata = dict(metadata or {})

    @classmethod
    def from_arrays(cls, vertices, src, dst, weight, metadata=None) -> WeightedDigraph:
        """Build from index arrays (already deduplicated, no self-loops, weights >= 1)."""
        g = cls.__new__(cls)
        g.vertices = tuple(vertices)
        g._index = {v: i for i, v in enumerate(g.vertices)}
        order = np.lexsort((dst, src))
        g.src = np.asarray(src, dtype=np.int64)[order]
        g.dst = np.asarray(dst, dtype=np.int64)[order]
        g.weight = np.asarray(weight, dtype=np.int64)[order]
        if np.any(g.weight < 1) or np.any(g.src == g.dst):
            raise InputError("weights must be >= 1 and self-loops are not allowed")
        g.metadata = dict(metadata or {})
        return g

    def index(self, vertex_id: str) -> int:
        try:
            return self._index[vertex_id]
        except KeyError:
            raise InputError(f"unknown vertex {vertex_id!r}") from None

    def __contains__(self, vertex_id) -> bool:
        return vertex_id in self._index

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.weight)

    @property
    def total_weight(self) -> int:
        return int(self.weight.sum())

    def edges(self):
        """Yield ``(src_id, dst_id, weight)`` in (src, dst) index order."""
        for i, j, w in zip(self.src, self.dst, self.weight):
            yield self.vertices[i], self.vertices[j], int(w)

    def edge_weight(self, src: str, dst: str) -> int:
        return int(self.adjacency[self.index(src), self.index(dst)])

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = self.n_vertices
        return sp.csr_matrix((self.weight, (self.src, self.dst)), shape=(n, n), dtype=np.int64)

    @cached_property
    def symmetrized(self) -> sp.csr_matrix:
        """Undirected weight view w'(i, j) = w(i, j) + w(j, i)."""
        a = self.adjacency
        s = (a + a.T).tocsr()
        s.sort_indices()
        return s

    def binarized(self) -> WeightedDigraph:
        return WeightedDigraph.from_arrays(self.vertices, self.src, self.dst,
                                           np.ones_like(self.weight), self.metadata)

    def with_metadata(self, **extra) -> WeightedDigraph:
        return WeightedDigraph.from_arrays(self.vertices, self.src, self.dst, self.weight,
                                           {**self.metadata, **extra})

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(self.vertices)
        g.add_weighted_edges_from(self.edges())
        return g

    def __eq__(self, other):
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return (self.vertices == other.vertices and np.array_equal(self.src, other.src)
                and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight))

    __hash__ = None

    def __repr__(self):
        return (f"WeightedDigraph(n_vertices={self.n_vertices}, n_edges={self.n_edges}, "
                f"total_weight={self.total_weight})")


def _as_count(w) -> int:
    if isinstance(w, (bool, np.bool_)) or int(w) != w or w < 1:
        raise InputError(f"edge weights must be positive integers, got {w!r}")
    return int(w)


class Strengths(NamedTuple):
    out_strength: np.ndarray
    in_strength: np.ndarray
    degree: np.ndarray


def strengths(g: WeightedDigraph) -> Strengths:
    """Out/in strength and undirected degree of every vertex, in vertex order."""
    n = g.n_vertices
    out = np.bincount(g.src, weights=g.weight, minlength=n).astype(np.int64)
    inn = np.bincount(g.dst, weights=g.weight, minlength=n).astype(np.int64)
    degree = np.diff(g.symmetrized.indptr).astype(np.int64)
    return Strengths(out, inn, degree)


def induced_subgraph(g: WeightedDigraph, vertex_set: Iterable[str]) -> WeightedDigraph:
    """Keep the given vertices (in ``g``'s order) and the edges among them."""
    wanted = set(vertex_set)
    unknown = [v for v in wanted if v not in g]
    if unknown:
        raise InputError(f"unknown vertex {sorted(unknown)[0]!r}")
    keep = np.array([v in wanted for v in g.vertices], dtype=bool)
    new_index = np.cumsum(keep) - 1
    mask = keep[g.src] & keep[g.dst] if g.n_edges else np.zeros(0, dtype=bool)
    vertices = [v for v, k in zip(g.vertices, keep) if k]
    return WeightedDigraph.from_arrays(vertices, new_index[g.src[mask]], new_index[g.dst[mask]],
                                       g.weight[mask], g.metadata)


class CollapsedGraph:
    """Binary undirected graph over organizations.

    ``edges`` is an ``(m, 2)`` integer array of index pairs with ``i < j``,
    sorted lexicographically.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[tuple[str, str]] = (),
                 metadata: Mapping | None = None):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self._index = {v: i for i, v in enumerate(self.vertices)}
        pairs = set()
        for a, b in edges:
            i, j = self.index(a), self.index(b)
            if i != j:
                pairs.add((min(i, j), max(i, j)))
        self.edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        self.metadata = dict(metadata or {})

    @classmethod
    def from_adjacency(cls, vertices, adjacency, metadata=None) -> CollapsedGraph:
        a = np.asarray(adjacency)
        i, j = np.nonzero(np.triu(a, 1))
        vertices = tuple(vertices)
        return cls(vertices, ((vertices[x], vertices[y]) for x, y in zip(i, j)), metadata)

    def index(self, vertex_id: str) -> int:
        try:
            return self._index[vertex_id]
        except KeyError:
            raise InputError(f"unknown vertex {vertex_id!r}") from None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        n = self.n_vertices
        a = np.zeros((n, n), dtype=np.int8)
        if self.n_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1
            a[self.edges[:, 1], self.edges[:, 0]] = 1
        return a

    def edge_pairs(self):
        for i, j in self.edges:
            yield self.vertices[i], self.vertices[j]

    def __eq__(self, other):
        if not isinstance(other, CollapsedGraph):
            return NotImplemented
        return self.vertices == other.vertices and np.array_equal(self.edges, other.edges)

    __hash__ = None

    def __repr__(self):
        return f"CollapsedGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"


@dataclass(frozen=True)
class Partition:
    """Block assignment with contiguous block ids ``0..B-1``.

    Use :meth:`from_labels` to build one from arbitrary hashable labels; block
    ids are then assigned in order of first appearance.
    """

    assignment: np.ndarray
    vertices: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1 or len(a) == 0:
            raise InputError("partition must assign at least one vertex")
        present = np.unique(a)
        if present[0] != 0 or present[-1] != len(present) - 1:
            raise InputError("block ids must be contiguous 0..B-1")
        if self.vertices is not None and len(self.vertices) != len(a):
            raise InputError("vertex ids and assignment differ in length")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_labels(cls, labels, vertices=None) -> Partition:
        mapping: dict = {}
        dense = [mapping.setdefault(x, len(mapping)) for x in np.asarray(labels).tolist()]
        return cls(np.array(dense, dtype=np.int64), None if vertices is None else tuple(vertices))

    @property
    def block_count(self) -> int:
        return int(self.assignment.max()) + 1

    @property
    def n_vertices(self) -> int:
        return len(self.assignment)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    __hash__ = None
