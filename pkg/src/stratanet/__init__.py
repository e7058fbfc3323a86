"""Comparative analysis of level-stratified endorsement networks.

Subpackages and modules
-----------------------
model       core graph, roster, event and partition types
ingest      reading events and rosters, filtering, graph construction
temporal    activity profiles, burstiness, Tukey HSD, mean differences
metrics     mixing matrices, within-organization density, overlap
backbone    significance filtering of weighted edges
bootstrap   fixed-size edge resampling
blockmodel  degree-corrected SBM and reduced mutual information
ergm        ERGM statistics, pseudolikelihood fits, simulation
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    CollapsedGraph,
    DegenerateAnalysisError,
    Event,
    EventKind,
    InputError,
    Level,
    OrgType,
    Partition,
    Roster,
    RosterEntry,
    Sector,
    SparsityWarning,
    StratanetError,
    WeightedDigraph,
)

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
    "WeightedDigraph",
    "__version__",
]
