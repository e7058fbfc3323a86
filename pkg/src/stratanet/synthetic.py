"""Synthetic graphs and datasets with known structure.

The generators back the test-suite and the example scripts. Each takes an
integer seed and is deterministic given it.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .model import CollapsedGraph, Event, EventKind, Level, OrgType, Roster, RosterEntry, Sector, WeightedDigraph
from .seeding import make_rng

__all__ = [
    "FourLevelData",
    "PlantedBackbone",
    "erdos_renyi",
    "four_level_fixture",
    "planted_backbone",
    "planted_partition",
    "two_cliques",
    "write_fixture",
]


def erdos_renyi(n: int, p: float, seed=0) -> np.ndarray:
    """Symmetric 0/1 adjacency matrix of G(n, p)."""
    rng = make_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, 1)
    return (upper | upper.T).astype(np.int64)


def planted_partition(sizes, p_in: float, p_out: float, seed=0):
    """Undirected planted-partition graph; returns ``(adjacency, labels)``."""
    rng = make_rng(seed)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = len(labels)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, 1)
    return (upper | upper.T).astype(np.int64), labels


def two_cliques(k: int = 10) -> CollapsedGraph:
    """Two disjoint ``k``-cliques on vertices ``v0 .. v{2k-1}``."""
    names = [f"v{i}" for i in range(2 * k)]
    pairs = [(names[off + i], names[off + j]) for off in (0, k) for i in range(k) for j in range(i + 1, k)]
    return CollapsedGraph(names, pairs)


@dataclass(frozen=True)
class PlantedBackbone:
    graph: WeightedDigraph
    signal: frozenset  # (src, dst) pairs of the planted strong edges


def planted_backbone(n_vertices: int = 50, noise_degree: int = 8, n_signal: int = 20,
                     signal_weight=(5, 8), seed=0) -> PlantedBackbone:
    """Noise of unit-weight edges plus a few heavy planted edges.

    The noise part is a randomly relabeled circulant digraph: vertex ``i``
    points at ``i + s`` (mod n) for ``noise_degree`` distinct random shifts
    ``s``. Every vertex then has exactly ``noise_degree`` out- and in-edges
    with no repeated pair. The planted edges sit on dyads the noise does not
    use and carry integer weights drawn uniformly from ``signal_weight``
    (inclusive).
    """
    if not 0 < noise_degree < n_vertices - 1:
        raise ValueError("noise_degree must lie in (0, n_vertices - 1)")
    rng = make_rng(seed)
    names = [f"a{i:03d}" for i in range(n_vertices)]
    relabel = rng.permutation(n_vertices)
    shifts = rng.choice(np.arange(1, n_vertices), size=noise_degree, replace=False)
    base = np.arange(n_vertices)
    used = np.eye(n_vertices, dtype=bool)
    noise = []
    for shift in shifts:
        src, dst = relabel[base], relabel[(base + shift) % n_vertices]
        used[src, dst] = True
        noise.extend(zip(src.tolist(), dst.tolist()))
    free = np.argwhere(~used)
    pick = free[rng.choice(len(free), size=n_signal, replace=False)]
    lo, hi = signal_weight
    weights = rng.integers(lo, hi + 1, size=n_signal)
    edges = [(names[i], names[j], 1) for i, j in noise]
    edges += [(names[i], names[j], int(w)) for (i, j), w in zip(pick, weights)]
    signal = frozenset((names[i], names[j]) for i, j in pick)
    return PlantedBackbone(WeightedDigraph(names, edges), signal)


# ---------------------------------------------------------------------------
# four-level organization fixture

_TYPE_OF_SECTOR = {
    Sector.Government: OrgType.Government,
    Sector.Science: OrgType.Science,
    Sector.Business: OrgType.Corporation,
    Sector.CivilSociety: OrgType.NGO,
    Sector.Media: OrgType.Media,
    Sector.InterestGroup: OrgType.InterestGroup,
    Sector.PoliticalParty: OrgType.Party,
}

TOPIC_WORDS = ("climate", "emissions", "carbon", "energy transition")
OFF_TOPIC_WORDS = ("football", "weather", "recipe")
START = datetime(2019, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class FourLevelData:
    roster: Roster
    events: list
    keywords: tuple[str, ...]
    clusters: dict  # organization -> interest cluster of the side accounts


def four_level_fixture(seed=0, n_orgs: int = 56, n_clusters: int = 8, days: int = 120) -> FourLevelData:
    """Roster and events for a field of organizations with four account levels.

    Built-in structure:

    * organization main accounts retweet their sector's hub organization,
      so that layer is homophilous and star-like with little closure;
    * executives' main accounts retweet colleagues heavily (dense within
      organizations) and otherwise stay inside their sector;
    * side accounts of individuals follow topic clusters that ignore
      sector, forming near-cliques of organizations with high closure;
    * organization side accounts are few and nearly silent.

    About one event in eight is off-topic, so keyword filtering matters.
    """
    rng = make_rng(seed)
    sectors = list(Sector)
    org_sector = [sectors[i % len(sectors)] for i in range(n_orgs)]
    orgs = [f"org{i:03d}" for i in range(n_orgs)]
    entries: list[RosterEntry] = []
    accounts: dict[Level, list[list[str]]] = {lvl: [] for lvl in Level}
    size_range = {Level.OrgMain: (1, 1), Level.OrgSide: (0, 3), Level.IndMain: (2, 4), Level.IndSide: (3, 8)}
    for k, org in enumerate(orgs):
        for lvl in Level:
            lo, hi = size_range[lvl]
            count = int(rng.integers(lo, hi + 1))
            names = [f"{org}_{lvl.value}_{m}" for m in range(count)]
            accounts[lvl].append(names)
            entries.extend(RosterEntry(a, org, lvl, org_sector[k], _TYPE_OF_SECTOR[org_sector[k]]) for a in names)
    roster = Roster(entries)

    ties: list[tuple[str, str, int]] = []

    def tie(src, dst, w):
        if src != dst and w > 0:
            ties.append((src, dst, int(w)))

    by_sector = {s: [k for k in range(n_orgs) if org_sector[k] is s] for s in sectors}

    # organization main: sector stars
    hubs = {s: members[0] for s, members in by_sector.items() if members}
    for s, members in by_sector.items():
        hub = accounts[Level.OrgMain][hubs[s]][0]
        for k in members[1:]:
            spoke = accounts[Level.OrgMain][k][0]
            tie(spoke, hub, 3 + rng.poisson(5))
            if rng.random() < 0.5:
                tie(hub, spoke, 2 + rng.poisson(2))
        if len(members) >= 3:
            a, b = rng.choice(members[1:], size=2, replace=False)
            tie(accounts[Level.OrgMain][a][0], accounts[Level.OrgMain][b][0], 3 + rng.poisson(3))
    hub_list = [accounts[Level.OrgMain][h][0] for h in hubs.values()]
    for a, b in zip(hub_list, hub_list[1:] + hub_list[:1]):
        tie(a, b, 3 + rng.poisson(3))
    for k in range(n_orgs):
        if rng.random() < 0.15:
            other = [h for s, h in hubs.items() if s is not org_sector[k] and h != k]
            target = other[rng.integers(len(other))]
            tie(accounts[Level.OrgMain][k][0], accounts[Level.OrgMain][target][0], 2 + rng.poisson(2))

    # individual main: dense inside the organization, sector-bound outside it
    for k in range(n_orgs):
        own = accounts[Level.IndMain][k]
        for a in own:
            for b in own:
                if a != b and rng.random() < 0.85:
                    tie(a, b, 2 + rng.poisson(4))
        peers = [m for m in by_sector[org_sector[k]] if m != k]
        for a in own:
            for m in rng.choice(peers, size=min(2, len(peers)), replace=False) if peers else []:
                targets = accounts[Level.IndMain][m]
                tie(a, targets[rng.integers(len(targets))], 1 + rng.poisson(3))

    # individual side: sector-blind topic clusters
    cluster_of = rng.permutation(np.arange(n_orgs) % n_clusters)
    clusters = {orgs[k]: int(cluster_of[k]) for k in range(n_orgs)}
    for k in range(n_orgs):
        mates = [m for m in range(n_orgs) if cluster_of[m] == cluster_of[k] and m != k]
        for a in accounts[Level.IndSide][k]:
            for m in mates:
                if rng.random() < 0.6:
                    targets = accounts[Level.IndSide][m]
                    tie(a, targets[rng.integers(len(targets))], 1 + rng.poisson(3))
            if rng.random() < 0.08:
                own = [b for b in accounts[Level.IndSide][k] if b != a]
                if own:
                    tie(a, own[rng.integers(len(own))], 1)
            if rng.random() < 0.3:
                m = int(rng.integers(n_orgs))
                targets = accounts[Level.IndSide][m]
                if targets:
                    tie(a, targets[rng.integers(len(targets))], 1)

    # organization side: a trickle of retweets, two small triangles among
    # organizations of different sectors and one same-sector pair
    active = []
    for members in by_sector.values():
        active.extend([accounts[Level.OrgSide][k][0] for k in members if accounts[Level.OrgSide][k]][:2])
    side = [a for names in accounts[Level.OrgSide] for a in names]
    if len(active) >= 8:
        firsts = active[::2][:7] if len(active[::2]) >= 7 else active[:7]
        for tri in (firsts[0:3], firsts[3:6]):
            for a, b in zip(tri, tri[1:] + tri[:1]):
                tie(a, b, 2 + rng.poisson(1))
        pairs = [(a, b) for a, b in zip(active, active[1:]) if roster[a].sector is roster[b].sector]
        for a, b in pairs[:2]:
            tie(a, b, 2 + rng.poisson(1))
        for _ in range(8):
            i, j = rng.choice(len(side), size=2, replace=False)
            tie(side[i], side[j], 1)

    # cross-level chatter, counted by the mixing matrix only
    all_accounts = roster.accounts()
    for _ in range(len(all_accounts) // 2):
        i, j = rng.choice(len(all_accounts), size=2, replace=False)
        tie(all_accounts[i], all_accounts[j], 1)

    events = _expand(ties, roster, rng, days)
    return FourLevelData(roster, events, TOPIC_WORDS, clusters)


def _timestamp(rng, days: int, office: bool) -> datetime:
    day = int(rng.integers(days))
    if office:
        hour = float(np.clip(rng.normal(11.0, 2.5), 0, 23.99))
        while (START + timedelta(days=day)).weekday() >= 5 and rng.random() < 0.8:
            day = int(rng.integers(days))
    else:
        hour = float(rng.uniform(0, 24))
    return START + timedelta(days=day, hours=hour, seconds=int(rng.integers(60)))


def _text(rng, on_topic: bool) -> str:
    words = TOPIC_WORDS if on_topic else OFF_TOPIC_WORDS
    return f"thoughts on {words[rng.integers(len(words))]} #{int(rng.integers(1000))}"


def _expand(ties, roster: Roster, rng, days: int) -> list[Event]:
    events = []
    for src, dst, w in ties:
        office = roster[src].level in (Level.OrgMain, Level.OrgSide)
        for _ in range(w):
            events.append(Event(src, dst, _timestamp(rng, days, office), EventKind.Retweet, _text(rng, True)))
    # off-topic retweets that keyword filtering must drop
    for src, dst, _ in ties[: len(ties) // 8]:
        events.append(Event(src, dst, _timestamp(rng, days, False), EventKind.Retweet, _text(rng, False)))
    # original tweets give every account a timeline for activity and burstiness
    for acc in roster.accounts():
        entry = roster[acc]
        office = entry.level in (Level.OrgMain, Level.OrgSide)
        n = int(rng.poisson(4 if entry.level is Level.OrgSide else 14))
        burst = entry.level in (Level.IndMain, Level.IndSide) and rng.random() < 0.5
        base = _timestamp(rng, days, office)
        for _ in range(n):
            if burst:
                ts = base + timedelta(minutes=float(rng.exponential(90)))
                if rng.random() < 0.2:
                    base = _timestamp(rng, days, office)
            else:
                ts = _timestamp(rng, days, office)
            events.append(Event(acc, None, ts, EventKind.Tweet, _text(rng, rng.random() < 0.7)))
    events.sort(key=lambda e: (e.timestamp, e.account_id, e.target_account_id or ""))
    return events


def write_fixture(directory, seed=0, bootstrap_n: int = 40, n_sweeps: int = 300, **config_overrides):
    """Write the four-level fixture as input files plus a ready config.

    Creates ``events.csv``, ``roster.csv``, ``keywords.txt`` and
    ``config.json`` in ``directory`` and returns the config path. The config
    uses small bootstrap and sweep counts so a full run takes seconds.
    """
    from pathlib import Path

    from .config import BootstrapConfig, PathsConfig, PipelineConfig, SbmConfig
    from .ingest import write_events, write_roster

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = four_level_fixture(seed)
    write_events(data.events, directory / "events.csv")
    write_roster(data.roster, directory / "roster.csv")
    (directory / "keywords.txt").write_text("# topic filter\n" + "\n".join(data.keywords) + "\n",
                                            encoding="utf-8")
    cfg = PipelineConfig(paths=PathsConfig(["events.csv"], "roster.csv", "keywords.txt", "out"),
                         bootstrap=BootstrapConfig(n=bootstrap_n),
                         sbm=SbmConfig(n_sweeps=n_sweeps, rmi_samples=3),
                         seed=seed, **config_overrides)
    path = directory / "config.json"
    cfg.save(path)
    return path
