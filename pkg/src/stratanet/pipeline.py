"""File-backed pipeline stages.

Every stage reads its inputs from the configured input files or from files
an earlier stage wrote to the output directory, and writes plain CSV/JSON
reports. A stage whose input files are missing runs its prerequisite stage
first, so a single-stage run and the same stage inside ``pipeline`` read
identical inputs and write identical outputs.

Every CSV report starts with one comment line
``# stratanet config_hash=<hash> seed=<seed>``; every JSON report carries
``config_hash`` and ``seed`` keys. Reports contain no wall-clock times.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .backbone import extract_backbone, score_edges
from .blockmodel import fit_sbm, rmi
from .bootstrap import edge_distribution, sample_graph
from .config import STAGES, PipelineConfig
from .ergm import bootstrap_ergm, default_terms
from .ingest import build_account_graph, collapse, filter_events, parse_roster, read_event_files, read_keywords
from .metrics import mixing_matrix, org_density, org_mean_overlap
from .model import (
    CollapsedGraph,
    DegenerateAnalysisError,
    EventKind,
    InputError,
    Level,
    Roster,
    SparsityWarning,
    WeightedDigraph,
)
from .seeding import derive_seed
from .temporal import Binning, account_burstiness, activity_profile, tukey_hsd

__all__ = ["PIPELINE_ORDER", "StageResult", "Workspace", "run_pipeline", "run_stage"]

log = logging.getLogger("stratanet")

PIPELINE_ORDER = ("ingest", "activity", "burstiness", "mixing", "density", "overlap", "backbone",
                  "collapse", "bootstrap", "sbm", "rmi", "ergm")
assert set(PIPELINE_ORDER) == set(STAGES)


@dataclass
class StageResult:
    stage: str
    status: str = "ok"  # ok | warning | degenerate | skipped
    messages: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)

    def note(self, status: str, message: str) -> None:
        rank = {"ok": 0, "skipped": 0, "warning": 1, "degenerate": 2}
        if rank[status] > rank[self.status]:
            self.status = status
        self.messages.append(message)


class Workspace:
    """Configuration, lazily loaded inputs and the output directory."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.paths.out_dir)
        self.hash = config.config_hash()
        self.seed = int(config.seed)
        self._roster: Roster | None = None
        self._events = None
        self._keywords = None
        self.done: set[tuple[str, str | None]] = set()

    # -- inputs ---------------------------------------------------------
    @property
    def roster(self) -> Roster:
        if self._roster is None:
            path = self.config.paths.roster
            if not path or not Path(path).is_file():
                raise InputError(f"missing roster file: {path or '(not configured)'}")
            self._roster = parse_roster(path)
        return self._roster

    @property
    def events(self):
        if self._events is None:
            paths = self.config.paths.events
            if not paths:
                raise InputError("no event files configured")
            for p in paths:
                if not Path(p).is_file():
                    raise InputError(f"missing events file: {p}")
            self._events = read_event_files(paths)
        return self._events

    @property
    def keywords(self) -> list[str]:
        if self._keywords is None:
            path = self.config.paths.keywords
            if path is None:
                self._keywords = []
            elif not Path(path).is_file():
                raise InputError(f"missing keywords file: {path}")
            else:
                self._keywords = read_keywords(path)
        return self._keywords

    def stage_seed(self, *labels) -> int:
        return derive_seed(self.seed, *labels)

    # -- outputs --------------------------------------------------------
    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def write_csv(self, name: str, header, rows) -> str:
        path = self.path(name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# stratanet config_hash={self.hash} seed={self.seed}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return name

    def read_csv(self, name: str) -> list[dict]:
        path = self.out / name
        if not path.is_file():
            raise InputError(f"missing input file: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            lines = (line for line in fh if not line.startswith("#"))
            return list(csv.DictReader(lines))

    def write_json(self, name: str, payload: dict) -> str:
        data = {"config_hash": self.hash, "seed": self.seed, "version": __version__, **payload}
        self.path(name).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8")
        return name

    def update_json(self, name: str, key: str, value) -> str:
        """Replace one top-level entry of a per-level JSON report, keeping the others."""
        path = self.out / name
        current = {}
        if path.is_file():
            current = json.loads(path.read_text(encoding="utf-8"))
            if current.get("config_hash") != self.hash or current.get("seed") != self.seed:
                current = {}
        levels = {k: v for k, v in current.get("levels", {}).items()}
        levels[key] = value
        order = [lvl.value for lvl in Level]
        ordered = {k: levels[k] for k in sorted(levels, key=lambda k: order.index(k) if k in order else 99)}
        return self.write_json(name, {"levels": ordered})

    def exists(self, name: str) -> bool:
        return (self.out / name).is_file()


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    if isinstance(v, np.floating):
        return _fmt(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, bool):
        return int(v)
    return v


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


# -- graph file helpers -----------------------------------------------------

def _graph_name(level: Level | None) -> str:
    return f"graph_{level.value if level else 'all'}.csv"


def _read_digraph(ws: Workspace, name: str, vertices) -> WeightedDigraph:
    rows = ws.read_csv(name)
    return WeightedDigraph(vertices, ((r["src"], r["dst"], int(r["weight"])) for r in rows))


def _write_digraph(ws: Workspace, name: str, g: WeightedDigraph) -> str:
    return ws.write_csv(name, ("src", "dst", "weight"), g.edges())


def _read_collapsed(ws: Workspace, name: str) -> CollapsedGraph:
    rows = ws.read_csv(name)
    return CollapsedGraph(ws.roster.organizations, ((r["org_a"], r["org_b"]) for r in rows))


def level_graph(ws: Workspace, level: Level | None) -> WeightedDigraph:
    name = _graph_name(level)
    if not ws.exists(name) or ("ingest", None) not in ws.done:
        _ensure(ws, "ingest", None)
    vertices = ws.roster.accounts(level) if level else ws.roster.accounts()
    return _read_digraph(ws, name, vertices)


def _ensure(ws: Workspace, stage: str, level: Level | None) -> None:
    key = (stage, level.value if level else None)
    if key in ws.done:
        return
    names = {"ingest": "graph_all.csv", "backbone": f"backbone_{level.value}.csv" if level else "",
             "collapse": f"collapsed_{level.value}.csv" if level else "",
             "bootstrap": f"bootstrap_{level.value}.csv" if level else ""}
    if ws.exists(names.get(stage, "")) and _fresh(ws, names[stage]):
        ws.done.add(key)
        return
    run_stage(ws, stage, [level] if level else None)


def _fresh(ws: Workspace, name: str) -> bool:
    with open(ws.out / name, encoding="utf-8") as fh:
        first = fh.readline()
    return first.strip() == f"# stratanet config_hash={ws.hash} seed={ws.seed}"


# -- stages -------------------------------------------------------------------

def stage_ingest(ws: Workspace, levels, result: StageResult) -> None:
    import networkx as nx

    spec = ws.config.filter_spec(ws.keywords)
    kept = filter_events(ws.events, spec, ws.roster)
    retweets = [ev for ev in kept if ev.kind is EventKind.Retweet]
    meta = {"config_hash": ws.hash, "seed": ws.seed}
    graphs = {None: build_account_graph(retweets, ws.roster, None, metadata=meta)}
    for lvl in Level:
        graphs[lvl] = build_account_graph(retweets, ws.roster, lvl, metadata=meta)
    summary = {}
    for lvl, g in graphs.items():
        result.outputs.append(_write_digraph(ws, _graph_name(lvl), g))
        gml = _graph_name(lvl).replace(".csv", ".graphml")
        nx.write_graphml(g.to_networkx(), ws.path(gml))
        result.outputs.append(gml)
        summary[lvl.value if lvl else "all"] = {"vertices": g.n_vertices, "edges": g.n_edges,
                                                "weight": g.total_weight}
    result.outputs.append(ws.write_json("ingest_summary.json", {
        "events_read": len(ws.events), "events_kept": len(kept), "graphs": summary}))
    ws.done.add(("ingest", None))


def _activity_events(ws: Workspace):
    spec = ws.config.filter_spec(ws.keywords, kinds=[k.value for k in EventKind])
    return filter_events(ws.events, spec, ws.roster)


def stage_activity(ws: Workspace, levels, result: StageResult) -> None:
    events = _activity_events(ws)
    for lvl in levels:
        members = set(ws.roster.accounts(lvl))
        for binning, name in ((Binning.HourOfWeek, f"activity_{lvl.value}.csv"),
                              (Binning.WeekOfYear, f"activity_week_{lvl.value}.csv")):
            prof = activity_profile(events, members, binning, ws.config.timezone)
            if prof.empty:
                result.note("warning", f"no events at level {lvl.value}")
            frac = prof.normalized if prof.normalized is not None else np.full(binning.n_bins, math.nan)
            result.outputs.append(ws.write_csv(name, ("bin", "count", "fraction"),
                                               zip(range(binning.n_bins), prof.counts, frac)))


def stage_burstiness(ws: Workspace, levels, result: StageResult) -> None:
    events = _activity_events(ws)
    wanted = {a for lvl in levels for a in ws.roster.accounts(lvl)}
    records = account_burstiness(events, wanted)
    rows, groups = [], {}
    for rec in records:
        entry = ws.roster[rec.account_id]
        rows.append((rec.account_id, entry.level.value, entry.org_type.value, rec.n_events, rec.B))
        groups.setdefault(entry.level.value, []).append(rec.B)
    result.outputs.append(ws.write_csv("burstiness.csv", ("account", "level", "org_type", "n", "B"), rows))
    usable = {k: groups[k] for k in [lvl.value for lvl in levels] if len(groups.get(k, [])) >= 2}
    hsd_rows = []
    if len(usable) >= 2:
        hsd_rows = [(r.group1, r.group2, r.mean_diff, r.ci_low, r.ci_high, r.p_adj) for r in tukey_hsd(usable)]
    else:
        result.note("warning", "fewer than two levels with enough accounts for Tukey HSD")
    result.outputs.append(ws.write_csv("hsd.csv", ("group1", "group2", "mean_diff", "ci_low", "ci_high",
                                                   "p_adj"), hsd_rows))


def stage_mixing(ws: Workspace, levels, result: StageResult) -> None:
    g = level_graph(ws, None)
    mm = mixing_matrix(g, ws.roster)
    rows = []
    for a in Level:
        for b in Level:
            rows.append((a.value, b.value, mm.probabilities[a.index, b.index], mm.counts[a.index, b.index],
                         mm.dyads[a.index, b.index]))
    if mm.undefined.any():
        result.note("warning", "mixing cells undefined for levels without accounts")
    result.outputs.append(ws.write_csv("mixing.csv", ("from_level", "to_level", "probability", "count",
                                                      "dyads"), rows))


def stage_density(ws: Workspace, levels, result: StageResult) -> None:
    for lvl in levels:
        g = level_graph(ws, lvl)
        try:
            summary = org_density(g, ws.roster, lvl)
        except DegenerateAnalysisError as exc:
            result.note("degenerate", str(exc))
            ws.update_json("density_summary.json", lvl.value, {"status": "undefined", "message": str(exc)})
            continue
        result.outputs.append(ws.write_csv(f"density_{lvl.value}.csv", ("org_id", "density"),
                                           summary.per_org.items()))
        result.outputs.append(ws.update_json("density_summary.json", lvl.value,
                                             {"status": "ok", "mean": summary.mean,
                                              "n_orgs": len(summary.per_org)}))


def stage_overlap(ws: Workspace, levels, result: StageResult) -> None:
    for lvl in levels:
        g = level_graph(ws, lvl)
        entry = {}
        for mode in ("weighted", "unweighted"):
            try:
                summary = org_mean_overlap(g, ws.roster, lvl, mode)
            except DegenerateAnalysisError as exc:
                result.note("degenerate", str(exc).replace("density", "overlap"))
                entry = {"status": "undefined", "message": str(exc).replace("density", "overlap")}
                break
            result.outputs.append(ws.write_csv(f"overlap_{lvl.value}_{mode}.csv", ("org_id", "overlap"),
                                               summary.per_org.items()))
            entry[mode] = {"mean": summary.mean, "n_orgs": len(summary.per_org)}
            entry["status"] = "ok"
        result.outputs.append(ws.update_json("overlap_summary.json", lvl.value, entry))


def stage_backbone(ws: Workspace, levels, result: StageResult) -> None:
    alpha = ws.config.alpha
    for lvl in levels:
        g = level_graph(ws, lvl)
        if g.total_weight == 0:
            result.note("warning", f"level {lvl.value} has no edges; backbone is empty")
            scores = []
        else:
            scores = score_edges(g)
        result.outputs.append(ws.write_csv(
            f"backbone_scores_{lvl.value}.csv", ("src", "dst", "weight", "expected", "p"),
            ((s.src, s.dst, s.weight, s.expected_weight, s.p_value) for s in scores)))
        bb = extract_backbone(g, alpha) if scores else g
        result.outputs.append(_write_digraph(ws, f"backbone_{lvl.value}.csv", bb))
        ws.done.add(("backbone", lvl.value))


def stage_collapse(ws: Workspace, levels, result: StageResult) -> None:
    for lvl in levels:
        _ensure(ws, "backbone", lvl)
        bb = _read_digraph(ws, f"backbone_{lvl.value}.csv", ws.roster.accounts(lvl))
        cg = collapse(bb, ws.roster)
        result.outputs.append(ws.write_csv(f"collapsed_{lvl.value}.csv", ("org_a", "org_b"), cg.edge_pairs()))
        ws.done.add(("collapse", lvl.value))


def _bootstrap_size(ws: Workspace, level: Level) -> int:
    fix = ws.config.bootstrap.fix_size_to
    ref = Level.parse(fix) if fix else level
    return level_graph(ws, ref).total_weight


def stage_bootstrap(ws: Workspace, levels, result: StageResult) -> None:
    n = ws.config.bootstrap.n
    alpha = ws.config.alpha
    for lvl in levels:
        g = level_graph(ws, lvl)
        m = _bootstrap_size(ws, lvl)
        rows = []
        edge_counts = []
        if g.total_weight == 0:
            result.note("degenerate", f"level {lvl.value} has no edges to resample")
        else:
            dist = edge_distribution(g)
            master = ws.stage_seed("bootstrap", lvl.value)
            for k in range(n):
                sample = sample_graph(dist, m, derive_seed(master, "sample", k))
                cg = collapse(extract_backbone(sample, alpha), ws.roster)
                edge_counts.append(cg.n_edges)
                rows.extend((k, a, b) for a, b in cg.edge_pairs())
        result.outputs.append(ws.write_csv(f"bootstrap_{lvl.value}.csv", ("sample_id", "org_a", "org_b"), rows))
        result.outputs.append(ws.update_json("bootstrap_summary.json", lvl.value, {
            "n_samples": n if g.total_weight else 0, "size": m, "source_weight": g.total_weight,
            "fixed_to": ws.config.bootstrap.fix_size_to,
            "mean_collapsed_edges": float(np.mean(edge_counts)) if edge_counts else math.nan}))
        ws.done.add(("bootstrap", lvl.value))


def _bootstrap_samples(ws: Workspace, level: Level) -> list[CollapsedGraph]:
    _ensure(ws, "bootstrap", level)
    rows = ws.read_csv(f"bootstrap_{level.value}.csv")
    summary = json.loads((ws.out / "bootstrap_summary.json").read_text(encoding="utf-8"))
    n = summary["levels"][level.value]["n_samples"]
    pairs: list[list] = [[] for _ in range(n)]
    for r in rows:
        pairs[int(r["sample_id"])].append((r["org_a"], r["org_b"]))
    return [CollapsedGraph(ws.roster.organizations, p) for p in pairs]


def _fit(ws: Workspace, graph, seed):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SparsityWarning)
        res = fit_sbm(graph, n_sweeps=ws.config.sbm.n_sweeps, greedy_fraction=ws.config.sbm.greedy_fraction,
                      seed=seed)
    sparse_warn = [str(w.message) for w in caught if issubclass(w.category, SparsityWarning)]
    return res, sparse_warn


def stage_sbm(ws: Workspace, levels, result: StageResult) -> None:
    for lvl in levels:
        _ensure(ws, "collapse", lvl)
        cg = _read_collapsed(ws, f"collapsed_{lvl.value}.csv")
        seed = ws.stage_seed("sbm", lvl.value)
        res, sparse_warn = _fit(ws, cg, seed)
        for msg in sparse_warn:
            result.note("warning", f"{lvl.value}: {msg}")
        result.outputs.append(ws.write_csv(f"partition_{lvl.value}.csv", ("org_id", "block"),
                                           zip(cg.vertices, res.partition.assignment)))
        result.outputs.append(ws.update_json("sbm_report.json", lvl.value, {
            "B": res.block_count, "DL": res.description_length, "sweeps": res.n_sweeps, "seed": seed,
            "sparse": res.sparse, "sparsity_warning": bool(sparse_warn),
            "vertices": cg.n_vertices, "edges": cg.n_edges}))


def stage_rmi(ws: Workspace, levels, result: StageResult) -> None:
    k = ws.config.sbm.rmi_samples
    labels, partitions = [], []
    for lvl in levels:
        samples = _bootstrap_samples(ws, lvl)[:k]
        for idx, g in enumerate(samples):
            res, _ = _fit(ws, g, ws.stage_seed("rmi", lvl.value, idx))
            labels.append(f"{lvl.value}#{idx}")
            partitions.append(res.partition)
    n = len(partitions)
    mat = np.full((n, n), math.nan)
    for i in range(n):
        for j in range(i, n):
            mat[i, j] = mat[j, i] = rmi(partitions[i], partitions[j]).normalized
    result.outputs.append(ws.write_csv("rmi_matrix.csv", ("sample", *labels),
                                       ([labels[i], *mat[i]] for i in range(n))))
    level_of = [lab.split("#")[0] for lab in labels]
    names = [lvl.value for lvl in levels]
    blocks = {}
    for a in names:
        for b in names:
            vals = [mat[i, j] for i in range(n) for j in range(n)
                    if level_of[i] == a and level_of[j] == b and i != j]
            blocks[f"{a}|{b}"] = float(np.mean(vals)) if vals else math.nan
    result.outputs.append(ws.write_json("rmi_summary.json", {"samples_per_level": k, "mean_rmi": blocks}))


def stage_ergm(ws: Workspace, levels, result: StageResult) -> None:
    threshold = ws.config.ergm.width_threshold
    sectors = ws.roster
    terms = default_terms([ws.roster.sector(o) for o in ws.roster.organizations])
    for lvl in levels:
        samples = _bootstrap_samples(ws, lvl)
        rows = []
        try:
            ens = bootstrap_ergm(samples, terms, sectors, width_threshold=threshold)
            records = ens.records
            summary = {"status": "ok", "n_samples": len(samples), "n_usable": len(ens.estimates),
                       "terms": ens.summary()}
            wide = [t for t, flag in ens.flat_and_wide().items() if flag]
            if wide:
                result.note("warning", f"{lvl.value}: flat and wide distributions for {', '.join(wide)}")
        except DegenerateAnalysisError as exc:
            result.note("degenerate", f"{lvl.value}: {exc}")
            records = [{"sample_id": k, "usable": False, "fit": None} for k in range(len(samples))]
            summary = {"status": "too_sparse", "message": str(exc), "n_samples": len(samples), "n_usable": 0}
        for rec in records:
            fit = rec["fit"]
            for t_idx, term in enumerate(terms):
                if fit is None:
                    rows.append((rec["sample_id"], term.name, math.nan, math.nan, 0))
                else:
                    rows.append((rec["sample_id"], term.name, float(fit.theta[t_idx]),
                                 float(fit.standard_errors[t_idx]), int(rec["usable"])))
        result.outputs.append(ws.write_csv(f"ergm_{lvl.value}.csv", ("sample_id", "term", "estimate", "se",
                                                                     "converged"), rows))
        result.outputs.append(ws.update_json("ergm_summary.json", lvl.value, summary))


_STAGES = {
    "ingest": stage_ingest, "activity": stage_activity, "burstiness": stage_burstiness,
    "mixing": stage_mixing, "density": stage_density, "overlap": stage_overlap,
    "backbone": stage_backbone, "collapse": stage_collapse, "bootstrap": stage_bootstrap,
    "sbm": stage_sbm, "rmi": stage_rmi, "ergm": stage_ergm,
}


def run_stage(ws: Workspace, stage: str, levels=None) -> StageResult:
    """Run one stage for ``levels`` (default: the configured levels)."""
    if stage not in _STAGES:
        raise InputError(f"unknown stage {stage!r}")
    levels = ws.config.level_enums if levels is None else [Level.parse(lvl) for lvl in levels]
    result = StageResult(stage)
    log.info("stage %s: levels %s", stage, ", ".join(lvl.value for lvl in levels))
    _STAGES[stage](ws, levels, result)
    for msg in result.messages:
        log.warning("%s: %s", stage, msg)
    return result


def run_pipeline(ws: Workspace) -> list[StageResult]:
    """All enabled stages in dependency order; writes ``manifest.json``.

    Degenerate analyses and warnings are recorded per stage and do not stop
    the run; an input error does.
    """
    results = []
    for stage in PIPELINE_ORDER:
        if not ws.config.enabled(stage):
            results.append(StageResult(stage, "skipped"))
            continue
        results.append(run_stage(ws, stage))
    ws.write_json("manifest.json", {"stages": [
        {"stage": r.stage, "status": r.status, "messages": r.messages, "outputs": r.outputs} for r in results]})
    return results
