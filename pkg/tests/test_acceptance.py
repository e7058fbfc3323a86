"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every sub-check of a criterion is evaluated before asserting, so a failing
line names all the sub-checks that missed rather than only the first.
"""

import itertools
import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from stratanet.backbone import extract_backbone, score_edges
from stratanet.blockmodel import BlockState, fit_sbm, log_omega, rmi
from stratanet.bootstrap import edge_distribution, ensemble
from stratanet.cli import main
from stratanet.ergm import (
    CLOSURE,
    EDGES,
    HOMOPHILY,
    bootstrap_ergm,
    change_statistics,
    default_terms,
    fit_mple,
    sector_activity,
    simulate_ergm,
)
from stratanet.ingest import FilterSpec, build_level_graphs, collapse, filter_events
from stratanet.metrics import org_density, overlap
from stratanet.model import (
    CollapsedGraph,
    DegenerateAnalysisError,
    Level,
    OrgType,
    Partition,
    Roster,
    RosterEntry,
    Sector,
    SparsityWarning,
    WeightedDigraph,
)
from stratanet.synthetic import (
    four_level_fixture,
    planted_backbone,
    planted_partition,
    two_cliques,
    write_fixture,
)
from stratanet.temporal import burstiness_coefficient

pytestmark = pytest.mark.acceptance


def exact_tail(k: int, n: int, p: Fraction) -> Fraction:
    return 1 - sum(math.comb(n, x) * p**x * (1 - p) ** (n - x) for x in range(k))


def random_digraph(rng, n=9, p=0.35, max_w=5):
    edges = [(f"v{i}", f"v{j}", int(rng.integers(1, max_w + 1)))
             for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return WeightedDigraph([f"v{i}" for i in range(n)], edges)


# -------------------------------------------------------------------------- 1

def test_criterion_1_burstiness(acceptance_report):
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    gaps = rng.exponential(3.0, 10_000)
    checks = {
        "regular gaps give -1 exactly": burstiness_coefficient([5.0] * 50) == -1.0,
        "|B| < 0.05 on 1e4 exponential gaps": abs(burstiness_coefficient(gaps)) < 0.05,
        "gaps [1,3] give -1/3": burstiness_coefficient([1, 3]) == pytest.approx(-1 / 3, abs=1e-15),
        "scale invariance for c in {0.1, 7, 1000}": all(
            burstiness_coefficient(c * gaps) == pytest.approx(burstiness_coefficient(gaps), abs=1e-12)
            for c in (0.1, 7, 1000)),
    }
    ok, failed = acceptance_report(1, checks, time.perf_counter() - t, 1)
    assert ok, failed


# -------------------------------------------------------------------------- 2

def test_criterion_2_overlap_density(acceptance_report):
    t = time.perf_counter()
    tri = WeightedDigraph("ijk", [("i", "j", 1), ("j", "k", 1), ("k", "i", 1)])
    roster = Roster([RosterEntry(a, "X", Level.IndMain, Sector.Media, OrgType.Media) for a in "abcd"])
    complete = WeightedDigraph("abcd", [(a, b, 1) for a, b in itertools.permutations("abcd", 2)])

    rng = np.random.default_rng(1)
    bounded = True
    for _ in range(1000):
        g = random_digraph(rng)
        for i, j in itertools.combinations(range(9), 2):
            v = overlap(g, f"v{i}", f"v{j}")
            bounded &= 0.0 <= v <= 1.0

    invariant = True
    for _ in range(500):
        g = random_digraph(rng)
        c = int(rng.integers(2, 50))
        scaled = WeightedDigraph(g.vertices, [(a, b, w * c) for a, b, w in g.edges()])
        i, j = rng.choice(9, size=2, replace=False)
        invariant &= abs(overlap(scaled, f"v{i}", f"v{j}") - overlap(g, f"v{i}", f"v{j}")) <= 1e-12

    checks = {
        "triangle weighted overlap 1/3": overlap(tri, "i", "j", "weighted") == pytest.approx(1 / 3, abs=1e-15),
        "triangle unweighted overlap 1": overlap(tri, "i", "j", "unweighted") == 1.0,
        "complete organization density 1": org_density(complete, roster, Level.IndMain).mean == 1.0,
        "weighted overlap in [0,1] on 1e3 graphs": bounded,
        "weighted overlap scale invariant (500 cases)": invariant,
    }
    ok, failed = acceptance_report(2, checks, time.perf_counter() - t, 10)
    assert ok, failed


# -------------------------------------------------------------------------- 3

def test_criterion_3_backbone(acceptance_report):
    t = time.perf_counter()
    precision, recall, sizes = [], [], set()
    for seed in range(50):
        pb = planted_backbone(n_vertices=50, n_signal=20, seed=seed)
        sizes.add((pb.graph.n_edges - len(pb.signal), len(pb.signal)))
        kept = {(s, d) for s, d, _ in extract_backbone(pb.graph, 0.1).edges()}
        tp = len(kept & pb.signal)
        precision.append(tp / max(len(kept), 1))
        recall.append(tp / len(pb.signal))

    # independent oracle: exact rational tail on one planted instance
    pb = planted_backbone(seed=0)
    g = pb.graph
    W = g.total_weight
    out, inn = {}, {}
    for s, d, w in g.edges():
        out[s] = out.get(s, 0) + w
        inn[d] = inn.get(d, 0) + w
    oracle_ok = all(
        sc.p_value == pytest.approx(float(exact_tail(g.edge_weight(sc.src, sc.dst), W,
                                                     Fraction(out[sc.src] * inn[sc.dst], W * W))),
                                    rel=1e-9, abs=1e-300)
        for sc in score_edges(g)[:60])

    names = [f"u{i}" for i in range(10)]
    uniform = WeightedDigraph(names, [(a, b, 3) for a in names for b in names if a != b])
    checks = {
        "generator gives 400 noise + 20 signal edges": sizes == {(400, 20)},
        f"mean precision {np.mean(precision):.3f} >= 0.9": np.mean(precision) >= 0.9,
        f"mean recall {np.mean(recall):.3f} >= 0.9": np.mean(recall) >= 0.9,
        "p-values match exact binomial tail": oracle_ok,
        "uniform complete graph gives empty backbone": extract_backbone(uniform, 0.1).n_edges == 0,
    }
    ok, failed = acceptance_report(3, checks, time.perf_counter() - t, 30)
    assert ok, failed


# -------------------------------------------------------------------------- 4

def test_criterion_4_bootstrap(acceptance_report):
    t = time.perf_counter()
    names = [f"v{i}" for i in range(11)]
    g = WeightedDigraph(names, [(names[i], names[i + 1], i + 1) for i in range(10)])
    p = edge_distribution(g).probabilities
    m = 25
    samples = ensemble(g, m=m, n_samples=10_000, master_seed=3)
    totals = np.zeros(10)
    exact_m = True
    for s in samples:
        exact_m &= s.total_weight == m
        for k, (a, b, _) in enumerate(g.edges()):
            totals[k] += s.edge_weight(a, b)
    n_draws = m * len(samples)
    within = np.abs(totals - n_draws * p) <= 4 * np.sqrt(n_draws * p * (1 - p))

    again = ensemble(g, m=m, n_samples=200, master_seed=3)
    reproducible = all(list(x.edges()) == list(y.edges()) for x, y in zip(samples[:200], again))
    checks = {
        "10 edge frequencies within 4 sigma over 1e4 samples": bool(within.all()),
        "total weight equals m in every sample": exact_m,
        "bit reproducible under a fixed seed": reproducible,
    }
    ok, failed = acceptance_report(4, checks, time.perf_counter() - t, 10)
    assert ok, failed


# -------------------------------------------------------------------------- 5

def test_criterion_5_sbm(acceptance_report):
    t = time.perf_counter()
    recovered = 0
    for seed in range(100):
        a, labels = planted_partition([50, 50], 0.3, 0.01, seed=seed)
        res = fit_sbm(a, n_sweeps=60, seed=seed)
        recovered += rmi(res.partition, labels).normalized >= 0.9

    cliques = fit_sbm(two_cliques(10), n_sweeps=100, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SparsityWarning)
        empty = fit_sbm(CollapsedGraph([f"e{i}" for i in range(12)]), n_sweeps=20, seed=0)

    a, _ = planted_partition([10, 10, 10], 0.4, 0.05, seed=1)
    state = BlockState(a, b=np.random.default_rng(0).integers(0, 4, size=30))
    rng = np.random.default_rng(7)
    worst, moves = 0.0, 0
    while moves < 10_000:
        state.sweep(rng, beta=0.05)
        moves += 30
        exact = state.recompute()
        worst = max(worst, abs(state.description_length - exact) / abs(exact))

    checks = {
        f"planted 2-block recovered in {recovered}/100 seeds (>= 95)": recovered >= 95,
        "two 10-cliques: exact recovery, B = 2": cliques.block_count == 2
        and cliques.partition == Partition.from_labels(np.repeat([0, 1], 10)),
        "empty graph gives B = 1": empty.block_count == 1,
        f"incremental DL within 1e-9 relative (worst {worst:.1e})": worst <= 1e-9,
    }
    ok, failed = acceptance_report(5, checks, time.perf_counter() - t, 300)
    assert ok, failed


# -------------------------------------------------------------------------- 6

def test_criterion_6_rmi(acceptance_report):
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    p = rng.integers(0, 5, 100)
    relabeled = np.array([4, 2, 0, 3, 1])[p]
    null = np.array([rmi(rng.integers(0, 5, 100), rng.integers(0, 5, 100)).normalized for _ in range(100)])
    mean_abs = float(np.mean(np.abs(null)))
    checks = {
        "identical partitions give 1": abs(rmi(p, p).normalized - 1) <= 1e-9,
        "relabeled partitions give 1": abs(rmi(p, relabeled).normalized - 1) <= 1e-9,
        f"random pairs mean |normalized| {mean_abs:.4f} < 0.05": mean_abs < 0.05,
        "at least one negative value": bool((null < 0).any()),
        "log Omega (2,2)x(2,2) = log 3": abs(log_omega([2, 2], [2, 2]) - math.log(3)) <= 1e-12,
        "log Omega (1,1)x(1,1) = log 2": abs(log_omega([1, 1], [1, 1]) - math.log(2)) <= 1e-12,
    }
    ok, failed = acceptance_report(6, checks, time.perf_counter() - t, 30)
    assert ok, failed


# -------------------------------------------------------------------------- 7

def _brute_statistics(a, sectors):
    n = len(a)
    h = np.zeros(5)
    for i, j in itertools.combinations(range(n), 2):
        if a[i, j]:
            h[0] += 1
            h[1] += (sectors[i] == Sector.Science) + (sectors[j] == Sector.Science)
            h[2] += (sectors[i] == Sector.Business) + (sectors[j] == Sector.Business)
            h[3] += sectors[i] == sectors[j]
            h[4] += any(a[i, k] and a[j, k] for k in range(n))
    return h


def _random_graph(rng, n, p):
    a = np.triu((rng.random((n, n)) < p).astype(int), 1)
    return a + a.T


def test_criterion_7_ergm(acceptance_report):
    sm = pytest.importorskip("statsmodels.api")
    t = time.perf_counter()
    all_terms = [EDGES, sector_activity(Sector.Science), sector_activity(Sector.Business), HOMOPHILY, CLOSURE]

    exhaustive = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        a = _random_graph(rng, 8, rng.uniform(0.1, 0.7))
        sectors = [list(Sector)[k] for k in rng.integers(0, 3, 8)]
        for i, j in itertools.combinations(range(8), 2):
            plus, minus = a.copy(), a.copy()
            plus[i, j] = plus[j, i] = 1
            minus[i, j] = minus[j, i] = 0
            expected = _brute_statistics(plus, sectors) - _brute_statistics(minus, sectors)
            exhaustive &= np.array_equal(change_statistics(a, (i, j), all_terms, sectors), expected)

    logit_gap = 0.0
    dyad_terms = all_terms[:4]
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        a = _random_graph(rng, 40, 0.15)
        sectors = [list(Sector)[k] for k in rng.integers(0, 3, 40)]
        iu = np.triu_indices(40, 1)
        s_val = np.array([s.value for s in sectors])
        X = np.column_stack([np.ones(len(iu[0])),
                             (s_val[iu[0]] == "science").astype(int) + (s_val[iu[1]] == "science"),
                             (s_val[iu[0]] == "business").astype(int) + (s_val[iu[1]] == "business"),
                             (s_val[iu[0]] == s_val[iu[1]]).astype(int)])
        ref = sm.Logit(a[iu], X).fit(disp=0, tol=1e-12, maxiter=200)
        logit_gap = max(logit_gap, float(np.max(np.abs(fit_mple(a, dyad_terms, sectors).theta - ref.params))))

    truth = np.array([-2.0, 1.0])
    errors = []
    for seed in range(100):
        sectors = [Sector.Government if k else Sector.Science
                   for k in np.random.default_rng(1000 + seed).integers(0, 2, 200)]
        a = simulate_ergm(truth, [EDGES, HOMOPHILY], 200, sectors, seed=seed)
        errors.append(np.abs(fit_mple(a, [EDGES, HOMOPHILY], sectors).theta - truth))
    mae = float(np.mean(errors))

    homo, clos = [], []
    for seed in range(100):
        rng = np.random.default_rng(5000 + seed)
        sectors = [Sector.Government if k else Sector.Science for k in rng.integers(0, 2, 60)]
        fit = fit_mple(_random_graph(rng, 60, 0.1), [EDGES, HOMOPHILY, CLOSURE], sectors)
        homo.append(fit.theta[1])
        clos.append(fit.theta[2])

    def centered(x):
        x = np.asarray(x)
        return abs(x.mean()) < 3 * x.std(ddof=1) / math.sqrt(len(x))

    checks = {
        "change statistics equal brute force on all dyads of 100 graphs": exhaustive,
        f"MPLE equals logistic MLE (max gap {logit_gap:.1e} <= 1e-8)": logit_gap <= 1e-8,
        f"recovery MAE {mae:.3f} < 0.15": mae < 0.15,
        f"ER null homophily centered (mean {np.mean(homo):+.3f})": centered(homo),
        f"ER null closure centered (mean {np.mean(clos):+.3f})": centered(clos),
    }
    ok, failed = acceptance_report(7, checks, time.perf_counter() - t, 300)
    assert ok, failed


# -------------------------------------------------------------------------- 8

N_SHAPE_SEEDS = 20
SHAPE_BOOTSTRAP = 30


def _mean_width(ens, terms):
    return float(np.mean([ens.width(t) for t in terms]))


def shape_checks(seed: int) -> dict:
    data = four_level_fixture(seed)
    events = filter_events(data.events, FilterSpec(keywords=tuple(data.keywords)), data.roster)
    graphs = build_level_graphs(events, data.roster)
    terms = default_terms([data.roster.sector(o) for o in data.roster.organizations])

    density = {}
    for lvl in (Level.IndMain, Level.IndSide, Level.OrgSide):
        density[lvl] = org_density(graphs[lvl], data.roster, lvl).mean

    side = collapse(extract_backbone(graphs[Level.OrgSide], 0.1), data.roster)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SparsityWarning)
        sbm = fit_sbm(side, n_sweeps=200, seed=seed)
    warned = any(issubclass(w.category, SparsityWarning) for w in caught)

    def fitted(level, m=None):
        samples = [collapse(extract_backbone(s, 0.1), data.roster)
                   for s in ensemble(graphs[level], m, SHAPE_BOOTSTRAP, seed)]
        try:
            return bootstrap_ergm(samples, terms, data.roster)
        except DegenerateAnalysisError:
            return None

    org_main, ind_side = fitted(Level.OrgMain), fitted(Level.IndSide)
    median = lambda ens, term: float(np.median(ens.distribution(term)))
    side_free = fitted(Level.OrgSide)
    side_fixed = fitted(Level.OrgSide, graphs[Level.OrgMain].total_weight)
    width_free = math.inf if side_free is None else _mean_width(side_free, terms)
    width_fixed = math.inf if side_fixed is None else _mean_width(side_fixed, terms)

    both = org_main is not None and ind_side is not None
    return {
        "a": density[Level.IndMain] > max(density[Level.IndSide], density[Level.OrgSide])
        and density[Level.OrgSide] < 0.05,
        "b": sbm.block_count == 1 and warned,
        "c": both and median(org_main, HOMOPHILY) > median(ind_side, HOMOPHILY)
        and median(org_main, CLOSURE) < median(ind_side, CLOSURE),
        "d": width_fixed < width_free,
    }


@pytest.mark.slow
def test_criterion_8_four_level_shape(acceptance_report):
    t = time.perf_counter()
    agree = {k: 0 for k in "abcd"}
    for seed in range(N_SHAPE_SEEDS):
        for k, v in shape_checks(seed).items():
            agree[k] += bool(v)
    need = math.ceil(0.8 * N_SHAPE_SEEDS)
    labels = {
        "a": "IndMain density highest, OrgSide near 0",
        "b": "OrgSide SBM is one block with a sparsity warning",
        "c": "homophily OrgMain > IndSide, closure reversed",
        "d": "fixed bootstrap size narrows OrgSide ERGM widths",
    }
    checks = {f"({k}) {labels[k]}: {agree[k]}/{N_SHAPE_SEEDS}": agree[k] >= need for k in "abcd"}
    ok, failed = acceptance_report(8, checks, time.perf_counter() - t, 600)
    assert ok, failed


# -------------------------------------------------------------------------- 9

def test_criterion_9_determinism(acceptance_report, tmp_path):
    t = time.perf_counter()
    config = write_fixture(tmp_path / "fixture", seed=0)
    codes = [main(["pipeline", "--config", str(config), "--out-dir", str(tmp_path / run)]) for run in ("a", "b")]

    def artifacts(d):
        return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.suffix in (".csv", ".json")}

    first, second = artifacts(tmp_path / "a"), artifacts(tmp_path / "b")
    checks = {
        "both runs exit 0": codes == [0, 0],
        f"{len(first)} CSV/JSON artifacts byte-identical": bool(first) and first == second,
    }
    ok, failed = acceptance_report(9, checks, time.perf_counter() - t, 120)
    assert ok, failed
