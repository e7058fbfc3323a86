import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stratanet.metrics import aggregate_contrast, mixing_matrix, org_density, org_mean_overlap, overlap
from stratanet.model import DegenerateAnalysisError, InputError, Level, OrgType, Roster, RosterEntry, Sector, WeightedDigraph


def entry(acc, org, level, sector=Sector.Media, org_type=OrgType.Media):
    return RosterEntry(acc, org, level, sector, org_type)


# -- mixing ----------------------------------------------------------------------

def test_mixing_empty_graph():
    r = Roster([entry("a", "X", Level.OrgMain), entry("b", "Y", Level.IndSide)])
    mm = mixing_matrix(WeightedDigraph(r.accounts()), r)
    assert np.nansum(mm.probabilities) == 0 and mm.counts.sum() == 0


def test_mixing_single_cross_edge():
    r = Roster([entry("o1", "X", Level.OrgMain), entry("o2", "Y", Level.OrgMain),
                entry("s1", "X", Level.IndSide), entry("s2", "Y", Level.IndSide)])
    mm = mixing_matrix(WeightedDigraph(r.accounts(), [("o1", "s2", 7)]), r)
    assert mm.probabilities[0, 3] == 0.25
    others = np.delete(mm.probabilities.ravel(), 3)
    assert np.nansum(others) == 0
    assert mm.undefined[1].all() and mm.undefined[:, 2].all()


def test_mixing_saturated_level():
    r = Roster([entry(a, "X", Level.IndMain) for a in "abc"])
    edges = [(a, b, 1) for a, b in itertools.permutations("abc", 2)]
    mm = mixing_matrix(WeightedDigraph(r.accounts(), edges), r)
    assert mm.probabilities[2, 2] == 1.0 and mm.dyads[2, 2] == 6


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7), st.integers(1, 5)), max_size=40))
def test_mixing_counts_sum_to_binary_edges(edges):
    levels = list(Level)
    r = Roster([entry(f"v{i}", f"org{i % 3}", levels[i % 4]) for i in range(8)])
    g = WeightedDigraph(r.accounts(), [(f"v{a}", f"v{b}", w) for a, b, w in edges])
    mm = mixing_matrix(g, r)
    assert mm.counts.sum() == g.n_edges
    p = mm.probabilities[~mm.undefined]
    assert ((p >= 0) & (p <= 1)).all()


# -- density -----------------------------------------------------------------------

def test_density_hand_count():
    r = Roster([entry(a, "X", Level.IndMain) for a in "abc"])
    s = org_density(WeightedDigraph("abc", [("a", "b", 4), ("b", "c", 1)]), r, Level.IndMain)
    assert s.per_org == {"X": pytest.approx(1 / 3)}


def test_density_complete_org():
    r = Roster([entry(a, "X", Level.IndSide) for a in "abcd"])
    g = WeightedDigraph("abcd", [(a, b, 1) for a, b in itertools.permutations("abcd", 2)])
    assert org_density(g, r, Level.IndSide).mean == 1.0


def test_density_excludes_single_account_orgs():
    r = Roster([entry("a", "X", Level.IndMain), entry("b", "X", Level.IndMain), entry("c", "Y", Level.IndMain)])
    s = org_density(WeightedDigraph("abc", [("a", "b", 1)]), r, Level.IndMain)
    assert list(s.per_org) == ["X"] and s.mean == 0.5


def test_density_undefined_level():
    r = Roster([entry("a", "X", Level.OrgMain), entry("b", "Y", Level.OrgMain)])
    with pytest.raises(DegenerateAnalysisError, match="density undefined at level"):
        org_density(WeightedDigraph("ab", [("a", "b", 1)]), r, Level.OrgMain)


# -- overlap -----------------------------------------------------------------------

TRIANGLE = WeightedDigraph("ijk", [("i", "j", 1), ("j", "k", 1), ("k", "i", 1)])


def test_triangle_overlap():
    assert overlap(TRIANGLE, "i", "j", "weighted") == pytest.approx(1 / 3)
    assert overlap(TRIANGLE, "i", "j", "unweighted") == 1.0


def test_path_overlap():
    g = WeightedDigraph("ikj", [("i", "k", 1), ("k", "j", 1)])
    assert overlap(g, "i", "j", "weighted") == 1.0
    assert overlap(g, "i", "j", "unweighted") == 1.0


def test_no_common_neighbors():
    g = WeightedDigraph("abcd", [("a", "c", 2), ("b", "d", 1)])
    assert overlap(g, "a", "b", "weighted") == 0 and overlap(g, "a", "b", "unweighted") == 0
    assert overlap(WeightedDigraph("ab"), "a", "b") == 0


def test_overlap_errors():
    with pytest.raises(InputError):
        overlap(TRIANGLE, "i", "i")
    with pytest.raises(InputError):
        overlap(TRIANGLE, "i", "j", "cosine")


@pytest.mark.parametrize("n", [3, 4, 6])
def test_clique_mean_overlap(n):
    names = [f"a{i}" for i in range(n)]
    r = Roster([entry(a, "X", Level.IndMain) for a in names])
    g = WeightedDigraph(names, [(a, b, 1) for a, b in itertools.combinations(names, 2)])
    expected = 2 * (n - 2) / (2 * (n - 1) + 2)
    assert org_mean_overlap(g, r, Level.IndMain).mean == pytest.approx(expected)


def test_org_mean_overlap_averages_orgs():
    # org X: a,b share neighbor z -> weighted (1+1)/(1+1) = 1 ; org Y: c,d share nothing -> 0
    r = Roster([entry("a", "X", Level.IndSide), entry("b", "X", Level.IndSide),
                entry("c", "Y", Level.IndSide), entry("d", "Y", Level.IndSide), entry("z", "Z", Level.IndSide)])
    g = WeightedDigraph("abcdz", [("a", "z", 1), ("b", "z", 1)])
    s = org_mean_overlap(g, r, Level.IndSide)
    assert s.per_org == {"X": 1.0, "Y": 0.0} and s.mean == 0.5


def random_weighted(rng, n=9, p=0.35):
    edges = [(f"v{i}", f"v{j}", int(rng.integers(1, 6)))
             for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return WeightedDigraph([f"v{i}" for i in range(n)], edges)


def test_weighted_overlap_bounds_random_graphs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        g = random_weighted(rng)
        i, j = rng.choice(9, size=2, replace=False)
        for mode in ("weighted", "unweighted"):
            o = overlap(g, f"v{i}", f"v{j}", mode)
            assert 0 <= o <= 1
            assert o == overlap(g, f"v{j}", f"v{i}", mode)


@given(st.integers(0, 2**32 - 1), st.integers(2, 50))
def test_weighted_overlap_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    g = random_weighted(rng)
    scaled = WeightedDigraph(g.vertices, [(a, b, w * c) for a, b, w in g.edges()])
    i, j = rng.choice(9, size=2, replace=False)
    assert overlap(scaled, f"v{i}", f"v{j}") == pytest.approx(overlap(g, f"v{i}", f"v{j}"), abs=1e-12)


def test_aggregate_contrast_presets():
    r = Roster([entry("o1", "X", Level.OrgMain), entry("o2", "X", Level.OrgSide),
                entry("p1", "X", Level.IndMain), entry("p2", "X", Level.IndSide),
                entry("o3", "Y", Level.OrgMain, Sector.Government, OrgType.Government),
                entry("p3", "Y", Level.IndSide, Sector.Government, OrgType.Government)])
    values = {"o1": 1.0, "o2": 3.0, "p1": 0.0, "p2": 2.0, "o3": 5.0, "p3": 1.0}
    d = aggregate_contrast(values, r, "official", "personal")
    assert d.diff == pytest.approx(3.0 - 1.0)
    media = aggregate_contrast(values, r, "official", "personal", org_type=OrgType.Media)
    assert media.diff == pytest.approx(2.0 - 1.0)
