import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from kcmdrop.bootstrap import (FAMILIES, Boundary, ClassificationError, ConfigError, FamilyError, GrowthParams,
                               SiteSet, UpdateFamily, classify, closure, closure_with_boundary,
                               difficulty_direction, difficulty_family, family_from_dict, is_stable_direction,
                               selection_failures, select_canonical_directions, stable_arcs)
from kcmdrop.geometry import DirectionVector as D, HalfPlane, Window

INF = math.inf


def naive_closure(K, fam, win, boundary=None):
    """Synchronous sweeps of the infection map until nothing changes."""
    inf = set(K)

    def on(p):
        return p in inf or (boundary is not None and boundary.contains(p))

    while True:
        new = {(x, y) for x in range(win.x0, win.x1) for y in range(win.y0, win.y1)
               if (x, y) not in inf and not (boundary is not None and boundary.contains((x, y)))
               and any(all(on((x + a, y + b)) for a, b in r) for r in fam.rules)}
        if not new:
            return inf
        inf |= new


def test_closure_examples():
    w = Window(-5, 6, -5, 6, margin=1)
    got = closure(SiteSet({(0, 0), (1, 1)}, w), FAMILIES["two-neighbour"])
    assert got.sites == {(0, 0), (1, 0), (0, 1), (1, 1)} and got.exact
    assert closure(SiteSet(set(), w), FAMILIES["duarte"]).sites == frozenset()
    assert closure(SiteSet({(0, 0)}, w), FAMILIES["duarte"]).sites == {(0, 0)}


def test_closure_with_boundary_examples():
    w = Window(-3, 4, -6, 7, margin=1)
    H = Boundary([HalfPlane(D(1, 0))])
    got = closure_with_boundary(SiteSet({(0, 5)}, w), H, FAMILIES["duarte"])
    assert got.sites == {(0, y) for y in range(-6, 7)}
    assert not got.exact
    assert closure_with_boundary(SiteSet(set(), w), H, FAMILIES["duarte"]).sites == frozenset()
    got = closure_with_boundary(SiteSet({(0, 0)}, w), H, FAMILIES["two-neighbour"])
    assert got.sites == {(0, y) for y in range(-6, 7)}


sites = st.sets(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), max_size=12)


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(sorted(FAMILIES)), sites)
def test_closure_matches_naive_oracle(name, K):
    fam = FAMILIES[name]
    w = Window(-6, 7, -6, 7, margin=1)
    assert closure(SiteSet(K, w), fam).sites == naive_closure(K, fam, w)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["duarte", "three-rule"]), sites, st.sampled_from([(1, 0), (0, 1), (-1, -1), (1, 2)]))
def test_closure_with_boundary_matches_oracle(name, K, n):
    fam = FAMILIES[name]
    w = Window(-6, 7, -6, 7, margin=1)
    H = Boundary([HalfPlane(D(*n), (-2, 0))])
    K = {p for p in K if not H.contains(p)}
    assert closure_with_boundary(SiteSet(K, w), H, fam).sites == naive_closure(K, fam, w, H)


@settings(max_examples=100, deadline=None)
@given(sites, sites)
def test_closure_monotone_and_idempotent(A, B):
    fam = FAMILIES["three-rule"]
    w = Window(-6, 7, -6, 7, margin=1)
    ca = closure(SiteSet(A, w), fam).sites
    cab = closure(SiteSet(A | B, w), fam).sites
    assert A <= ca <= cab
    assert closure(SiteSet(ca, w), fam).sites == ca


def test_stability_examples():
    assert not is_stable_direction(FAMILIES["two-neighbour"], D(1, 1))
    assert is_stable_direction(FAMILIES["duarte"], D(1, 0))
    for u in [D(1, 0), D(3, -7), D(-1, 1)]:
        assert not is_stable_direction(FAMILIES["one-neighbour"], u)


def test_stable_arcs_examples():
    s = stable_arcs(FAMILIES["duarte"])
    assert len(s.arcs) == 1 and s.arcs[0].start == D(0, 1) and s.arcs[0].end == D(0, -1)
    assert s.isolated == [D(1, 0)]
    s = stable_arcs(FAMILIES["two-neighbour"])
    assert not s.arcs and set(s.isolated) == {D(1, 0), D(0, 1), D(-1, 0), D(0, -1)}
    assert stable_arcs(FAMILIES["horizontal-pair"]).full


@given(st.integers(-30, 30), st.integers(-30, 30))
def test_stable_set_agrees_with_direct_check(x, y):
    if (x, y) == (0, 0):
        return
    u = D.of(x, y)
    for fam in FAMILIES.values():
        assert stable_arcs(fam).contains(u) == is_stable_direction(fam, u)


def test_difficulty_examples():
    duarte = FAMILIES["duarte"]
    assert difficulty_direction(duarte, D(1, 1)) == 0
    assert difficulty_direction(duarte, D(1, 0)) == 1
    assert difficulty_direction(duarte, D(-1, 0)) == INF
    assert difficulty_family(duarte) == 1
    assert difficulty_family(FAMILIES["two-neighbour"]) == 1
    assert difficulty_family(FAMILIES["one-neighbour"]) == 0


def test_bad_growth_params():
    with pytest.raises(ConfigError):
        difficulty_direction(FAMILIES["duarte"], D(1, 0), growth=GrowthParams(w0=16, w_max=8))


@pytest.mark.parametrize("name,cls,alpha,inf", [
    ("duarte", "critical", 1, True), ("three-rule", "critical", 1, True),
    ("two-neighbour", "critical", 1, False), ("one-neighbour", "supercritical", 0, False),
    ("horizontal-pair", "subcritical", INF, True)])
def test_classification(name, cls, alpha, inf):
    r = classify(FAMILIES[name])
    assert (r.classification, r.alpha) == (cls, alpha)
    if cls == "critical":
        assert r.infinite_stable is inf


def test_classification_invariant_under_rotation():
    rot = ((0, -1), (1, 0))
    r = classify(FAMILIES["duarte"].transformed(rot))
    assert (r.classification, r.alpha, r.infinite_stable) == ("critical", 1, True)


def test_canonical_directions_three_rule():
    fam = FAMILIES["three-rule"]
    rep = classify(fam)
    d = select_canonical_directions(rep, fam)
    assert selection_failures(fam, rep, d) == []
    # u1, u2 in the third quadrant, all frame directions with integer length
    for u in (d.u1, d.u2):
        assert u.dx < 0 and u.dy < 0
    for u in d.S:
        assert u.is_pythagorean()


def test_canonical_directions_duarte_and_errors():
    fam = FAMILIES["duarte"]
    rep = classify(fam)
    d = select_canonical_directions(rep, fam)
    assert selection_failures(fam, rep, d) == []
    with pytest.raises(ClassificationError):
        select_canonical_directions(classify(FAMILIES["two-neighbour"]), FAMILIES["two-neighbour"])


def test_family_validation():
    with pytest.raises(FamilyError):
        UpdateFamily(())
    with pytest.raises(FamilyError):
        UpdateFamily((((0, 0),),))
    with pytest.raises(FamilyError):
        family_from_dict({"rules": [[[1, 0], [0]]]})
    with pytest.raises(FamilyError):
        family_from_dict({"name": "x"})
    fam = family_from_dict(FAMILIES["three-rule"].to_json())
    assert fam == FAMILIES["three-rule"]


def test_sites_outside_window_rejected():
    from kcmdrop.geometry import GeometryError
    with pytest.raises(GeometryError):
        SiteSet({(10, 0)}, Window(0, 3, 0, 3))
