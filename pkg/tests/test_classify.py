import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.classify import (
    D4,
    R180,
    ShearNotFound,
    boundary_dimension,
    classify_window,
    d4_orbits,
    d4_transform,
    detect_shear,
    element,
    fractal_names,
    lattice_invariant,
    orbit_of,
    related_by_r180,
    rule_dimension,
)
from fibdpv.num import ZTau
from fibdpv.rules import ALL_RULES, DP_RULE, RuleId
from fibdpv.window import SHEARS, Shear

rules = st.sampled_from(ALL_RULES)
group = st.sampled_from(D4)


def test_d4_is_a_group():
    e = element(((1, 0), (0, 1)))
    for g, h in itertools.product(D4, D4):
        assert g * h in D4
    for g in D4:
        assert any(g * h == e for h in D4)
    assert R180 * R180 == e
    with pytest.raises(ValueError):
        element(((2, 0), (0, 1)))


@given(rules, group, group)
def test_action_is_compatible_with_products(rid, g, h):
    assert d4_transform(d4_transform(rid, h), g) == d4_transform(rid, g * h)


def test_orbits():
    orbits = d4_orbits()
    assert sorted(len(o) for o in orbits) == [4, 4, 8, 8, 8, 8, 8]
    assert sorted(r for o in orbits for r in o) == sorted(ALL_RULES)
    assert orbit_of(DP_RULE) == 0
    assert set(orbits[0]) == {RuleId(0, 0, 0), RuleId(0, 1, 6), RuleId(1, 0, 3), RuleId(1, 1, 9)}


@pytest.mark.parametrize("rid", [RuleId(0, 0, 1), RuleId(0, 0, 3), RuleId(0, 0, 4)], ids=str)
def test_shape_kind_is_orbit_invariant(rid):
    kind = classify_window(rid).kind
    for g in D4[:3]:
        assert classify_window(d4_transform(rid, g)).kind == kind


def test_shapes():
    assert classify_window(DP_RULE).kind == "square"
    sh = classify_window(RuleId(0, 0, 2))
    assert sh.kind == "parallelogram" and sh.axis == "x"
    assert classify_window(RuleId(0, 0, 9)).kind == "fractal"


def test_r180_partners_share_the_mld_class():
    a = RuleId(0, 0, 1)
    b = d4_transform(a, R180)
    assert related_by_r180(a, b) and a != b
    assert classify_window(a) == classify_window(b)


@pytest.mark.parametrize("rid", [RuleId(0, 0, 1), RuleId(0, 0, 2)], ids=str)
def test_shear_is_unique_and_lattice_preserving(rid):
    rep = detect_shear(rid)
    assert rep.candidates == 1 and rep.det_ok and rep.lattice_ok
    assert all(t.star() == ts for t, ts in zip(rep.translations, rep.translations_star))


def test_shear_of_rule_002():
    rep = detect_shear(RuleId(0, 0, 2))
    assert rep.shear == Shear("x", ZTau(-1))


def test_no_shear_for_squares_or_fractals():
    with pytest.raises(ShearNotFound):
        detect_shear(DP_RULE)
    with pytest.raises(ShearNotFound):
        detect_shear(RuleId(0, 0, 9))


@pytest.mark.parametrize("shear", SHEARS, ids=str)
def test_candidate_shears_preserve_the_lattice(shear):
    assert lattice_invariant(shear)


def test_dimension_fit():
    exact = [(k, round(2 ** (1.5 * k))) for k in range(6, 12)]
    d = boundary_dimension(exact)
    assert d.estimate == pytest.approx(1.5, abs=1e-3) and d.error < 1e-3
    with pytest.raises(ValueError):
        boundary_dimension(exact[:2])


def test_polygon_dimension_is_one():
    d = rule_dimension(DP_RULE, (6, 7, 8))
    assert abs(d.estimate - 1.0) < 0.05


def test_fractal_names_are_assigned():
    from fibdpv.classify import DimensionEstimate, Shape

    orbits = d4_orbits()
    shapes = {r: Shape("square") for r in ALL_RULES}
    dims = {}
    for k, orb in enumerate(orbits):
        if RuleId(0, 0, 9) in orb or RuleId(0, 0, 4) in orb or RuleId(0, 0, 10) in orb:
            for r in orb:
                shapes[r] = Shape("fractal")
            dims[k] = DimensionEstimate(1.5 + 0.1 * k, 0.01, (6, 7, 8), (1, 2, 3))
    names = fractal_names(shapes, dims)
    assert sorted(names.values()) == ["castle", "cross", "island"]
    assert names[orbit_of(RuleId(0, 0, 9))] == "castle"
