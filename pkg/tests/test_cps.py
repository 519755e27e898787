import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.cps import (
    LATTICE,
    ZoomMembership,
    compare_patch_modelset,
    lift,
    model_set,
    row_projection,
    seed_shift,
    star_map,
    torus_coords,
)
from fibdpv.num import ONE, SIGMA, TAU, ZERO, ZTau, ZTauVec2
from fibdpv.rules import ALL_RULES, DP_RULE, RuleId, supertile_patch
from fibdpv.window import IDENTITY, PolyWindow, attractor_raster, dp_windows, window_ifs

coef = st.integers(-50, 50)
vec = st.builds(lambda a, b, c, d: ZTauVec2(ZTau(a, b), ZTau(c, d)), coef, coef, coef, coef)
DPW = PolyWindow(DP_RULE, IDENTITY, dp_windows())


def test_lattice_covolume():
    assert LATTICE.determinant() == ZTau(-5)
    assert LATTICE.covolume == 5
    assert abs(abs(np.linalg.det(LATTICE.matrix())) - 5) < 1e-9


def test_star_examples():
    assert star_map(ZTauVec2(TAU, ZERO)) == ZTauVec2(ONE - TAU, ZERO)
    assert star_map(ZTauVec2.of(1, 1)) == ZTauVec2.of(1, 1)
    assert star_map(ZTauVec2(TAU**2, TAU**-1)) == ZTauVec2(2 - TAU, -TAU)


@given(vec, vec)
def test_star_is_additive_and_scales_by_sigma(v, w):
    assert star_map(v + w) == star_map(v) + star_map(w)
    assert star_map(v.scale(TAU)) == star_map(v).scale(SIGMA)
    assert LATTICE.contains(lift(v))


@given(vec, vec)
def test_torus_coordinates_are_lattice_invariant(v, p):
    d = np.array(v.to_float()) * 1e-3 + 0.1234
    i = np.array(v.star().to_float()) * 1e-3 - 0.0567
    a = torus_coords(d, i)
    b = torus_coords(d + np.array(p.to_float()), i + np.array(p.star().to_float()))
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_row_projection_is_fibonacci():
    # the row y = 0 of the DP model set projects onto the 1D window of type a|b
    xs = row_projection(DPW, 30, ZTauVec2(ZERO, ZERO))
    gaps = {x2 - x1 for x1, x2 in zip(xs, xs[1:])}
    assert gaps <= {TAU, ONE}


def test_model_set_conventions_differ_only_on_boundary():
    region = (-10, -10, 10, 10)
    closed = model_set(DPW, region, ZTauVec2(ZERO, ZERO), "closed")
    half = model_set(DPW, region, ZTauVec2(ZERO, ZERO), "half-open")
    assert len(closed.points) + len(closed.boundary) >= len(half.points)
    assert {p.key() for p, _ in half.points} <= {p.key() for p, _ in closed.points} | {
        p.key() for p, _ in closed.boundary
    }
    with pytest.raises(ValueError):
        model_set(DPW, region, None, "sideways")


@pytest.mark.parametrize("n", [0, 2, 4])
def test_supertile_lies_in_model_set(n):
    p, _ = supertile_patch(DP_RULE, n)
    s = seed_shift(DP_RULE, n)
    for t in p:
        assert DPW.locate(t.type, t.pos.star() - s) >= 0


def test_polygonal_comparison_exact():
    rep = compare_patch_modelset(RuleId(0, 0, 1), n=5)
    assert rep.ok and rep.window_kind == "polygon"
    assert rep.uncertain == 0


def test_fractal_comparison_uses_exact_zoom():
    rep = compare_patch_modelset(RuleId(0, 0, 9), n=4, k=8)
    assert rep.ok, rep.mismatches[:3]
    assert rep.uncertain_fraction <= 0.005


def test_zoom_membership_on_fixed_point():
    rid = RuleId(0, 0, 4)
    ifs = window_ifs(rid)
    zoom = ZoomMembership(ifs, attractor_raster(ifs, 7))
    assert zoom.classify(3, ifs.fixed_point3()) == "in"
    assert zoom.classify(3, ZTauVec2.of(40, 40)) == "out"


@given(st.sampled_from(ALL_RULES))
def test_seed_shift_is_exact(rid):
    s = seed_shift(rid, 3)
    assert isinstance(s.x, ZTau) and isinstance(s.y, ZTau)
