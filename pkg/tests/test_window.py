import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.num import SIGMA, TAU, ZERO, ZTau, ZTauVec2
from fibdpv.rules import ALL_RULES, DP_RULE, M, RuleId
from fibdpv.window import (
    IDENTITY,
    SHEARS,
    IFSMap,
    NotPolygonal,
    PolyWindow,
    WindowIFS,
    attractor_raster,
    certify_polygonal_window,
    dp_windows,
    hutchinson_escape,
    raster_hausdorff,
    snap,
    verify_rect_ifs,
    window_ifs,
)

TARGET = [TAU**-2, TAU**-1, TAU**-1, ZTau(1)]


def test_dp_system_is_the_reference_one():
    s = SIGMA
    v = ZTauVec2
    expected = {
        (0, 3, v(s, s)),
        (1, 2, v(ZERO, s)),
        (1, 3, v(ZERO, s)),
        (2, 1, v(s, ZERO)),
        (2, 3, v(s, ZERO)),
        (3, 0, v(ZERO, ZERO)),
        (3, 1, v(ZERO, ZERO)),
        (3, 2, v(ZERO, ZERO)),
        (3, 3, v(ZERO, ZERO)),
    }
    got = {(m.target, m.source, m.shift) for m in window_ifs(DP_RULE).maps}
    assert got == expected


@given(st.sampled_from(ALL_RULES))
def test_map_counts_follow_the_matrix(rid):
    ifs = window_ifs(rid)
    assert len(ifs.maps) == 9
    assert ifs.counts() == [sum(r) for r in M]


def test_dp_rectangles_solve_the_system():
    ifs = window_ifs(DP_RULE)
    assert verify_rect_ifs(list(ifs.maps), list(dp_windows())) == []
    areas = [(r[2] - r[0]) * (r[3] - r[1]) for r in dp_windows()]
    assert areas == TARGET


def test_wrong_rectangles_are_rejected():
    ifs = window_ifs(DP_RULE)
    rects = list(dp_windows())
    x0, y0, x1, y1 = rects[3]
    rects[3] = (x0, y0, x1 + TAU**-4, y1)
    assert verify_rect_ifs(list(ifs.maps), rects)


def test_dp_certification_and_hausdorff(dp_raster):
    w = certify_polygonal_window(window_ifs(DP_RULE), dp_raster)
    assert w.shear == IDENTITY
    assert w.rects == dp_windows()
    assert raster_hausdorff(dp_raster, w) <= 2.0**-7


def test_certification_needs_resolution():
    r = attractor_raster(window_ifs(DP_RULE), 6)
    with pytest.raises(ValueError):
        certify_polygonal_window(window_ifs(DP_RULE), r)


def test_fractal_is_not_polygonal():
    ifs = window_ifs(RuleId(0, 0, 9))
    with pytest.raises(NotPolygonal):
        certify_polygonal_window(ifs, attractor_raster(ifs, 8))


def test_resolution_limits():
    with pytest.raises(ValueError):
        attractor_raster(window_ifs(DP_RULE), 3)
    with pytest.raises(ValueError):
        attractor_raster(window_ifs(DP_RULE), 15)


def test_raster_is_hutchinson_invariant(dp_raster):
    assert hutchinson_escape(window_ifs(DP_RULE), dp_raster) == 0


def test_areas_and_ratios(dp_raster):
    tgt = [float(t) for t in TARGET]
    for a, t in zip(dp_raster.areas, tgt):
        assert abs(a - t) <= 0.02 * t
    assert abs(sum(dp_raster.areas) - TAU.__float__() ** 2) <= 0.02 * float(TAU) ** 2


def test_box_area_is_monotone_in_resolution():
    ifs = window_ifs(DP_RULE)
    inside = [attractor_raster(ifs, k).types[3].inside.sum() * 4.0**-k for k in (5, 6, 7)]
    assert inside[0] <= inside[1] <= inside[2]


def test_overlapping_system_fails_the_area_check():
    # sigma*Omega_0 used twice inside Omega_3, so the pieces overlap
    maps = list(window_ifs(DP_RULE).maps)
    maps[-3] = IFSMap(3, 0, ZTauVec2(ZERO, ZERO))
    ifs = WindowIFS(None, tuple(maps))
    r = attractor_raster(ifs, 7)
    assert abs(sum(r.areas) - float(TAU) ** 2) > 0.02 * float(TAU) ** 2


@pytest.mark.parametrize("shear", SHEARS, ids=str)
def test_shears_are_unimodular(shear):
    assert shear.det() == 1
    v = ZTauVec2.of(3, TAU)
    assert shear.inverse().apply(shear.apply(v)) == v
    assert shear.star().star() == shear
    m = shear.float_matrix()
    np.testing.assert_allclose(shear.apply_f(np.array([v.to_float()]))[0], m @ np.array(v.to_float()))


def test_snap():
    assert snap(float(TAU - 2), 1e-3) == TAU - 2
    assert snap(math.pi * 100, 1e-3) is None


def test_polywindow_locate():
    w = PolyWindow(DP_RULE, IDENTITY, dp_windows())
    corner = ZTauVec2(TAU - 2, TAU - 2)
    assert w.locate(3, corner) == 0 and w.locate(0, corner) == 0
    assert w.contains(3, corner, "half-open") and not w.contains(0, corner, "half-open")
    assert w.locate(3, ZTauVec2(ZERO, ZERO)) == 1
    assert w.locate(0, ZTauVec2(ZERO, ZERO)) == -1
