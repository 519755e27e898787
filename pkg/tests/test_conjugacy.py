import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.conjugacy import (
    BallModelSet,
    ConjugacyProbe,
    GenericityError,
    almost_period_vectors,
    almost_periods,
    delta_of_R,
    dp_window,
    interiors_overlap,
    polygon_twice_area,
    prototile,
    radius_fit,
    shear_norm_ok,
    sheared_prototiles,
    sheared_system,
    singular_value_c,
)
from fibdpv.num import TAU, TAU_F, ZERO, ZTau, ZTauVec2
from fibdpv.window import SHEARS, Shear

S = Shear("x", ZTau(-1))  # [[1, -1], [0, 1]]
V = ZTauVec2.of


@pytest.fixture(scope="module")
def dp_set():
    return BallModelSet(dp_window(), pad=1.5)


def test_sheared_system_literal():
    got = {p: sorted((j, d.key()) for j, d in kids) for p, kids in sheared_system(S).items()}
    want = {
        0: [(3, V(0, 0))],
        1: [(2, V(1, 0)), (3, V(0, 0))],
        2: [(1, V(-1, 1)), (3, V(0, 0))],
        3: [(0, V(0, 1)), (1, V(-1, 1)), (2, V(1, 0)), (3, V(0, 0))],
    }
    assert got == {p: sorted((j, d.key()) for j, d in kids) for p, kids in want.items()}


@pytest.mark.parametrize("shear", (None,) + SHEARS, ids=str)
def test_sheared_prototiles_tile_exactly(shear):
    rep = sheared_prototiles(shear)
    assert rep.ok, rep.problems
    for i in range(4):
        assert polygon_twice_area(rep.tiles[i]) == polygon_twice_area(prototile(i))


def test_overlap_predicate():
    a = prototile(3)
    assert interiors_overlap(a, a)
    b = tuple(v + V(TAU, 0) for v in a)
    assert not interiors_overlap(a, b)  # shares an edge only


def test_delta_of_R_positive_and_monotone():
    ds = [delta_of_R(dp_window(), R=R) for R in (5, 10, 20, 40)]
    assert all(d > 0 for d in ds)
    assert all(a >= b for a, b in zip(ds, ds[1:]))


def test_zero_shift_is_not_generic():
    with pytest.raises(GenericityError):
        delta_of_R(dp_window(), (0.0, 0.0), 1.5)
    assert delta_of_R(dp_window(), (0.0, 0.0), 0.9) == pytest.approx(float(2 - TAU))


def test_zero_translation_agrees_everywhere(dp_set):
    assert dp_set.agreement_radius(V(0, 0)) == dp_set.r_max


def test_radius_grows_as_star_shrinks(dp_set):
    small = dp_set.agreement_radius(V(1, 0))
    large = dp_set.agreement_radius(ZTauVec2(TAU**6, ZERO))
    assert small <= 1.0 < 10.0 < large
    radii = [dp_set.agreement_radius(ZTauVec2(TAU ** (2 * n), ZERO)) for n in range(7)]
    assert radii == sorted(radii)


def test_pad_is_enforced():
    ms = BallModelSet(dp_window(), r_max=20, pad=0.1)
    with pytest.raises(ValueError):
        ms.agreement_radius(V(1, 0))


def test_almost_period_list():
    ts = set(almost_period_vectors(0.1, 100))
    t6 = TAU**6
    for t in (ZTauVec2(t6, ZERO), ZTauVec2(ZERO, t6), ZTauVec2(t6, t6)):
        assert t in ts
    assert V(1, 0) not in ts
    assert almost_period_vectors(1e-9, 100) == [V(0, 0)]
    with pytest.raises(ValueError):
        almost_periods(0.0, 10)


def test_fit_recovers_a_power_law():
    from fibdpv.conjugacy import AlmostPeriod

    ps = [AlmostPeriod(V(0, 0), s, 3.0 / s, False) for s in (0.01, 0.02, 0.05, 0.1)]
    fit = radius_fit(ps)
    assert fit.slope == pytest.approx(-1.0) and fit.used == 4
    with pytest.raises(ValueError):
        radius_fit(ps[:2])


def test_singular_value():
    assert singular_value_c(1) == pytest.approx(1 / TAU_F)
    for a in (-TAU_F, -1.0, 0.618, 1.618):
        smin = np.linalg.svd(np.array([[1.0, a], [0.0, 1.0]]), compute_uv=False)[-1]
        assert singular_value_c(a) == pytest.approx(smin)


coef = st.integers(-10**4, 10**4)


@given(st.sampled_from(SHEARS), coef, coef, coef, coef)
def test_norm_inequality_is_exact(shear, a, b, c, d):
    t = ZTauVec2(ZTau(a, b), ZTau(c, d))
    assert shear_norm_ok(shear, t)
    u = shear.inverse().apply(t).star().to_float()
    k = 1 + abs(float(shear.alpha.conj()))
    assert math.hypot(*u) <= k * math.hypot(*t.star().to_float()) * (1 + 1e-12) + 1e-12


def test_probe_bound():
    cp = ConjugacyProbe(S, r_max=80, pad=0.3)
    for t in almost_period_vectors(0.1, 60)[1:40]:
        r = cp.probe(t)
        assert r.bound_ok and r.norm_ok
        assert r.c == pytest.approx(1 / TAU_F)
    with pytest.raises(TypeError):
        cp.probe((1, 0))


def test_orbit_consistency():
    # the sheared set at shift S*s is the image of the DP set under S
    cp = ConjugacyProbe(S, r_max=30, pad=0.1)
    rows_l, lab_l = cp.lam.points(20)
    img = {(round(x, 6), round(y, 6), int(l)) for (x, y), l in
           zip(S.apply_f(cp.lam.direct[cp.lam.labels >= 0]), cp.lam.labels[cp.lam.labels >= 0])}
    m = cp.sig.labels >= 0
    sig = {(round(x, 6), round(y, 6), int(l)) for (x, y), l in zip(cp.sig.direct[m], cp.sig.labels[m])}
    inner = {p for p in sig if math.hypot(p[0], p[1]) <= 10}
    assert inner
    assert inner <= img
    assert len(rows_l) == len(lab_l) > 0
