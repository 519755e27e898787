import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibdpv.conjugacy import GENERIC_SHIFT, dp_window
from fibdpv.diffract import (
    BraggPoint,
    analytic_rect_ft,
    bragg_points,
    fourier_bohr,
    patch_points,
    peak_table,
    peaks_csv,
    smallest_peaks,
)
from fibdpv.num import TAU, TAU_F, ZTau
from fibdpv.window import Shear

DENSITY = TAU_F**2 / 5


@pytest.fixture(scope="module")
def pts100():
    return patch_points(100.0)


def _brute(kmax: int, star: int, A: int = 32, B: int = 15):
    """Exact search over a coefficient box much larger than the extreme coefficients."""
    axis = []
    for a in range(-A, A + 1):
        for b in range(-B, B + 1):
            m = ZTau(a, b)
            sq = m * m
            if sq <= ZTau(5 * kmax * kmax) and sq.conj() <= ZTau(5 * star * star):
                axis.append((m, sq))
    out = set()
    for m1, q1 in axis:
        for m2, q2 in axis:
            s = q1 + q2
            if s <= ZTau(5 * kmax * kmax) and s.conj() <= ZTau(5 * star * star):
                out.add((m1.a, m1.b, m2.a, m2.b))
    return out


def test_bragg_points_against_brute_force():
    got = bragg_points(3)
    assert {(p.a, p.b, p.c, p.d) for p in got} == _brute(3, 10)
    assert got == sorted(got)
    # the search box is not the binding constraint
    assert max(abs(p.a) for p in got) < 32 and max(abs(p.b) for p in got) < 15


def test_bragg_point_count_default():
    assert len(bragg_points(3)) == 44365
    with pytest.raises(ValueError):
        bragg_points(0)


def test_module_membership():
    # (tau/sqrt5, 0) has numerator tau
    p = BraggPoint(0, 1, 0, 0)
    assert p.k[0] == pytest.approx(TAU_F / math.sqrt(5))
    assert p in bragg_points(1, 1)


coef = st.integers(-40, 40)


@given(coef, coef, coef, coef, coef, coef, coef, coef)
def test_pairing_is_an_integer(a, b, c, d, p, q, r, s):
    k = BraggPoint(a, b, c, d)
    x, y = ZTau(p, q), ZTau(r, s)
    v = np.array([float(x), float(y)])
    vs = np.array([float(x.conj()), float(y.conj())])
    exact = k.pairing(x, y)
    assert isinstance(exact, int)
    assert k.k @ v + k.k_star @ vs == pytest.approx(exact, abs=1e-6 * (1 + abs(exact)))


def test_zero_peak_is_density():
    z = BraggPoint(0, 0, 0, 0)
    assert abs(analytic_rect_ft(z)) == pytest.approx(float(TAU**2) / 5)
    assert DENSITY == pytest.approx(0.5236, abs=1e-4)


def test_density(pts100):
    assert len(pts100) / (math.pi * 100**2) == pytest.approx(DENSITY, rel=0.01)


def test_peaks_match_closed_form(pts100):
    for p in smallest_peaks(8):
        fb = fourier_bohr(pts100, p.k, 100.0)
        assert abs(abs(fb) - abs(analytic_rect_ft(p))) <= 0.05 * abs(analytic_rect_ft(p))


def test_off_support_is_small(pts100):
    for k in ((0.1234, 0.0), (math.pi / 7, math.e / 11), (0.5, 0.5)):
        assert abs(fourier_bohr(pts100, k, 100.0)) < 0.02


def test_convergence_in_radius():
    p = smallest_peaks(1)[0]
    target = abs(analytic_rect_ft(p))
    errs = [abs(abs(fourier_bohr(patch_points(R), p.k, R)) - target) for R in (50.0, 100.0, 200.0)]
    assert errs[-1] <= errs[0] and errs[-1] < 0.01 * target


def test_sheared_set_has_transported_peaks():
    S = Shear("x", ZTau(-1))
    shift = S.star().apply_f(np.array([GENERIC_SHIFT]))[0]
    pts = patch_points(100.0, dp_window(S), shift)
    for p in smallest_peaks(6):
        m1, m2 = p.numerators
        q = m1 * S.alpha + m2
        moved = BraggPoint(m1.a, m1.b, q.a, q.b)  # S^T k
        want = abs(analytic_rect_ft(moved))
        assert abs(fourier_bohr(pts, p.k, 100.0)) == pytest.approx(want, rel=0.05, abs=1e-3)
    with pytest.raises(ValueError):
        analytic_rect_ft(p, dp_window(S))


def test_table_and_csv():
    rows = peak_table(smallest_peaks(3), radius=60.0)
    text = peaks_csv(rows)
    assert text.splitlines()[0].startswith("a,b,c,d,kx,ky")
    assert len(text.splitlines()) == 4
