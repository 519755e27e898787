"""Bragg peaks of the Fibonacci DPV model sets: the Fourier module (Z[tau]/sqrt5)^2,
finite-ball Fourier-Bohr sums and the closed-form amplitudes of the DP window.

With k = m/sqrt5 (m in Z[tau]) the star image is k* = m'/(-sqrt5), the
trace-dual partner, so k.x + k*.x* is an integer on the lattice and the
amplitude of a model set with window W is (1/5) * int_W exp(+2 pi i k*.y) dy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .conjugacy import GENERIC_SHIFT, BallModelSet, dp_window
from .cps import COVOLUME, _axis_candidates
from .num import SIGMA_F, SQRT5_F, TAU_F, ZTau
from .window import PolyWindow

STAR_RANGE = 10.0


@dataclass(frozen=True, order=True)
class BraggPoint:
    """k = ((a + b tau)/sqrt5, (c + d tau)/sqrt5)."""

    a: int
    b: int
    c: int
    d: int

    @property
    def numerators(self) -> tuple[ZTau, ZTau]:
        return ZTau(self.a, self.b), ZTau(self.c, self.d)

    @property
    def k(self) -> np.ndarray:
        return np.array([self.a + self.b * TAU_F, self.c + self.d * TAU_F]) / SQRT5_F

    @property
    def k_star(self) -> np.ndarray:
        return -np.array([self.a + self.b * SIGMA_F, self.c + self.d * SIGMA_F]) / SQRT5_F

    @property
    def norm4(self) -> float:
        return float(math.hypot(*self.k, *self.k_star))

    def pairing(self, x: ZTau, y: ZTau) -> int:
        """k.x + k*.x* for (x, y) in Z[tau]^2, always an integer.

        With z = m_x x + m_y y = p + q tau the pairing is (z - z')/sqrt5 = q.
        """
        mx, my = self.numerators
        return (mx * x + my * y).b

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "k": self.k.tolist(), "k_star": self.k_star.tolist()}


def _within(sq: ZTau, bound: float) -> bool:
    """sq <= bound, exact when the bound is an integer."""
    if abs(bound - round(bound)) < 1e-9:
        return sq <= ZTau(round(bound))
    return float(sq) <= bound


def bragg_points(kmax: float, star_range: float = STAR_RANGE) -> list[BraggPoint]:
    """All k with |k| <= kmax and |k*| <= star_range, in lexicographic coefficient order."""
    if kmax <= 0:
        raise ValueError("kmax must be positive")
    axis = _axis_candidates(-kmax * SQRT5_F, kmax * SQRT5_F,
                            -star_range * SQRT5_F, star_range * SQRT5_F)
    ms = [ZTau(int(a), int(b)) for a, b in axis]
    sq = [m * m for m in ms]
    ssq = [q.conj() for q in sq]
    kb, sb = 5 * kmax * kmax, 5 * star_range * star_range
    out = []
    for m1, q1, s1 in zip(ms, sq, ssq):
        for m2, q2, s2 in zip(ms, sq, ssq):
            if _within(q1 + q2, kb) and _within(s1 + s2, sb):
                out.append(BraggPoint(m1.a, m1.b, m2.a, m2.b))
    out.sort()
    return out


def smallest_peaks(n: int = 20, kmax: float = 3.0) -> list[BraggPoint]:
    """The n nonzero Bragg points of smallest combined norm sqrt(|k|^2 + |k*|^2)."""
    pts = [p for p in bragg_points(kmax, star_range=kmax) if (p.a, p.b, p.c, p.d) != (0, 0, 0, 0)]
    pts.sort(key=lambda p: (round(p.norm4, 12), p))
    return pts[:n]


def fourier_bohr(points: np.ndarray, k, radius: float) -> complex:
    """(1 / area of the disk) * sum over points of exp(-2 pi i k.x); pairwise summation."""
    k = np.asarray(k, dtype=float)
    phase = -2.0 * math.pi * (points @ k)
    re = np.add.reduce(np.cos(phase))
    im = np.add.reduce(np.sin(phase))
    return complex(re, im) / (math.pi * radius * radius)


def _interval_ft(q: float, lo: float, hi: float) -> complex:
    """int_lo^hi exp(2 pi i q y) dy."""
    if q == 0.0:
        return complex(hi - lo)
    w = 2.0 * math.pi * q
    return (complex(math.cos(w * hi), math.sin(w * hi)) - complex(math.cos(w * lo), math.sin(w * lo))) / (1j * w)


def analytic_rect_ft(k: BraggPoint, window: PolyWindow | None = None, shift=GENERIC_SHIFT) -> complex:
    """(1/5) int over the union of the windows (shifted) of exp(2 pi i k*.y) dy."""
    w = window if window is not None else dp_window()
    if not w.is_square():
        raise ValueError("closed form needs axis-parallel rectangular windows")
    ks = k.k_star
    total = 0j
    for r in w.float_rects():
        total += _interval_ft(ks[0], r[0], r[2]) * _interval_ft(ks[1], r[1], r[3])
    sx, sy = (float(c) for c in shift)
    total *= complex(math.cos(2 * math.pi * (ks[0] * sx + ks[1] * sy)),
                     math.sin(2 * math.pi * (ks[0] * sx + ks[1] * sy)))
    return total / COVOLUME


def patch_points(radius: float = 200.0, window: PolyWindow | None = None, shift=GENERIC_SHIFT) -> np.ndarray:
    """Control points of the DP (or given) model set inside the closed disk."""
    ms = BallModelSet(window if window is not None else dp_window(), shift, r_max=radius, pad=0.0)
    m = ms.labels >= 0
    return ms.direct[m]


@dataclass(frozen=True)
class PeakRow:
    peak: BraggPoint
    patch: complex
    analytic: complex

    @property
    def rel_error(self) -> float:
        return abs(abs(self.patch) - abs(self.analytic)) / abs(self.analytic)


def peak_table(peaks: list[BraggPoint], radius: float = 200.0) -> list[PeakRow]:
    pts = patch_points(radius)
    return [PeakRow(p, fourier_bohr(pts, p.k, radius), analytic_rect_ft(p)) for p in peaks]


def peaks_csv(rows: list[PeakRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["a", "b", "c", "d", "kx", "ky", "abs_patch", "abs_analytic"])
    for r in rows:
        p = r.peak
        wr.writerow([p.a, p.b, p.c, p.d, f"{p.k[0]:.9g}", f"{p.k[1]:.9g}",
                     f"{abs(r.patch):.9g}", f"{abs(r.analytic):.9g}"])
    return buf.getvalue()
