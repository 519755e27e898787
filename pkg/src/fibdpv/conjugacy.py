"""Finite probes of the conjugacy between sheared and plain direct-product tilings.

Everything here lives on one translation orbit: a DP model set with a generic
star-side shift, its image under a lattice-preserving shear, almost periods
t in Z[tau]^2 and the radii on which a set agrees with its translate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .cps import coeff_floats, lattice_points
from .num import ONE, TAU_INV, ZERO, ZTau, ZTauVec2
from .rules import DP_RULE, HEIGHT, WIDTH, build_rule
from .window import PolyWindow, Shear, dp_windows

# star of the origin lands at (1/pi, 1/e) - shift-relative, inside the T3 window with
# clearance 0.25, so no t with |t*| < 0.25 disagrees at the origin itself
GENERIC_SHIFT = (-1.0 / math.pi, -1.0 / math.e)
R_MAX = 200.0
GENERIC_TOL = 1e-9

Polygon = tuple[ZTauVec2, ...]  # convex, counter-clockwise


# -- exact convex polygons ---------------------------------------------------------


def _cross(o: ZTauVec2, a: ZTauVec2, b: ZTauVec2) -> ZTau:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def polygon_twice_area(p: Polygon) -> ZTau:
    """Twice the signed shoelace area, exact."""
    twice = ZERO
    for a, b in zip(p, p[1:] + p[:1]):
        twice = twice + a.x * b.y - a.y * b.x
    return twice


def polygon_contains(outer: Polygon, inner: Polygon) -> bool:
    """Every vertex of ``inner`` lies in the closed convex polygon ``outer``."""
    for a, b in zip(outer, outer[1:] + outer[:1]):
        if any(_cross(a, b, v).sign() < 0 for v in inner):
            return False
    return True


def interiors_overlap(p: Polygon, q: Polygon) -> bool:
    """Separating-axis test with exact arithmetic on edge normals."""
    for poly in (p, q):
        for a, b in zip(poly, poly[1:] + poly[:1]):
            nx, ny = b.y - a.y, a.x - b.x
            pp = [nx * v.x + ny * v.y for v in p]
            qq = [nx * v.x + ny * v.y for v in q]
            if max(pp) <= min(qq) or max(qq) <= min(pp):
                return False
    return True


def transform(poly: Polygon, shear: Shear | None = None, scale: ZTau = ONE,
              shift: ZTauVec2 | None = None) -> Polygon:
    out = []
    for v in poly:
        w = shear.apply(v) if shear is not None else v
        w = w.scale(scale)
        out.append(w + shift if shift is not None else w)
    return tuple(out)


# -- prototiles and the adjoint system ------------------------------------------------


def prototile(i: int) -> Polygon:
    w, h = WIDTH[i], HEIGHT[i]
    z = ZERO
    return (ZTauVec2(z, z), ZTauVec2(w, z), ZTauVec2(w, h), ZTauVec2(z, h))


def adjoint_system() -> dict[int, list[tuple[int, ZTauVec2]]]:
    """T_p = union of tau^-1 T_j + d over the children of the DP rule."""
    out = {}
    for p, kids in enumerate(build_rule(DP_RULE).children):
        out[p] = [(j, off.scale(TAU_INV)) for j, off in kids]
    return out


def sheared_system(shear: Shear | None) -> dict[int, list[tuple[int, ZTauVec2]]]:
    """The adjoint system of the sheared tiles P_i = S T_i; offsets become S d."""
    if shear is None:
        return adjoint_system()
    return {p: [(j, shear.apply(d)) for j, d in kids] for p, kids in adjoint_system().items()}


@dataclass
class PrototileReport:
    shear: Shear | None
    tiles: tuple[Polygon, ...]
    system: dict[int, list[tuple[int, ZTauVec2]]]
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def to_json(self) -> dict:
        return {
            "shear": str(self.shear) if self.shear else None,
            "tiles": [[{"x": str(v.x), "y": str(v.y)} for v in t] for t in self.tiles],
            "system": {
                str(p): [{"tile": j, "x": str(d.x), "y": str(d.y)} for j, d in kids]
                for p, kids in self.system.items()
            },
            "ok": self.ok,
            "problems": self.problems,
        }


def verify_partition(tiles, system) -> list[str]:
    """Exact check that each tile is the non-overlapping union of its scaled pieces."""
    problems = []
    for p, kids in system.items():
        pieces = [transform(tiles[j], scale=TAU_INV, shift=d) for j, d in kids]
        for (j, d), piece in zip(kids, pieces):
            if not polygon_contains(tiles[p], piece):
                problems.append(f"P{p}: piece P{j}+{d} leaves the tile")
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                if interiors_overlap(pieces[a], pieces[b]):
                    problems.append(f"P{p}: pieces {a} and {b} overlap")
        total = sum((polygon_twice_area(q) for q in pieces), ZERO)
        if total != polygon_twice_area(tiles[p]):
            problems.append(f"P{p}: area of pieces differs from the tile")
    return problems


def sheared_prototiles(shear: Shear | None) -> PrototileReport:
    tiles = tuple(
        transform(prototile(i), shear) if shear is not None else prototile(i) for i in range(4)
    )
    system = sheared_system(shear)
    return PrototileReport(shear, tiles, system, verify_partition(tiles, system))


# -- generic model sets on a ball ---------------------------------------------------


class GenericityError(ValueError):
    pass


def dp_window(shear: Shear | None = None) -> PolyWindow:
    """The DP windows, optionally sheared by S* (the window of S applied to the DP set)."""
    return PolyWindow(DP_RULE, shear if shear is not None else Shear("x", ZERO), dp_windows())


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    u = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.hypot(*(p - a - u[:, None] * ab).T)


class BallModelSet:
    """Labelled model set {y : y* - shift in W_i} restricted to the disk |y| <= r_max.

    Candidates are stored for star positions up to ``pad`` outside the window so
    translates by any t with |t*| <= pad can be compared without re-enumeration.
    """

    def __init__(self, window: PolyWindow, shift=GENERIC_SHIFT, r_max: float = R_MAX, pad: float = 0.25):
        self.window = window
        self.shift = np.asarray([float(c) for c in shift])
        self.r_max = float(r_max)
        self.pad = float(pad)
        bb = np.array([window.bbox(i) for i in range(4)])
        lo = bb[:, :2].min(axis=0) + self.shift - pad
        hi = bb[:, 2:].max(axis=0) + self.shift + pad
        rows = lattice_points((-r_max, -r_max, r_max, r_max), (lo[0], lo[1], hi[0], hi[1]))
        direct, internal = coeff_floats(rows)
        norm = np.hypot(direct[:, 0], direct[:, 1])
        keep = norm <= self.r_max
        order = np.argsort(norm[keep], kind="stable")
        self.rows = rows[keep][order]
        self.direct = direct[keep][order]
        self.internal = internal[keep][order]
        self.norm = norm[keep][order]
        self.labels = self.label_of(self.internal)

    def label_of(self, ystar: np.ndarray) -> np.ndarray:
        """Tile type whose window contains y* - shift, or -1."""
        u = self.window.internal_shear.inverse().apply_f(ystar - self.shift)
        lab = np.full(len(u), -1, dtype=np.int64)
        for i, r in enumerate(self.window.float_rects()):
            inside = (u[:, 0] > r[0]) & (u[:, 0] < r[2]) & (u[:, 1] > r[1]) & (u[:, 1] < r[3])
            lab[inside & (lab < 0)] = i
        return lab

    def boundary_distance(self, ystar: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Euclidean distance of y* - shift to the boundary of its own window."""
        out = np.full(len(ystar), np.inf)
        p = ystar - self.shift
        for i in range(4):
            m = labels == i
            if not m.any():
                continue
            vs = [np.array(v.to_float()) for v in self.window.vertices(i)]
            d = np.min(
                [_segment_distance(p[m], a, b) for a, b in zip(vs, vs[1:] + vs[:1])], axis=0
            )
            out[m] = d
        return out

    def points(self, radius: float | None = None):
        """Coefficient rows and labels of the set inside the closed disk."""
        m = self.labels >= 0
        if radius is not None:
            m &= self.norm <= radius
        return self.rows[m], self.labels[m]

    def check_generic(self, radius: float | None = None) -> float:
        """Smallest distance of a point's star to any window edge; raises if degenerate."""
        r = self.r_max if radius is None else radius
        m = self.norm <= r
        near = np.full(int(m.sum()), np.inf)
        p = self.internal[m] - self.shift
        for i in range(4):
            vs = [np.array(v.to_float()) for v in self.window.vertices(i)]
            for a, b in zip(vs, vs[1:] + vs[:1]):
                near = np.minimum(near, _segment_distance(p, a, b))
        if len(near) and near.min() < GENERIC_TOL:
            k = int(np.argmin(near))
            raise GenericityError(
                f"point {tuple(int(c) for c in self.rows[m][k])} lies on a window boundary"
            )
        return float(near.min()) if len(near) else math.inf

    def agreement_radius(self, t: ZTauVec2) -> float:
        """Distance from the origin of the nearest y where the set and its translate by t
        disagree (labels included); r_max when there is none."""
        ts = np.array(t.star().to_float())
        if math.hypot(*ts) > self.pad + 1e-12:
            raise ValueError(f"|t*| = {math.hypot(*ts):.4g} exceeds the candidate pad {self.pad}")
        if not t.x and not t.y:
            return self.r_max
        start, step = 0, 1024
        while start < len(self.norm):
            stop = min(len(self.norm), start + step)
            moved = self.label_of(self.internal[start:stop] - ts)
            bad = np.flatnonzero(moved != self.labels[start:stop])
            if len(bad):
                return float(self.norm[start + bad[0]])
            start, step = stop, 2 * step
        return self.r_max


def delta_of_R(window: PolyWindow, shift=GENERIC_SHIFT, R: float = 10.0) -> float:
    """min over the points of the set in the closed R-disk of the distance of their star
    images to the boundary of their window."""
    if R <= 0:
        raise ValueError("R must be positive")
    ms = BallModelSet(window, shift, r_max=R, pad=0.0)
    ms.check_generic()
    m = ms.labels >= 0
    if not m.any():
        return math.inf
    return float(ms.boundary_distance(ms.internal[m], ms.labels[m]).min())


# -- almost periods ---------------------------------------------------------------------


def _axis_values(T: float, delta: float) -> list[tuple[ZTau, float, float]]:
    from .cps import _axis_candidates

    out = []
    for a, b in _axis_candidates(-T, T, -delta, delta):
        z = ZTau(int(a), int(b))
        out.append((z, float(z), float(z.conj())))
    return out


@dataclass(frozen=True)
class AlmostPeriod:
    t: ZTauVec2
    star_norm: float
    radius: float
    censored: bool  # radius reached r_max

    def to_json(self) -> dict:
        return {
            "t": {"x": str(self.t.x), "y": str(self.t.y)},
            "t_star_norm": self.star_norm,
            "R": self.radius,
            "censored": self.censored,
        }


def almost_period_vectors(delta: float, T: float) -> list[ZTauVec2]:
    """All t in Z[tau]^2 with |t*| < delta and |t| <= T, ordered by |t*|."""
    vals = [v for v in _axis_values(T, delta)]
    out = []
    for x, xf, xs in vals:
        for y, yf, ys in vals:
            if xs * xs + ys * ys < delta * delta and xf * xf + yf * yf <= T * T:
                out.append((math.hypot(xs, ys), ZTauVec2(x, y)))
    out.sort(key=lambda p: (p[0], p[1].key()))
    return [v for _, v in out]


def almost_periods(delta: float, T: float, model: BallModelSet | None = None) -> list[AlmostPeriod]:
    if delta <= 0 or not math.isfinite(T):
        raise ValueError("need delta > 0 and finite T")
    ms = model if model is not None else BallModelSet(dp_window(), pad=delta)
    out = []
    for t in almost_period_vectors(delta, T):
        r = ms.agreement_radius(t)
        out.append(AlmostPeriod(t, math.hypot(*t.star().to_float()), r, r >= ms.r_max))
    return out


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    error: float
    used: int

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "err": self.error, "n": self.used}


def radius_fit(periods: list[AlmostPeriod]) -> Fit:
    """Least-squares slope of log R against log |t*|.

    Censored radii and radius 0 (disagreement at the origin) carry no scale and are skipped.
    """
    pts = [(math.log(p.star_norm), math.log(p.radius)) for p in periods
           if p.star_norm > 0 and p.radius > 0 and not p.censored]
    if len(pts) < 3:
        raise ValueError("too few uncensored almost periods for a fit")
    x, y = np.array(pts).T
    A = np.column_stack([x, np.ones_like(x)])
    (k, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([k, b])
    err = math.sqrt(float(resid @ resid) / max(1, len(x) - 2) / float(((x - x.mean()) ** 2).sum()))
    return Fit(float(k), float(b), err, len(x))


# -- conjugacy probes -----------------------------------------------------------------------


def singular_value_c(alpha: ZTau | float) -> float:
    """Smaller singular value of [[1, a], [0, 1]]; depends on |a| only."""
    a = abs(float(alpha))
    return math.sqrt((a * a - a * math.sqrt(a * a + 4.0) + 2.0) / 2.0)


def _sq(v: ZTauVec2) -> ZTau:
    return v.x * v.x + v.y * v.y


def shear_norm_ok(shear: Shear, t: ZTauVec2) -> bool:
    """Exact check of |(S^-1 t)*| <= (1 + |alpha*|) |t*| by squaring over Z[tau]."""
    u = shear.inverse().apply(t).star()
    k = ONE + abs(shear.alpha.conj())
    return _sq(u) <= k * k * _sq(t.star())


@dataclass(frozen=True)
class ProbeResult:
    t: ZTauVec2
    star_norm: float
    r_lambda: float  # agreement radius of the DP set for t
    r_lambda_transported: float  # agreement radius of the DP set for S^-1 t
    r_sigma: float  # agreement radius of S applied to the DP set, for t
    c: float
    bound_ok: bool  # r_sigma >= c * r_lambda_transported
    norm_ok: bool
    slack: float  # max(0, c * r_lambda - r_sigma)

    def to_json(self) -> dict:
        return {
            "t": {"x": str(self.t.x), "y": str(self.t.y)},
            "t_star_norm": self.star_norm,
            "R_lambda": self.r_lambda,
            "R_lambda_transported": self.r_lambda_transported,
            "R_sigma": self.r_sigma,
            "c": self.c,
            "bound_ok": self.bound_ok,
            "norm_ok": self.norm_ok,
            "slack": self.slack,
        }


class ConjugacyProbe:
    """DP model set and its sheared image, sharing one generic shift."""

    def __init__(self, shear: Shear, shift=GENERIC_SHIFT, r_max: float = R_MAX, pad: float = 0.25):
        self.shear = shear
        self.c = singular_value_c(shear.alpha)
        self.lam = BallModelSet(dp_window(), shift, r_max, pad)
        sshift = shear.star().apply_f(np.asarray(shift, dtype=float)[None, :])[0]
        self.sig = BallModelSet(dp_window(shear), sshift, r_max, pad)

    def probe(self, t: ZTauVec2) -> ProbeResult:
        if not isinstance(t, ZTauVec2):
            raise TypeError("t must be a ZTauVec2 over Z[tau]")
        s_inv_t = self.shear.inverse().apply(t)
        r_l = self.lam.agreement_radius(t)
        r_lt = self.lam.agreement_radius(s_inv_t)
        r_s = self.sig.agreement_radius(t)
        return ProbeResult(
            t,
            math.hypot(*t.star().to_float()),
            r_l,
            r_lt,
            r_s,
            self.c,
            r_s >= self.c * r_lt - 1e-9,
            shear_norm_ok(self.shear, t),
            max(0.0, self.c * r_l - r_s),
        )


def conjugacy_probe(shear: Shear, t: ZTauVec2, probe: ConjugacyProbe | None = None) -> ProbeResult:
    p = probe if probe is not None else ConjugacyProbe(shear, pad=max(0.25, 3 * _star_norm(t)))
    return p.probe(t)


def _star_norm(t: ZTauVec2) -> float:
    return math.hypot(*t.star().to_float())


def probe_sweep(shear: Shear, delta: float = 0.1, T: float = 500.0, r_max: float = R_MAX):
    """Probe every almost period; returns (results, fit of the DP radii)."""
    pad = (1.0 + abs(float(shear.alpha.conj()))) * delta + 1e-9
    cp = ConjugacyProbe(shear, r_max=r_max, pad=pad)
    results = [cp.probe(t) for t in almost_period_vectors(delta, T)]
    periods = [AlmostPeriod(r.t, r.star_norm, r.r_lambda, r.r_lambda >= r_max) for r in results]
    return results, radius_fit(periods)


def probe_log(results: list[ProbeResult]) -> str:
    return json.dumps([r.to_json() for r in results], indent=1)
