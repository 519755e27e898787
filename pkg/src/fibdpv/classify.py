"""Taxonomy of the 48 rules: D4 action, window shapes, MLD classes, shears and
fractal boundary dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cps import LATTICE
from .num import ONE, ZERO, ZTau, ZTauVec2
from .rules import ALL_RULES, HEIGHT, WIDTH, TAU, RuleId, build_rule
from .window import (
    SHEARS,
    NotPolygonal,
    PolyWindow,
    Shear,
    WindowRaster,
    attractor_raster,
    certify_polygonal_window,
    dp_windows,
    window_ifs,
)

# -- D4 -----------------------------------------------------------------------


@dataclass(frozen=True)
class D4Element:
    """Symmetry of the square as an integer matrix ((a, b), (c, d))."""

    name: str
    m: tuple[tuple[int, int], tuple[int, int]]

    def __mul__(self, other: D4Element) -> D4Element:
        (a, b), (c, d) = self.m
        (e, f), (g, h) = other.m
        prod = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        return element(prod)

    @property
    def swaps_axes(self) -> bool:
        return self.m[0][0] == 0

    def apply(self, x: ZTau, y: ZTau) -> tuple[ZTau, ZTau]:
        (a, b), (c, d) = self.m
        return x * a + y * b, x * c + y * d


_D4 = {
    "e": ((1, 0), (0, 1)),
    "r90": ((0, -1), (1, 0)),
    "r180": ((-1, 0), (0, -1)),
    "r270": ((0, 1), (-1, 0)),
    "mx": ((-1, 0), (0, 1)),  # x -> -x
    "my": ((1, 0), (0, -1)),
    "diag": ((0, 1), (1, 0)),
    "anti": ((0, -1), (-1, 0)),
}
D4 = tuple(D4Element(k, v) for k, v in _D4.items())
_BY_MATRIX = {g.m: g for g in D4}
R180 = _BY_MATRIX[_D4["r180"]]


def element(m) -> D4Element:
    try:
        return _BY_MATRIX[tuple(tuple(r) for r in m)]
    except KeyError:
        raise ValueError(f"{m} is not a symmetry of the square") from None


class CatalogError(LookupError):
    """A transformed decomposition is not among the 48 rules."""


def _transform_children(kids, w: ZTau, h: ZTau, g: D4Element):
    """Map child boxes of a w x h parent by g and re-anchor at the new lower-left corner."""
    corners = [g.apply(x, y) for x, y in ((ZERO, ZERO), (w, ZERO), (ZERO, h), (w, h))]
    ox, oy = min(c[0] for c in corners), min(c[1] for c in corners)
    out = []
    for i, off in kids:
        x0, y0 = off.x, off.y
        x1, y1 = x0 + WIDTH[i], y0 + HEIGHT[i]
        pts = [g.apply(x, y) for x, y in ((x0, y0), (x1, y0), (x0, y1), (x1, y1))]
        nx, ny = min(p[0] for p in pts) - ox, min(p[1] for p in pts) - oy
        j = {1: 2, 2: 1}.get(i, i) if g.swaps_axes else i
        out.append((j, ZTauVec2(nx, ny)))
    return frozenset(out)


def _signature(children) -> tuple[frozenset, ...]:
    return tuple(frozenset(kids) for kids in children)


@lru_cache(maxsize=None)
def _catalog() -> dict:
    return {_signature(build_rule(r).children): r for r in ALL_RULES}


def d4_transform(rid: RuleId, g: D4Element) -> RuleId:
    dec = build_rule(rid)
    new = [None] * 4
    for p, kids in enumerate(dec.children):
        w, h = TAU * WIDTH[p], TAU * HEIGHT[p]
        q = {1: 2, 2: 1}.get(p, p) if g.swaps_axes else p
        new[q] = _transform_children(kids, w, h, g)
    try:
        return _catalog()[tuple(new)]
    except KeyError:
        raise CatalogError(f"{rid} under {g.name} is not in the catalog") from None


@lru_cache(maxsize=None)
def d4_orbits() -> tuple[tuple[RuleId, ...], ...]:
    """Orbits of the 48 rules, each sorted, ordered by their smallest member."""
    seen, orbits = set(), []
    for r in ALL_RULES:
        if r in seen:
            continue
        orbit = sorted({d4_transform(r, g) for g in D4})
        seen.update(orbit)
        orbits.append(tuple(orbit))
    return tuple(orbits)


def orbit_of(rid: RuleId) -> int:
    for k, orb in enumerate(d4_orbits()):
        if rid in orb:
            return k
    raise KeyError(rid)


# -- shapes --------------------------------------------------------------------

SLOPE_TAGS = {
    ZTau(1): "+pi/4",
    ZTau(-1): "-pi/4",
    TAU: "+arctan(tau)",
    -TAU: "-arctan(tau)",
    TAU - 1: "+arctan(1/tau)",
    1 - TAU: "-arctan(1/tau)",
}


@dataclass(frozen=True)
class Shape:
    kind: str  # square | parallelogram | fractal
    axis: str | None = None
    slope: ZTau | None = None  # internal shear entry, the slant of the window edges

    @property
    def slope_tag(self) -> str | None:
        return SLOPE_TAGS[self.slope] if self.slope is not None else None

    def __str__(self) -> str:
        if self.kind == "parallelogram":
            return f"parallelogram({self.axis}, {self.slope_tag})"
        return self.kind


@lru_cache(maxsize=None)
def window_of(rid: RuleId, k: int = 8) -> PolyWindow | WindowRaster:
    ifs = window_ifs(rid)
    # the raster only seeds the fit; certification itself is exact
    raster = attractor_raster(ifs, k, oversample=0)
    try:
        return certify_polygonal_window(ifs, raster)
    except NotPolygonal:
        return raster


def classify_window(rid: RuleId, k: int = 8) -> Shape:
    w = window_of(rid, k)
    if isinstance(w, WindowRaster):
        return Shape("fractal")
    if w.is_square():
        return Shape("square")
    s = w.internal_shear
    return Shape("parallelogram", s.form, s.alpha)


# -- boundary dimension ----------------------------------------------------------------

DIM_RESOLUTIONS = (6, 7, 8, 9, 10)


@dataclass(frozen=True)
class DimensionEstimate:
    estimate: float
    error: float  # standard error of the fitted slope
    resolutions: tuple[int, ...]
    counts: tuple[int, ...]
    residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "est": self.estimate,
            "err": self.error,
            "k": list(self.resolutions),
            "counts": list(self.counts),
            "residual": self.residual,
        }


def boundary_dimension(series) -> DimensionEstimate:
    """Least-squares slope of log(boundary count) against log(1/h).

    ``series`` holds WindowRasters or (k, count) pairs.
    """
    pairs = sorted(
        (s.k, s.boundary_count()) if isinstance(s, WindowRaster) else (int(s[0]), int(s[1]))
        for s in series
    )
    if len({k for k, _ in pairs}) < 3:
        raise ValueError("boundary_dimension needs at least three resolutions")
    x = np.array([k * math.log(2.0) for k, _ in pairs])
    y = np.log(np.array([c for _, c in pairs], dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    err = math.sqrt(s2 / float(((x - x.mean()) ** 2).sum()))
    return DimensionEstimate(
        float(coef[0]),
        err,
        tuple(k for k, _ in pairs),
        tuple(c for _, c in pairs),
        float(math.sqrt(float(resid @ resid))),
    )


@lru_cache(maxsize=None)
def rule_dimension(rid: RuleId, resolutions: tuple[int, ...] = DIM_RESOLUTIONS) -> DimensionEstimate:
    ifs = window_ifs(rid)
    counts = [(k, attractor_raster(ifs, k, oversample=0).boundary_count()) for k in resolutions]
    return boundary_dimension(counts)


# -- shears and MLD classes -------------------------------------------------------


@dataclass(frozen=True)
class ShearReport:
    rule: RuleId
    shear: Shear
    star: Shear
    translations_star: tuple[ZTauVec2, ...]  # t_i*, window_i = S*(DP window_i) + t_i*
    translations: tuple[ZTauVec2, ...]  # t_i = conj(t_i*)
    det_ok: bool
    lattice_ok: bool
    candidates: int  # shears among the 12 that fit; 1 when unique

    def to_json(self) -> dict:
        return {
            "rule": str(self.rule),
            "shear": {"form": self.shear.form, "alpha": str(self.shear.alpha)},
            "star": {"form": self.star.form, "alpha": str(self.star.alpha)},
            "t_star": [{"x": str(t.x), "y": str(t.y)} for t in self.translations_star],
            "t": [{"x": str(t.x), "y": str(t.y)} for t in self.translations],
            "det_ok": self.det_ok,
            "lattice_ok": self.lattice_ok,
            "candidates": self.candidates,
        }


class ShearNotFound(LookupError):
    pass


def _fit_translations(window: PolyWindow, shear: Shear):
    """t_i* with S*(DP rect_i) + t_i* equal to window i (as vertex sets), or None."""
    inv = shear.star().inverse()
    out = []
    for i, dp in enumerate(dp_windows()):
        vs = [inv.apply(v) for v in window.vertices(i)]
        xs = sorted({v.x for v in vs})
        ys = sorted({v.y for v in vs})
        if len(xs) != 2 or len(ys) != 2 or len(vs) != 4:
            return None
        # an axis-parallel rectangle of the DP size
        if {(v.x, v.y) for v in vs} != {(x, y) for x in xs for y in ys}:
            return None
        if xs[1] - xs[0] != dp[2] - dp[0] or ys[1] - ys[0] != dp[3] - dp[1]:
            return None
        d = ZTauVec2(xs[0] - dp[0], ys[0] - dp[1])
        out.append(shear.star().apply(d))
    return tuple(out)


def lattice_invariant(shear: Shear) -> bool:
    """(S + S*) maps every lattice basis vector to a lattice vector (exact)."""
    s, ss = shear, shear.star()
    for v in LATTICE.vectors:
        d = s.apply(ZTauVec2(v[0], v[1]))
        i = ss.apply(ZTauVec2(v[2], v[3]))
        if not LATTICE.contains((d.x, d.y, i.x, i.y)):
            return False
    return True


def detect_shear(rid: RuleId, window: PolyWindow | None = None) -> ShearReport:
    w = window if window is not None else window_of(rid)
    if not isinstance(w, PolyWindow) or w.is_square():
        raise ShearNotFound(f"{rid} does not have a parallelogram window")
    fits = [(s, t) for s in SHEARS if (t := _fit_translations(w, s)) is not None]
    if not fits:
        raise ShearNotFound(f"no shear of the 12 candidates fits rule {rid}")
    shear, ts = fits[0]
    return ShearReport(
        rid,
        shear,
        shear.star(),
        ts,
        tuple(t.star() for t in ts),
        shear.det() == ONE,
        lattice_invariant(shear),
        len(fits),
    )


def mld_classes(shapes: dict[RuleId, Shape] | None = None) -> list[tuple[str, tuple[RuleId, ...]]]:
    """Squares in one class; parallelograms grouped by (axis, slope)."""
    shapes = shapes if shapes is not None else {r: classify_window(r) for r in ALL_RULES}
    groups: dict[str, list[RuleId]] = {}
    for r in ALL_RULES:
        sh = shapes[r]
        if sh.kind == "square":
            groups.setdefault("square", []).append(r)
        elif sh.kind == "parallelogram":
            groups.setdefault(f"{sh.axis}:{sh.slope_tag}", []).append(r)
    return sorted(((k, tuple(v)) for k, v in groups.items()), key=lambda kv: kv[1][0])


def related_by_r180(a: RuleId, b: RuleId) -> bool:
    return d4_transform(a, R180) == b


# -- full report --------------------------------------------------------------------


@dataclass
class ClassReport:
    rule: RuleId
    shape: Shape
    orbit: int
    mld_class: str | None = None
    fractal_type: str | None = None
    shear: ShearReport | None = None
    dim: DimensionEstimate | None = None

    def to_json(self) -> dict:
        return {
            "rule": str(self.rule),
            "shape": self.fractal_type if self.shape.kind == "fractal" else self.shape.kind,
            "kind": self.shape.kind,
            "axis": self.shape.axis,
            "slope_tag": self.shape.slope_tag,
            "orbit": self.orbit,
            "mld_class": self.mld_class,
            "shear": (
                {"form": self.shear.shear.form, "alpha": str(self.shear.shear.alpha)}
                if self.shear
                else None
            ),
            "t_star": self.shear.to_json()["t_star"] if self.shear else None,
            "dim": self.dim.to_json() if self.dim else None,
        }


def fractal_names(
    shapes: dict[RuleId, Shape], dims: dict[int, DimensionEstimate]
) -> dict[int, str]:
    """Orbit index -> castle / cross / island.

    castle: the fractal orbit of size 4; the size-8 orbits are named cross and
    island in ascending order of boundary dimension.
    """
    orbits = d4_orbits()
    frac = [k for k, orb in enumerate(orbits) if shapes[orb[0]].kind == "fractal"]
    names = {}
    small = [k for k in frac if len(orbits[k]) == 4]
    big = sorted((k for k in frac if len(orbits[k]) == 8), key=lambda k: dims[k].estimate)
    if len(small) == 1:
        names[small[0]] = "castle"
    for k, name in zip(big, ("cross", "island")):
        names[k] = name
    return names


def classify_all(with_dims: bool = True, resolutions: tuple[int, ...] = DIM_RESOLUTIONS):
    """ClassReports for all 48 rules; dimensions per orbit (computed on its first member)."""
    shapes = {r: classify_window(r) for r in ALL_RULES}
    orbits = d4_orbits()
    dims: dict[int, DimensionEstimate] = {}
    if with_dims:
        for k, orb in enumerate(orbits):
            if shapes[orb[0]].kind == "fractal":
                dims[k] = rule_dimension(orb[0], resolutions)
    names = fractal_names(shapes, dims) if with_dims else {}
    mld = {r: key for key, members in mld_classes(shapes) for r in members}
    reports = []
    for r in ALL_RULES:
        k = orbit_of(r)
        rep = ClassReport(r, shapes[r], k, mld.get(r))
        if shapes[r].kind == "parallelogram":
            rep.shear = detect_shear(r)
        if shapes[r].kind == "fractal":
            rep.fractal_type = names.get(k)
            rep.dim = dims.get(k)
        reports.append(rep)
    return reports


def summary(reports: list[ClassReport]) -> dict:
    counts: dict[str, int] = {}
    for rep in reports:
        counts[rep.shape.kind] = counts.get(rep.shape.kind, 0) + 1
    polygonal = [str(r.rule) for r in reports if r.shape.kind != "fractal"]
    return {
        "counts": counts,
        "orbits": [[str(r) for r in orb] for orb in d4_orbits()],
        "orbit_sizes": sorted(len(o) for o in d4_orbits()),
        "mld_classes": {
            k: [str(r) for r in v]
            for k, v in mld_classes({r.rule: r.shape for r in reports})
        },
        "conjugacy_class": {"polygonal": polygonal, "size": len(polygonal)},
        "fractal_types": sorted({r.fractal_type for r in reports if r.fractal_type}),
        "rules": [r.to_json() for r in reports],
    }
