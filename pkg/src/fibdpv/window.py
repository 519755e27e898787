"""Internal-space windows: the contracting IFS of a rule, box rasters of its
attractor, and exact certification of polygonal (parallelogram) windows."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import combinations

import numpy as np
from scipy import ndimage

from .num import SIGMA, SIGMA_F, TAU, ZERO, ZTau, ZTauVec2, TAU_F
from .rules import RuleId, build_rule

RES_MIN, RES_MAX = 4, 14
SEED_BOX = (-2.0, -2.0, 2.0, 2.0)
SNAP_COEFF = 4
RATIO = TAU_F - 1.0  # |sigma|


@dataclass(frozen=True)
class IFSMap:
    target: int
    source: int
    shift: ZTauVec2  # y -> sigma*y + shift


@dataclass(frozen=True)
class WindowIFS:
    rule: RuleId | None
    maps: tuple[IFSMap, ...]

    def into(self, i: int) -> list[IFSMap]:
        return [m for m in self.maps if m.target == i]

    def counts(self) -> list[int]:
        return [len(self.into(i)) for i in range(4)]

    def fixed_point3(self) -> ZTauVec2:
        """Fixed point of the T3 -> T3 self map; an exact point of the type-3 window."""
        (m,) = [m for m in self.maps if m.target == 3 and m.source == 3]
        return m.shift.scale(TAU - 1)


@lru_cache(maxsize=None)
def window_ifs(rid: RuleId) -> WindowIFS:
    """Star image of the rule's matrix function system.

    A child of type i at offset o in parent j gives Lambda_i >= tau*Lambda_j + o,
    hence Omega_i >= sigma*Omega_j + o*.
    """
    dec = build_rule(rid)
    maps = [IFSMap(i, j, off.star()) for i, j, off in dec.branches()]
    maps.sort(key=lambda m: (m.target, m.source, m.shift.key()))
    return WindowIFS(dec.rule, tuple(maps))


def attractor_bboxes(ifs: WindowIFS, iterations: int = 120) -> list[tuple[float, float, float, float]]:
    """Bounding boxes of the four windows by iterating the box operator from the seed box."""
    boxes = [SEED_BOX] * 4
    for _ in range(iterations):
        new = []
        for i in range(4):
            xs, ys = [], []
            for m in ifs.into(i):
                b = boxes[m.source]
                tx, ty = m.shift.to_float()
                xs += [SIGMA_F * b[0] + tx, SIGMA_F * b[2] + tx]
                ys += [SIGMA_F * b[1] + ty, SIGMA_F * b[3] + ty]
            new.append((min(xs), min(ys), max(xs), max(ys)))
        boxes = new
    return boxes


# -- point sampling of the attractor ---------------------------------------------


def _tail_maps(ifs: WindowIFS, depth: int):
    """Translations T of all composites y -> sigma^depth * y + T from type j into type i."""
    tails = {(i, i): np.zeros((1, 2)) for i in range(4)}
    scale = 1.0
    for _ in range(depth):
        new: dict = {}
        for m in ifs.maps:
            t = np.array(m.shift.to_float())
            for (j, i), T in tails.items():
                if j != m.target:
                    continue
                new.setdefault((m.source, i), []).append(T + scale * t)
        tails = {k: np.concatenate(v) for k, v in new.items()}
        scale *= SIGMA_F
    return tails


def sample_points(ifs: WindowIFS, depth: int) -> list[np.ndarray]:
    """Star images of the depth-n supertile control points (exact points of the windows)."""
    y = np.array([ifs.fixed_point3().to_float()])
    pts = [np.zeros((0, 2)) for _ in range(4)]
    pts[3] = y
    for _ in range(depth):
        new = [[] for _ in range(4)]
        for m in ifs.maps:
            if len(pts[m.source]):
                new[m.target].append(SIGMA_F * pts[m.source] + np.array(m.shift.to_float()))
        pts = [np.concatenate(v) if v else np.zeros((0, 2)) for v in new]
    return pts


def depth_for(h: float, diameter: float) -> int:
    """Smallest depth whose pieces have diameter at most h/2."""
    return max(2, math.ceil(math.log(2.0 * diameter / h) / math.log(1.0 / RATIO)))


# -- rasters ------------------------------------------------------------------


@dataclass
class TypeRaster:
    origin: tuple[int, int]  # cell index of element [0, 0]
    occupied: np.ndarray  # bool, indexed [ix, iy]
    inside: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return self.occupied & ~self.inside

    @cached_property
    def core(self) -> np.ndarray:
        """Occupied cells at least two cells away from any unoccupied one."""
        return ndimage.binary_erosion(self.occupied, structure=np.ones((5, 5), bool), border_value=0)

    @cached_property
    def near(self) -> np.ndarray:
        """Occupied cells and their 8-neighbours."""
        return ndimage.binary_dilation(self.occupied, structure=np.ones((3, 3), bool))


@dataclass
class WindowRaster:
    rule: RuleId | None
    k: int
    types: list[TypeRaster]
    bboxes: list[tuple[float, float, float, float]]
    areas: list[float] = field(default_factory=list)
    box_areas: list[float] = field(default_factory=list)
    depth: int = 0

    @property
    def h(self) -> float:
        return 2.0**-self.k

    @property
    def total_area(self) -> float:
        return sum(self.areas)

    def boundary_count(self) -> int:
        return int(sum(t.boundary.sum() for t in self.types))

    def centers(self, i: int, which: str = "occupied") -> np.ndarray:
        t = self.types[i]
        ix, iy = np.nonzero(getattr(t, which))
        return np.column_stack(
            [(ix + t.origin[0] + 0.5) * self.h, (iy + t.origin[1] + 0.5) * self.h]
        )

    def state(self, i: int, pts: np.ndarray) -> np.ndarray:
        """Per point: 2 inside, 1 uncertain (boundary box or its outer halo), 0 outside."""
        t = self.types[i]
        ix = np.floor(pts[:, 0] / self.h).astype(np.int64) - t.origin[0]
        iy = np.floor(pts[:, 1] / self.h).astype(np.int64) - t.origin[1]
        nx, ny = t.occupied.shape
        ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(len(pts), dtype=np.int8)
        ixo, iyo = ix[ok], iy[ok]
        out[ok] = np.where(t.inside[ixo, iyo], 2, np.where(t.near[ixo, iyo], 1, 0))
        return out

    def core_state(self, i: int, pts: np.ndarray) -> np.ndarray:
        """Like ``state`` but only core cells count as inside."""
        t = self.types[i]
        ix = np.floor(pts[:, 0] / self.h).astype(np.int64) - t.origin[0]
        iy = np.floor(pts[:, 1] / self.h).astype(np.int64) - t.origin[1]
        nx, ny = t.occupied.shape
        ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        out = np.zeros(len(pts), dtype=np.int8)
        ixo, iyo = ix[ok], iy[ok]
        out[ok] = np.where(t.core[ixo, iyo], 2, np.where(t.near[ixo, iyo], 1, 0))
        return out

    def to_json(self) -> dict:
        return {
            "rule": str(self.rule) if self.rule else None,
            "k": self.k,
            "bbox": [list(b) for b in self.bboxes],
            "areas": self.areas,
            "box_areas": self.box_areas,
        }


def internal_density(depth: int) -> float:
    """Density of star images of a depth-n supertile: footprint area tau^(2n+2) over covolume 5."""
    return TAU_F ** (2 * depth + 2) / 5.0


def _coverage_area(counts: np.ndarray, density: float, h: float, target: float = 400.0) -> float:
    """Area covered, from point counts pooled into blocks and capped at full coverage."""
    per_cell = density * h * h
    f = max(1, math.ceil(math.sqrt(target / per_cell)))
    nx, ny = counts.shape
    pad = ((0, (-nx) % f), (0, (-ny) % f))
    c = np.pad(counts.astype(np.int64), pad)
    pooled = c.reshape(c.shape[0] // f, f, c.shape[1] // f, f).sum(axis=(1, 3))
    full = per_cell * f * f
    # quasi-lattice counts in a square fluctuate by O(perimeter / spacing)
    cap = full + 2.0 * math.sqrt(full) + 2.0
    return float(np.minimum(pooled, cap).sum() / density)


def attractor_raster(
    ifs: WindowIFS, k: int, oversample: int | None = None, tail_depth: int = 8, chunk: int = 1 << 21
) -> WindowRaster:
    """Box raster of the window attractor at resolution 2^-k.

    Cells are occupied when they contain a point f_w(y) of a deep Hutchinson
    iterate started from an exact point y of the type-3 window. Pieces are at
    most h/2 across, so every cell well inside the attractor is hit.
    Boundary cells are occupied cells with an unoccupied 8-neighbour.

    ``areas`` estimates the Lebesgue measure from point counts against the
    lattice density (capped per block, so overlapping pieces lower it);
    ``box_areas`` is the first-order Inside + Boundary/2 estimate.
    """
    if not RES_MIN <= k <= RES_MAX:
        raise ValueError(f"resolution exponent k={k} outside [{RES_MIN}, {RES_MAX}]")
    if oversample is None:
        oversample = 1 if k <= 9 else 0
    h = 2.0**-k
    bboxes = attractor_bboxes(ifs)
    diam = max(math.hypot(b[2] - b[0], b[3] - b[1]) for b in bboxes)
    # +1: depth-n points from type 3 only cover every depth-(n-1) piece
    depth = depth_for(h, diam) + 1 + oversample
    tail_depth = min(tail_depth, depth - 1)
    head = sample_points(ifs, depth - tail_depth)
    tails = _tail_maps(ifs, tail_depth)
    scale = SIGMA_F**tail_depth

    grids = []
    for i in range(4):
        b = bboxes[i]
        x0, y0 = math.floor(b[0] / h) - 2, math.floor(b[1] / h) - 2
        x1, y1 = math.floor(b[2] / h) + 3, math.floor(b[3] / h) + 3
        grids.append(((x0, y0), np.zeros((x1 - x0, y1 - y0), dtype=np.uint32)))

    for (j, i), T in sorted(tails.items()):
        src = head[j]
        if not len(src):
            continue
        (ox, oy), cnt = grids[i]
        flat = cnt.reshape(-1)
        ny = cnt.shape[1]
        # cell units; the grid margin keeps every coordinate positive, so truncation floors
        px = scale * src[:, 0] / h - ox
        py = scale * src[:, 1] / h - oy
        tx, ty = T[:, 0] / h, T[:, 1] / h
        step = max(1, chunk // len(T))
        for s in range(0, len(src), step):
            idx = np.add.outer(px[s : s + step], tx).astype(np.int64).ravel()
            idx *= ny
            idx += np.add.outer(py[s : s + step], ty).astype(np.int64).ravel()
            if flat.size <= 1 << 24:
                np.add(flat, np.bincount(idx, minlength=flat.size), out=flat, casting="unsafe")
            else:
                u, c = np.unique(idx, return_counts=True)
                flat[u] += c.astype(flat.dtype)

    density = internal_density(depth)
    types, areas, box_areas = [], [], []
    for origin, cnt in grids:
        occ = cnt > 0
        inside = ndimage.binary_erosion(occ, structure=np.ones((3, 3), bool), border_value=0)
        t = TypeRaster(origin, occ, inside)
        types.append(t)
        box_areas.append(float((inside.sum() + 0.5 * t.boundary.sum()) * h * h))
        areas.append(_coverage_area(cnt, density, h))
    return WindowRaster(ifs.rule, k, types, bboxes, areas, box_areas, depth)


def hutchinson_escape(ifs: WindowIFS, raster: WindowRaster, dilate: int = 1) -> int:
    """Number of mapped occupied-cell centres falling outside the raster dilated by ``dilate`` boxes."""
    h = raster.h
    bad = 0
    for i in range(4):
        t = raster.types[i]
        grown = ndimage.binary_dilation(
            np.pad(t.occupied, dilate), structure=np.ones((3, 3), bool), iterations=dilate
        )
        ox, oy = t.origin[0] - dilate, t.origin[1] - dilate
        for m in ifs.into(i):
            c = raster.centers(m.source)
            q = SIGMA_F * c + np.array(m.shift.to_float())
            ix = np.floor(q[:, 0] / h).astype(np.int64) - ox
            iy = np.floor(q[:, 1] / h).astype(np.int64) - oy
            ok = (ix >= 0) & (ix < grown.shape[0]) & (iy >= 0) & (iy < grown.shape[1])
            bad += int((~ok).sum())
            bad += int((~grown[ix[ok], iy[ok]]).sum())
    return bad


# -- shears -------------------------------------------------------------------

ALPHAS = (ZTau(1), ZTau(-1), TAU, -TAU, TAU - 1, 1 - TAU)


@dataclass(frozen=True)
class Shear:
    """Unimodular shear; form 'x' is [[1, a], [0, 1]], form 'y' is [[1, 0], [a, 1]]."""

    form: str
    alpha: ZTau

    @property
    def axis(self) -> str:
        return self.form

    def star(self) -> Shear:
        return Shear(self.form, self.alpha.conj())

    def inverse(self) -> Shear:
        return Shear(self.form, -self.alpha)

    def matrix(self) -> tuple[tuple[ZTau, ZTau], tuple[ZTau, ZTau]]:
        one, zero, a = ZTau(1), ZERO, self.alpha
        if self.form == "x":
            return ((one, a), (zero, one))
        return ((one, zero), (a, one))

    def apply(self, v: ZTauVec2) -> ZTauVec2:
        if self.form == "x":
            return ZTauVec2(v.x + self.alpha * v.y, v.y)
        return ZTauVec2(v.x, v.y + self.alpha * v.x)

    def apply_f(self, pts: np.ndarray) -> np.ndarray:
        a = float(self.alpha)
        out = np.array(pts, dtype=float, copy=True)
        if self.form == "x":
            out[..., 0] += a * pts[..., 1]
        else:
            out[..., 1] += a * pts[..., 0]
        return out

    def float_matrix(self) -> np.ndarray:
        a = float(self.alpha)
        return np.array([[1.0, a], [0.0, 1.0]]) if self.form == "x" else np.array([[1.0, 0.0], [a, 1.0]])

    def det(self) -> ZTau:
        (p, q), (r, s) = self.matrix()
        return p * s - q * r

    def __str__(self) -> str:
        return f"{self.form}:{self.alpha}"


IDENTITY = Shear("x", ZERO)
SHEARS = tuple(Shear(f, a) for f in ("x", "y") for a in ALPHAS)


# -- exact rectangles and parallelogram windows -------------------------------------

Rect = tuple[ZTau, ZTau, ZTau, ZTau]  # x0, y0, x1, y1


def rect_area(r: Rect) -> ZTau:
    return (r[2] - r[0]) * (r[3] - r[1])


def rect_image(r: Rect, shift: ZTauVec2) -> Rect:
    """Image of a rectangle under y -> sigma*y + shift (sigma < 0 swaps the ends)."""
    return (
        SIGMA * r[2] + shift.x,
        SIGMA * r[3] + shift.y,
        SIGMA * r[0] + shift.x,
        SIGMA * r[1] + shift.y,
    )


def _rect_inside(a: Rect, b: Rect) -> bool:
    return b[0] <= a[0] and b[1] <= a[1] and a[2] <= b[2] and a[3] <= b[3]


def _rect_overlap(a: Rect, b: Rect) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def verify_rect_ifs(maps: list[IFSMap], rects: list[Rect]) -> list[str]:
    """Exact check that every rect is partitioned (up to measure zero) by its IFS pieces."""
    problems = []
    for r in rects:
        if not (r[0] < r[2] and r[1] < r[3]):
            problems.append(f"degenerate rectangle {tuple(map(str, r))}")
    if problems:
        return problems
    for i in range(4):
        pieces = [rect_image(rects[m.source], m.shift) for m in maps if m.target == i]
        for p in pieces:
            if not _rect_inside(p, rects[i]):
                problems.append(f"type {i}: piece {tuple(map(str, p))} not inside window")
        for p, q in combinations(pieces, 2):
            if _rect_overlap(p, q):
                problems.append(f"type {i}: pieces overlap")
        total = sum((rect_area(p) for p in pieces), ZERO)
        if total != rect_area(rects[i]):
            problems.append(f"type {i}: piece area {total} != {rect_area(rects[i])}")
    return problems


@dataclass(frozen=True)
class PolyWindow:
    """Per-type parallelograms ``shear.star() (rect_i)`` with exact Z[tau] corners.

    ``shear`` is the direct-space shear S; the window itself is sheared by S*.
    """

    rule: RuleId | None
    shear: Shear
    rects: tuple[Rect, ...]  # unsheared rectangles

    @property
    def internal_shear(self) -> Shear:
        return self.shear.star()

    def vertices(self, i: int) -> list[ZTauVec2]:
        x0, y0, x1, y1 = self.rects[i]
        s = self.internal_shear
        return [s.apply(ZTauVec2(x, y)) for x, y in ((x0, y0), (x1, y0), (x1, y1), (x0, y1))]

    def area(self, i: int) -> ZTau:
        return rect_area(self.rects[i])

    def is_square(self) -> bool:
        return self.shear.alpha == 0

    def unshear(self, v: ZTauVec2) -> ZTauVec2:
        return self.internal_shear.inverse().apply(v)

    def locate(self, i: int, y: ZTauVec2) -> int:
        """Exact position of y relative to window i: 1 interior, 0 boundary, -1 outside."""
        u = self.unshear(y)
        x0, y0, x1, y1 = self.rects[i]
        cx = min((u.x - x0).sign(), (x1 - u.x).sign())
        cy = min((u.y - y0).sign(), (y1 - u.y).sign())
        return min(cx, cy)

    def contains(self, i: int, y: ZTauVec2, convention: str = "closed") -> bool:
        u = self.unshear(y)
        x0, y0, x1, y1 = self.rects[i]
        if convention == "closed":
            return x0 <= u.x <= x1 and y0 <= u.y <= y1
        if convention == "half-open":
            return x0 <= u.x < x1 and y0 <= u.y < y1
        if convention == "open":
            return x0 < u.x < x1 and y0 < u.y < y1
        raise ValueError(f"unknown convention {convention!r}")

    def float_rects(self) -> np.ndarray:
        return np.array([[float(c) for c in r] for r in self.rects])

    def locate_f(self, i: int, pts: np.ndarray) -> np.ndarray:
        """Signed distance-like margin in unsheared coordinates (positive inside)."""
        u = self.internal_shear.inverse().apply_f(pts)
        x0, y0, x1, y1 = (float(c) for c in self.rects[i])
        return np.minimum.reduce([u[:, 0] - x0, x1 - u[:, 0], u[:, 1] - y0, y1 - u[:, 1]])

    def bbox(self, i: int) -> tuple[float, float, float, float]:
        vs = [v.to_float() for v in self.vertices(i)]
        return (
            min(v[0] for v in vs),
            min(v[1] for v in vs),
            max(v[0] for v in vs),
            max(v[1] for v in vs),
        )

    def to_json(self) -> dict:
        return {
            "rule": str(self.rule) if self.rule else None,
            "shear": {"form": self.shear.form, "alpha": str(self.shear.alpha)},
            "windows": [
                [{"x": str(v.x), "y": str(v.y)} for v in self.vertices(i)] for i in range(4)
            ],
        }


class NotPolygonal(Exception):
    """The attractor is not a parallelogram window (no shear candidate verifies)."""


class SnapAmbiguity(Exception):
    """Two lattice values lie within the snapping tolerance of a raster coordinate."""


@lru_cache(maxsize=None)
def _snap_table(c: int = SNAP_COEFF):
    vals = [ZTau(a, b) for a in range(-c, c + 1) for b in range(-c, c + 1)]
    return vals, np.array([float(v) for v in vals])


def snap(value: float, tol: float) -> ZTau | None:
    vals, fl = _snap_table()
    d = np.abs(fl - value)
    hits = np.nonzero(d <= tol)[0]
    distinct = {vals[i] for i in hits}
    if len(distinct) > 1:
        raise SnapAmbiguity(f"{value:.6f} matches {sorted(map(str, distinct))}")
    return distinct.pop() if distinct else None


def _unshear_rects(edges: list[np.ndarray], internal: Shear):
    inv = internal.inverse()
    out = []
    for c in edges:
        c = inv.apply_f(c)
        lo, hi = c.min(axis=0), c.max(axis=0)
        # occupied-cell centres sit up to half a cell outside the attractor
        out.append((lo[0], lo[1], hi[0], hi[1]))
    return out


def certify_polygonal_window(ifs: WindowIFS, raster: WindowRaster) -> PolyWindow:
    """Fit, snap and exactly verify a parallelogram window; raises NotPolygonal."""
    if raster.k < 8:
        raise ValueError("certification needs a raster with k >= 8")
    ambiguous = []
    # a linear map is extremal on the occupied set only at boundary cells
    edges = [raster.centers(i, "boundary") for i in range(4)]
    for shear in (IDENTITY,) + SHEARS:
        internal = shear.star()
        amp = 1.0 + abs(float(internal.alpha))
        tol = 3.0 * raster.h * amp
        inv_maps = [
            IFSMap(m.target, m.source, internal.inverse().apply(m.shift)) for m in ifs.maps
        ]
        try:
            rects = []
            for fr in _unshear_rects(edges, internal):
                s = [snap(v, tol) for v in fr]
                if any(v is None for v in s):
                    raise LookupError
                rects.append(tuple(s))
        except LookupError:
            continue
        except SnapAmbiguity as e:
            ambiguous.append(str(e))
            continue
        if not verify_rect_ifs(inv_maps, rects):
            return PolyWindow(ifs.rule, shear, tuple(rects))
    if ambiguous:
        raise SnapAmbiguity("; ".join(ambiguous))
    raise NotPolygonal(f"rule {ifs.rule}: no parallelogram fits the attractor")


def dp_windows() -> tuple[Rect, ...]:
    """The four square-lattice windows of the plain direct product rule."""
    m1, a, b = ZTau(-1), TAU - 2, TAU - 1
    return (
        (m1, m1, a, a),
        (a, m1, b, a),
        (m1, a, a, b),
        (a, a, b, b),
    )


def raster_hausdorff(raster: WindowRaster, window: PolyWindow) -> float:
    """Hausdorff distance between occupied-cell centres and the exact parallelograms."""
    from scipy.spatial import cKDTree

    worst = 0.0
    for i in range(4):
        c = raster.centers(i)
        verts = np.array([v.to_float() for v in window.vertices(i)])
        # sample the parallelogram densely (interior grid + edges)
        e1, e2 = verts[1] - verts[0], verts[3] - verts[0]
        samples = int(max(np.hypot(*e1), np.hypot(*e2)) / (raster.h / 4)) + 2
        s = np.linspace(0.0, 1.0, samples)
        uu, vv = np.meshgrid(s, s)
        poly = verts[0] + uu.reshape(-1, 1) * e1 + vv.reshape(-1, 1) * e2
        d1, _ = cKDTree(c).query(poly)
        margin = window.locate_f(i, c)
        # distance from a centre to a convex polygon: 0 inside, else nearest sample
        outside = margin < 0
        d2 = np.zeros(len(c))
        if outside.any():
            d2[outside], _ = cKDTree(poly).query(c[outside])
        worst = max(worst, float(d1.max()), float(d2.max()))
    return worst
