"""Cut-and-project scheme for Z[tau]^2: lattice, star map, model sets and the
patch versus model-set comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .num import ONE, ORIGIN, SIGMA_F, SQRT5_F, TAU, TAU_F, ZERO, ZTau, ZTauVec2
from .rules import RuleId, supertile_patch, build_rule
from .window import (
    NotPolygonal,
    PolyWindow,
    WindowIFS,
    WindowRaster,
    attractor_raster,
    certify_polygonal_window,
    window_ifs,
)

# -- lattice -------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeBasis:
    """Basis of the Minkowski embedding of Z[tau]^2 in R^4 = direct (x, y) + internal (x*, y*)."""

    vectors: tuple[tuple[ZTau, ZTau, ZTau, ZTau], ...]

    @classmethod
    def standard(cls) -> LatticeBasis:
        z, o, t = ZERO, ONE, TAU
        return cls(
            (
                (t, z, t.conj(), z),
                (o, z, o, z),
                (z, t, z, t.conj()),
                (z, o, z, o),
            )
        )

    def matrix(self) -> np.ndarray:
        """Float 4x4 matrix with the basis vectors as columns."""
        return np.array([[float(c) for c in v] for v in self.vectors]).T

    def determinant(self) -> ZTau:
        """Exact determinant by cofactor expansion over Z[tau]."""
        m = [[self.vectors[j][i] for j in range(4)] for i in range(4)]
        return _det(m)

    @property
    def covolume(self) -> int:
        d = self.determinant()
        if d.b != 0:
            raise ArithmeticError(f"covolume {d} is not rational")
        return abs(d.a)

    def contains(self, v: tuple[ZTau, ZTau, ZTau, ZTau]) -> bool:
        """Exact membership: v = (x, y, x*, y*) with x, y in Z[tau]."""
        return v[2] == v[0].conj() and v[3] == v[1].conj()


def _det(m: list[list[ZTau]]) -> ZTau:
    if len(m) == 1:
        return m[0][0]
    total = ZERO
    for j, c in enumerate(m[0]):
        if not c:
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = c * _det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


LATTICE = LatticeBasis.standard()
COVOLUME = 5


def star_map(v: ZTauVec2) -> ZTauVec2:
    return v.star()


def lift(v: ZTauVec2) -> tuple[ZTau, ZTau, ZTau, ZTau]:
    """Lattice point (v, v*) of R^4."""
    s = v.star()
    return (v.x, v.y, s.x, s.y)


def lattice_coords(direct, internal) -> np.ndarray:
    """Coordinates of (direct, internal) in the lattice basis."""
    v = np.concatenate([np.asarray(direct, float), np.asarray(internal, float)])
    return np.linalg.solve(LATTICE.matrix(), v)


def torus_coords(direct, internal) -> np.ndarray:
    """Representative of (direct, internal) in the fundamental parallelotope of the lattice."""
    c = lattice_coords(direct, internal)
    frac = c - np.floor(c)
    # snap values within rounding of 1 back to 0 so lattice translates agree
    frac[np.isclose(frac, 1.0, atol=1e-9)] = 0.0
    frac[np.isclose(frac, 0.0, atol=1e-9)] = 0.0
    return LATTICE.matrix() @ frac


# -- enumeration of lattice points -----------------------------------------------

_PAD = 1e-9


def _axis_candidates(lo: float, hi: float, slo: float, shi: float) -> np.ndarray:
    """All (a, b) with lo <= a + b*tau <= hi and slo <= a + b*sigma <= shi, padded slightly."""
    if hi < lo or shi < slo:
        return np.zeros((0, 2), dtype=np.int64)
    # (a + b tau) - (a + b sigma) = b sqrt5
    b0 = math.floor((lo - shi) / SQRT5_F - _PAD)
    b1 = math.ceil((hi - slo) / SQRT5_F + _PAD)
    out = []
    for b in range(b0, b1 + 1):
        a_lo = max(lo - b * TAU_F, slo - b * SIGMA_F) - _PAD * (1 + abs(b))
        a_hi = min(hi - b * TAU_F, shi - b * SIGMA_F) + _PAD * (1 + abs(b))
        a0, a1 = math.ceil(a_lo), math.floor(a_hi)
        if a1 >= a0:
            a = np.arange(a0, a1 + 1, dtype=np.int64)
            out.append(np.column_stack([a, np.full_like(a, b)]))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


def lattice_points(region, star_box) -> np.ndarray:
    """Integer coefficient rows (a, b, c, d) of x = (a + b tau, c + d tau) with x in the
    closed float box ``region`` and x* in the closed float box ``star_box`` (both padded)."""
    ax = _axis_candidates(region[0], region[2], star_box[0], star_box[2])
    ay = _axis_candidates(region[1], region[3], star_box[1], star_box[3])
    if not len(ax) or not len(ay):
        return np.zeros((0, 4), dtype=np.int64)
    ix, iy = np.meshgrid(np.arange(len(ax)), np.arange(len(ay)), indexing="ij")
    return np.column_stack([ax[ix.ravel()], ay[iy.ravel()]])


def coeff_floats(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Direct and star float coordinates of coefficient rows."""
    a, b, c, d = (rows[:, k].astype(float) for k in range(4))
    direct = np.column_stack([a + b * TAU_F, c + d * TAU_F])
    internal = np.column_stack([a + b * SIGMA_F, c + d * SIGMA_F])
    return direct, internal


def row_vec(r) -> ZTauVec2:
    return ZTauVec2(ZTau(int(r[0]), int(r[1])), ZTau(int(r[2]), int(r[3])))


def _as_exact(v) -> ZTau | None:
    if isinstance(v, ZTau):
        return v
    if isinstance(v, (int, np.integer)):
        return ZTau(int(v))
    return None


def _in_region(p: ZTauVec2, region) -> bool:
    out = True
    for coord, lo, hi in ((p.x, region[0], region[2]), (p.y, region[1], region[3])):
        elo, ehi = _as_exact(lo), _as_exact(hi)
        f = float(coord)
        out &= (elo <= coord) if elo is not None else (float(lo) <= f)
        out &= (coord <= ehi) if ehi is not None else (f <= float(hi))
    return bool(out)


def _float_box(region) -> tuple[float, float, float, float]:
    return tuple(float(c) for c in region)


# -- fractal membership by IFS zooming -------------------------------------------

IN, BOUNDARY, OUT, UNCERTAIN = "in", "boundary", "out", "uncertain"


class ZoomMembership:
    """Exact membership of Z[tau]^2 points in the closed raster windows.

    y lies in Omega_i iff some map y' -> sigma*y' + t into i has its preimage
    (y - t)/sigma in Omega_j. Preimages are followed exactly. The raster only
    prunes: a point outside the one-cell halo of the occupied cells is not in
    the attractor. Meeting a state already on the current path proves that
    state is the fixed point of a composite map, so every state on the path,
    the query included, lies in the closed window. Conjugates of the
    preimages contract, so for lattice points the search space is finite.
    """

    def __init__(self, ifs: WindowIFS, raster: WindowRaster, max_depth: int = 200):
        self.ifs = ifs
        self.raster = raster
        self.max_depth = max_depth
        self.into = [ifs.into(i) for i in range(4)]
        self._memo: dict = {}

    def _pruned(self, i: int, y: ZTauVec2) -> bool:
        return int(self.raster.state(i, np.array([y.to_float()]))[0]) == 0

    def classify(self, i: int, y: ZTauVec2) -> str:
        on_path: set = set()

        def visit(j: int, z: ZTauVec2, depth: int) -> str:
            key = (j, z.key())
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            if key in on_path:
                return IN
            if self._pruned(j, z):
                self._memo[key] = OUT
                return OUT
            if depth >= self.max_depth:
                return UNCERTAIN
            on_path.add(key)
            res = OUT
            for m in self.into[j]:
                r = visit(m.source, (z - m.shift).scale(-TAU), depth + 1)  # (z - t) / sigma
                if r == IN:
                    res = IN
                    break
                if r == UNCERTAIN:
                    res = UNCERTAIN
            on_path.discard(key)
            if res != UNCERTAIN:
                self._memo[key] = res
            return res

        return visit(i, y, 0)


# -- model sets ----------------------------------------------------------------


@dataclass
class ModelSet:
    """Labelled lattice points x with x* - shift in a window."""

    points: list[tuple[ZTauVec2, int]]
    boundary: list[tuple[ZTauVec2, tuple[int, ...]]] = field(default_factory=list)
    uncertain: list[ZTauVec2] = field(default_factory=list)
    convention: str = "half-open"

    def __len__(self) -> int:
        return len(self.points)

    def labeled(self) -> dict[tuple[int, int, int, int], int]:
        return {p.key(): i for p, i in self.points}

    def to_json(self) -> dict:
        return {
            "convention": self.convention,
            "points": [{"type": i, "x": str(p.x), "y": str(p.y)} for p, i in self.points],
            "boundary": [
                {"types": list(t), "x": str(p.x), "y": str(p.y)} for p, t in self.boundary
            ],
            "uncertain": [{"x": str(p.x), "y": str(p.y)} for p in self.uncertain],
        }


def _shift_parts(shift) -> tuple[ZTauVec2 | None, np.ndarray]:
    if shift is None:
        return ORIGIN, np.zeros(2)
    if isinstance(shift, ZTauVec2):
        return shift, np.array(shift.to_float())
    return None, np.asarray(shift, dtype=float)


def _window_bbox(window) -> tuple[float, float, float, float]:
    if isinstance(window, PolyWindow):
        boxes = [window.bbox(i) for i in range(4)]
    else:
        boxes = window.bboxes
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def _candidates(window, region, shift_f):
    wb = _window_bbox(window)
    h = window.h if isinstance(window, WindowRaster) else 0.0
    star_box = (
        wb[0] + shift_f[0] - 2 * h,
        wb[1] + shift_f[1] - 2 * h,
        wb[2] + shift_f[0] + 2 * h,
        wb[3] + shift_f[1] + 2 * h,
    )
    rows = lattice_points(_float_box(region), star_box)
    direct, internal = coeff_floats(rows)
    fr = _float_box(region)
    keep = (
        (direct[:, 0] >= fr[0] - 1e-7)
        & (direct[:, 0] <= fr[2] + 1e-7)
        & (direct[:, 1] >= fr[1] - 1e-7)
        & (direct[:, 1] <= fr[3] + 1e-7)
    )
    return rows[keep], direct[keep], internal[keep] - shift_f


def _poly_labels(window: PolyWindow, y: ZTauVec2 | None, yf, convention: str):
    """(label or None, boundary types) for one point; exact when y is given."""
    if y is None:
        # float shift: membership by margin, which must stay clear of the boundary
        margins = [float(window.locate_f(i, yf[None, :])[0]) for i in range(4)]
        if min(abs(m) for m in margins) < 1e-9:
            raise ValueError(f"internal point {tuple(yf)} lies on a window boundary")
        inside = [i for i, m in enumerate(margins) if m > 0]
        return (inside[0] if inside else None), ()
    locs = [window.locate(i, y) for i in range(4)]
    on = tuple(i for i, l in enumerate(locs) if l == 0)
    label = None
    for i in range(4):
        if window.contains(i, y, convention):
            label = i
            break
    return label, on


def model_set(
    window: PolyWindow | WindowRaster,
    region,
    shift=None,
    convention: str = "half-open",
    ifs: WindowIFS | None = None,
) -> ModelSet:
    """Lattice points x with x in ``region`` and x* - shift in the window, labelled by type.

    ``region`` is a box (x0, y0, x1, y1) with ZTau, int or float corners, closed on
    every side. For a PolyWindow membership is exact (``shift`` a ZTauVec2) and
    follows ``convention``; points whose star lies on a window boundary are also
    listed in ``boundary``. For a WindowRaster, points in the raster boundary band
    are refined through ``ifs`` when given and otherwise reported as uncertain.
    """
    if convention not in ("half-open", "closed", "open"):
        raise ValueError(f"unknown convention {convention!r}")
    if isinstance(window, PolyWindow):
        if any(not (r[0] < r[2] and r[1] < r[3]) for r in window.rects):
            raise ValueError("empty window")
    elif not any(t.occupied.any() for t in window.types):
        raise ValueError("empty window")
    exact_shift, shift_f = _shift_parts(shift)
    rows, direct, internal = _candidates(window, region, shift_f)
    out = ModelSet([], convention=convention)

    if isinstance(window, PolyWindow):
        for r, yf in zip(rows, internal):
            p = row_vec(r)
            if not _in_region(p, region):
                continue
            y = p.star() - exact_shift if exact_shift is not None else None
            # float prefilter: far outside every window
            if y is not None:
                margins = [float(window.locate_f(i, yf[None, :])[0]) for i in range(4)]
                if max(margins) < -1e-6:
                    continue
            label, on = _poly_labels(window, y, yf, convention)
            if label is not None:
                out.points.append((p, label))
            if on:
                out.boundary.append((p, on))
        return out

    states = np.stack([window.state(i, internal) for i in range(4)], axis=1)
    zoom = ZoomMembership(ifs, window) if ifs is not None and exact_shift is not None else None
    for r, st in zip(rows, states):
        if not st.any():
            continue
        p = row_vec(r)
        if not _in_region(p, region):
            continue
        verdicts = []
        for i in range(4):
            if st[i] == 0:
                verdicts.append(OUT)
            elif zoom is not None:
                verdicts.append(zoom.classify(i, p.star() - exact_shift))
            else:
                verdicts.append(IN if st[i] == 2 else UNCERTAIN)
        inside = [i for i, v in enumerate(verdicts) if v == IN]
        if UNCERTAIN in verdicts:
            out.uncertain.append(p)
        elif len(inside) == 1:
            out.points.append((p, inside[0]))
        elif inside:
            # closed windows of different types meet only on their boundaries
            out.boundary.append((p, tuple(inside)))
    return out


# -- patch versus model set --------------------------------------------------------


def seed_shift(rid: RuleId, n: int) -> ZTauVec2:
    """Star-side shift s with supertile_patch(rid, n) inside the model set of Omega + s.

    The T3 at x0 = -tau*o3 (o3 the offset of T3 inside the inflated T3) is a
    fixed tile, and the n-th supertile of the origin seed is that of x0 moved
    by -tau^n x0.
    """
    (o3,) = [off for i, off in build_rule(rid).children[3] if i == 3]
    x0 = o3.scale(-TAU)
    return -(x0.scale(TAU**n)).star()


@dataclass
class MatchReport:
    rule: RuleId
    n: int
    margin: float
    window_kind: str
    shift: ZTauVec2
    checked: int
    mismatches: list[dict]
    excluded: int
    uncertain: int
    convention_agreement: int = 0
    nudge: ZTauVec2 = ORIGIN

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def uncertain_fraction(self) -> float:
        return self.uncertain / max(1, self.checked)

    def to_json(self) -> dict:
        return {
            "rule": str(self.rule),
            "n": self.n,
            "margin": self.margin,
            "window": self.window_kind,
            "shift": {"x": str(self.shift.x), "y": str(self.shift.y)},
            "nudge": {"x": str(self.nudge.x), "y": str(self.nudge.y)},
            "checked": self.checked,
            "excluded": self.excluded,
            "uncertain": self.uncertain,
            "convention_agreement": self.convention_agreement,
            "mismatches": self.mismatches,
            "ok": self.ok,
        }


def rule_window(rid: RuleId, k: int = 8):
    """Certified PolyWindow when the attractor is a parallelogram, else the raster."""
    ifs = window_ifs(rid)
    raster = attractor_raster(ifs, k)
    try:
        return certify_polygonal_window(ifs, raster), raster
    except NotPolygonal:
        return None, raster


# tiny exact displacements sigma^m * v tried, in order, to move off singular positions
_NUDGE_DIRS = ((1, 2), (2, 1), (-1, 2), (2, -1), (1, -2), (-2, 1), (-1, -2), (-2, -1))
_NUDGE_POWERS = (16, 12, 20)


def nudges():
    yield ORIGIN
    for m in _NUDGE_POWERS:
        for p, q in _NUDGE_DIRS:
            yield ZTauVec2.of(p, q).scale(sigma_pow(m))


def sigma_pow(m: int) -> ZTau:
    return (ONE - TAU) ** m


def _compare(window, ifs, tiles, region, shift):
    ms = model_set(window, region, shift, "half-open", ifs=ifs)
    model = ms.labeled()
    boundary = {p.key(): t for p, t in ms.boundary}
    uncertain = {p.key() for p in ms.uncertain}
    mismatches, excluded, agree = [], 0, 0
    poly = isinstance(window, PolyWindow)
    for key, (pos, typ) in tiles.items():
        if key in uncertain:
            continue
        if poly:
            y = pos.star() - shift
            loc = window.locate(typ, y)
            if loc == 0:
                excluded += 1
                agree += model.get(key) == typ
            elif loc < 0:
                mismatches.append(_mm(pos, typ, None, "tile star outside its window"))
            elif model.get(key) != typ:
                mismatches.append(_mm(pos, typ, model.get(key), "label differs"))
            continue
        if key in boundary:
            excluded += 1
            if typ not in boundary[key]:
                mismatches.append(_mm(pos, typ, None, "tile star outside its window"))
            continue
        if model.get(key) != typ:
            mismatches.append(_mm(pos, typ, model.get(key), "label differs"))
    for key, typ in model.items():
        if key in tiles:
            continue
        if poly and key in boundary:
            excluded += 1
            continue
        mismatches.append(_mm(row_vec(key), None, typ, "model point without tile"))
    if not poly:
        excluded += sum(1 for key in boundary if key not in tiles)
    checked = len(set(tiles) | set(model) | set(boundary) | uncertain)
    return mismatches, excluded, agree, len(uncertain), checked


def compare_patch_modelset(
    rid: RuleId,
    n: int = 6,
    margin: float = 1.0,
    window: PolyWindow | WindowRaster | None = None,
    k: int = 10,
) -> MatchReport:
    """Compare the n-step supertile with the model set over its footprint shrunk by ``margin``.

    The patch matches the model set of the windows shifted by ``seed_shift``.
    Polygonal windows are compared exactly at that shift; points whose star
    lies on a window boundary are excluded and the half-open convention is
    checked on them. The origin-seeded supertile often sits at a singular
    position, where many lattice points lie exactly on a fractal boundary, so
    raster windows are compared at the first shift ``seed_shift + nudge`` (tiny
    exact displacements, tried in a fixed order) that leaves no excluded point;
    failing that, the attempt with the fewest problems is reported.
    """
    if n > 8:
        raise ValueError("n must be at most 8")
    if not isinstance(rid, RuleId):
        rid = RuleId(*rid)
    ifs = window_ifs(rid)
    if window is None:
        poly, raster = rule_window(rid, 8)
        window = poly if poly is not None else attractor_raster(ifs, k)
    patch, (x0, y0, x1, y1) = supertile_patch(rid, n)
    base = seed_shift(rid, n)
    mx = ZTau(int(margin)) if float(margin).is_integer() else None
    if mx is not None:
        region = (x0 + mx, y0 + mx, x1 - mx, y1 - mx)
    else:
        region = (float(x0) + margin, float(y0) + margin, float(x1) - margin, float(y1) - margin)
    tiles = {t.pos.key(): (t.pos, t.type) for t in patch if _in_region(t.pos, region)}

    poly = isinstance(window, PolyWindow)
    best = None
    for nudge in [ORIGIN] if poly else nudges():
        shift = base + nudge
        res = _compare(window, ifs, tiles, region, shift)
        score = len(res[0]) + res[1] + res[3]
        if best is None or score < best[0]:
            best = (score, shift, nudge, res)
        if score == 0:
            break
    _, shift, nudge, (mismatches, excluded, agree, uncertain, checked) = best
    return MatchReport(
        rid,
        n,
        margin,
        "polygon" if poly else f"raster k={window.k}",
        shift,
        checked,
        mismatches,
        excluded,
        uncertain,
        agree,
        nudge,
    )


def _mm(pos: ZTauVec2, tile, model, why: str) -> dict:
    return {"x": str(pos.x), "y": str(pos.y), "tile": tile, "model": model, "reason": why}


def row_projection(window: PolyWindow, length: int, shift: ZTauVec2 | None = None) -> list[ZTau]:
    """x-coordinates of the model-set points on the row y = 0 with 0 <= x <= length."""
    ms = model_set(window, (ZERO, ZERO, ZTau(length), ZERO), shift, "half-open")
    return sorted((p.x for p, _ in ms.points), key=float)
