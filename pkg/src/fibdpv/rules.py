"""The 48 direct-product-variation inflation rules and the exact inflation engine.

Prototiles are axis-parallel boxes with lower-left control points:
T0 = 1 x 1, T1 = tau x 1, T2 = 1 x tau, T3 = tau x tau.
A rule is identified by ``(i1, i2, i3)``; ``i1`` picks the split of the
inflated T1, ``i2`` that of T2 and ``i3 = 3*c + v`` that of T3, where ``c``
is the corner occupied by the child T3 and ``v`` the arrangement of the
remaining L-shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from .num import ONE, TAU, ZERO, ZTau, ZTauVec2

MAX_STEPS = 14

WIDTH = (ONE, TAU, ONE, TAU)
HEIGHT = (ONE, ONE, TAU, TAU)
AREA = tuple(w * h for w, h in zip(WIDTH, HEIGHT))
INFLATED = TAU * TAU  # side of the inflated T3

# substitution matrix of every rule: entry (i, p) counts type-i children of parent p
FIB = ((0, 1), (1, 1))
M = tuple(
    tuple(FIB[i // 2][p // 2] * FIB[i % 2][p % 2] for p in range(4)) for i in range(4)
)


def _v(x, y) -> ZTauVec2:
    return ZTauVec2.of(x, y)


# child lists (type, offset) inside the inflated parent
_T1_SPLITS = (
    ((3, _v(0, 0)), (2, _v(TAU, 0))),
    ((2, _v(0, 0)), (3, _v(1, 0))),
)
_T2_SPLITS = (
    ((3, _v(0, 0)), (1, _v(0, TAU))),
    ((1, _v(0, 0)), (3, _v(0, 1))),
)
_T3_CORNER0 = (
    ((3, _v(0, 0)), (2, _v(TAU, 0)), (1, _v(0, TAU)), (0, _v(TAU, TAU))),
    ((3, _v(0, 0)), (0, _v(TAU, 0)), (2, _v(TAU, 1)), (1, _v(0, TAU))),
    ((3, _v(0, 0)), (2, _v(TAU, 0)), (0, _v(0, TAU)), (1, _v(1, TAU))),
)


@dataclass(frozen=True, order=True)
class RuleId:
    i1: int
    i2: int
    i3: int

    def __post_init__(self):
        if self.i1 not in (0, 1) or self.i2 not in (0, 1) or not 0 <= self.i3 < 12:
            raise ValueError(f"invalid rule id {tuple(self)}")

    def __iter__(self):
        return iter((self.i1, self.i2, self.i3))

    def __str__(self) -> str:
        return f"{self.i1},{self.i2},{self.i3}"

    @classmethod
    def parse(cls, text: str) -> RuleId:
        parts = [p.strip() for p in text.replace("(", "").replace(")", "").split(",")]
        if len(parts) != 3:
            raise ValueError(f"rule id must be 'i1,i2,i3', got {text!r}")
        return cls(*(int(p) for p in parts))


ALL_RULES = tuple(RuleId(a, b, c) for a in (0, 1) for b in (0, 1) for c in range(12))
DP_RULE = RuleId(0, 0, 0)

Child = tuple[int, ZTauVec2]


@dataclass(frozen=True)
class Decomposition:
    """Children (type, offset) of the inflated parent of each type."""

    rule: RuleId | None
    children: tuple[tuple[Child, ...], ...]

    def counts(self) -> list[list[int]]:
        m = [[0] * 4 for _ in range(4)]
        for p, kids in enumerate(self.children):
            for i, _ in kids:
                m[i][p] += 1
        return m

    def branches(self):
        """Yield (child type, parent type, offset) for every matrix-function-system branch."""
        for p, kids in enumerate(self.children):
            for i, off in kids:
                yield i, p, off


def child_box(i: int, off: ZTauVec2) -> tuple[ZTau, ZTau, ZTau, ZTau]:
    return off.x, off.y, off.x + WIDTH[i], off.y + HEIGHT[i]


def reflect_in_box(kids, width: ZTau, height: ZTau, fx: bool, fy: bool):
    """Mirror child boxes inside a ``width x height`` box, re-anchored to lower-left corners."""
    out = []
    for i, off in kids:
        x0, y0, x1, y1 = child_box(i, off)
        nx = width - x1 if fx else x0
        ny = height - y1 if fy else y0
        out.append((i, ZTauVec2(nx, ny)))
    return tuple(out)


def _t3_split(i3: int):
    c, v = divmod(i3, 3)
    base = _T3_CORNER0[v]
    fx, fy = {0: (False, False), 1: (True, False), 2: (False, True), 3: (True, True)}[c]
    return reflect_in_box(base, INFLATED, INFLATED, fx, fy)


@lru_cache(maxsize=None)
def build_rule(rid: RuleId) -> Decomposition:
    if not isinstance(rid, RuleId):
        rid = RuleId(*rid)
    return Decomposition(
        rid,
        (
            ((3, _v(0, 0)),),
            _T1_SPLITS[rid.i1],
            _T2_SPLITS[rid.i2],
            _t3_split(rid.i3),
        ),
    )


def substitution_matrix(rid: RuleId) -> list[list[int]]:
    return build_rule(rid).counts()


# -- stone-inflation verification ---------------------------------------------


def _overlap(b1, b2) -> bool:
    """Interior intersection of two closed boxes."""
    return b1[0] < b2[2] and b2[0] < b1[2] and b1[1] < b2[3] and b2[1] < b1[3]


@dataclass
class StoneReport:
    rule: RuleId | None
    ok: bool
    problems: list[str] = field(default_factory=list)


def verify_decomposition(dec: Decomposition) -> StoneReport:
    problems = []
    for p, kids in enumerate(dec.children):
        pw, ph = TAU * WIDTH[p], TAU * HEIGHT[p]
        boxes = [child_box(i, off) for i, off in kids]
        for (i, off), b in zip(kids, boxes):
            if b[0] < 0 or b[1] < 0 or b[2] > pw or b[3] > ph:
                problems.append(f"parent T{p}: child T{i}@{off} leaves the inflated parent")
        for (k1, b1), (k2, b2) in combinations(zip(kids, boxes), 2):
            if _overlap(b1, b2):
                problems.append(
                    f"parent T{p}: children T{k1[0]}@{k1[1]} and T{k2[0]}@{k2[1]} overlap"
                )
        total = sum((AREA[i] for i, _ in kids), ZERO)
        if total != pw * ph:
            problems.append(f"parent T{p}: child area {total} != {pw * ph}")
    return StoneReport(dec.rule, not problems, problems)


def verify_stone(rid: RuleId) -> StoneReport:
    return verify_decomposition(build_rule(rid))


# -- patches ------------------------------------------------------------------


@dataclass(frozen=True)
class Tile:
    type: int
    pos: ZTauVec2

    def box(self):
        return child_box(self.type, self.pos)


def _tile_key(t: Tile):
    return (float(t.pos.x), float(t.pos.y), t.pos.key(), t.type)


class Patch:
    """Finite set of placed tiles, kept in lexicographic control-point order."""

    def __init__(self, tiles=()):
        self.tiles: tuple[Tile, ...] = tuple(sorted(tiles, key=_tile_key))

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def type_counts(self) -> list[int]:
        c = [0, 0, 0, 0]
        for t in self.tiles:
            c[t.type] += 1
        return c

    def points(self, tile_type: int | None = None) -> list[ZTauVec2]:
        return [t.pos for t in self.tiles if tile_type in (None, t.type)]

    def labeled(self) -> dict[tuple[int, int, int, int], int]:
        return {t.pos.key(): t.type for t in self.tiles}

    def bbox(self):
        if not self.tiles:
            return None
        boxes = [t.box() for t in self.tiles]
        return (
            min((b[0] for b in boxes)),
            min((b[1] for b in boxes)),
            max((b[2] for b in boxes)),
            max((b[3] for b in boxes)),
        )

    def find_overlap(self):
        """First pair of tiles with intersecting interiors, or None (sweep over x)."""
        items = sorted(
            ((t.box(), t) for t in self.tiles), key=lambda bt: float(bt[0][0])
        )
        active: list = []
        for b, t in items:
            x0 = float(b[0])
            active = [(ab, at) for ab, at in active if float(ab[2]) > x0 - 1e-9]
            for ab, at in active:
                if _overlap(ab, b):
                    return at, t
            active.append((b, t))
        return None

    def to_json(self) -> list[dict]:
        return [{"type": t.type, "x": str(t.pos.x), "y": str(t.pos.y)} for t in self.tiles]


class InvalidDecomposition(RuntimeError):
    pass


def inflate_patch(patch: Patch, rid: RuleId | Decomposition, check: bool = False) -> Patch:
    dec = rid if isinstance(rid, Decomposition) else build_rule(rid)
    out = []
    for t in patch:
        base = t.pos.scale(TAU)
        for i, off in dec.children[t.type]:
            out.append(Tile(i, base + off))
    result = Patch(out)
    if check:
        bad = result.find_overlap()
        if bad:
            raise InvalidDecomposition(f"overlapping tiles {bad[0]} and {bad[1]}")
    return result


def seed_patch(pos: ZTauVec2 | None = None) -> Patch:
    return Patch([Tile(3, pos if pos is not None else _v(0, 0))])


def supertile_patch(rid: RuleId, n: int, seed: ZTauVec2 | None = None):
    """Apply the rule n times to a single T3; returns (patch, exact bounding box)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_STEPS:
        raise ValueError(f"n={n} exceeds the supported maximum of {MAX_STEPS} steps")
    p = seed_patch(seed)
    dec = build_rule(rid)
    for _ in range(n):
        p = inflate_patch(p, dec)
    origin = (seed or _v(0, 0)).scale(TAU**n)
    side = TAU ** (n + 1)
    return p, (origin.x, origin.y, origin.x + side, origin.y + side)


def mat_vec(m, v):
    return [sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m))]


def count_vector(n: int) -> list[int]:
    v = [0, 0, 0, 1]
    for _ in range(n):
        v = mat_vec(M, v)
    return v


def rule_to_json(rid: RuleId) -> dict:
    dec = build_rule(rid)
    return {
        "rule": str(rid),
        "children": [
            [{"type": i, "x": str(o.x), "y": str(o.y)} for i, o in kids]
            for kids in dec.children
        ],
    }
