"""The 1D Fibonacci substitution a -> ab, b -> a and its projection windows."""

from __future__ import annotations

from dataclasses import dataclass

from .num import ONE, TAU, ZERO, ZTau

RULE = {"a": "ab", "b": "a"}
LENGTH = {"a": TAU, "b": ONE}

# seeds b|a and a|a are the legal two-letter words of rho^2 around a fixed point
LEGAL_SEEDS = ("a|a", "b|a")


def substitute_word(word: str, n: int) -> str:
    if n < 0:
        raise ValueError("n must be non-negative")
    for _ in range(n):
        word = "".join(RULE[c] for c in word)
    return word


@dataclass(frozen=True)
class FibTiling1D:
    letters: tuple[str, ...]
    lefts: tuple[ZTau, ...]

    def __len__(self) -> int:
        return len(self.letters)

    def control_points(self, letter: str | None = None) -> list[ZTau]:
        return [x for c, x in zip(self.letters, self.lefts) if letter in (None, c)]

    def to_json(self) -> list[dict]:
        return [{"letter": c, "left": str(x)} for c, x in zip(self.letters, self.lefts)]


def fib_tiling(seed: str = "a|a", n: int = 1) -> FibTiling1D:
    """Tiling around 0 obtained by applying rho^(2n) to a legal seed ``L|R``.

    The left block ends at 0 and the right block starts at 0.
    """
    if seed not in LEGAL_SEEDS:
        raise ValueError(f"illegal seed {seed!r}; expected one of {LEGAL_SEEDS}")
    if n < 0:
        raise ValueError("n must be non-negative")
    left, right = seed.split("|")
    left = substitute_word(left, 2 * n)
    right = substitute_word(right, 2 * n)
    lefts: list[ZTau] = []
    x = ZERO
    for c in reversed(left):
        x = x - LENGTH[c]
        lefts.append(x)
    lefts.reverse()
    x = ZERO
    for c in right:
        lefts.append(x)
        x = x + LENGTH[c]
    return FibTiling1D(tuple(left + right), tuple(lefts))


def window_a(x: ZTau, convention: str) -> bool:
    """Membership of an internal coordinate in the window of letter a."""
    lo, hi = TAU - 2, TAU - 1
    if convention == "A":
        return lo <= x < hi
    if convention == "B":
        return lo < x <= hi
    raise ValueError(f"unknown convention {convention!r}")


def window_b(x: ZTau, convention: str) -> bool:
    lo, hi = ZTau(-1), TAU - 2
    if convention == "A":
        return lo <= x < hi
    if convention == "B":
        return lo < x <= hi
    raise ValueError(f"unknown convention {convention!r}")


@dataclass
class ProjectionReport:
    convention: str
    checked: int
    mismatches: list[tuple[str, ZTau]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def verify_fib_projection(t: FibTiling1D, convention: str) -> ProjectionReport:
    bad = []
    for c, x in zip(t.letters, t.lefts):
        xs = x.conj()
        inside = window_a(xs, convention) if c == "a" else window_b(xs, convention)
        if not inside:
            bad.append((c, x))
    return ProjectionReport(convention, len(t), bad)


def matching_convention(seed: str = "a|a", n: int = 6) -> str | None:
    """The window convention (A or B) that reproduces the given seed's fixed point."""
    t = fib_tiling(seed, n)
    ok = [c for c in "AB" if verify_fib_projection(t, c).ok]
    return ok[0] if len(ok) == 1 else None
