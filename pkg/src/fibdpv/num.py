"""Exact arithmetic in the ring Z[tau], tau = (1 + sqrt 5) / 2.

Elements are stored as integer pairs ``(a, b)`` representing ``a + b*tau``.
Coefficients are Python ints, so results never wrap around.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import total_ordering

SQRT5_F = math.sqrt(5.0)
TAU_F = (1.0 + SQRT5_F) / 2.0
SIGMA_F = 1.0 - TAU_F

_EPS = 2.0**-52
_TEXT_RE = re.compile(r"^\s*([+-]?\d+)\s*([+-])\s*(\d+)\s*\*\s*tau\s*$")


def _sign_p_q_sqrt5(p: int, q: int) -> int:
    """Sign of p + q*sqrt(5), decided with integers only."""
    if p >= 0 and q >= 0:
        return 0 if p == 0 and q == 0 else 1
    if p <= 0 and q <= 0:
        return -1
    # mixed signs: compare p^2 against 5 q^2 (never equal for (p, q) != 0)
    if p > 0:
        return 1 if p * p > 5 * q * q else -1
    return 1 if 5 * q * q > p * p else -1


@total_ordering
class ZTau:
    __slots__ = ("a", "b")

    def __init__(self, a: int = 0, b: int = 0) -> None:
        self.a = int(a)
        self.b = int(b)

    @classmethod
    def coerce(cls, x: ZTau | int) -> ZTau:
        if isinstance(x, ZTau):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        raise TypeError(f"cannot coerce {type(x).__name__} to ZTau")

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, int):
            return ZTau(self.a + other, self.b)
        if isinstance(other, ZTau):
            return ZTau(self.a + other.a, self.b + other.b)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, int):
            return ZTau(self.a - other, self.b)
        if isinstance(other, ZTau):
            return ZTau(self.a - other.a, self.b - other.b)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, int):
            return ZTau(other - self.a, -self.b)
        return NotImplemented

    def __neg__(self) -> ZTau:
        return ZTau(-self.a, -self.b)

    def __pos__(self) -> ZTau:
        return self

    def __mul__(self, other):
        if isinstance(other, int):
            return ZTau(self.a * other, self.b * other)
        if isinstance(other, ZTau):
            # (a + b t)(c + d t) with t^2 = t + 1
            bd = self.b * other.b
            return ZTau(
                self.a * other.a + bd,
                self.a * other.b + self.b * other.a + bd,
            )
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, n: int) -> ZTau:
        if not isinstance(n, int):
            return NotImplemented
        base = self
        if n < 0:
            base = self.inverse()
            n = -n
        result = ONE
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conj(self) -> ZTau:
        """Galois conjugate: tau -> 1 - tau."""
        return ZTau(self.a + self.b, -self.b)

    def norm(self) -> int:
        return self.a * self.a + self.a * self.b - self.b * self.b

    def is_unit(self) -> bool:
        return abs(self.norm()) == 1

    def inverse(self) -> ZTau:
        n = self.norm()
        if abs(n) != 1:
            raise ZeroDivisionError(f"{self} is not a unit of Z[tau]")
        return self.conj() * n

    def exact_div(self, other: ZTau | int) -> ZTau:
        """Quotient ``self / other`` when it lies in Z[tau]; ValueError otherwise."""
        other = ZTau.coerce(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Z[tau]")
        num = self * other.conj()
        if num.a % n or num.b % n:
            raise ValueError(f"{self} / {other} is not in Z[tau]")
        return ZTau(num.a // n, num.b // n)

    # -- order and embedding ------------------------------------------------

    def sign(self) -> int:
        # float filter; exact casework only when the float is inconclusive
        v = self.a + self.b * TAU_F
        if abs(v) > 8.0 * _EPS * (abs(self.a) + 2.0 * abs(self.b)) + 1e-300:
            return 1 if v > 0 else -1
        return _sign_p_q_sqrt5(2 * self.a + self.b, self.b)

    def exact_sign(self) -> int:
        return _sign_p_q_sqrt5(2 * self.a + self.b, self.b)

    def __float__(self) -> float:
        return self.a + self.b * TAU_F

    def embed(self) -> tuple[float, float]:
        """Real value as a float together with an upper bound on its error."""
        fa, fb = float(self.a), float(self.b)
        v = fa + fb * TAU_F
        err = _EPS * (abs(fa) + 3.0 * abs(fb) * TAU_F + abs(v)) + 5e-324
        return v, err

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self.b == 0 and self.a == other
        if isinstance(other, ZTau):
            return self.a == other.a and self.b == other.b
        return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, (int, ZTau)):
            return (self - other).sign() < 0
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __bool__(self) -> bool:
        return bool(self.a or self.b)

    def __abs__(self) -> ZTau:
        return -self if self.sign() < 0 else self

    def __repr__(self) -> str:
        return f"ZTau({self.a}, {self.b})"

    def __str__(self) -> str:
        return f"{self.a}{self.b:+d}*tau"

    @classmethod
    def parse(cls, text: str) -> ZTau:
        m = _TEXT_RE.match(text)
        if not m:
            raise ValueError(f"not of the form 'a+b*tau': {text!r}")
        b = int(m.group(3))
        return cls(int(m.group(1)), b if m.group(2) == "+" else -b)


def compare(x: ZTau | int, y: ZTau | int) -> int:
    """-1, 0 or 1 according to the real embedding."""
    return (ZTau.coerce(x) - ZTau.coerce(y)).sign()


ZERO = ZTau(0, 0)
ONE = ZTau(1, 0)
TAU = ZTau(0, 1)
TAU_INV = ZTau(-1, 1)
SIGMA = ZTau(1, -1)  # conj(tau) = 1 - tau = -1/tau


def tau_pow(n: int) -> ZTau:
    return TAU**n


@dataclass(frozen=True, slots=True)
class ZTauVec2:
    x: ZTau
    y: ZTau

    @classmethod
    def of(cls, x: ZTau | int, y: ZTau | int) -> ZTauVec2:
        return cls(ZTau.coerce(x), ZTau.coerce(y))

    def __add__(self, o: ZTauVec2) -> ZTauVec2:
        return ZTauVec2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: ZTauVec2) -> ZTauVec2:
        return ZTauVec2(self.x - o.x, self.y - o.y)

    def __neg__(self) -> ZTauVec2:
        return ZTauVec2(-self.x, -self.y)

    def scale(self, c: ZTau | int) -> ZTauVec2:
        return ZTauVec2(self.x * c, self.y * c)

    def star(self) -> ZTauVec2:
        return ZTauVec2(self.x.conj(), self.y.conj())

    def to_float(self) -> tuple[float, float]:
        return float(self.x), float(self.y)

    def key(self) -> tuple[int, int, int, int]:
        return (self.x.a, self.x.b, self.y.a, self.y.b)

    def __lt__(self, o: ZTauVec2) -> bool:
        c = compare(self.x, o.x)
        if c:
            return c < 0
        return compare(self.y, o.y) < 0

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


ORIGIN = ZTauVec2(ZERO, ZERO)


def star(v: ZTauVec2) -> ZTauVec2:
    return v.star()
