"""Angular-momentum coupling coefficients.

Wigner 3j symbols, Clebsch-Gordan coefficients, the multipole coefficients
t^{j m m'}_{k q} used to move a spin density matrix into the spherical-tensor
basis, and the single-axis reconstruction weights R_{m j}.

Half-integers are carried as twice-value integers (``HalfInt``). All
factorial arithmetic is exact Python ``int``; the only rounding happens in a
single correctly-rounded integer division at the very end, so the 3j values
are good to about one ulp for every j this package supports.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from numbers import Real

import numpy as np

__all__ = [
    "HalfInt",
    "CouplingTriple",
    "half",
    "wigner3j",
    "clebsch_gordan",
    "multipole_coeff",
    "multipole_table",
    "reconstruction_weight",
    "reconstruction_weights",
    "J_MAX",
]

J_MAX = 50


@total_ordering
@dataclass(frozen=True)
class HalfInt:
    """Integer or half-integer stored as ``twice_value`` (so ``HalfInt(1)`` is 1/2)."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, (int, np.integer)) or isinstance(self.twice_value, bool):
            raise TypeError(f"twice_value must be an int, got {self.twice_value!r}")
        object.__setattr__(self, "twice_value", int(self.twice_value))

    @classmethod
    def of(cls, value) -> "HalfInt":
        """Coerce an int, a float/Fraction multiple of 1/2, or a HalfInt."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
            return cls(2 * int(value))
        if isinstance(value, (Fraction, Real)):
            twice = 2 * Fraction(value) if isinstance(value, Fraction) else 2 * Fraction(float(value))
            if twice.denominator != 1:
                raise ValueError(f"{value!r} is not an integer or half-integer")
            return cls(int(twice))
        raise TypeError(f"cannot interpret {value!r} as a half-integer")

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self):
        return self.twice_value / 2

    def __int__(self):
        if not self.is_integer:
            raise ValueError(f"{self} is not an integer")
        return self.twice_value // 2

    def __add__(self, other):
        return HalfInt(self.twice_value + HalfInt.of(other).twice_value)

    __radd__ = __add__

    def __sub__(self, other):
        return HalfInt(self.twice_value - HalfInt.of(other).twice_value)

    def __rsub__(self, other):
        return HalfInt(HalfInt.of(other).twice_value - self.twice_value)

    def __neg__(self):
        return HalfInt(-self.twice_value)

    def __abs__(self):
        return HalfInt(abs(self.twice_value))

    def __eq__(self, other):
        if isinstance(other, HalfInt):
            return self.twice_value == other.twice_value
        try:
            return self.twice_value == HalfInt.of(other).twice_value
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self.twice_value < HalfInt.of(other).twice_value

    def __hash__(self):
        return hash(("HalfInt", self.twice_value))

    def __repr__(self):
        if self.is_integer:
            return f"HalfInt({self.twice_value // 2})"
        return f"HalfInt({self.twice_value}/2)"


def half(twice_value: int) -> HalfInt:
    """Shorthand: ``half(3)`` is 3/2."""
    return HalfInt(twice_value)


def _tw(x) -> int:
    t = type(x)
    if t is HalfInt:
        return x.twice_value
    if t is int:
        return 2 * x
    if t is float:
        tw = 2.0 * x
        if tw.is_integer():
            return int(tw)
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return HalfInt.of(x).twice_value


@dataclass(frozen=True)
class CouplingTriple:
    j1: HalfInt
    j2: HalfInt
    j3: HalfInt

    @property
    def triangle(self) -> bool:
        return _triangle(self.j1.twice_value, self.j2.twice_value, self.j3.twice_value)


def _triangle(a: int, b: int, c: int) -> bool:
    # twice-values: |a-b| <= c <= a+b and a+b+c even (j1+j2+j3 integer)
    return abs(a - b) <= c <= a + b and (a + b + c) % 2 == 0


def _check_jm(tj: int, tm: int, name: str) -> None:
    if tj < 0:
        raise ValueError(f"{name}: j must be >= 0, got {tj}/2")
    if tj > 2 * J_MAX:
        raise ValueError(f"{name}: j = {tj}/2 above the supported maximum {J_MAX}")
    if abs(tm) > tj:
        raise ValueError(f"{name}: |m| = {abs(tm)}/2 exceeds j = {tj}/2")
    if (tj + tm) % 2:
        raise ValueError(f"{name}: j + m must be an integer (j={tj}/2, m={tm}/2)")


_FACT_LOCK = threading.Lock()
_FACT: list[int] = [1]


def _factorials(n: int) -> list[int]:
    if n >= len(_FACT):
        with _FACT_LOCK:
            for i in range(len(_FACT), n + 1):
                _FACT.append(_FACT[-1] * i)
    return _FACT


def _threej_squared(a: int, b: int, c: int, x: int, y: int, z: int) -> tuple[int, int, int]:
    """Exact square of a 3j symbol as (sign, numerator, denominator).

    Twice-valued, already validated arguments; sign 0 means the symbol vanishes.
    """
    if x + y + z != 0 or not _triangle(a, b, c) or abs(z) > c:
        return 0, 0, 1
    # integer arguments of the Racah sum
    k1 = (c - b + x) // 2       # j3 - j2 + m1
    k2 = (c - a - y) // 2       # j3 - j1 - m2
    k3 = (a + b - c) // 2       # j1 + j2 - j3
    k4 = (a - x) // 2           # j1 - m1
    k5 = (b + y) // 2           # j2 + m2
    tmin = max(0, -k1, -k2)
    tmax = min(k3, k4, k5)
    if tmin > tmax:
        return 0, 0, 1
    f = _factorials((a + b + c) // 2 + 1)
    # each factorial argument is monotone in t, so the product of the
    # per-argument maxima is a common multiple of every term denominator
    common = (f[tmax] * f[k1 + tmax] * f[k2 + tmax]
              * f[k3 - tmin] * f[k4 - tmin] * f[k5 - tmin])
    total = 0
    for t in range(tmin, tmax + 1):
        term = common // (f[t] * f[k1 + t] * f[k2 + t] * f[k3 - t] * f[k4 - t] * f[k5 - t])
        total += -term if t % 2 else term
    if total == 0:
        return 0, 0, 1
    tri_num = f[(a + b - c) // 2] * f[(a - b + c) // 2] * f[(-a + b + c) // 2]
    tri_den = f[(a + b + c) // 2 + 1]
    mfact = (f[(a + x) // 2] * f[(a - x) // 2] * f[(b + y) // 2]
             * f[(b - y) // 2] * f[(c + z) // 2] * f[(c - z) // 2])
    sign = -1 if total < 0 else 1
    if ((a - b - z) // 2) % 2:
        sign = -sign
    return sign, total * total * tri_num * mfact, common * common * tri_den


def _threej_twice(a: int, b: int, c: int, x: int, y: int, z: int) -> float:
    sign, num, den = _threej_squared(a, b, c, x, y, z)
    if sign == 0:
        return 0.0
    # int / int is correctly rounded even for very large operands
    return sign * math.sqrt(num / den)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3).

    Arguments may be ints, half-integer floats, Fractions or ``HalfInt``.
    Selection-rule violations (m1+m2+m3 != 0, triangle failure) give 0.0;
    structurally impossible input (|m| > j, j+m non-integer) raises ValueError.
    """
    a, b, c = _tw(j1), _tw(j2), _tw(j3)
    x, y, z = _tw(m1), _tw(m2), _tw(m3)
    _check_jm(a, x, "j1/m1")
    _check_jm(b, y, "j2/m2")
    _check_jm(c, z, "j3/m3")
    return _threej_twice(a, b, c, x, y, z)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> with the Condon-Shortley phase.

    Uses <j1 m1; j2 m2|J M> = (-1)^(j1-j2+M) sqrt(2J+1) (j1 j2 J; m1 m2 -M).
    """
    a, x, b, y, c, z = (_tw(v) for v in (j1, m1, j2, m2, J, M))
    _check_jm(a, x, "j1/m1")
    _check_jm(b, y, "j2/m2")
    _check_jm(c, z, "J/M")
    sign, num, den = _threej_squared(a, b, c, x, y, -z)
    if sign == 0:
        return 0.0
    if ((a - b + z) // 2) % 2:
        sign = -sign
    # fold (2J+1) under the root so stretched states come out exactly 1
    return sign * math.sqrt((num * (c + 1)) / den)


def multipole_coeff(j, m, mp, k, q) -> float:
    """Multipole coefficient t^{j m m'}_{k q} = (-1)^(j-m-q) <j m; j -m' | k q>.

    Vanishes unless q = m - m'.
    """
    tj, tm, tmp, tk, tq = (_tw(v) for v in (j, m, mp, k, q))
    _check_jm(tj, tm, "j/m")
    _check_jm(tj, tmp, "j/m'")
    if tk % 2 or tq % 2:
        raise ValueError("k and q must be integers")
    if tk < 0 or tk > 2 * tj:
        raise ValueError(f"k = {tk // 2} outside [0, 2j]")
    if abs(tq) > tk:
        raise ValueError(f"|q| = {abs(tq) // 2} exceeds k = {tk // 2}")
    if tm - tmp != tq:
        return 0.0
    cg = clebsch_gordan(HalfInt(tj), HalfInt(tm), HalfInt(tj), HalfInt(-tmp), HalfInt(tk), HalfInt(tq))
    return -cg if ((tj - tm - tq) // 2) % 2 else cg


@lru_cache(maxsize=None)
def _multipole_table(tj: int) -> np.ndarray:
    dim = tj + 1
    kmax = tj
    table = np.zeros(((kmax + 1) ** 2, dim, dim))
    for k in range(kmax + 1):
        for q in range(-k, k + 1):
            idx = k * k + k + q
            for a in range(dim):
                tm = tj - 2 * a
                b_tmp = tm - 2 * q
                if abs(b_tmp) > tj:
                    continue
                b = (tj - b_tmp) // 2
                table[idx, a, b] = multipole_coeff(HalfInt(tj), HalfInt(tm), HalfInt(b_tmp),
                                                   HalfInt(2 * k), HalfInt(2 * q))
    table.setflags(write=False)
    return table


def multipole_table(j) -> np.ndarray:
    """All t^{j m m'}_{k q} as an array of shape ((2j+1)^2, 2j+1, 2j+1).

    The first axis is the flattened (k, q) index k*k + k + q; the matrix
    axes run over m, m' = j, j-1, ..., -j. Read-only and cached per j.
    """
    tj = _tw(j)
    if tj < 0:
        raise ValueError("j must be >= 0")
    return _multipole_table(tj)


@lru_cache(maxsize=None)
def _weights(tj: int) -> np.ndarray:
    out = np.empty(tj + 1)
    for a in range(tj + 1):
        tm = tj - 2 * a
        s = 0.0
        for k in range(tj + 1):
            s += (2 * k + 1) * _threej_twice(tj, tj, 2 * k, tm, -tm, 0)
        sign = -1.0 if ((tj - tm) // 2) % 2 else 1.0
        out[a] = sign * s / math.sqrt(4 * math.pi)
    out.setflags(write=False)
    return out


def reconstruction_weights(j) -> np.ndarray:
    """R_{m j} for m = j, j-1, ..., -j (cached per j, read-only)."""
    tj = _tw(j)
    if tj < 0:
        raise ValueError("j must be >= 0")
    return _weights(tj)


def reconstruction_weight(j, m) -> float:
    """R_{m j} = (-1)^(j-m)/sqrt(4 pi) * sum_k (2k+1) (j j k; m -m 0)."""
    tj, tm = _tw(j), _tw(m)
    _check_jm(tj, tm, "j/m")
    return float(reconstruction_weights(HalfInt(tj))[(tj - tm) // 2])
