"""Exact rational/dyadic arithmetic and outward-rounded enclosures of ln and exp.

Rationals are :class:`fractions.Fraction`.  Transcendental values only ever
enter the library as :class:`Enclosure` objects whose endpoints are exact
rationals, so every comparison made against them is sound.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational as _RationalABC
from typing import Union

Rational = Fraction
RationalLike = Union[Fraction, int]

#: Guard bits carried by the fixed-point series evaluations.
GUARD_BITS = 24
#: Default and maximum working precision for refinement loops.
DEFAULT_WORK_BITS = 128
MAX_WORK_BITS = 4096


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


def as_rational(x: RationalLike | str) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` / decimal strings to a Fraction.

    Host floats are rejected: they would smuggle binary rounding into exact code.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, (int, _RationalABC)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def rat_arith(x: RationalLike, y: RationalLike, op: str) -> Fraction:
    """Exact ``x op y`` for ``op`` in ``+ - * /``; division by zero raises."""
    x, y = as_rational(x), as_rational(y)
    if op == "+":
        return x + y
    if op in ("-", "−"):
        return x - y
    if op in ("*", "×"):
        return x * y
    if op in ("/", "÷"):
        if y == 0:
            raise ZeroDivisionError("rational division by zero")
        return x / y
    raise ValueError(f"unknown operator {op!r}")


def floor_log2(x: Fraction) -> int:
    """The integer k with 2**k <= x < 2**(k+1), for x > 0."""
    if x <= 0:
        raise DomainError("floor_log2 needs a positive argument")
    n, d = x.numerator, x.denominator
    k = n.bit_length() - d.bit_length()
    if k >= 0:
        if n < d << k:
            k -= 1
    elif n << -k < d:
        k -= 1
    return k


def _floor_div(n: int, d: int) -> int:
    return n // d


def _ceil_div(n: int, d: int) -> int:
    return -((-n) // d)


# ---------------------------------------------------------------------------
# Dyadic numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dyadic:
    """The exact value ``mantissa * 2**exponent``, kept canonical.

    Canonical means the mantissa is odd, or the mantissa is zero and the
    exponent is zero.  Two equal values therefore compare equal field-wise.
    """

    mantissa: int
    exponent: int = 0

    def __post_init__(self) -> None:
        m, e = self.mantissa, self.exponent
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            m >>= tz
            e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    @classmethod
    def from_rational(cls, x: RationalLike) -> "Dyadic":
        x = as_rational(x)
        d = x.denominator
        if d & (d - 1):
            raise ValueError(f"{x} is not a dyadic rational")
        return cls(x.numerator, -(d.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.mantissa, self.exponent)

    def __abs__(self) -> "Dyadic":
        return Dyadic(abs(self.mantissa), self.exponent)

    def __bool__(self) -> bool:
        return self.mantissa != 0

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    def __add__(self, other: "Dyadic") -> "Dyadic":
        e = min(self.exponent, other.exponent)
        m = (self.mantissa << (self.exponent - e)) + (other.mantissa << (other.exponent - e))
        return Dyadic(m, e)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        return self + (-other)

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    def __lt__(self, other: "Dyadic") -> bool:
        return self.to_fraction() < other.to_fraction()

    def __le__(self, other: "Dyadic") -> bool:
        return self.to_fraction() <= other.to_fraction()

    def __str__(self) -> str:
        return str(self.to_fraction())


# ---------------------------------------------------------------------------
# Enclosures
# ---------------------------------------------------------------------------


class Ordering(enum.Enum):
    CERTAINLY_LE = "certainly_le"
    CERTAINLY_GT = "certainly_gt"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Enclosure:
    """A closed rational interval ``[lo, hi]`` known to contain some real."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_rational(self.lo))
        object.__setattr__(self, "hi", as_rational(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty enclosure [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: RationalLike) -> "Enclosure":
        x = as_rational(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: RationalLike) -> bool:
        return self.lo <= as_rational(x) <= self.hi

    def overlaps(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(max(self.lo, other.lo), min(self.hi, other.hi))

    def __neg__(self) -> "Enclosure":
        return Enclosure(-self.hi, -self.lo)

    def __abs__(self) -> "Enclosure":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Enclosure(Fraction(0), max(-self.lo, self.hi))

    def __add__(self, other: "Enclosure | RationalLike") -> "Enclosure":
        if not isinstance(other, Enclosure):
            other = Enclosure.point(other)
        return Enclosure(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __sub__(self, other: "Enclosure | RationalLike") -> "Enclosure":
        if not isinstance(other, Enclosure):
            other = Enclosure.point(other)
        return Enclosure(self.lo - other.hi, self.hi - other.lo)

    def __rsub__(self, other: RationalLike) -> "Enclosure":
        return Enclosure.point(other) - self

    def __mul__(self, other: "Enclosure | RationalLike") -> "Enclosure":
        if not isinstance(other, Enclosure):
            k = as_rational(other)
            return Enclosure(self.lo * k, self.hi * k) if k >= 0 else Enclosure(self.hi * k, self.lo * k)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Enclosure(min(products), max(products))

    __rmul__ = __mul__

    def reciprocal(self) -> "Enclosure":
        if self.lo <= 0 <= self.hi:
            raise ZeroDivisionError("enclosure straddles zero")
        return Enclosure(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other: "Enclosure | RationalLike") -> "Enclosure":
        if not isinstance(other, Enclosure):
            other = Enclosure.point(other)
        return self * other.reciprocal()

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def enc_compare(a: Enclosure, b: Enclosure) -> Ordering:
    """Certain order between two enclosed reals, or ``UNKNOWN`` on overlap."""
    if a.hi <= b.lo:
        return Ordering.CERTAINLY_LE
    if a.lo > b.hi:
        return Ordering.CERTAINLY_GT
    return Ordering.UNKNOWN


# ---------------------------------------------------------------------------
# Fixed-point series kernels.  Values are integers scaled by 2**w; every
# rounding step is directed so that the (lo, hi) pair stays outward.
# ---------------------------------------------------------------------------


def _fixed(x: Fraction, w: int) -> tuple[int, int]:
    n = x.numerator << w
    return _floor_div(n, x.denominator), _ceil_div(n, x.denominator)


def _atanh_series(t_scaled: int, w: int, upper: bool) -> int:
    """Bound on atanh(t) * 2**w for 0 <= t = t_scaled / 2**w <= 1/3.

    Every series term is positive, so a truncated floor-rounded sum is a lower
    bound.  The upper bound ceil-rounds each term and adds the tail
    sum_{i>N} t^(2i+1)/(2i+1) <= 2 t^(2N+3)/(2N+3), valid while t^2 <= 1/2.
    """
    if t_scaled == 0:
        return 0
    one = 1 << w
    sq = t_scaled * t_scaled
    power = t_scaled
    total = 0
    i = 0
    while True:
        denom = 2 * i + 1
        if upper:
            total += _ceil_div(power, denom)
            power = _ceil_div(power * sq, one * one)
        else:
            total += power // denom
            power = (power * sq) // (one * one)
        i += 1
        if power <= 1:
            break
    if upper:
        # power now bounds t^(2i+1) * 2**w from above (at least 1 unit).
        total += _ceil_div(2 * max(power, 1), 2 * i + 1)
    return total


def _atanh_bounds(t: Fraction, w: int) -> tuple[int, int]:
    """Scaled (lo, hi) bounds of atanh(t) for |t| <= 1/3, outward by 2**-w units."""
    if t < 0:
        lo, hi = _atanh_bounds(-t, w)
        return -hi, -lo
    t_lo, t_hi = _fixed(t, w)
    return _atanh_series(t_lo, w, upper=False), _atanh_series(t_hi, w, upper=True)


_ln2_lock = threading.Lock()


@lru_cache(maxsize=64)
def _ln2_bounds_cached(w: int) -> tuple[int, int]:
    lo, hi = _atanh_bounds(Fraction(1, 3), w)
    return 2 * lo, 2 * hi


def _ln2_bounds(w: int) -> tuple[int, int]:
    with _ln2_lock:
        return _ln2_bounds_cached(w)


def ln2_enclosure(work_bits: int = DEFAULT_WORK_BITS) -> Enclosure:
    """Enclosure of ln 2 with width at most 2**-work_bits."""
    w = work_bits + GUARD_BITS
    lo, hi = _ln2_bounds(w)
    return _rescale(lo, hi, w, work_bits)


def _rescale(lo: int, hi: int, w: int, work_bits: int) -> Enclosure:
    """Round scaled bounds outward onto the 2**-(work_bits + 8) grid."""
    keep = work_bits + 8
    shift = w - keep
    if shift > 0:
        lo = lo >> shift
        hi = -((-hi) >> shift)
        w = keep
    return Enclosure(Fraction(lo, 1 << w), Fraction(hi, 1 << w))


def ln_enclosure(x: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Enclosure:
    """Enclosure of ln(x), x > 0, of width at most 2**-work_bits.

    The argument is reduced exactly to x = 2**k * y with y in [3/4, 3/2], then
    ln y = 2 atanh((y - 1)/(y + 1)) with |(y-1)/(y+1)| <= 1/5.
    """
    if work_bits < 1:
        raise ValueError("work_bits must be positive")
    x = as_rational(x)
    if x <= 0:
        raise DomainError(f"ln of non-positive value {x}")
    if x == 1:
        return Enclosure.point(0)
    k = floor_log2(x)
    y = x / 2**k if k >= 0 else x * 2**-k
    if y >= Fraction(3, 2):
        k += 1
        y /= 2
    w = work_bits + GUARD_BITS + abs(k).bit_length()
    a_lo, a_hi = _atanh_bounds((y - 1) / (y + 1), w)
    lo, hi = 2 * a_lo, 2 * a_hi
    if k:
        l2_lo, l2_hi = _ln2_bounds(w)
        if k > 0:
            lo, hi = lo + k * l2_lo, hi + k * l2_hi
        else:
            lo, hi = lo + k * l2_hi, hi + k * l2_lo
    return _rescale(lo, hi, w, work_bits)


def _exp_series(t_scaled: int, w: int, upper: bool) -> int:
    """Bound on exp(t) * 2**w for 0 <= t = t_scaled / 2**w <= 1/2."""
    one = 1 << w
    term = one
    total = 0
    i = 0
    while True:
        total += term
        i += 1
        if upper:
            term = _ceil_div(term * t_scaled, one * i)
        else:
            term = (term * t_scaled) // (one * i)
        if term <= 1:
            break
    if upper:
        # Tail after index i is at most 2 * t^i / i! since t/(i+1) <= 1/2.
        total += 2 * max(term, 1)
    return total


def exp_enclosure(x: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Enclosure:
    """Enclosure of e**x with lo > 0 and width <= 2**-work_bits * max(1, hi).

    The width is relative for large results; for x <= 0 it is absolute.
    """
    if work_bits < 1:
        raise ValueError("work_bits must be positive")
    x = as_rational(x)
    if x == 0:
        return Enclosure.point(1)
    t = abs(x)
    # Halve until t <= 1/2, evaluate the series, then square back up.
    s = 0
    if t > Fraction(1, 2):
        s = floor_log2(t) + 2
        t = t / 2**s
    w = work_bits + GUARD_BITS + 2 * s + 4
    t_lo, t_hi = _fixed(t, w)
    lo = _exp_series(t_lo, w, upper=False)
    hi = _exp_series(t_hi, w, upper=True)
    for _ in range(s):
        lo = (lo * lo) >> w
        hi = _ceil_div(hi * hi, 1 << w)
    if x > 0:
        lo_f, hi_f = Fraction(lo, 1 << w), Fraction(hi, 1 << w)
    else:
        lo_f, hi_f = Fraction(1 << w, hi), Fraction(1 << w, lo)
    return _round_outward_relative(lo_f, hi_f, work_bits + 8)


def _round_outward_relative(lo: Fraction, hi: Fraction, keep: int) -> Enclosure:
    """Snap positive endpoints outward to dyadics with about ``keep`` significant bits."""
    scale = keep - floor_log2(hi)
    if scale >= 0:
        num = 1 << scale
        return Enclosure(
            Fraction(_floor_div(lo.numerator * num, lo.denominator), num),
            Fraction(_ceil_div(hi.numerator * num, hi.denominator), num),
        )
    den = 1 << -scale
    lo_i = _floor_div(lo.numerator, lo.denominator * den)
    if lo_i == 0:
        return Enclosure(lo, Fraction(_ceil_div(hi.numerator, hi.denominator * den) * den))
    return Enclosure(
        Fraction(lo_i * den),
        Fraction(_ceil_div(hi.numerator, hi.denominator * den) * den),
    )


def pow_enclosure(x: RationalLike, k: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Enclosure:
    """Enclosure of x**k for x > 0; exact when k is an integer."""
    x, k = as_rational(x), as_rational(k)
    if x <= 0:
        raise DomainError(f"real power of non-positive base {x}")
    if k.denominator == 1:
        return Enclosure.point(x ** k.numerator)
    extra = abs(k.numerator).bit_length() + 4
    log = ln_enclosure(x, work_bits + extra) * k
    return Enclosure(exp_enclosure(log.lo, work_bits + 4).lo, exp_enclosure(log.hi, work_bits + 4).hi)
