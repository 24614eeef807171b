"""FLX-style binary formats: representability, the four rounding functions,
unit roundoff, and test-point grids for brute-force sweeps.

FLX means precision ``p`` with an unbounded exponent, so every nonzero
rational has finite representable neighbours and there is no underflow,
overflow or subnormal range.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .exactreal import Dyadic, RationalLike, as_rational, floor_log2


@dataclass(frozen=True)
class Format:
    precision: int

    def __post_init__(self) -> None:
        if not isinstance(self.precision, int) or self.precision < 2:
            raise ValueError(f"precision must be an integer >= 2, got {self.precision!r}")

    @property
    def p(self) -> int:
        return self.precision


class RoundingMode(enum.Enum):
    RU = "ru"
    RD = "rd"
    RZ = "rz"
    RN = "rn"

    @classmethod
    def parse(cls, text: str) -> "RoundingMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown rounding mode {text!r}; expected one of ru, rd, rz, rn") from None


TIES_EVEN = "even"
TIES_AWAY = "away"


def is_representable(x: RationalLike, f: Format) -> bool:
    """True iff x is 0 or m * 2**e with |m| < 2**p."""
    x = as_rational(x)
    if x == 0:
        return True
    d = x.denominator
    if d & (d - 1):
        return False
    n = abs(x.numerator)
    odd = n >> ((n & -n).bit_length() - 1)
    return odd.bit_length() <= f.precision


def _round_magnitude(a: Fraction, p: int, upward: bool | None, ties: str) -> Dyadic:
    """Round a > 0 onto the precision-p grid.

    ``upward`` True/False selects ceiling/floor; None means nearest.
    """
    e = floor_log2(a) - (p - 1)
    # a = scaled * 2**e with 2**(p-1) <= scaled < 2**p
    if e >= 0:
        num, den = a.numerator, a.denominator << e
    else:
        num, den = a.numerator << -e, a.denominator
    q, r = divmod(num, den)
    if r == 0:
        m = q
    elif upward is True:
        m = q + 1
    elif upward is False:
        m = q
    else:
        twice = 2 * r
        if twice < den:
            m = q
        elif twice > den:
            m = q + 1
        elif ties == TIES_AWAY:
            m = q + 1
        else:
            m = q + (q & 1)
    return Dyadic(m, e)


def round_rational(x: RationalLike, f: Format, mode: RoundingMode, ties: str = TIES_EVEN) -> Dyadic:
    """Round x to the format with the given rounding function.

    RU/RD are the least/greatest representable value above/below x, RZ is RU
    for negative x and RD otherwise, RN picks a nearest value and breaks ties
    to an even mantissa (or away from zero with ``ties="away"``).
    """
    x = as_rational(x)
    if ties not in (TIES_EVEN, TIES_AWAY):
        raise ValueError(f"unknown tie-breaking rule {ties!r}")
    if x == 0:
        return Dyadic(0)
    negative = x < 0
    if mode is RoundingMode.RN:
        upward = None
    elif mode is RoundingMode.RZ:
        upward = False
    elif mode is RoundingMode.RU:
        upward = not negative
    elif mode is RoundingMode.RD:
        upward = negative
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    r = _round_magnitude(-x if negative else x, f.precision, upward, ties)
    return -r if negative else r


# Short alias matching the usual notation.
round = round_rational  # noqa: A001


def unit_roundoff(f: Format, mode: RoundingMode) -> Fraction:
    """2**(1-p) for the directed modes, 2**-p for round-to-nearest."""
    if mode is RoundingMode.RN:
        return Fraction(1, 2**f.precision)
    return Fraction(1, 2 ** (f.precision - 1))


@dataclass(frozen=True)
class FloatGrid:
    """Test points over the binades [2**e, 2**(e+1)) for e in [exp_lo, exp_hi].

    Every representable value in those binades is produced, together with
    ``subsamples_per_gap - 1`` equally spaced interior points of each gap to
    the next representable value, with both signs.
    """

    format: Format
    exp_lo: int
    exp_hi: int
    subsamples_per_gap: int = 1

    def __post_init__(self) -> None:
        if self.exp_lo > self.exp_hi:
            raise ValueError(f"empty exponent range [{self.exp_lo}, {self.exp_hi}]")
        if self.subsamples_per_gap < 1:
            raise ValueError("subsamples_per_gap must be >= 1")

    def __len__(self) -> int:
        p = self.format.precision
        return 2 * (self.exp_hi - self.exp_lo + 1) * 2 ** (p - 1) * self.subsamples_per_gap

    @classmethod
    def parse(cls, text: str) -> "FloatGrid":
        """Parse ``p=<int>,emin=<int>,emax=<int>,sub=<int>``.

        Only ``p`` is required; the others default to emin=-2, emax=2, sub=4.
        """
        fields: dict[str, int] = {}
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            m = re.fullmatch(r"(p|emin|emax|sub)\s*=\s*(-?\d+)", part)
            if not m:
                raise ValueError(f"bad grid field {part!r}")
            if m.group(1) in fields:
                raise ValueError(f"duplicate grid field {m.group(1)!r}")
            fields[m.group(1)] = int(m.group(2))
        if "p" not in fields:
            raise ValueError("grid spec missing p")
        return cls(Format(fields["p"]), fields.get("emin", -2), fields.get("emax", 2), fields.get("sub", 4))


def enumerate_grid(g: FloatGrid) -> Iterator[Fraction]:
    """Yield the grid points in a fixed order: exponent, mantissa, subsample, sign."""
    p = g.format.precision
    sub = g.subsamples_per_gap
    for e in range(g.exp_lo, g.exp_hi + 1):
        ulp_exp = e - (p - 1)
        scale = Fraction(2) ** ulp_exp
        for m in range(2 ** (p - 1), 2**p):
            for j in range(sub):
                v = Fraction(m * sub + j, sub) * scale
                yield v
                yield -v
