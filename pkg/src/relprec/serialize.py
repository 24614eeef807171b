"""JSON helpers.  Rationals travel as ``"num/den"`` strings so round-trips are bit exact."""

from __future__ import annotations

import json
from decimal import ROUND_HALF_EVEN, Context, Decimal
from fractions import Fraction
from typing import Any

SCHEMA_VERSION = 1

_DISPLAY = Context(prec=12, rounding=ROUND_HALF_EVEN)


def rat_to_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def rat_from_str(s: str) -> Fraction:
    if not isinstance(s, str):
        raise TypeError(f"expected a 'num/den' string, got {type(s).__name__}")
    return Fraction(s.strip())


def approx_str(x: Fraction | int) -> str:
    """12 significant digits, round-half-even.  Display only."""
    x = Fraction(x)
    d = _DISPLAY.divide(Decimal(x.numerator), Decimal(x.denominator))
    return format(d, "g")


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
