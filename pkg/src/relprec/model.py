"""Rounding error models and brute-force verification of their bounds.

Two models relate a rounded value to the exact one:

* standard:     round(x) = x (1 + d),  |d| <= u
* exponential:  round(x) = x e**d,     |d| <= u / (1 - u)

:func:`verify_model_exhaustive` checks both over every point of a grid with
exact rationals and certified enclosures.  The inner-product functions
follow the left-to-right accumulation
``s'_{k+1} = round(s'_k + round(x_{k+1} y_{k+1}))`` and check the induction
that bounds its relative precision by ``n u / (1 - u)``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .exactreal import (
    DEFAULT_WORK_BITS,
    MAX_WORK_BITS,
    DomainError,
    Dyadic,
    RationalLike,
    as_rational,
)
from .formats import (
    FloatGrid,
    Format,
    RoundingMode,
    enumerate_grid,
    is_representable,
    round_rational,
    unit_roundoff,
)
from .precision import CheckStatus, relerr, rp_check, rp_to_relerr_bound
from .serialize import SCHEMA_VERSION, rat_to_str

OPS = ("+", "-", "*", "/")


def rp_model_bound(f: Format, mode: RoundingMode) -> Fraction:
    """``u / (1 - u)`` for the format's unit roundoff."""
    u = unit_roundoff(f, mode)
    return u / (1 - u)


def _as_value(x: Dyadic | RationalLike) -> Fraction:
    return x.to_fraction() if isinstance(x, Dyadic) else as_rational(x)


def round_judgment(
    x: RationalLike,
    f: Format,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
    cap: int = MAX_WORK_BITS,
):
    """Certify ``x ~ round(x) ; rp(u/(1-u))``.

    Returns the :class:`~relprec.precision.CheckResult`; a non-HOLDS status is
    a counterexample to the exponential model, not an error.
    """
    x = as_rational(x)
    if x == 0:
        raise DomainError("relative precision is undefined at zero")
    rounded = round_rational(x, f, mode).to_fraction()
    return rp_check(x, rounded, rp_model_bound(f, mode), work_bits, cap)


def exact_op(x: Fraction, y: Fraction, op: str) -> Fraction:
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if op == "/":
        if y == 0:
            raise ZeroDivisionError("division by zero")
        return x / y
    raise ValueError(f"unknown operator {op!r}")


def flop_judgment(
    x: Dyadic | RationalLike,
    y: Dyadic | RationalLike,
    op: str,
    f: Format,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
):
    """Certify ``x op y ~ round(x op y) ; rp(u/(1-u))`` for representable operands."""
    xv, yv = _as_value(x), _as_value(y)
    for v in (xv, yv):
        if not is_representable(v, f):
            raise ValueError(f"operand {v} is not representable at precision {f.precision}")
    exact = exact_op(xv, yv, op)
    if exact == 0:
        raise DomainError(f"exact result of {xv} {op} {yv} is zero")
    return round_judgment(exact, f, mode, work_bits)


# ---------------------------------------------------------------------------
# Exhaustive model sweep
# ---------------------------------------------------------------------------


@dataclass
class ModelReport:
    format: Format
    mode: RoundingMode
    points_checked: int = 0
    max_std_delta: Fraction = Fraction(0)
    max_rp_delta_hi: Fraction = Fraction(0)
    std_witness: Fraction | None = None
    rp_witness: Fraction | None = None
    violations: list[dict] = field(default_factory=list)
    undecided: list[Fraction] = field(default_factory=list)
    # enumeration indices of the witnesses; ties keep the earliest point
    _std_index: int = -1
    _rp_index: int = -1

    @property
    def unit_roundoff(self) -> Fraction:
        return unit_roundoff(self.format, self.mode)

    @property
    def rp_bound(self) -> Fraction:
        return rp_model_bound(self.format, self.mode)

    @property
    def ok(self) -> bool:
        return not self.violations and not self.undecided

    def _offer_std(self, value: Fraction, x: Fraction, index: int) -> None:
        if self._std_index < 0 or (value, -index) > (self.max_std_delta, -self._std_index):
            self.max_std_delta, self.std_witness, self._std_index = value, x, index

    def _offer_rp(self, value: Fraction, x: Fraction, index: int) -> None:
        if self._rp_index < 0 or (value, -index) > (self.max_rp_delta_hi, -self._rp_index):
            self.max_rp_delta_hi, self.rp_witness, self._rp_index = value, x, index

    def merge(self, other: "ModelReport") -> "ModelReport":
        """Combine reports over disjoint point sets (associative and commutative)."""
        if (self.format, self.mode) != (other.format, other.mode):
            raise ValueError("cannot merge reports for different formats or modes")
        out = ModelReport(self.format, self.mode, self.points_checked + other.points_checked)
        for r in (self, other):
            if r.std_witness is not None:
                out._offer_std(r.max_std_delta, r.std_witness, r._std_index)
            if r.rp_witness is not None:
                out._offer_rp(r.max_rp_delta_hi, r.rp_witness, r._rp_index)
        out.violations = sorted(self.violations + other.violations, key=lambda v: v["index"])
        out.undecided = sorted(self.undecided + other.undecided)
        return out

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "report": "model",
            "precision": self.format.precision,
            "mode": self.mode.value,
            "points_checked": self.points_checked,
            "unit_roundoff": rat_to_str(self.unit_roundoff),
            "rp_bound": rat_to_str(self.rp_bound),
            "max_std_delta": rat_to_str(self.max_std_delta),
            "max_rp_delta_hi": rat_to_str(self.max_rp_delta_hi),
            "std_witness": None if self.std_witness is None else rat_to_str(self.std_witness),
            "rp_witness": None if self.rp_witness is None else rat_to_str(self.rp_witness),
            "violations": [
                {k: (rat_to_str(v) if isinstance(v, Fraction) else v) for k, v in viol.items()}
                for viol in self.violations
            ],
            "undecided": [rat_to_str(x) for x in self.undecided],
        }


def verify_model_points(
    points: Iterable[tuple[int, Fraction]],
    f: Format,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
    cap: int = MAX_WORK_BITS,
) -> ModelReport:
    """Check both models on ``(index, x)`` pairs; zero points are skipped."""
    u = unit_roundoff(f, mode)
    bound = rp_model_bound(f, mode)
    report = ModelReport(f, mode)
    for index, x in points:
        if x == 0:
            continue
        report.points_checked += 1
        rounded = round_rational(x, f, mode).to_fraction()
        std = abs(rounded - x) / abs(x)
        report._offer_std(std, x, index)
        if std > u:
            report.violations.append({"index": index, "x": x, "rounded": rounded, "model": "standard", "delta": std})
        res = rp_check(x, rounded, bound, work_bits, cap)
        report._offer_rp(res.metric.hi, x, index)
        if res.status is CheckStatus.FAILS:
            report.violations.append(
                {"index": index, "x": x, "rounded": rounded, "model": "exponential", "delta": res.metric.lo}
            )
        elif res.status is CheckStatus.UNDECIDED:
            report.undecided.append(x)
    return report


def verify_model_exhaustive(
    g: FloatGrid,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
    cap: int = MAX_WORK_BITS,
) -> ModelReport:
    """Sweep every nonzero grid point through both rounding models."""
    return verify_model_points(enumerate(enumerate_grid(g)), g.format, mode, work_bits, cap)


# ---------------------------------------------------------------------------
# Inner products
# ---------------------------------------------------------------------------


@dataclass
class InnerProductTrace:
    n: int
    partials_exact: list[Fraction]
    partials_fp: list[Fraction]
    # intermediates[k] is the value rounded to give partials_fp[k]: the exact
    # product x_1 y_1 for k = 0, else partials_fp[k-1] + products_fp[k].
    intermediates: list[Fraction]
    products_fp: list[Fraction]
    per_step_bounds: list[Fraction]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "partials_exact": [rat_to_str(v) for v in self.partials_exact],
            "partials_fp": [rat_to_str(v) for v in self.partials_fp],
            "intermediates": [rat_to_str(v) for v in self.intermediates],
            "products_fp": [rat_to_str(v) for v in self.products_fp],
            "per_step_bounds": [rat_to_str(v) for v in self.per_step_bounds],
        }


def inner_product_fp(
    x: Sequence[Dyadic | RationalLike],
    y: Sequence[Dyadic | RationalLike],
    f: Format,
    mode: RoundingMode,
) -> tuple[Dyadic, InnerProductTrace]:
    """Emulated inner product accumulated left to right, with a full trace."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if not x:
        raise ValueError("inner product of empty vectors")
    xs, ys = [_as_value(v) for v in x], [_as_value(v) for v in y]
    for v in itertools.chain(xs, ys):
        if not is_representable(v, f):
            raise ValueError(f"element {v} is not representable at precision {f.precision}")
    bound = rp_model_bound(f, mode)

    def rnd(v: Fraction) -> Fraction:
        return round_rational(v, f, mode).to_fraction()

    exact = xs[0] * ys[0]
    prod = rnd(exact)
    partials_exact, partials_fp = [exact], [prod]
    intermediates, products = [exact], [prod]
    for xi, yi in zip(xs[1:], ys[1:]):
        exact += xi * yi
        prod = rnd(xi * yi)
        hat = partials_fp[-1] + prod
        partials_exact.append(exact)
        intermediates.append(hat)
        products.append(prod)
        partials_fp.append(rnd(hat))
    n = len(xs)
    trace = InnerProductTrace(
        n, partials_exact, partials_fp, intermediates, products, [k * bound for k in range(1, n + 1)]
    )
    return Dyadic.from_rational(partials_fp[-1]), trace


def inner_product_rp_bound(n: int, f: Format, mode: RoundingMode) -> Fraction:
    if n < 1:
        raise ValueError("n must be >= 1")
    return n * rp_model_bound(f, mode)


def higham_relerr_bound(n: int, u: RationalLike) -> Fraction:
    """Classical relative error bound ``n u / (1 - n u)``; needs ``n u < 1``."""
    u = as_rational(u)
    if n * u >= 1:
        raise DomainError(f"n*u = {n * u} must be < 1")
    return n * u / (1 - n * u)


def converted_relerr_bound(n: int, u: RationalLike) -> Fraction:
    """``n u / (1 - (n+1) u)``, the relative error implied by the rp bound; needs ``(n+1) u < 1``."""
    u = as_rational(u)
    if (n + 1) * u >= 1:
        raise DomainError(f"(n+1)*u = {(n + 1) * u} must be < 1")
    return n * u / (1 - (n + 1) * u)


@dataclass
class InnerProductReport:
    format: Format
    mode: RoundingMode
    instances: int = 0
    rejected: int = 0
    violations: list[dict] = field(default_factory=list)
    step_failures: list[dict] = field(default_factory=list)
    undecided: int = 0
    relerr_violations: int = 0
    converted_undefined: int = 0
    higham_held: int = 0
    higham_failed: int = 0
    bound_order_failures: int = 0
    max_relerr_ratio: Fraction = Fraction(0)
    by_length: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not (
            self.violations or self.step_failures or self.undecided or self.relerr_violations
            or self.bound_order_failures
        )

    def to_json(self) -> dict:
        def enc(d: dict) -> dict:
            return {k: (rat_to_str(v) if isinstance(v, Fraction) else v) for k, v in d.items()}

        return {
            "schema": SCHEMA_VERSION,
            "report": "inner_product",
            "precision": self.format.precision,
            "mode": self.mode.value,
            "instances": self.instances,
            "rejected": self.rejected,
            "violations": [enc(v) for v in self.violations],
            "step_failures": [enc(v) for v in self.step_failures],
            "undecided": self.undecided,
            "relerr_violations": self.relerr_violations,
            "converted_undefined": self.converted_undefined,
            "higham_held": self.higham_held,
            "higham_failed": self.higham_failed,
            "bound_order_failures": self.bound_order_failures,
            "max_relerr_over_converted": rat_to_str(self.max_relerr_ratio),
            "by_length": {str(k): v for k, v in sorted(self.by_length.items())},
        }


def check_inner_product(
    x: Sequence[Fraction],
    y: Sequence[Fraction],
    f: Format,
    mode: RoundingMode,
    report: InnerProductReport,
    work_bits: int = DEFAULT_WORK_BITS,
    check_steps: bool = True,
) -> InnerProductTrace | None:
    """Verify one instance into ``report``; returns its trace, or None if rejected."""
    if any(xi * yi <= 0 for xi, yi in zip(x, y)):
        report.rejected += 1
        return None
    _, trace = inner_product_fp(x, y, f, mode)
    n = trace.n
    report.instances += 1
    report.by_length[n] = report.by_length.get(n, 0) + 1
    step = rp_model_bound(f, mode)
    s, s_fp = trace.partials_exact[-1], trace.partials_fp[-1]

    res = rp_check(s, s_fp, n * step, work_bits)
    if res.status is CheckStatus.FAILS:
        report.violations.append({"n": n, "x": str(list(map(str, x))), "y": str(list(map(str, y))), "s": s, "s_fp": s_fp})
    elif res.status is CheckStatus.UNDECIDED:
        report.undecided += 1

    if check_steps:
        for k in range(n):
            # induction invariant: s_k ~ s'_k ; rp(k u/(1-u))
            inv = rp_check(trace.partials_exact[k], trace.partials_fp[k], (k + 1) * step, work_bits)
            # rounding step: s^_k ~ s'_k ; rp(u/(1-u))
            rnd = rp_check(trace.intermediates[k], trace.partials_fp[k], step, work_bits)
            for name, r in (("invariant", inv), ("rounding", rnd)):
                if r.status is CheckStatus.UNDECIDED:
                    report.undecided += 1
                elif not r.holds:
                    report.step_failures.append({"n": n, "k": k + 1, "check": name})

    u = unit_roundoff(f, mode)
    err = relerr(s, s_fp)
    if (n + 1) * u < 1:
        conv = converted_relerr_bound(n, u)
        if err > conv:
            report.relerr_violations += 1
        if conv > 0:
            report.max_relerr_ratio = max(report.max_relerr_ratio, err / conv)
        if higham_relerr_bound(n, u) > conv:
            report.bound_order_failures += 1
    else:
        # the closed form is infinite here; fall back to e**(n u/(1-u)) - 1
        report.converted_undefined += 1
        if err > rp_to_relerr_bound(n * step, work_bits):
            report.relerr_violations += 1
    if n * u < 1:
        if err <= higham_relerr_bound(n, u):
            report.higham_held += 1
        else:
            report.higham_failed += 1
    return trace


def verify_inner_product(
    vectors: Iterable[tuple[Sequence[Fraction], Sequence[Fraction]]],
    f: Format,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
    check_steps: bool = True,
) -> InnerProductReport:
    """Check the rp inner-product bound and the relative error bounds on every pair.

    Pairs with a non-positive componentwise product are counted as rejected.
    """
    report = InnerProductReport(f, mode)
    for x, y in vectors:
        check_inner_product(x, y, f, mode, report, work_bits, check_steps)
    return report


def binade_values(f: Format, exponent: int = 0) -> list[Fraction]:
    """All representable values in [2**exponent, 2**(exponent+1))."""
    p = f.precision
    scale = Fraction(2) ** (exponent - (p - 1))
    return [m * scale for m in range(2 ** (p - 1), 2**p)]


def exhaustive_vectors(f: Format, n: int, exponent: int = 0) -> Iterator[tuple[list[Fraction], list[Fraction]]]:
    """Every length-n pair with entries from one binade and x_i y_i > 0.

    Each component pair is either both positive or both negative.
    """
    mags = binade_values(f, exponent)
    pairs = [(s * a, s * b) for s in (1, -1) for a in mags for b in mags]
    for combo in itertools.product(pairs, repeat=n):
        yield [c[0] for c in combo], [c[1] for c in combo]


def random_vectors(
    f: Format,
    n_range: tuple[int, int],
    trials: int,
    seed: int,
    exp_range: tuple[int, int] = (-4, 4),
) -> Iterator[tuple[list[Fraction], list[Fraction]]]:
    """Seeded random representable pairs with positive componentwise products."""
    rng = random.Random(seed)
    p = f.precision
    for _ in range(trials):
        n = rng.randint(*n_range)
        xs, ys = [], []
        for _ in range(n):
            s = rng.choice((1, -1))
            for out in (xs, ys):
                m = rng.randrange(2 ** (p - 1), 2**p)
                e = rng.randint(*exp_range)
                out.append(s * m * Fraction(2) ** (e - (p - 1)))
        yield xs, ys
