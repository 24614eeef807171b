"""Relative and absolute precision: metrics, certified judgments, and the
rules that propagate their bounds.

A judgment ``a ~ a' ; rp(alpha)`` says ``a'`` approximates ``a`` with
relative precision ``alpha``, i.e. ``|ln(a'/a)| <= alpha`` with ``a`` and
``a'`` nonzero and of the same sign.  ``ap(alpha)`` is the absolute version,
``|a - a'| <= alpha``.

Judgments are *measured* once, by :func:`rp_check` / :func:`ap_check`, and
afterwards only *propagated*: the combinators build new judgments from old
ones using exact rational arithmetic on the bounds, citing the rule that
justifies them in ``certified_by``.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

from .exactreal import (
    DEFAULT_WORK_BITS,
    MAX_WORK_BITS,
    DomainError,
    Enclosure,
    RationalLike,
    as_rational,
    exp_enclosure,
    ln_enclosure,
    pow_enclosure,
)
from .serialize import rat_from_str, rat_to_str


class CheckStatus(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNDECIDED = "undecided"


def _sign(x: Fraction) -> int:
    return (x > 0) - (x < 0)


def _rp_side_conditions(a: Fraction, approx: Fraction) -> str | None:
    if a == 0 or approx == 0:
        return "relative precision needs nonzero values"
    if _sign(a) != _sign(approx):
        return "relative precision needs values of the same sign"
    return None


@dataclass(frozen=True)
class RpJudgment:
    """``exact ~ approx ; rp(alpha)``.

    Constructing one directly checks the side conditions only; use
    :func:`rp_check` to certify the inequality itself.
    """

    exact: Fraction
    approx: Fraction
    alpha: Fraction
    certified_by: str = "rp_check"

    kind = "rp"

    def __post_init__(self) -> None:
        for name in ("exact", "approx", "alpha"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if self.alpha < 0:
            raise ValueError(f"negative precision bound {self.alpha}")
        reason = _rp_side_conditions(self.exact, self.approx)
        if reason:
            raise DomainError(reason)

    def to_json(self) -> dict:
        return _judgment_json(self)


@dataclass(frozen=True)
class ApJudgment:
    """``exact ~ approx ; ap(alpha)``; the inequality is re-checked exactly on construction."""

    exact: Fraction
    approx: Fraction
    alpha: Fraction
    certified_by: str = "ap_check"

    kind = "ap"

    def __post_init__(self) -> None:
        for name in ("exact", "approx", "alpha"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if self.alpha < 0:
            raise ValueError(f"negative precision bound {self.alpha}")
        if abs(self.exact - self.approx) > self.alpha:
            raise ValueError(
                f"|{self.exact} - {self.approx}| exceeds the claimed bound {self.alpha}"
            )

    def to_json(self) -> dict:
        return _judgment_json(self)


Judgment = Union[RpJudgment, ApJudgment]


def _judgment_json(j: Judgment) -> dict:
    return {
        "exact": rat_to_str(j.exact),
        "approx": rat_to_str(j.approx),
        "alpha": rat_to_str(j.alpha),
        "kind": j.kind,
        "certified_by": j.certified_by,
    }


def judgment_from_json(record: dict) -> Judgment:
    cls = {"rp": RpJudgment, "ap": ApJudgment}.get(record.get("kind"))
    if cls is None:
        raise ValueError(f"unknown judgment kind {record.get('kind')!r}")
    return cls(
        rat_from_str(record["exact"]),
        rat_from_str(record["approx"]),
        rat_from_str(record["alpha"]),
        record.get("certified_by", cls.certified_by),
    )


@dataclass(frozen=True)
class CheckResult:
    status: CheckStatus
    judgment: Judgment | None = None
    metric: Enclosure | None = None
    reason: str = ""
    work_bits: int = 0

    @property
    def holds(self) -> bool:
        return self.status is CheckStatus.HOLDS

    def __bool__(self) -> bool:
        return self.holds


def refine_against(
    compute: Callable[[int], Enclosure],
    bound: Fraction,
    work_bits: int = DEFAULT_WORK_BITS,
    cap: int = MAX_WORK_BITS,
) -> tuple[CheckStatus, Enclosure, int]:
    """Decide ``value <= bound`` for a value given by enclosures of growing precision.

    Doubles the working precision while the enclosure straddles ``bound``;
    gives up with UNDECIDED once ``cap`` bits have been tried.
    """
    wb = work_bits
    while True:
        enc = compute(wb)
        if enc.hi <= bound:
            return CheckStatus.HOLDS, enc, wb
        if enc.lo > bound:
            return CheckStatus.FAILS, enc, wb
        if wb >= cap:
            return CheckStatus.UNDECIDED, enc, wb
        wb = min(2 * wb, cap)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def rp_metric(approx: RationalLike, exact: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Enclosure:
    """Enclosure of ``|ln(approx / exact)|``."""
    approx, exact = as_rational(approx), as_rational(exact)
    reason = _rp_side_conditions(exact, approx)
    if reason:
        raise DomainError(reason)
    return abs(ln_enclosure(approx / exact, work_bits))


def rp_metric_ext(x: RationalLike, y: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Enclosure | float:
    """The relative precision distance extended to all reals.

    ``|ln(x/y)|`` for nonzero same-sign values, exactly 0 when both are zero,
    and ``math.inf`` otherwise.
    """
    x, y = as_rational(x), as_rational(y)
    if x == 0 and y == 0:
        return Enclosure.point(0)
    if _rp_side_conditions(x, y) is not None:
        return math.inf
    return rp_metric(x, y, work_bits)


def ap_metric(x: RationalLike, y: RationalLike) -> Fraction:
    return abs(as_rational(x) - as_rational(y))


def relerr(exact: RationalLike, approx: RationalLike) -> Fraction:
    """``|(exact - approx) / exact|``, exactly."""
    exact, approx = as_rational(exact), as_rational(approx)
    if exact == 0:
        raise DomainError("relative error is undefined for an exact value of zero")
    return abs((exact - approx) / exact)


# ---------------------------------------------------------------------------
# Certification
# ---------------------------------------------------------------------------


def rp_check(
    exact: RationalLike,
    approx: RationalLike,
    alpha: RationalLike,
    work_bits: int = DEFAULT_WORK_BITS,
    cap: int = MAX_WORK_BITS,
) -> CheckResult:
    """Certify ``exact ~ approx ; rp(alpha)``."""
    exact, approx, alpha = as_rational(exact), as_rational(approx), as_rational(alpha)
    if alpha < 0:
        raise ValueError(f"negative precision bound {alpha}")
    reason = _rp_side_conditions(exact, approx)
    if reason:
        return CheckResult(CheckStatus.FAILS, reason=reason)
    ratio = approx / exact
    status, enc, wb = refine_against(lambda w: abs(ln_enclosure(ratio, w)), alpha, work_bits, cap)
    if status is CheckStatus.HOLDS:
        return CheckResult(status, RpJudgment(exact, approx, alpha), enc, work_bits=wb)
    reason = "metric exceeds bound" if status is CheckStatus.FAILS else "enclosure straddles bound at cap"
    return CheckResult(status, None, enc, reason, wb)


def ap_check(exact: RationalLike, approx: RationalLike, alpha: RationalLike) -> CheckResult:
    """Certify ``exact ~ approx ; ap(alpha)``, exactly."""
    exact, approx, alpha = as_rational(exact), as_rational(approx), as_rational(alpha)
    if alpha < 0:
        raise ValueError(f"negative precision bound {alpha}")
    d = abs(exact - approx)
    if d <= alpha:
        return CheckResult(CheckStatus.HOLDS, ApJudgment(exact, approx, alpha), Enclosure.point(d))
    return CheckResult(CheckStatus.FAILS, None, Enclosure.point(d), "distance exceeds bound")


# ---------------------------------------------------------------------------
# Relative precision rules
# ---------------------------------------------------------------------------


def rp_symm(j: RpJudgment) -> RpJudgment:
    return RpJudgment(j.approx, j.exact, j.alpha, "RPI")


def rp_weaken(j: RpJudgment, delta: RationalLike) -> RpJudgment:
    delta = as_rational(delta)
    if delta < j.alpha:
        raise ValueError(f"cannot weaken bound {j.alpha} to the smaller {delta}")
    return RpJudgment(j.exact, j.approx, delta, "RPII")


def rp_scale(j: RpJudgment, k: RationalLike) -> RpJudgment:
    k = as_rational(k)
    if k == 0:
        raise DomainError("scaling by zero leaves the domain of relative precision")
    return RpJudgment(k * j.exact, k * j.approx, j.alpha, "RPIII")


@dataclass(frozen=True)
class EnclosedRpJudgment:
    """A relative precision judgment whose endpoints are irrational.

    Produced by real (non-integer) powers: ``exact`` and ``approx`` are
    enclosures of the two positive values, ``alpha`` is exact.
    """

    exact: Enclosure
    approx: Enclosure
    alpha: Fraction
    certified_by: str = "RPIV"
    base_exact: Fraction = field(default=Fraction(0), compare=False)
    base_approx: Fraction = field(default=Fraction(0), compare=False)
    exponent: Fraction = field(default=Fraction(0), compare=False)


def rp_abs_pow(j: RpJudgment, k: RationalLike, work_bits: int = DEFAULT_WORK_BITS):
    """``|a|**k ~ |a'|**k ; rp(|k| alpha)``, valid for any real k.

    Integer k gives an exact :class:`RpJudgment`; other k give an
    :class:`EnclosedRpJudgment`.
    """
    k = as_rational(k)
    a, b = abs(j.exact), abs(j.approx)
    alpha = abs(k) * j.alpha
    if k.denominator == 1:
        return RpJudgment(a ** k.numerator, b ** k.numerator, alpha, "RPIV")
    return EnclosedRpJudgment(
        pow_enclosure(a, k, work_bits), pow_enclosure(b, k, work_bits), alpha, "RPIV", a, b, k
    )


def rp_pow_strict(j: RpJudgment, k: RationalLike, work_bits: int = DEFAULT_WORK_BITS):
    """Power on the raw values, without absolute values.

    Only meaningful when ``a**k`` is real: a negative base with a non-integer
    exponent is rejected.  Use :func:`rp_abs_pow` for the general rule.
    """
    k = as_rational(k)
    if k.denominator == 1:
        n = k.numerator
        return RpJudgment(j.exact**n, j.approx**n, abs(k) * j.alpha, "RPIV")
    if j.exact < 0:
        raise DomainError(f"({j.exact})**({k}) is not a real number")
    return rp_abs_pow(j, k, work_bits)


def check_enclosed(
    j: EnclosedRpJudgment, work_bits: int = DEFAULT_WORK_BITS, cap: int = MAX_WORK_BITS
) -> CheckResult:
    """Re-measure an enclosed power judgment from its bases, refining as needed."""
    def metric(w: int) -> Enclosure:
        ea = pow_enclosure(j.base_exact, j.exponent, w)
        eb = pow_enclosure(j.base_approx, j.exponent, w)
        lo = ln_enclosure(eb.lo / ea.hi, w).lo
        hi = ln_enclosure(eb.hi / ea.lo, w).hi
        return abs(Enclosure(lo, hi))

    status, enc, wb = refine_against(metric, j.alpha, work_bits, cap)
    return CheckResult(status, None, enc, "" if status is CheckStatus.HOLDS else status.value, wb)


def rp_mul(j1: RpJudgment, j2: RpJudgment) -> RpJudgment:
    return RpJudgment(j1.exact * j2.exact, j1.approx * j2.approx, j1.alpha + j2.alpha, "RPV")


def rp_triangle(j1: RpJudgment, j2: RpJudgment) -> RpJudgment:
    """From ``a ~ b ; rp(alpha)`` and ``b ~ c ; rp(delta)`` conclude ``a ~ c ; rp(alpha + delta)``."""
    if j1.approx != j2.exact:
        raise ValueError(f"judgments do not chain: {j1.approx} != {j2.exact}")
    return RpJudgment(j1.exact, j2.approx, j1.alpha + j2.alpha, "RPVI")


def _require_same_sign(j1: Judgment, j2: Judgment) -> None:
    if _sign(j1.exact) != _sign(j2.exact):
        raise DomainError("addition rule needs summands of the same sign")


def rp_add_exact(j1: RpJudgment, j2: RpJudgment, work_bits: int = DEFAULT_WORK_BITS) -> RpJudgment:
    """Sharp addition rule.

    The bound is the upper endpoint of an enclosure of
    ``ln((a' e**alpha + b' e**beta) / (a' + b'))``.
    """
    _require_same_sign(j1, j2)
    num = exp_enclosure(j1.alpha, work_bits) * j1.approx + exp_enclosure(j2.alpha, work_bits) * j2.approx
    ratio = num / (j1.approx + j2.approx)
    gamma = ln_enclosure(ratio.hi, work_bits).hi
    return RpJudgment(j1.exact + j2.exact, j1.approx + j2.approx, max(gamma, Fraction(0)), "Thm5")


def rp_add_max(j1: RpJudgment, j2: RpJudgment) -> RpJudgment:
    _require_same_sign(j1, j2)
    return RpJudgment(j1.exact + j2.exact, j1.approx + j2.approx, max(j1.alpha, j2.alpha), "Cor1")


# ---------------------------------------------------------------------------
# Absolute precision rules
# ---------------------------------------------------------------------------


def ap_symm(j: ApJudgment) -> ApJudgment:
    return ApJudgment(j.approx, j.exact, j.alpha, "API")


def ap_weaken(j: ApJudgment, delta: RationalLike) -> ApJudgment:
    delta = as_rational(delta)
    if delta < j.alpha:
        raise ValueError(f"cannot weaken bound {j.alpha} to the smaller {delta}")
    return ApJudgment(j.exact, j.approx, delta, "APII")


def ap_shift(j: ApJudgment, k: RationalLike) -> ApJudgment:
    k = as_rational(k)
    return ApJudgment(j.exact + k, j.approx + k, j.alpha, "APIII")


def ap_scale(j: ApJudgment, k: RationalLike) -> ApJudgment:
    k = as_rational(k)
    return ApJudgment(k * j.exact, k * j.approx, abs(k) * j.alpha, "APIV")


def ap_add(j1: ApJudgment, j2: ApJudgment) -> ApJudgment:
    return ApJudgment(j1.exact + j2.exact, j1.approx + j2.approx, j1.alpha + j2.alpha, "APV")


def ap_triangle(j1: ApJudgment, j2: ApJudgment) -> ApJudgment:
    if j1.approx != j2.exact:
        raise ValueError(f"judgments do not chain: {j1.approx} != {j2.exact}")
    return ApJudgment(j1.exact, j2.approx, j1.alpha + j2.alpha, "APVI")


def ap_mul_bound(approx_a: Fraction, alpha: Fraction, approx_b: Fraction, beta: Fraction) -> Fraction:
    return abs(approx_a * beta) + abs(approx_b * alpha) + alpha * beta


def ap_div_bound(approx_a: Fraction, alpha: Fraction, approx_b: Fraction, beta: Fraction) -> Fraction:
    mag_b = abs(approx_b)
    if mag_b <= beta:
        raise DomainError(f"division rule needs |b'| > beta, got |{approx_b}| <= {beta}")
    return (abs(approx_a) * beta + mag_b * alpha) / (mag_b * (mag_b - beta))


def ap_mul(j1: ApJudgment, j2: ApJudgment) -> ApJudgment:
    bound = ap_mul_bound(j1.approx, j1.alpha, j2.approx, j2.alpha)
    return ApJudgment(j1.exact * j2.exact, j1.approx * j2.approx, bound, "Thm7")


def ap_div(j1: ApJudgment, j2: ApJudgment) -> ApJudgment:
    bound = ap_div_bound(j1.approx, j1.alpha, j2.approx, j2.alpha)
    return ApJudgment(j1.exact / j2.exact, j1.approx / j2.approx, bound, "Thm8")


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------


def rp_to_relerr_bound(alpha: RationalLike, work_bits: int = DEFAULT_WORK_BITS) -> Fraction:
    """Rational upper bound on ``e**alpha - 1``, which bounds the relative error."""
    alpha = as_rational(alpha)
    if alpha < 0:
        raise ValueError(f"negative precision bound {alpha}")
    return exp_enclosure(alpha, work_bits).hi - 1


@dataclass(frozen=True)
class LogApJudgment:
    """``ln|a| ~ ln|a'| ; ap(alpha)`` with the two logarithms held as enclosures."""

    log_exact: Enclosure
    log_approx: Enclosure
    alpha: Fraction
    status: CheckStatus
    work_bits: int
    certified_by: str = "rp->ap(log)"


def rp_to_ap_log(
    j: RpJudgment, work_bits: int = DEFAULT_WORK_BITS, cap: int = MAX_WORK_BITS
) -> LogApJudgment:
    """Certify ``|ln|a| - ln|a'|| <= alpha`` from an rp judgment.

    Each logarithm is enclosed on its own, so the check does not lean on
    ``ln x - ln y = ln(x/y)``.
    """
    a, b = abs(j.exact), abs(j.approx)
    if a == b:
        enc = ln_enclosure(a, work_bits)
        return LogApJudgment(enc, enc, j.alpha, CheckStatus.HOLDS, work_bits)

    logs: dict[int, tuple[Enclosure, Enclosure]] = {}

    def diff(w: int) -> Enclosure:
        logs[w] = (ln_enclosure(a, w), ln_enclosure(b, w))
        return abs(logs[w][0] - logs[w][1])

    status, _, wb = refine_against(diff, j.alpha, work_bits, cap)
    la, lb = logs[wb]
    return LogApJudgment(la, lb, j.alpha, status, wb)


def relerr_counterexamples(work_bits: int = DEFAULT_WORK_BITS) -> dict:
    """Relative error is neither symmetric nor subadditive; relative precision is both.

    Symmetry: a = 1, a' = 11/10.  Triangle: a = 1, a' = 3/2, a'' = 2.
    """
    one, a1, half3, two = Fraction(1), Fraction(11, 10), Fraction(3, 2), Fraction(2)
    fwd, bwd = relerr(one, a1), relerr(a1, one)
    e12, e23, e13 = relerr(one, half3), relerr(half3, two), relerr(one, two)
    rp_fwd, rp_bwd = rp_metric(a1, one, work_bits), rp_metric(one, a1, work_bits)
    rp12, rp23, rp13 = (
        rp_metric(half3, one, work_bits),
        rp_metric(two, half3, work_bits),
        rp_metric(two, one, work_bits),
    )
    rp_sum = rp12 + rp23
    return {
        "symmetry": {
            "exact": one,
            "approx": a1,
            "relerr_forward": fwd,
            "relerr_backward": bwd,
            "relerr_symmetric": fwd == bwd,
            "rp_forward": rp_fwd,
            "rp_backward": rp_bwd,
            "rp_symmetric": rp_fwd.overlaps(rp_bwd),
        },
        "triangle": {
            "points": (one, half3, two),
            "relerr_direct": e13,
            "relerr_legs": (e12, e23),
            "relerr_legs_sum": e12 + e23,
            "relerr_triangle_holds": e13 <= e12 + e23,
            "rp_direct": rp13,
            "rp_legs_sum": rp_sum,
            "rp_triangle_holds": rp13.hi <= rp_sum.hi,
            "rp_equality_within_width": rp13.overlaps(rp_sum),
        },
        "reproduced": fwd == Fraction(1, 10)
        and bwd == Fraction(1, 11)
        and e12 == Fraction(1, 2)
        and e23 == Fraction(1, 3)
        and e13 == 1
        and e13 > e12 + e23,
    }


# ---------------------------------------------------------------------------
# Randomized certified premises
# ---------------------------------------------------------------------------


def random_rational(rng: random.Random, lo: Fraction, hi: Fraction, bits: int = 40) -> Fraction:
    """A rational drawn uniformly from a 2**bits-point grid on [lo, hi]."""
    t = Fraction(rng.randrange(2**bits + 1), 2**bits)
    return lo + (hi - lo) * t


def random_rp_judgment(
    rng: random.Random,
    exact: RationalLike | None = None,
    alpha: RationalLike | None = None,
    sign: int | None = None,
    work_bits: int = DEFAULT_WORK_BITS,
) -> RpJudgment:
    """Sample a certified ``a ~ a' ; rp(alpha)``.

    ``a' = a * r`` with ``r`` drawn from the enclosure hull of
    ``[e**-alpha, e**alpha]`` and the pair then re-certified with
    :func:`rp_check`; draws that land in the hull's slack are redrawn.
    """
    if sign is None:
        sign = rng.choice((-1, 1))
    if exact is None:
        exact = sign * random_rational(rng, Fraction(1, 64), Fraction(64), 24)
    exact = as_rational(exact)
    if alpha is None:
        alpha = random_rational(rng, Fraction(0), Fraction(1, 2), 24)
    alpha = as_rational(alpha)
    lo = exp_enclosure(-alpha, work_bits).lo
    hi = exp_enclosure(alpha, work_bits).hi
    while True:
        r = random_rational(rng, lo, hi)
        res = rp_check(exact, exact * r, alpha, work_bits)
        if res.holds:
            return res.judgment
