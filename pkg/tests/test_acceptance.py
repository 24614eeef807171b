"""The nine acceptance criteria, one test each.

Every test prints a single ``CRITERION k: PASS|FAIL ...`` line.  The module
can also be run directly: ``python3 tests/test_acceptance.py``.
"""

import functools
import itertools
import random
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import random_expr  # noqa: E402
from relprec.analyzer import Kind, Sign, VarInfo, analyze, analyze_inner_product, analyze_inner_product_expr  # noqa: E402
from relprec.exactreal import DomainError  # noqa: E402
from relprec.expr import evaluate_exact, evaluate_fp, variables  # noqa: E402
from relprec.formats import FloatGrid, Format, RoundingMode, unit_roundoff  # noqa: E402
from relprec.model import (  # noqa: E402
    InnerProductReport,
    binade_values,
    check_inner_product,
    exhaustive_vectors,
    random_vectors,
    rp_model_bound,
    verify_model_exhaustive,
)
from relprec.precision import (  # noqa: E402
    CheckStatus,
    RpJudgment,
    ap_add,
    ap_check,
    ap_div,
    ap_metric,
    ap_mul,
    ap_scale,
    ap_shift,
    ap_symm,
    ap_triangle,
    ap_weaken,
    check_enclosed,
    random_rational,
    random_rp_judgment,
    relerr_counterexamples,
    rp_abs_pow,
    rp_add_exact,
    rp_add_max,
    rp_check,
    rp_metric,
    rp_mul,
    rp_pow_strict,
    rp_scale,
    rp_symm,
    rp_to_ap_log,
    rp_triangle,
    rp_weaken,
)

MODES = list(RoundingMode)


def emit(k, ok, detail):
    print(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)


# ---------------------------------------------------------------------------
# 1 and 2: rounding model sweeps
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def model_sweep():
    start = time.perf_counter()
    reports = {}
    for p in range(2, 9):
        for mode in MODES:
            reports[p, mode] = verify_model_exhaustive(FloatGrid(Format(p), -2, 2, 4), mode)
    return reports, time.perf_counter() - start


def criterion_1():
    reports, elapsed = model_sweep()
    points = sum(r.points_checked for r in reports.values())
    bad = sum(1 for r in reports.values() for v in r.violations if v["model"] == "exponential")
    undecided = sum(len(r.undecided) for r in reports.values())
    rp_ok = all(r.max_rp_delta_hi <= r.rp_bound for r in reports.values())
    ok = bad == 0 and undecided == 0 and rp_ok and elapsed < 120
    return ok, f"{points} points, {bad} violations, {undecided} undecided, {elapsed:.1f}s"


def criterion_2():
    reports, _ = model_sweep()
    bad = sum(1 for r in reports.values() for v in r.violations if v["model"] == "standard")
    std_ok = all(r.max_std_delta <= r.unit_roundoff for r in reports.values())
    rn3 = reports[3, RoundingMode.RN]
    half_u = unit_roundoff(Format(3), RoundingMode.RN) / 2
    ok = bad == 0 and std_ok and rn3.max_std_delta >= half_u
    return ok, f"{bad} violations; p=3 RN max delta {rn3.max_std_delta} at x={rn3.std_witness} vs u/2={half_u}"


# ---------------------------------------------------------------------------
# 3: u <= u/(1-u)
# ---------------------------------------------------------------------------


def criterion_3():
    cases = [(p, m) for p in range(2, 25) for m in MODES]
    bad = [(p, m.value) for p, m in cases if not unit_roundoff(Format(p), m) <= rp_model_bound(Format(p), m)]
    return not bad, f"{len(cases)} (p, mode) pairs, failures {bad}"


# ---------------------------------------------------------------------------
# 4 and 5: inner products
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def inner_product_sweep():
    start = time.perf_counter()
    reports = []
    f3 = Format(3)
    for mode in MODES:
        rep = InnerProductReport(f3, mode)
        for n in (1, 2, 3):
            for x, y in exhaustive_vectors(f3, n):
                check_inner_product(x, y, f3, mode, rep)
        reports.append(rep)
    f6 = Format(6)
    for i, mode in enumerate(MODES):
        rep = InnerProductReport(f6, mode)
        for x, y in random_vectors(f6, (1, 10), 2500, seed=1000 + i):
            check_inner_product(x, y, f6, mode, rep)
        reports.append(rep)
    return reports, time.perf_counter() - start


def criterion_4():
    reports, elapsed = inner_product_sweep()
    exhaustive = sum(r.instances for r in reports[:4])
    rand = sum(r.instances for r in reports[4:])
    viol = sum(len(r.violations) for r in reports)
    steps = sum(len(r.step_failures) for r in reports)
    und = sum(r.undecided for r in reports)
    rejected = sum(r.rejected for r in reports)
    ok = viol == steps == und == rejected == 0 and exhaustive == 4 * (32 + 32**2 + 32**3) and rand == 10000
    ok = ok and elapsed < 300
    return ok, (
        f"{exhaustive} exhaustive (p=3) + {rand} random (p=6) instances, {viol} violations, "
        f"{steps} step failures, {und} undecided, {elapsed:.1f}s"
    )


def criterion_5():
    reports, _ = inner_product_sweep()
    relerr_bad = sum(r.relerr_violations for r in reports)
    order_bad = sum(r.bound_order_failures for r in reports)
    total = sum(r.instances for r in reports)
    undefined = sum(r.converted_undefined for r in reports)
    higham = sum(r.higham_held + r.higham_failed for r in reports)
    worst = max(r.max_relerr_ratio for r in reports)
    ok = relerr_bad == order_bad == 0 and higham == total
    return ok, (
        f"{total - undefined} instances against nu/(1-(n+1)u), {undefined} with (n+1)u >= 1 against e**(nu/(1-u)) - 1; "
        f"{relerr_bad} relerr exceptions, {order_bad} ordering exceptions, worst relerr/bound {float(worst):.4f}"
    )


# ---------------------------------------------------------------------------
# 6: metric axioms
# ---------------------------------------------------------------------------


def criterion_6():
    rng = random.Random(6)
    slack = F(1, 2**100)
    failures = 0
    cases = 10000
    for _ in range(cases):
        s = rng.choice((1, -1))
        x, y, z = (s * random_rational(rng, F(1, 1000), F(1000), 32) for _ in range(3))
        if x == 0 or y == 0 or z == 0:
            continue
        dxy, dyx, dxz, dyz = rp_metric(x, y), rp_metric(y, x), rp_metric(x, z), rp_metric(y, z)
        dxx = rp_metric(x, x)
        ok = (
            dxy.hi >= 0
            and dxx.hi <= slack
            and (x != y or dxy.contains(0))
            and abs(dxy.mid - dyx.mid) <= slack
            and dxz.lo <= dxy.hi + dyz.hi + slack
            and dxy.width <= slack
        )
        a, b, c = (random_rational(rng, F(-100), F(100), 32) for _ in range(3))
        ok = ok and ap_metric(a, b) >= 0 and ap_metric(a, a) == 0 and ap_metric(a, b) == ap_metric(b, a)
        ok = ok and ap_metric(a, c) <= ap_metric(a, b) + ap_metric(b, c)
        failures += not ok
    cx = relerr_counterexamples()
    reproduced = (
        cx["reproduced"]
        and cx["symmetry"]["relerr_forward"] == F(1, 10)
        and cx["symmetry"]["relerr_backward"] == F(1, 11)
        and cx["triangle"]["relerr_direct"] == 1
        and cx["triangle"]["relerr_legs_sum"] == F(5, 6)
    )
    return failures == 0 and reproduced, f"{cases} cases, {failures} failures; 1/10 vs 1/11 and 1 > 5/6 reproduced: {reproduced}"


# ---------------------------------------------------------------------------
# 7 and 8: combinator soundness oracle
# ---------------------------------------------------------------------------


class Tally:
    def __init__(self):
        self.counts = {}

    def rp(self, rule, j):
        if isinstance(j, RpJudgment):
            res = rp_check(j.exact, j.approx, j.alpha)
        else:
            res = check_enclosed(j)
        self._add(rule, res.status)

    def ap(self, rule, j):
        self._add(rule, ap_check(j.exact, j.approx, j.alpha).status)

    def _add(self, rule, status):
        c = self.counts.setdefault(rule, {s: 0 for s in CheckStatus})
        c[status] += 1


def random_ap(rng, exact=None):
    a = random_rational(rng, F(-100), F(100), 24) if exact is None else exact
    d = random_rational(rng, F(-1), F(1), 24)
    slack = random_rational(rng, F(0), F(1, 10), 16)
    res = ap_check(a, a + d, abs(d) + slack)
    assert res.holds
    return res.judgment


def rational_k(rng):
    return F(rng.randrange(-60, 61), rng.randrange(1, 7))


def criterion_7(instances=1000):
    rng = random.Random(7)
    t = Tally()
    for _ in range(instances):
        j1, j2 = random_rp_judgment(rng), random_rp_judgment(rng)
        t.rp("RPI", rp_symm(j1))
        t.rp("RPII", rp_weaken(j1, j1.alpha + random_rational(rng, F(0), F(1), 16)))
        k = rational_k(rng) or F(1)
        t.rp("RPIII", rp_scale(j1, k))
        t.rp("RPIV", rp_abs_pow(j1, rational_k(rng)))
        t.rp("RPV", rp_mul(j1, j2))
        t.rp("RPVI", rp_triangle(j1, random_rp_judgment(rng, exact=j1.approx)))
        s = rng.choice((1, -1))
        a, b = random_rp_judgment(rng, sign=s), random_rp_judgment(rng, sign=s)
        t.rp("Thm5", rp_add_exact(a, b))
        t.rp("Cor1", rp_add_max(a, b))

        p1, p2 = random_ap(rng), random_ap(rng)
        t.ap("API", ap_symm(p1))
        t.ap("APII", ap_weaken(p1, p1.alpha + random_rational(rng, F(0), F(1), 16)))
        t.ap("APIII", ap_shift(p1, random_rational(rng, F(-50), F(50), 20)))
        t.ap("APIV", ap_scale(p1, random_rational(rng, F(-50), F(50), 20)))
        t.ap("APV", ap_add(p1, p2))
        t.ap("APVI", ap_triangle(p1, random_ap(rng, exact=p1.approx)))
        t.ap("Thm7", ap_mul(p1, p2))
        while True:
            q = random_ap(rng)
            if abs(q.approx) > q.alpha and q.exact != 0:
                break
        t.ap("Thm8", ap_div(p1, q))
    fails = {r: c[CheckStatus.FAILS] for r, c in t.counts.items() if c[CheckStatus.FAILS]}
    und = {r: c[CheckStatus.UNDECIDED] for r, c in t.counts.items() if c[CheckStatus.UNDECIDED]}
    per_rule = min(sum(c.values()) for c in t.counts.values())
    ok = len(t.counts) == 16 and per_rule >= 1000 and not fails and not und
    return ok, f"{len(t.counts)} rules x >= {per_rule} instances, fails {fails or 0}, undecided {und or 0}"


def criterion_8(instances=1000):
    rng = random.Random(8)
    rejected = passed = log_ok = 0
    for _ in range(instances):
        j = random_rp_judgment(rng, sign=-1)
        k = F(rng.randrange(-40, 41), rng.choice((2, 3, 4, 5, 7)))
        if k.denominator == 1:
            k += F(1, 2)
        try:
            rp_pow_strict(j, k)
        except DomainError:
            rejected += 1
        j_abs = rp_abs_pow(j, k)
        passed += check_enclosed(j_abs).holds and j_abs.alpha == abs(k) * j.alpha
        log_ok += rp_to_ap_log(j).status is CheckStatus.HOLDS
    ok = rejected == passed == log_ok == instances
    return ok, f"{instances} negative-base cases: strict rejected {rejected}, |a|^k oracle passed {passed}, log conversion held {log_ok}"


# ---------------------------------------------------------------------------
# 9: analyzer vs theorem
# ---------------------------------------------------------------------------


def criterion_9(expressions=100):
    f24 = Format(24)
    agree = all(
        analyze_inner_product_expr(n, f24, m).bound == analyze_inner_product(n, f24, m).bound
        == n * rp_model_bound(f24, m)
        for n in range(1, 17)
        for m in MODES
    )
    rng = random.Random(9)
    f4 = Format(4)
    decade = binade_values(f4, 0)
    checked = failures = not_rp = 0
    for i in range(expressions):
        mode = MODES[i % 4]
        names = ["a", "b", "c"][: rng.randint(1, 3)]
        e = random_expr(rng, names, "+*/", rng.randint(2, 5))
        vs = variables(e)
        env = {v: VarInfo(Sign.POS) for v in vs}
        r = analyze(e, env, f4, mode)
        if r.kind is not Kind.RP:
            not_rp += 1
            continue
        for combo in itertools.product(decade, repeat=len(vs)):
            vals = dict(zip(vs, combo))
            s, s_fp = evaluate_exact(e, vals), evaluate_fp(e, vals, f4, mode)
            checked += 1
            failures += not rp_check(s, s_fp, r.bound).holds
    ok = agree and failures == 0 and not_rp == 0
    return ok, f"n=1..16 agreement {agree}; {expressions} expressions, {checked} assignments, {failures} failures"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k, capsys):
    ok, detail = CRITERIA[k - 1]()
    with capsys.disabled():
        print()
        emit(k, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        emit(k, ok, detail)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
