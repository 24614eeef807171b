import itertools
import json
import random
from fractions import Fraction as F

import pytest

from conftest import random_expr
from relprec.analyzer import (
    Kind,
    Range,
    Sign,
    VarInfo,
    analyze,
    analyze_inner_product,
    analyze_inner_product_expr,
    check_derivation,
    compare_bounds,
    describe,
    env_from_json,
    infer_sign,
)
from relprec.exactreal import DomainError
from relprec.expr import evaluate_exact, evaluate_fp, parse, variables
from relprec.formats import Format, RoundingMode, is_representable
from relprec.model import binade_values, rp_model_bound
from relprec.precision import ap_check, rp_check

RN = RoundingMode.RN
POS, NEG, UNK = VarInfo(Sign.POS), VarInfo(Sign.NEG), VarInfo(Sign.UNKNOWN)


class TestSigns:
    def test_examples(self):
        env = {"x": POS, "y": POS}
        assert infer_sign(parse("x*y"), env)[parse("x*y")] is Sign.POS
        assert infer_sign(parse("x-y"), env)[parse("x-y")] is Sign.UNKNOWN
        e = parse("x - 3")
        assert infer_sign(e, {"x": VarInfo(Sign.UNKNOWN, (F(1), F(2)))})[e] is Sign.NEG

    def test_sign_table(self):
        env = {"p": POS, "n": NEG, "u": UNK}
        cases = {"p*n": Sign.NEG, "n*n": Sign.POS, "n+n": Sign.NEG, "p-n": Sign.POS, "n/p": Sign.NEG,
                 "-n": Sign.POS, "p+u": Sign.UNKNOWN, "u*p": Sign.UNKNOWN}
        for text, sign in cases.items():
            e = parse(text)
            assert infer_sign(e, env)[e] is sign, text

    def test_unbound_variable(self):
        with pytest.raises(KeyError):
            infer_sign(parse("x + q"), {"x": POS})

    def test_env_validation(self):
        with pytest.raises(ValueError):
            VarInfo(Sign.POS, (F(-1), F(2)))
        with pytest.raises(ValueError):
            VarInfo(Sign.UNKNOWN, (F(2), F(1)))
        env = env_from_json({"x": {"sign": "pos", "range": ["1/2", "2"], "input_alpha": "1/100"}})
        assert env["x"] == VarInfo(Sign.POS, (F(1, 2), F(2)), F(1, 100))
        with pytest.raises(ValueError):
            env_from_json({"x": {"sign": "plus"}})

    def test_range_arithmetic(self):
        a, b = Range(F(1), F(2)), Range(F(-3), F(1, 2))
        assert a * b == Range(F(-6), F(1))
        assert a.reciprocal() == Range(F(1, 2), F(1))
        assert b.reciprocal() is None


class TestAnalyzeExamples:
    def test_product(self):
        r = analyze(parse("x*y"), {"x": POS, "y": POS}, Format(24), RN)
        assert r.kind is Kind.RP and r.bound == F(1, 2**24 - 1)
        assert r.root.rules == ["RPV", "Thm4", "RPVI"]
        assert not check_derivation(r)

    def test_subtraction_without_ranges_fails(self):
        r = analyze(parse("x-y"), {"x": POS, "y": POS}, Format(24), RN)
        assert r.kind is Kind.FAILED
        assert "sign condition unsatisfiable" in r.root.reason
        assert r.failures() == [r.root]

    def test_subtraction_with_ranges_falls_back(self):
        env = {"x": VarInfo(Sign.POS, (F(1), F(2))), "y": VarInfo(Sign.POS, (F(1), F(2)))}
        r = analyze(parse("x-y"), env, Format(10), RN)
        assert r.kind is Kind.AP
        assert "APV" in r.root.rules and "bridge(Thm1)" in r.root.rules
        assert not check_derivation(r)

    def test_negative_operands_stay_rp(self):
        r = analyze(parse("a - b"), {"a": NEG, "b": POS}, Format(8), RN)
        assert r.kind is Kind.RP and "Cor1" in r.root.rules and "RPIII(k=-1)" in r.root.rules

    def test_division_needs_divisor_margin(self):
        env = {"x": VarInfo(Sign.UNKNOWN, (F(-1), F(1))), "y": VarInfo(Sign.UNKNOWN, (F(-1), F(1)))}
        r = analyze(parse("1/(x - y)"), env, Format(8), RN)
        assert r.kind is Kind.FAILED

    def test_non_representable_constant(self):
        r = analyze(parse("0.1*x"), {"x": POS}, Format(8), RN)
        step = rp_model_bound(Format(8), RN)
        assert r.bound == 2 * step

    def test_json_and_describe(self):
        r = analyze(parse("x*y + z"), {"x": POS, "y": POS, "z": POS}, Format(8), RN)
        data = json.loads(json.dumps(r.to_json()))
        assert data["kind"] == "rp" and data["derivation"]["children"][0]["rules"] == ["RPV", "Thm4", "RPVI"]
        assert data["bound"] == "2/255"
        assert "2/255" in describe(r)


class TestInnerProduct:
    def test_matches_generic_engine(self):
        for n in (1, 2, 5, 16):
            a = analyze_inner_product(n, Format(24), RN)
            b = analyze_inner_product_expr(n, Format(24), RN)
            assert a.bound == b.bound == n * rp_model_bound(Format(24), RN)
            assert not check_derivation(a) and not check_derivation(b)

    def test_examples(self):
        r = analyze_inner_product(1, Format(24), RN)
        assert r.bound == F(1, 2**24 - 1) and r.root.rules == ["Thm4"] and r.root.depth() == 1
        r = analyze_inner_product(3, Format(24), RN)
        assert r.bound == F(3, 2**24 - 1)
        assert r.root.depth() == 3
        assert all(node.rules == ["Cor1", "Thm4", "RPVI"] for node in r.root.walk() if node.children)

    def test_compare_bounds(self):
        u = F(1, 2**8)
        c = compare_bounds(analyze_inner_product(1, Format(8), RN), 1, u)
        assert c["converted"] == u / (1 - 2 * u) and c["higham"] == u / (1 - u)
        assert c["converted_ge_higham"] and c["relerr_from_rp_le_converted"]
        c = compare_bounds(analyze_inner_product(10, Format(53), RN), 10, F(1, 2**53))
        assert 0 <= c["ratio"] - 1 < F(1, 2**40)
        with pytest.raises(DomainError):
            compare_bounds(analyze_inner_product(4, Format(2), RN), 4, F(1, 4))

    def test_tampered_derivation_is_caught(self):
        r = analyze_inner_product(3, Format(8), RN)
        r.root.bound += F(1, 2**30)
        assert check_derivation(r)


def assignments(env, f, exponent_choices):
    """Every representable assignment consistent with env drawn from the given binades."""
    per_var = []
    for name, info in env.items():
        vals = []
        for e in exponent_choices:
            for v in binade_values(f, e):
                for s in (1, -1):
                    x = s * v
                    rng = info.value_range()
                    if rng.lo <= x <= rng.hi:
                        vals.append(x)
        per_var.append(vals)
    for combo in itertools.product(*per_var):
        yield dict(zip(env, combo))


def check_sound(e, env, f, mode, exponents):
    r = analyze(e, env, f, mode)
    if r.kind is Kind.FAILED:
        return r, 0
    checked = 0
    for vals in assignments(env, f, exponents):
        try:
            s = evaluate_exact(e, vals)
            s_fp = evaluate_fp(e, vals, f, mode)
        except ZeroDivisionError:
            continue
        if r.kind is Kind.RP:
            assert rp_check(s, s_fp, r.bound).holds, (str(e), vals)
        else:
            assert ap_check(s, s_fp, r.bound).holds, (str(e), vals)
        checked += 1
    return r, checked


class TestSoundness:
    @pytest.mark.parametrize("seed", range(20))
    def test_rp_sweep(self, seed):
        rng = random.Random(seed)
        f = Format(rng.choice((3, 4)))
        mode = rng.choice(list(RoundingMode))
        e = random_expr(rng, ["a", "b"], "+*/", rng.randint(2, 4))
        env = {name: rng.choice((POS, NEG)) for name in variables(e)}
        r, checked = check_sound(e, env, f, mode, [0])
        if all(info.sign is Sign.POS for info in env.values()):
            assert r.kind is Kind.RP
        assert r.kind is Kind.FAILED or checked > 0

    @pytest.mark.parametrize("seed", range(20))
    def test_ap_fallback_sweep(self, seed):
        rng = random.Random(1000 + seed)
        f = Format(3)
        mode = rng.choice(list(RoundingMode))
        e = random_expr(rng, ["a", "b", "c"], "+-*/", rng.randint(2, 4))
        ranges = [(F(1, 2), F(2)), (F(-2), F(-1, 2)), (F(-2), F(2))]
        env = {name: VarInfo(Sign.UNKNOWN, rng.choice(ranges)) for name in variables(e)}
        r, checked = check_sound(e, env, f, mode, [-1, 0])
        assert r.kind is Kind.FAILED or checked > 0

    def test_ap_fallback_is_exercised(self):
        env = {"a": VarInfo(Sign.UNKNOWN, (F(1, 2), F(2))), "b": VarInfo(Sign.UNKNOWN, (F(-2), F(2)))}
        for text in ("a - b", "a*b + a", "(a + b) * a", "b / a"):
            r, checked = check_sound(parse(text), env, Format(3), RN, [-1, 0])
            assert r.kind is Kind.AP and checked > 0, text

    def test_representable_sweep_values(self):
        env = {"a": VarInfo(Sign.UNKNOWN, (F(1, 2), F(2)))}
        vals = [v["a"] for v in assignments(env, Format(3), [-1, 0])]
        assert len(vals) == 8 and all(is_representable(v, Format(3)) for v in vals)
