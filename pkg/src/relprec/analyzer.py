"""Static error-bound propagation through expression trees.

Each node gets a bound on the distance between its exact value and the value
an emulated floating-point evaluation produces.  Relative precision is used
while the sign conditions of the rules can be certified; otherwise the node
falls back to absolute precision, which needs value ranges.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Union

from .exactreal import DEFAULT_WORK_BITS, DomainError, as_rational, floor_log2
from .expr import BinOp, Const, Expr, Neg, Var, inner_product_expr
from .formats import Format, RoundingMode, is_representable, unit_roundoff
from .model import converted_relerr_bound, higham_relerr_bound, rp_model_bound
from .precision import ap_div_bound, ap_mul_bound, rp_to_relerr_bound
from .serialize import SCHEMA_VERSION, approx_str, rat_from_str, rat_to_str

Bound = Union[Fraction, float]  # float only ever as math.inf in ranges


class Sign(enum.Enum):
    POS = "pos"
    NEG = "neg"
    UNKNOWN = "unknown"

    def flip(self) -> "Sign":
        return {Sign.POS: Sign.NEG, Sign.NEG: Sign.POS}.get(self, Sign.UNKNOWN)

    @property
    def certain(self) -> bool:
        return self is not Sign.UNKNOWN


class Kind(enum.Enum):
    RP = "rp"
    AP = "ap"
    FAILED = "failed"


# ---------------------------------------------------------------------------
# Ranges over the extended reals
# ---------------------------------------------------------------------------


def _mul(a: Bound, b: Bound) -> Bound:
    if a == 0 or b == 0:
        return Fraction(0)
    return a * b


def _inv(a: Bound) -> Bound:
    return Fraction(0) if math.isinf(a) else 1 / a


@dataclass(frozen=True)
class Range:
    """Closed interval of possible exact values; endpoints may be infinite."""

    lo: Bound = -math.inf
    hi: Bound = math.inf

    @classmethod
    def for_sign(cls, sign: Sign) -> "Range":
        if sign is Sign.POS:
            return cls(Fraction(0), math.inf)
        if sign is Sign.NEG:
            return cls(-math.inf, Fraction(0))
        return cls()

    def sign(self) -> Sign:
        if self.lo > 0:
            return Sign.POS
        if self.hi < 0:
            return Sign.NEG
        return Sign.UNKNOWN

    @property
    def magnitude(self) -> Fraction | None:
        """Finite upper bound on |value|, if any."""
        m = max(abs(self.lo), abs(self.hi))
        return None if math.isinf(m) else m

    @property
    def min_magnitude(self) -> Fraction:
        if self.lo > 0:
            return self.lo
        if self.hi < 0:
            return -self.hi
        return Fraction(0)

    def __neg__(self) -> "Range":
        return Range(-self.hi, -self.lo)

    def __add__(self, other: "Range") -> "Range":
        return Range(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other: "Range") -> "Range":
        ps = [_mul(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Range(min(ps), max(ps))

    def reciprocal(self) -> "Range | None":
        if self.lo <= 0 <= self.hi:
            return None
        return Range(_inv(self.hi), _inv(self.lo))

    def to_json(self) -> list:
        def end(v: Bound) -> str:
            return ("inf" if v > 0 else "-inf") if math.isinf(v) else rat_to_str(v)

        return [end(self.lo), end(self.hi)]


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarInfo:
    sign: Sign = Sign.UNKNOWN
    range: tuple[Fraction, Fraction] | None = None
    input_alpha: Fraction | None = None

    def __post_init__(self) -> None:
        if self.range is not None:
            lo, hi = (as_rational(v) for v in self.range)
            if lo > hi:
                raise ValueError(f"empty range [{lo}, {hi}]")
            object.__setattr__(self, "range", (lo, hi))
            if self.sign is Sign.POS and lo <= 0:
                raise ValueError(f"range [{lo}, {hi}] is inconsistent with a positive sign")
            if self.sign is Sign.NEG and hi >= 0:
                raise ValueError(f"range [{lo}, {hi}] is inconsistent with a negative sign")
        if self.input_alpha is not None:
            alpha = as_rational(self.input_alpha)
            if alpha < 0:
                raise ValueError(f"negative input precision {alpha}")
            object.__setattr__(self, "input_alpha", alpha)

    def value_range(self) -> Range:
        if self.range is not None:
            return Range(*self.range)
        return Range.for_sign(self.sign)


SignEnv = Mapping[str, VarInfo]


def env_from_json(data: Mapping) -> dict[str, VarInfo]:
    """Build an environment from ``{name: {sign, range?, input_alpha?}}``."""
    env = {}
    for name, spec in data.items():
        try:
            sign = Sign(spec.get("sign", "unknown"))
        except ValueError:
            raise ValueError(f"{name}: sign must be pos, neg or unknown") from None
        rng = spec.get("range")
        if rng is not None:
            if len(rng) != 2:
                raise ValueError(f"{name}: range needs two endpoints")
            rng = (rat_from_str(rng[0]), rat_from_str(rng[1]))
        alpha = spec.get("input_alpha")
        env[name] = VarInfo(sign, rng, None if alpha is None else rat_from_str(alpha))
    return env


def load_env(path: str | Path) -> dict[str, VarInfo]:
    return env_from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Sign inference
# ---------------------------------------------------------------------------


def _combine_sign(op: str, a: Sign, b: Sign) -> Sign:
    if op == "-":
        b = b.flip()
        op = "+"
    if op == "+":
        return a if a is b and a.certain else Sign.UNKNOWN
    if a.certain and b.certain:
        return Sign.POS if a is b else Sign.NEG
    return Sign.UNKNOWN


def _infer(e: Expr, env: SignEnv, out: dict) -> tuple[Sign, Range]:
    if isinstance(e, Const):
        v = e.value
        res = (Range(v, v).sign(), Range(v, v))
    elif isinstance(e, Var):
        if e.name not in env:
            raise KeyError(f"unbound variable {e.name!r}")
        info = env[e.name]
        rng = info.value_range()
        sign = info.sign if info.sign.certain else rng.sign()
        res = (sign, rng)
    elif isinstance(e, Neg):
        s, r = _infer(e.operand, env, out)
        res = (s.flip(), -r)
    else:
        sa, ra = _infer(e.left, env, out)
        sb, rb = _infer(e.right, env, out)
        if e.op == "+":
            rng = ra + rb
        elif e.op == "-":
            rng = ra + (-rb)
        elif e.op == "*":
            rng = ra * rb
        else:
            inv = rb.reciprocal()
            rng = Range() if inv is None else ra * inv
        sign = _combine_sign(e.op, sa, sb)
        if not sign.certain:
            sign = rng.sign()
        res = (sign, rng)
    out[e] = res
    return res


def infer_sign(e: Expr, env: SignEnv) -> dict[Expr, Sign]:
    """Sign of every subexpression, refined by range arithmetic where ranges exist."""
    out: dict = {}
    _infer(e, env, out)
    return {k: v[0] for k, v in out.items()}


def infer_ranges(e: Expr, env: SignEnv) -> dict[Expr, tuple[Sign, Range]]:
    out: dict = {}
    _infer(e, env, out)
    return out


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------


@dataclass
class NodeResult:
    label: str
    sign: Sign
    range: Range
    kind: Kind
    bound: Fraction | None
    rules: list[str] = field(default_factory=list)
    children: list["NodeResult"] = field(default_factory=list)
    reason: str = ""
    op: str = ""

    def to_json(self) -> dict:
        return {
            "node": self.label,
            "op": self.op,
            "sign": self.sign.value,
            "range": self.range.to_json(),
            "kind": self.kind.value,
            "bound": None if self.bound is None else rat_to_str(self.bound),
            "rules": list(self.rules),
            "reason": self.reason,
            "children": [c.to_json() for c in self.children],
        }

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)


@dataclass
class AnalysisResult:
    root: NodeResult
    format: Format
    mode: RoundingMode
    relerr_bound: Fraction | None = None

    @property
    def kind(self) -> Kind:
        return self.root.kind

    @property
    def bound(self) -> Fraction | None:
        return self.root.bound

    def failures(self) -> list[NodeResult]:
        return [n for n in self.root.walk() if n.kind is Kind.FAILED and n.reason != "operand failed"]

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "report": "analysis",
            "precision": self.format.precision,
            "mode": self.mode.value,
            "kind": self.kind.value,
            "bound": None if self.bound is None else rat_to_str(self.bound),
            "relerr_bound": None if self.relerr_bound is None else rat_to_str(self.relerr_bound),
            "derivation": self.root.to_json(),
        }


BRIDGE = "bridge(Thm1)"


class _Analyzer:
    def __init__(self, env: SignEnv, f: Format, mode: RoundingMode, work_bits: int):
        self.env = env
        self.f = f
        self.mode = mode
        self.u = unit_roundoff(f, mode)
        self.step = rp_model_bound(f, mode)
        self.work_bits = work_bits
        self.info: dict = {}

    def failed(self, label: str, sign: Sign, rng: Range, reason: str, children=(), op="") -> NodeResult:
        return NodeResult(label, sign, rng, Kind.FAILED, None, [], list(children), reason, op)

    def as_ap(self, node: NodeResult) -> tuple[Fraction | None, list[str], str]:
        """Absolute bound for a child, converting from rp through its range."""
        if node.kind is Kind.AP:
            return node.bound, [], ""
        mag = node.range.magnitude
        if mag is None:
            return None, [], f"no finite range for {node.label} to convert rp to ap"
        rel = rp_to_relerr_bound(node.bound, self.work_bits)
        return mag * rel, ["Thm3(rp->ap)"], ""

    def round_ap(self, pre: Fraction, rng: Range) -> Fraction | None:
        """Add the rounding error u*|z| of the computed operand z."""
        mag = rng.magnitude
        if mag is None:
            return None
        return pre + self.u * (mag + pre)

    def run(self, e: Expr) -> NodeResult:
        sign, rng = self.info[e]
        label = str(e)
        if isinstance(e, Const):
            v = e.value
            if v == 0:
                return NodeResult(label, sign, rng, Kind.AP, Fraction(0), ["exact leaf"])
            if is_representable(v, self.f):
                return NodeResult(label, sign, rng, Kind.RP, Fraction(0), ["exact leaf"])
            return NodeResult(label, sign, rng, Kind.RP, self.step, ["Thm2(leaf rounding)"])
        if isinstance(e, Var):
            info = self.env[e.name]
            alpha = info.input_alpha
            if sign.certain or alpha is not None:
                return NodeResult(label, sign, rng, Kind.RP, alpha or Fraction(0), ["input" if alpha else "exact leaf"])
            return NodeResult(label, sign, rng, Kind.AP, Fraction(0), ["exact leaf"])
        if isinstance(e, Neg):
            child = self.run(e.operand)
            if child.kind is Kind.FAILED:
                return self.failed(label, sign, rng, "operand failed", [child], "neg")
            rule = "RPIII(k=-1)" if child.kind is Kind.RP else "APIV(k=-1)"
            return NodeResult(label, sign, rng, child.kind, child.bound, [rule], [child], op="neg")

        left, right = self.run(e.left), self.run(e.right)
        children = [left, right]
        if left.kind is Kind.FAILED or right.kind is Kind.FAILED:
            return self.failed(label, sign, rng, "operand failed", children, e.op)
        both_rp = left.kind is Kind.RP and right.kind is Kind.RP

        if e.op in ("*", "/") and both_rp:
            rules = (["RPIV(k=-1)"] if e.op == "/" else []) + ["RPV", "Thm4", "RPVI"]
            bound = left.bound + right.bound + self.step
            return NodeResult(label, sign, rng, Kind.RP, bound, rules, children, op=e.op)

        if e.op in ("+", "-") and both_rp:
            rs = right.sign if e.op == "+" else right.sign.flip()
            if left.sign.certain and left.sign is rs:
                rules = (["RPIII(k=-1)"] if e.op == "-" else []) + ["Cor1", "Thm4", "RPVI"]
                bound = max(left.bound, right.bound) + self.step
                return NodeResult(label, sign, rng, Kind.RP, bound, rules, children, op=e.op)

        # absolute precision fallback
        a, rules_a, why_a = self.as_ap(left)
        b, rules_b, why_b = self.as_ap(right)
        if a is None or b is None:
            reason = why_a or why_b
            if e.op in ("+", "-"):
                reason = f"sign condition unsatisfiable, {reason}"
            return self.failed(label, sign, rng, reason, children, e.op)
        rules = rules_a + rules_b
        if e.op in ("+", "-"):
            rules += (["APIV(k=-1)"] if e.op == "-" else []) + ["APV"]
            pre = a + b
        elif e.op == "*":
            ma, mb = left.range.magnitude, right.range.magnitude
            if ma is None or mb is None:
                return self.failed(label, sign, rng, "no finite operand range for ap product", children, e.op)
            pre = ap_mul_bound(ma + a, a, mb + b, b)
            rules.append("Thm7")
        else:
            ma = left.range.magnitude
            low = right.range.min_magnitude
            if ma is None:
                return self.failed(label, sign, rng, "no finite dividend range for ap quotient", children, e.op)
            if low <= 0:
                return self.failed(label, sign, rng, "divisor range does not exclude zero", children, e.op)
            t = low - b
            if t <= b:
                return self.failed(label, sign, rng, f"divisor bound violates |b'| > beta ({t} <= {b})", children, e.op)
            try:
                pre = ap_div_bound(ma + a, a, t, b)
            except DomainError as exc:
                return self.failed(label, sign, rng, str(exc), children, e.op)
            rules.append("Thm8")
        total = self.round_ap(pre, rng)
        if total is None:
            return self.failed(label, sign, rng, "no finite range for the ap rounding step", children, e.op)
        rules += [BRIDGE, "APVI"]
        return NodeResult(label, sign, rng, Kind.AP, total, rules, children, op=e.op)


def analyze(
    e: Expr,
    env: SignEnv,
    f: Format,
    mode: RoundingMode,
    work_bits: int = DEFAULT_WORK_BITS,
) -> AnalysisResult:
    """Derive an error bound for the emulated evaluation of ``e``.

    Leaves are exact (bound 0) unless the variable carries an ``input_alpha``
    or the constant is not representable, in which case it is rounded.
    """
    a = _Analyzer(env, f, mode, work_bits)
    _infer(e, env, a.info)
    root = a.run(e)
    result = AnalysisResult(root, f, mode)
    if root.kind is Kind.RP:
        result.relerr_bound = rp_to_relerr_bound(root.bound, _relerr_bits(root.bound, work_bits))
    return result


def _relerr_bits(alpha: Fraction, work_bits: int) -> int:
    # enough bits to resolve e**alpha - 1 against its quadratic term
    if alpha <= 0:
        return work_bits
    return max(work_bits, 3 * max(0, -floor_log2(alpha)) + 64)


def analyze_inner_product(n: int, f: Format, mode: RoundingMode) -> AnalysisResult:
    """Symbolic replay of the inductive inner-product argument.

    The base case is one rounding of a product; each further step combines
    the previous partial sum with a rounded product (Cor1 plus one rounding)
    and then absorbs the rounding of the sum (triangle inequality).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    step = rp_model_bound(f, mode)
    pos = Range.for_sign(Sign.POS)

    def product(k: int) -> NodeResult:
        return NodeResult(f"x{k}*y{k}", Sign.POS, pos, Kind.RP, step, ["Thm4"], op="*")

    node = NodeResult("s1", Sign.POS, pos, Kind.RP, step, ["Thm4"], op="*")
    for k in range(2, n + 1):
        prod = product(k)
        # s_k ~ s^_k ; rp(max((k-1)u', u')) then s^_k ~ s'_k ; rp(u')
        bound = max(node.bound, prod.bound) + step
        node = NodeResult(f"s{k}", Sign.POS, pos, Kind.RP, bound, ["Cor1", "Thm4", "RPVI"], [node, prod], op="+")
    result = AnalysisResult(node, f, mode)
    result.relerr_bound = rp_to_relerr_bound(node.bound, _relerr_bits(node.bound, DEFAULT_WORK_BITS))
    return result


def analyze_inner_product_expr(n: int, f: Format, mode: RoundingMode) -> AnalysisResult:
    """Run the generic analyzer on ``x1*y1 + ... + xn*yn`` with positive inputs."""
    e = inner_product_expr(n)
    env = {f"{v}{k}": VarInfo(Sign.POS) for k in range(1, n + 1) for v in "xy"}
    return analyze(e, env, f, mode)


def compare_bounds(result: AnalysisResult, n: int, u) -> dict:
    """Relate an rp bound for an n-term inner product to relative error bounds.

    Reports the relative error implied by the rp bound (``e**B - 1``, from an
    enclosure), its closed form ``nu/(1-(n+1)u)``, the classical
    ``nu/(1-nu)``, and their ratio.
    """
    u = as_rational(u)
    if result.kind is not Kind.RP:
        raise ValueError("compare_bounds needs a relative precision root bound")
    higham = higham_relerr_bound(n, u)
    converted = converted_relerr_bound(n, u)
    from_rp = rp_to_relerr_bound(result.bound, _relerr_bits(result.bound, DEFAULT_WORK_BITS))
    if converted < higham:
        raise AssertionError(f"converted bound {converted} is below the classical bound {higham}")
    return {
        "n": n,
        "u": u,
        "rp_bound": result.bound,
        "relerr_from_rp": from_rp,
        "converted": converted,
        "higham": higham,
        "ratio": converted / higham,
        "converted_ge_higham": converted >= higham,
        "relerr_from_rp_le_converted": from_rp <= converted,
    }


def comparison_json(cmp: dict) -> dict:
    return {k: (rat_to_str(v) if isinstance(v, Fraction) else v) for k, v in cmp.items()}


# ---------------------------------------------------------------------------
# Derivation checking
# ---------------------------------------------------------------------------


def check_derivation(result: AnalysisResult) -> list[str]:
    """Re-derive every node's bound from its children and cited rules.

    Returns a list of problems; empty means the derivation is well formed.
    """
    problems: list[str] = []
    step = rp_model_bound(result.format, result.mode)

    def visit(n: NodeResult) -> None:
        for c in n.children:
            visit(c)
        if n.kind is Kind.FAILED:
            if not n.reason:
                problems.append(f"{n.label}: failed without a reason")
            return
        if n.bound is None or n.bound < 0:
            problems.append(f"{n.label}: missing or negative bound")
            return
        kids = n.children
        rules = n.rules
        if "Cor1" in rules:
            if len(kids) != 2 or any(k.kind is not Kind.RP for k in kids):
                problems.append(f"{n.label}: Cor1 needs two rp premises")
                return
            rs = kids[1].sign.flip() if "RPIII(k=-1)" in rules else kids[1].sign
            if not (kids[0].sign.certain and kids[0].sign is rs):
                problems.append(f"{n.label}: Cor1 premises not certified same-sign")
            if n.bound != max(kids[0].bound, kids[1].bound) + step:
                problems.append(f"{n.label}: bound does not follow from Cor1+Thm4")
        elif "RPV" in rules:
            if any(k.kind is not Kind.RP for k in kids):
                problems.append(f"{n.label}: RPV needs rp premises")
            elif n.bound != kids[0].bound + kids[1].bound + step:
                problems.append(f"{n.label}: bound does not follow from RPV+Thm4")
        elif rules and rules[0].startswith(("RPIII", "APIV")) and len(kids) == 1:
            if n.bound != kids[0].bound or n.kind is not kids[0].kind:
                problems.append(f"{n.label}: negation changed the bound")
        elif "Thm4" in rules and not kids:
            if n.bound != step:
                problems.append(f"{n.label}: Thm4 leaf bound is not u/(1-u)")
        elif n.kind is Kind.AP and kids:
            if BRIDGE not in rules:
                problems.append(f"{n.label}: ap node without a rounding step")
        elif not kids and not rules:
            problems.append(f"{n.label}: leaf without justification")

    visit(result.root)
    return problems


def describe(result: AnalysisResult) -> str:
    """Human-readable summary."""
    lines = [f"kind: {result.kind.value}"]
    if result.bound is not None:
        lines.append(f"bound: {rat_to_str(result.bound)} (approx {approx_str(result.bound)})")
    if result.relerr_bound is not None:
        lines.append(
            f"relative error bound: {rat_to_str(result.relerr_bound)} (approx {approx_str(result.relerr_bound)})"
        )
    lines.append("derivation:")

    def show(n: NodeResult, depth: int) -> None:
        b = "-" if n.bound is None else rat_to_str(n.bound)
        extra = f"  [{n.reason}]" if n.reason else ""
        lines.append(f"{'  ' * depth}{n.label}: {n.kind.value} {b} via {', '.join(n.rules) or '-'}{extra}")
        for c in n.children:
            show(c, depth + 1)

    show(result.root, 1)
    return "\n".join(lines)
