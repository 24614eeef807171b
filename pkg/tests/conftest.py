from fractions import Fraction

import mpmath

mpmath.mp.prec = 512


def mpf(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def brute_representables(p: int, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """Every positive m * 2**e with m < 2**p lying in [lo, hi], by enumeration."""
    assert 0 < lo <= hi
    out = set()
    e = -1
    while Fraction(2) ** e > lo / 2**p:
        e -= 1
    while Fraction(2) ** e <= hi:
        for m in range(1, 2**p):
            v = m * Fraction(2) ** e
            if lo <= v <= hi:
                out.add(v)
        e += 1
    return sorted(out)



def random_expr(rng, names, ops, leaves):
    """A random binary expression tree with ``leaves`` variable occurrences."""
    from relprec.expr import BinOp, Var

    if leaves == 1:
        return Var(rng.choice(names))
    k = rng.randint(1, leaves - 1)
    return BinOp(rng.choice(ops), random_expr(rng, names, ops, k), random_expr(rng, names, ops, leaves - k))
