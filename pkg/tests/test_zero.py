from fractions import Fraction

from oscint import zero
from oscint.expr import parse


def test_const_sign():
    assert str(zero.const_sign(parse("exp(log(2)) - 2"))) == "Zero"
    assert str(zero.const_sign(parse("pi - 3"))) == "Positive"
    assert str(zero.const_sign(parse("pi - 355/113"))) == "Negative"
    assert zero.const_is_zero(parse("log(exp(3)) - 3"))


def test_func_sign_at_infinity():
    assert str(zero.func_sign_at_infinity(parse("x - log(x)^100"))) == "Positive"
    assert str(zero.func_sign_at_infinity(parse("exp(x)*exp(-x) - 1"))) == "Zero"
    assert str(zero.func_sign_at_infinity(parse("(x+1)^(1/1) - x - 1"))) == "Zero"
    assert str(zero.func_sign_at_infinity(parse("1/x - exp(-x)"))) == "Positive"


def test_unknown_when_budget_too_small():
    old = zero.config.max_bits
    try:
        zero.config.max_bits = 64
        v = zero.const_sign(parse("pi - 3141592653589793238462643383/1000000000000000000000000000"))
        assert v.kind == "unknown"
    finally:
        zero.config.max_bits = old


def test_deterministic():
    e = parse("exp(1) - 2718281/1000000")
    assert zero.const_sign(e) == zero.const_sign(e)


def test_numeric_soundness():
    for s in ["x - log(x)^3", "1/x - 1/x^2", "-exp(-x)", "x^(1/2) - 3"]:
        e = parse(s)
        v = zero.func_sign_at_infinity(e)
        assert zero.sign_consistent_numerically(e, v)
