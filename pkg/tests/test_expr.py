from fractions import Fraction

import mpmath
import pytest

from oscint.expr import (
    Cos, Exp, Log, OscInt, ParseError, Pow, Prod, Sin, Sum, Var, differentiate, eval_numeric,
    normalize, parse, to_latex, to_string,
)


def test_parse_shapes():
    e = parse("sin(x^2)")
    assert isinstance(e, Sin) and isinstance(e.arg, Pow) and e.arg.exp == 2
    e = parse("x*log(x)+x^(1/2)")
    assert isinstance(e, Sum)
    kinds = sorted(type(a).__name__ for a in e.args)
    assert kinds == ["Pow", "Prod"]
    e = parse("Int(exp(-x), sin, log(x))")
    assert isinstance(e, OscInt)
    assert e.kind == "sin" and isinstance(e.integrand, Exp) and isinstance(e.phase, Log)
    assert e.tag


def test_distinct_integrals_get_distinct_tags():
    a = parse("Int(1, sin, x^2)")
    b = parse("Int(1, cos, x^2)")
    assert a.tag != b.tag


def test_unary_minus_and_precedence():
    assert normalize(parse("-x^2")) == normalize(parse("-(x^2)"))
    assert normalize(parse("2^-1*x")) == normalize(parse("x/2"))


@pytest.mark.parametrize("text", ["sin(x", "x +", "Int(1, tan, x)", "x^pi", "foo(x)", ""])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_derivatives():
    assert differentiate(parse("sin(x^2)")) == normalize(parse("2*x*cos(x^2)"))
    assert differentiate(parse("Int(exp(-x), sin, log(x))")) == normalize(parse("exp(-x)*sin(log(x))"))
    assert differentiate(parse("log(log(x))")) == normalize(parse("1/(x*log(x))"))


def test_normalize_rules():
    assert normalize(parse("exp(log(x))")) == Var()
    assert normalize(parse("2*x+3*x")) == normalize(parse("5*x"))
    assert normalize(parse("(x^(1/2))^2")) == Var()
    e = parse("x*(x+1)*exp(x)*exp(-x)")
    assert normalize(normalize(e)) == normalize(e)


def test_eval_numeric_enclosures():
    iv = eval_numeric(parse("1/x"), 10, 64)
    assert iv.contains(mpmath.mpf("0.1")) or abs(iv.mid - mpmath.mpf("0.1")) < mpmath.mpf(2) ** -50
    assert iv.width < mpmath.mpf(2) ** -50
    # mpmath at 40 digits, frozen
    ref = mpmath.mpf("-0.9942575694137896873616193719091560211288")
    a = eval_numeric(parse("sin(log(x))"), 100, 128)
    b = eval_numeric(parse("sin(log(x))"), 100, 256)
    with mpmath.workdps(50):
        assert a.lo - mpmath.mpf(10) ** -30 <= ref <= a.hi + mpmath.mpf(10) ** -30
    assert b.inside(a)


def test_round_trip_printing():
    for s in ["x^(1/2) + x*log(x)", "exp(-x^3)*x^2", "sin(x + log(x))/log(x)", "-cos(x^2)/(2*x)"]:
        e = normalize(parse(s))
        assert normalize(parse(to_string(e))) == e


def test_latex():
    assert "\\sin" in to_latex(parse("sin(x^2)"))
    assert "\\frac" in to_latex(parse("1/(2*x)"))
