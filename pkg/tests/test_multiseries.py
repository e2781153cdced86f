from fractions import Fraction

import pytest

from oscint import multiseries as ms
from oscint.errors import PreconditionError
from oscint.expr import Const, add, differentiate, mul, neg, normalize, parse, to_string
from oscint.multiseries import ExpElem, IterLog, Monomial, Scale

XINV, LINV = IterLog(0), IterLog(1)


def terms(s, n):
    return [(to_string(c), to_string(m.expr)) for c, m in ms.flat_terms(ms.expand(parse(s)), n)][:n]


def test_ensure_scale():
    S = ms.ensure_scale(parse("exp(x^2)"), Scale([XINV]))
    assert str(S) == "{1/x, exp(-x^2)}"
    S = ms.ensure_scale(parse("log(log(x))"), Scale([XINV]))
    assert str(S) == "{1/log(log(x)), 1/log(x), 1/x}"
    assert ms.ensure_scale(parse("x+1"), Scale([XINV])) == Scale([XINV])


def test_scale_levels_slowest_first():
    S = Scale([XINV, ExpElem(Monomial({XINV: -1}))])
    assert S.elem(1) == XINV
    assert Scale([LINV]).elem(1) == LINV
    assert S.elem(len(S)) == ExpElem(Monomial({XINV: -1}))


def test_expansions():
    assert terms("1/(x-1)", 3) == [("1", "1/x"), ("1", "1/x^2"), ("1", "1/x^3")]
    assert terms("x^3*(1+exp(-x^3))", 2) == [("1", "x^3"), ("1", "exp(-x^3)*x^3")]
    assert terms("exp(1/x)", 4) == [("1", "1"), ("1", "1/x"), ("1/2", "1/x^2"), ("1/6", "1/x^3")]


def test_leading_terms():
    lead = lambda s: tuple(to_string(v) if not isinstance(v, Monomial) else to_string(v.expr)
                           for v in ms.leading_term(parse(s))[0])
    assert lead("x^3*(1+exp(-x^3))") == ("1", "x^3")
    assert lead("5/(x*log(x)^2)") == ("5", "1/(log(x)^2*x)")
    assert lead("exp(-x)+1/x") == ("1", "1/x")
    with pytest.raises(PreconditionError):
        ms.monomial_of(parse("x - x"))


def test_comparisons():
    assert str(ms.cmp_gamma(parse("log(x)"), parse("x"))) == "Less"
    f = parse("1/(x*log(x))")
    g = parse("1/(x*log(x)^2*log(log(x)))")
    assert str(ms.cmp_gamma0(f, g)) == "Greater"
    assert ms.is_bowtie(f, g)
    assert str(ms.cmp_gamma0(parse("2*x+1"), parse("x"))) == "Equal(2)"
    assert not ms.is_bowtie(parse("x"), parse("exp(x)"))


def test_limits():
    assert ms.limit(parse("x^2*exp(-x)")) == Const(0)
    assert to_string(ms.limit(parse("(1+1/x)*pi"))) == "pi"
    assert ms.limit(parse("x - log(x)")) is ms.INF
    assert ms.limit(parse("log(x) - x")) is ms.NEG_INF
    assert ms.limit(parse("x*(exp(1/x) - 1)")) == Const(1)


def test_shadow_and_ghost():
    f = parse("1 + 1/x + 1/x^2")
    assert ms.to_expr(ms.shadow(f, XINV)) == Const(1)
    assert ms.to_expr(ms.ghost(f, XINV)) == normalize(parse("1/x + 1/x^2"))
    assert ms.to_expr(ms.shadow(parse("log(x) + 1 + 1/x"), XINV)) == normalize(parse("log(x) + 1"))
    assert ms.classify_ri(parse("exp(-x)"), XINV) == "InI"
    assert ms.classify_ri(parse("log(x)"), XINV) == "InRNotI"
    assert ms.classify_ri(parse("x"), XINV) == "OutsideR"


def test_integrate_base():
    P, S = ms.integrate_base(parse("1/x"))
    assert P.closed == normalize(parse("log(x)")) and LINV in S
    P, _ = ms.integrate_base(parse("1/x^2"))
    assert P.closed == normalize(parse("-1/x")) and P.convergent
    P, _ = ms.integrate_base(parse("exp(x^2)"))
    assert not P.is_closed
    assert [to_string(t) for t in P.terms[:2]] == ["exp(x^2)/(2*x)", "exp(x^2)/(4*x^3)"]
    # the kept terms differentiate back to h up to something below the last term
    r = normalize(add(differentiate(add(*P.terms[:3])), neg(parse("exp(x^2)"))))
    assert ms.mono_cmp(ms.monomial_of(r), ms.monomial_of(parse("exp(x^2)/x^6"))) <= 0


def test_json_shape():
    js = ms.to_json(ms.expand(parse("1/(x-1)"), Scale([XINV]), budget=3))
    assert set(js) == {"level", "element", "terms", "truncated"}
    assert js["truncated"] is True and len(js["terms"]) == 3
