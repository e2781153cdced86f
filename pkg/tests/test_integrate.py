import mpmath
import pytest

from oscint import integrate as itg
from oscint import multiseries as ms
from oscint.errors import PreconditionError
from oscint.expr import add, differentiate, mul, neg, normalize, parse, sin_, to_string
from oscint.trig import to_normal_form

P = parse


def same(a, b):
    return to_normal_form(add(a, neg(b))).is_zero()


def test_classify():
    assert str(itg.classify(P("x^3*(1+exp(-x^3))"), P("x^2/2"))) == "DiffH"
    assert str(itg.classify(P("exp(-x)"), P("log(x)"))) == "IntH"
    c = itg.classify(P("exp(x)"), P("x"))
    assert c.kind == "KCase" and str(c.K) == "1" and str(c.omega) == "0"
    assert str(itg.classify(P("2*x"), P("x^2"))) == "ClosedForm(K=1)"
    with pytest.raises(PreconditionError):
        itg.classify(P("1"), P("1/x"))


def test_h_step_recurrence():
    g = P("x")
    h1 = itg.h_step(P("x^3*(1+exp(-x^3))"), g)
    h2 = itg.h_step(h1, g)
    h3 = itg.h_step(h2, g)
    assert same(h1, P("2*x*(1+exp(-x^3)) - 3*x^4*exp(-x^3)"))
    assert same(h2, P("exp(-x^3)*(9*x^5 - 15*x^2)"))
    assert same(h3, P("exp(-x^3)*(-27*x^6 + 81*x^3 - 15)"))
    assert str(ms.cmp_gamma0(h2, h3)) == "Less"


def test_H_step():
    Q, _ = itg.H_step(P("-exp(-x)"), P("1/x"))
    assert to_string(Q.terms[0]) == "exp(-x)/x"
    Q, _ = itg.H_step(P("log(x)"), P("1/x"))
    assert Q.closed == normalize(P("log(x)^2/2"))
    Q, _ = itg.H_step(P("x"), P("1/x"))
    assert Q.closed == normalize(P("x"))


def test_leading_T():
    assert to_string(itg.leading_T(P("1"), P("x^2")).expr) == "1/x"
    assert to_string(itg.leading_T(P("exp(-x)"), P("log(x)")).expr) == "exp(-x)"
    assert to_string(itg.leading_T(P("1"), P("x")).expr) == "1"


def test_fresnel_terms():
    E = itg.expand_osc_integral(P("1"), P("x^2"))
    want = ["-cos(x^2)/(2*x)", "-sin(x^2)/(4*x^3)", "3*cos(x^2)/(8*x^5)"]
    ts = E.terms(3)
    for t, w in zip(ts, want):
        assert same(t.expr, P(w))
    # the partial sum differentiates to sin(x^2) up to a term of order x^-6
    r = normalize(add(differentiate(E.partial_expr(3)), neg(sin_(P("x^2")))))
    assert to_string(to_normal_form(r).expr) == "-15*cos(x^2)/(8*x^6)"


def test_exact_kcase():
    E = itg.expand_osc_integral(P("exp(x)"), P("x"))
    ts = E.terms(3)
    assert len(ts) == 1 and E.exact
    assert same(ts[0].expr, P("exp(x)*(sin(x) - cos(x))/2"))
    assert E.history == [{"step": 0, "case": "KCase(K=1, omega=0)", "switched": False}]


def test_int_h_expansion():
    E = itg.expand_osc_integral(P("exp(-x)"), P("log(x)"))
    t1, t2 = E.terms(2)
    assert same(t1.expr, P("-exp(-x)*sin(log(x))"))
    assert to_string(t2.gamma0.expr) == "exp(-x)/x"
    assert all(h["case"] == "IntH" for h in E.history)
    js = t2.to_json()[0]
    assert js["trig"] == {"fn": "cos", "arg": "log(x)"} and "error" in js
    assert js["constants"] == [E.tag]


def test_sense_switch_history():
    E = itg.expand_osc_integral(P("x^3*(1+exp(-x^3))"), P("x^2/2"))
    E.terms(4)
    cases = [h["case"] for h in E.history[:3]]
    assert cases == ["DiffH", "ClosedForm(K=2)", "IntH"]
    assert E.history[2]["switched"]


def test_peel_closed_form():
    E = itg.expand_osc_integral(P("2*x"), P("x^2"))
    t = E.terms(2)
    assert len(t) == 1 and E.exact and same(t[0].expr, P("-cos(x^2)"))


def test_cos_variant():
    E = itg.expand_osc_integral(P("1"), P("x^2"), "cos")
    assert same(E.terms(1)[0].expr, P("sin(x^2)/(2*x)"))


def test_budget_exhaustion_is_reported():
    old = itg.config.max_kcase
    try:
        itg.config.max_kcase = 1
        E = itg.expand_osc_integral(P("exp(x)*x"), P("x"))
        E.terms(5)
        assert E.exhausted == "K-case budget"
        assert E.to_json(5)["truncated"]
    finally:
        itg.config.max_kcase = old
