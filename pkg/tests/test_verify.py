import mpmath

from oscint.expr import parse
from oscint.verify import check_expansion, measured_limit_estimate, oracle_diff, quad_osc

P = parse

# int_0^10 sin(t^2) dt from mpmath's Fresnel S at 40 digits
FRESNEL_10 = "0.5836708999296233421575724092855749812634"


def test_quadrature_cross_oracle():
    r = quad_osc(P("1"), P("x^2"), 0, 10, precision=128)
    with mpmath.workdps(45):
        ref = mpmath.mpf(FRESNEL_10)
        assert abs(r.value.mid - ref) < mpmath.mpf(10) ** -20
        assert r.value.lo - mpmath.mpf(10) ** -20 <= ref <= r.value.hi + mpmath.mpf(10) ** -20


def test_enclosure_closed_forms():
    # int_1^5 sin x = cos 1 - cos 5
    with mpmath.workdps(40):
        v = oracle_diff(P("1"), P("x"), 1, 5).mid
        assert abs(v - (mpmath.cos(1) - mpmath.cos(5))) < mpmath.mpf(10) ** -25
        # int e^x sin x = e^x (sin x - cos x) / 2
        F = lambda x: mpmath.exp(x) * (mpmath.sin(x) - mpmath.cos(x)) / 2
        v = oracle_diff(P("exp(x)"), P("x"), 2, 6).mid
        assert abs(v - (F(6) - F(2))) < mpmath.mpf(10) ** -22


def test_check_expansion_fresnel():
    rep = check_expansion(P("1"), P("x^2"), 3, [10, 20, 40])
    assert rep["pass"]
    assert all(r["ratio"] <= 1.5 for r in rep["rows"])
    assert set(rep["rows"][0]) == {"x", "n", "remainder", "bound", "ratio", "pass"}


def test_check_expansion_exact_case():
    rep = check_expansion(P("exp(x)"), P("x"), 2, [5, 10])
    assert rep["pass"] and rep["exact"]
    assert all(r["remainder"] < 1e-25 for r in rep["rows"])


def test_check_expansion_int_h():
    rep = check_expansion(P("exp(-x)"), P("log(x)"), 2, [5, 10], factor=2)
    assert rep["pass"]


def test_measured_limit():
    s = measured_limit_estimate(P("3"), P("1/x"), 3, 0.01, 100)
    assert s.estimate == 0.0
    est = [measured_limit_estimate(P("1/(x*cos(x))"), P("1/x"), 0, 0.01, X).estimate for X in (1e2, 1e3, 1e4)]
    assert est[0] > est[1] > est[2]
