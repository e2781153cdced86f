"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line; under pytest the lines are
repeated in the terminal summary.  Run directly with
`python tests/test_acceptance.py` to get the lines alone.
"""
import os
import random
import subprocess
import sys
import time

import mpmath

from oscint import integrate as itg
from oscint import multiseries as ms
from oscint import trig as tg
from oscint.errors import HypothesisViolation
from oscint.expr import add, differentiate, mul, neg, normalize, parse, power, sin_, to_string
from oscint.multiseries import IterLog
from oscint.verify import check_expansion, measured_limit_estimate, oracle_tail

P = parse
HERE = os.path.dirname(os.path.abspath(__file__))

try:
    from conftest import ACCEPTANCE
except ImportError:          # run as a script
    ACCEPTANCE = []


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def zero_trig(e):
    return tg.to_normal_form(e).is_zero()


def test_criterion_1_recurrence():
    t0 = time.time()
    h, g = P("x^3*(1+exp(-x^3))"), P("x")
    h1 = itg.h_step(h, g)
    h2 = itg.h_step(h1, g)
    h3 = itg.h_step(h2, g)
    want = ["2*x*(1+exp(-x^3)) - 3*x^4*exp(-x^3)", "exp(-x^3)*(9*x^5 - 15*x^2)",
            "exp(-x^3)*(-27*x^6 + 81*x^3 - 15)"]
    exact = all(ms._is_zero_fn(add(a, neg(P(w)))) for a, w in zip((h1, h2, h3), want))
    anomaly = ms.cmp_gamma0(h2, h3).kind == "Less"
    # the expansion notices it too: the Diff-h run ends and the sense switches to Int-h
    E = itg.expand_osc_integral(h, P("x^2/2"))
    E.terms(3)
    switched = any(r["switched"] for r in E.history)
    dt = time.time() - t0
    report(1, exact and anomaly and switched and dt < 5,
           f"h<1..3> exact={exact}, h<2> < h<3>={anomaly}, switch={switched}, {dt:.2f}s < 5s")


def test_criterion_2_fresnel():
    t0 = time.time()
    E = itg.expand_osc_integral(P("1"), P("x^2"))
    ts = E.terms(3)
    want = ["-cos(x^2)/(2*x)", "-sin(x^2)/(4*x^3)", "3*cos(x^2)/(8*x^5)"]
    terms_ok = len(ts) == 3 and all(zero_trig(add(t.expr, neg(P(w)))) for t, w in zip(ts, want))
    rep = check_expansion(P("1"), P("x^2"), 3, [10, 20, 40], factor=1.5, expansion=E)
    worst = max(r["ratio"] for r in rep["rows"])
    dt = time.time() - t0
    report(2, terms_ok and rep["pass"] and worst <= 1.5 and dt < 30,
           f"terms={terms_ok}, max ratio {worst:.3f} <= 1.5, {dt:.1f}s < 30s")


def test_criterion_3_kcase():
    E = itg.expand_osc_integral(P("exp(x)"), P("x"))
    ts = E.terms(5)
    resid = add(differentiate(E.partial_expr(len(ts))), neg(mul(P("exp(x)"), sin_(P("x")))))
    case = E.history[0]["case"] if E.history else None
    ok = E.exact and zero_trig(resid) and case == "KCase(K=1, omega=0)" and len(E.history) == 1
    report(3, ok, f"exact={E.exact}, residual zero={zero_trig(resid)}, path={case}")


def test_criterion_4_int_h():
    h, G = P("exp(-x)"), P("log(x)")
    E = itg.expand_osc_integral(h, G)
    E.terms(2)
    rep = check_expansion(h, G, 2, [5, 10], factor=2, expansion=E)
    worst = max(r["ratio"] for r in rep["rows"])
    cls = str(itg.classify(h, G))
    steps = [r["case"] for r in E.history]
    ok = rep["pass"] and worst <= 2 and cls == "IntH" and all(c == "IntH" for c in steps)
    report(4, ok, f"max ratio {worst:.3f} <= 2, classify={cls}, steps={steps}")


_COEFS = ["1", "x", "x^2", "log(x)", "1/x", "exp(-x)", "x*log(x)", "exp(x)", "x^(1/2)", "exp(x)*x"]
_SIGMAS = ["sin(x)", "cos(x)", "sin(x)^2", "sin(x)*cos(x)", "sin(x^2)", "cos(x^2)", "1"]


def _hg(rng):
    n = rng.randint(1, 2)
    return " + ".join(f"{rng.choice(['1', '2', '-1', '3/2'])}*{rng.choice(_COEFS)}*{s}"
                      for s in rng.sample(_SIGMAS, n))


def test_criterion_5_quotient_formula():
    rng = random.Random(20)
    checked = mismatched = rejected = 0
    while checked < 100 and checked + rejected < 2000:
        Pe, Qe = P(_hg(rng)), P(_hg(rng))
        try:
            f = tg.quotient_derivative_gamma0(Pe, Qe)
        except HypothesisViolation:
            rejected += 1
            continue
        checked += 1
        if f != tg.quotient_derivative_gamma0_direct(Pe, Qe):
            mismatched += 1
    counter = []
    for a, b in (("x^2*exp(x)+1", "x*exp(x)+1"), ("x^2*sin(x)+x", "x^2*sin(x)+1")):
        try:
            tg.quotient_derivative_gamma0(P(a), P(b))
            counter.append(False)
        except HypothesisViolation:
            counter.append(True)
    ok = checked == 100 and mismatched == 0 and all(counter)
    report(5, ok, f"{checked} pairs checked, {mismatched} mismatches ({rejected} generated pairs "
                  f"violated the hypotheses), counterexamples rejected={counter}")


INDEF = ("Int(1/(x*log(x)+sqrt(x)), sin, log(x)) + cos(log(x))/log(x)"
         " + Int(1/(x*log(x)^2), cos, log(x))")
# |F| x^(1/2) log^2 x at e^4, e^6, e^8 from the quadrature oracle, frozen
INDEF_ORACLE = {4: 0.6879048527, 6: 0.4442454862, 8: 0.3673262714}
INDEF_BAND = (0.1, 10.0)


def test_criterion_6_indefinite_cancellation():
    z = itg.detect_zero_shadow(INDEF, cancel_budget=10)
    zs_ok = z.kind == "ZeroShadow" and z.level == IterLog(0) and z.cancellations <= 10
    ge = itg.expand_general(INDEF, 1, cancel_budget=10)
    ghost_ok = ge.zero_shadow is not None and len(ge.terms) >= 1 and ge.ghost is not None
    lead = to_string(ge.terms[0].mono.expr) if ge.terms else None
    # F up to a constant: the three summands combine to one integral of p sin(log x)
    p = P("1/(x*log(x)+sqrt(x)) - 1/(x*log(x))")
    vals = {}
    with mpmath.workdps(30):
        for k in (4, 6, 8):
            x = mpmath.e ** k
            F = oracle_tail(p, P("log(x)"), x).mid
            vals[k] = float(abs(F) * mpmath.sqrt(x) * k ** 2)
    band_ok = all(INDEF_BAND[0] <= v <= INDEF_BAND[1] for v in vals.values())
    frozen_ok = all(abs(vals[k] - INDEF_ORACLE[k]) < 1e-8 for k in vals)
    ok = zs_ok and ghost_ok and band_ok and frozen_ok
    report(6, ok, f"{z} after {z.cancellations} cancellations, ghost leads with {lead}, "
                  f"|F|x^(1/2)log^2x = {', '.join(f'{v:.4f}' for v in vals.values())} in {INDEF_BAND}")


def test_criterion_7_measured_limit():
    ladder = (1e2, 1e3, 1e4)
    a = [measured_limit_estimate(P("1/(x*cos(x))"), P("1/x"), 0, 0.01, X).estimate for X in ladder]
    b = [measured_limit_estimate(P("1/(log(log(x))*cos(log(log(x))))"), P("1/x"), 0, 0.01, X).estimate
         for X in ladder]
    ok = a[0] > a[1] > a[2] and a[2] < 0.05 and min(b) > 0.1
    report(7, ok, f"sec: {', '.join(f'{v:.4f}' for v in a)}; log2 composition min {min(b):.4f} > 0.1")


def test_criterion_8_invariant_suites():
    t0 = time.time()
    r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                        os.path.join(HERE, "test_invariants.py")],
                       capture_output=True, text=True, cwd=os.path.dirname(HERE))
    dt = time.time() - t0
    summary = r.stdout.strip().splitlines()[-1] if r.stdout.strip() else r.stderr[-200:]
    report(8, r.returncode == 0 and dt < 300, f"{summary}; {dt:.0f}s < 300s")


def test_criterion_9_ode():
    # "2-term output": the first two terms of y (terms of the two integrals cancel in y)
    s = itg.solve_ode(1, -1)
    t1 = s.terms(2)
    zero_res = s.residual(y=add(*t1)).is_zero()
    lead_ok = bool(t1) and t1[0] == normalize(P("1"))
    s2 = itg.solve_ode(1, "-1/x")
    t2 = s2.terms(2)
    R = s2.residual(y=add(*t2))
    g0 = tg.gamma0_hg(R) if not R.is_zero() else None
    small = g0 is None or ms.mono_cmp(g0, ms.monomial_of(P("x^-3"))) < 0
    ok = lead_ok and zero_res and small and len(t2) == 2
    report(9, ok, f"g=1,f=-1: y={' + '.join(map(to_string, t1))}, residual zero={zero_res}; "
                  f"g=1,f=-1/x: y={' + '.join(map(to_string, t2))}, residual gamma0 "
                  f"{to_string(g0.expr) if g0 else 0} < x^-3")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
