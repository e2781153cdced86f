"""Numerical ground truth for oscillatory integrals and measured limits.

Integrals of h*sin(G) are summed over half periods between consecutive
zeros of sin(G), located by inverting the monotone phase.  Infinite tails
are alternating series of half-period contributions and are accelerated
with Wynn's epsilon algorithm.  Only differences of antiderivatives are
ever compared, so the arbitrary constant of an integral never enters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .expr import (
    Const, Cos, Exp, Log, NamedConst, NumericInterval, Pow, Prod, Sin, Sum, Var, normalize, parse,
)

__all__ = [
    "QuadReport", "MeasuredLimitSample", "compile_expr", "quad_osc", "oracle_diff",
    "oracle_tail", "check_expansion", "measured_limit_estimate",
]


# ---------------------------------------------------------------- compiled evaluation

def compile_expr(e, lib="mp"):
    """A callable evaluating e at x, using mpmath ("mp") or numpy arrays ("np")."""
    if isinstance(e, str):
        e = parse(e)
    m = mpmath if lib == "mp" else np

    def c(e):
        if isinstance(e, Const):
            q = e.value
            v = mpmath.mpf(q.numerator) / q.denominator if lib == "mp" else q.numerator / q.denominator
            return lambda x: v
        if isinstance(e, NamedConst):
            if lib == "mp":
                return (lambda x: +mpmath.pi) if e.name == "pi" else (lambda x: +mpmath.e)
            v = math.pi if e.name == "pi" else math.e
            return lambda x: v
        if isinstance(e, Var):
            return lambda x: x
        if isinstance(e, Sum):
            fs = [c(a) for a in e.args]
            return lambda x: sum(f(x) for f in fs)
        if isinstance(e, Prod):
            fs = [c(a) for a in e.args]

            def prod(x):
                v = fs[0](x)
                for f in fs[1:]:
                    v = v * f(x)
                return v
            return prod
        if isinstance(e, Pow):
            fb, q = c(e.base), e.exp
            if q.denominator == 1:
                k = int(q)
                return lambda x: fb(x) ** k
            r = mpmath.mpf(q.numerator) / q.denominator if lib == "mp" else q.numerator / q.denominator
            return lambda x: fb(x) ** r
        for cls, name in ((Exp, "exp"), (Log, "log"), (Sin, "sin"), (Cos, "cos")):
            if isinstance(e, cls):
                fa, fn = c(e.arg), getattr(m, name)
                return lambda x: fn(fa(x))
        raise ValueError(f"cannot compile {e}")
    return c(normalize(e))


def _mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def _dps(precision):
    return max(15, int(precision * 0.30103) + 5)


# ---------------------------------------------------------------- quadrature

@dataclass
class QuadReport:
    value: NumericInterval
    subdivisions: int
    method: str

    @property
    def mid(self):
        return self.value.mid


def _interval(v, err, precision):
    err = abs(err) * 10 + abs(v) * mpmath.mpf(2) ** (-precision + 8) + mpmath.mpf(2) ** (-precision + 8)
    return NumericInterval(v - err, v + err, precision)


class _Phase:
    """Zeros of sin(G) (or cos(G)) for increasing G."""

    def __init__(self, G, fn):
        self.G = compile_expr(G)
        self.offset = mpmath.mpf(0) if fn == "sin" else mpmath.mpf(1) / 2

    def index_after(self, s):
        return int(mpmath.floor(self.G(s) / mpmath.pi - self.offset)) + 1

    def zero(self, k, lo):
        """The point beyond lo where G = (k + offset) pi."""
        target = (k + self.offset) * mpmath.pi
        f = lambda s: self.G(s) - target
        step = max(abs(lo), mpmath.mpf(1)) * mpmath.mpf("0.01") + mpmath.mpf("1e-6")
        hi = lo + step
        while f(hi) < 0:
            lo, step = hi, step * 2
            hi = lo + step
        for _ in range(400):
            mid = (lo + hi) / 2
            if hi - lo <= abs(mid) * mpmath.eps * 16:
                break
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        try:
            return mpmath.findroot(f, (lo, hi), solver="anderson")
        except (ValueError, ZeroDivisionError):
            return (lo + hi) / 2


def _quad_piece(f, a, b):
    pts = [a]
    while pts[-1] > 0 and b / pts[-1] > 2:
        pts.append(pts[-1] * 2)
    pts.append(b)
    return mpmath.quad(f, pts, method="gauss-legendre", error=True)


def quad_osc(h, G, a, b, precision=106, fn="sin", max_pieces=200000):
    """Enclosure of int_a^b h*fn(G); b may be mpmath.inf."""
    from .expr import as_expr
    h, G = as_expr(h), as_expr(G)
    dps = _dps(precision)
    with mpmath.workdps(dps):
        hf, Gf = compile_expr(h), compile_expr(G)
        trig = mpmath.sin if fn == "sin" else mpmath.cos
        f = lambda s: hf(s) * trig(Gf(s))
        ph = _Phase(G, fn)
        a = mpmath.mpf(a)
        infinite = b == mpmath.inf or b == float("inf")
        b = mpmath.inf if infinite else mpmath.mpf(b)
        k = ph.index_after(a)
        pieces, total_err = [], mpmath.mpf(0)
        lo = a
        while True:
            z = ph.zero(k, lo)
            if not infinite and z >= b:
                v, err = _quad_piece(f, lo, b)
                pieces.append(v)
                total_err += err
                break
            v, err = _quad_piece(f, lo, z)
            pieces.append(v)
            total_err += err
            lo, k = z, k + 1
            if infinite and len(pieces) > 3:
                tiny = abs(pieces[-1]) < mpmath.mpf(10) ** (-dps) * max(1, abs(mpmath.fsum(pieces)))
                if tiny or len(pieces) >= 80:
                    break
            if len(pieces) > max_pieces:
                raise ArithmeticError("too many half periods; use a coarser grid")
        value = mpmath.fsum(pieces)
        method = "half-period"
        if infinite and not (abs(pieces[-1]) < mpmath.mpf(10) ** (-dps) * max(1, abs(value))):
            partial = []
            acc = mpmath.mpf(0)
            for p in pieces:
                acc += p
                partial.append(acc)
            tab = mpmath.shanks(partial[-40:])
            value = tab[-1][-1]
            total_err += abs(tab[-1][-1] - tab[-1][-3])
            method = "half-period+epsilon"
        return QuadReport(_interval(value, total_err, precision), len(pieces), method)


def oracle_diff(h, G, x1, x2, precision=106, fn="sin"):
    """F(x2) - F(x1) for any antiderivative F of h*fn(G)."""
    return quad_osc(h, G, x1, x2, precision, fn).value


def oracle_tail(h, G, x, precision=106, fn="sin"):
    """F(x) for the antiderivative vanishing at infinity: -int_x^oo h*fn(G)."""
    r = quad_osc(h, G, x, mpmath.inf, precision, fn).value
    return NumericInterval(-r.hi, -r.lo, r.precision)


# ---------------------------------------------------------------- expansion checks

def check_expansion(h, G, N, grid, fn="sin", factor=1.5, precision=106, expansion=None):
    """Remainder of the N-term expansion against the size of the next term.

    When the integral converges the antiderivative vanishing at infinity is
    used and each grid point gives a row.  Otherwise consecutive grid points
    are differenced.  The bound is the sum of the next term's coefficient
    magnitudes (its envelope), so the ratio does not depend on where the
    trig factor happens to vanish.
    """
    from .integrate import expand_osc_integral
    from .expr import as_expr
    h, G = as_expr(h), as_expr(G)
    E = expansion or expand_osc_integral(h, G, fn)
    terms = E.terms(N + 1)
    dps = _dps(precision)
    rows = []
    tol = mpmath.mpf(2) ** (-precision // 2)
    grid = [_mpf(x) for x in grid]

    def partial(n, x):
        return mpmath.fsum(t.value(x, dps) for t in terms[:n])

    def env(n, x):
        return terms[n].envelope(x, dps) if n < len(terms) else mpmath.mpf(0)

    with mpmath.workdps(dps):
        if E.convergent:
            F = {x: oracle_tail(h, G, x, precision, fn).mid for x in grid}
            for x in grid:
                for n in range(1, N + 1):
                    R = abs(F[x] - partial(n, x))
                    rows.append(_row(x, n, R, env(n, x), factor, tol))
        else:
            for x1, x2 in zip(grid, grid[1:]):
                D = oracle_diff(h, G, x1, x2, precision, fn).mid
                for n in range(1, N + 1):
                    R = abs(D - (partial(n, x2) - partial(n, x1)))
                    rows.append(_row(x2, n, R, env(n, x1) + env(n, x2), factor, tol))
    return {"rows": rows, "pass": all(r["pass"] for r in rows), "terms": len(terms),
            "exact": E.exact}


def _row(x, n, R, bound, factor, tol):
    if bound > 0:
        ratio = R / bound
        ok = ratio <= factor
    else:
        ratio = mpmath.mpf(0) if R <= tol * 100 else mpmath.inf
        ok = R <= tol * 100
    return {"x": float(x), "n": n, "remainder": float(R), "bound": float(bound),
            "ratio": float(ratio), "pass": bool(ok)}


# ---------------------------------------------------------------- measured limits

@dataclass
class MeasuredLimitSample:
    X: float
    estimate: float
    horizon: float
    tail: float               # alpha mass beyond the horizon, relative to alpha(X)
    samples: int


def measured_limit_estimate(f, alpha, l, eps, X, horizon=None, tail_tol=1e-3, cells=400000, per_cell=1):
    """(1/alpha(X)) times the alpha-measure of {x >= X : |f(x) - l| > eps}, truncated at horizon.

    The range is cut into cells of equal width in log x; each cell carries
    its alpha mass and the indicator is sampled at a point inside it.  Cell
    widths far exceed any oscillation period, so the samples fall
    equidistributed against the oscillation.
    """
    ff = f if callable(f) else compile_expr(f, "np")
    af = compile_expr(alpha, "np") if not callable(alpha) else alpha
    X = float(X)
    aX = float(af(np.array([X]))[0])
    if horizon is None:
        horizon = X
        while float(af(np.array([horizon]))[0]) / aX > tail_tol:
            horizon *= 2
    horizon = float(horizon)
    edges = np.exp(np.linspace(math.log(X), math.log(horizon), cells + 1))
    a_edges = af(edges)
    mass = a_edges[:-1] - a_edges[1:]
    if np.any(mass < 0):
        raise ValueError("alpha must decrease")
    hits = np.zeros(cells)
    for j in range(per_cell):
        # golden-ratio offsets keep the sample points from locking to a period
        frac = ((np.arange(cells) * 0.6180339887498949 + (j + 0.5) / per_cell) % 1.0)
        pts = edges[:-1] * (edges[1:] / edges[:-1]) ** frac
        with np.errstate(all="ignore"):
            vals = ff(pts)
        hits += np.where(np.isfinite(vals), np.abs(vals - l) > eps, True)
    est = float(np.sum(mass * hits / per_cell) / aX)
    tail = float(a_edges[-1] / aX)
    return MeasuredLimitSample(X, est, horizon, tail, cells * per_cell)
