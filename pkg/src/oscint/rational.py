"""Compact rational form for coefficient functions.

Repeated differentiation of quotients makes expression trees grow
geometrically.  `together` rewrites an expression as a Laurent polynomial in
its atoms (x^q, log x, exp(...), ...) over a product of powers of
polynomial factors, which keeps the size polynomial in the number of steps.
No gcds are taken; the form is compact, not canonical.
"""
from __future__ import annotations

from fractions import Fraction

from .expr import (
    X, ZERO, Const, Exp, Expr, NamedConst, Pow, Prod, Sum, Var, add, exp_, mul, normalize, power,
)

__all__ = ["together"]

_MAX_EXPAND = 4000
_MAX_WORK = 60000
_work = [0]


class _TooBig(Exception):
    pass


def _pmul(a, b):
    _work[0] += len(a) * len(b)
    if _work[0] > _MAX_WORK:
        raise _TooBig
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mmul(ma, mb)
            c = out.get(m, 0) + ca * cb
            if c:
                out[m] = c
            else:
                out.pop(m, None)
    if len(out) > _MAX_EXPAND:
        raise _TooBig
    return out


def _padd(a, b, sign=1):
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _mmul(a, b):
    d = dict(a)
    for k, q in b:
        v = d.get(k, 0) + q
        if v:
            d[k] = v
        else:
            d.pop(k)
    exps = [k for k in d if isinstance(k, Exp)]
    if len(exps) > 1 or (exps and d[exps[0]] != 1):
        # exponentials combine into one
        arg = normalize(add(*[mul(Const(d.pop(k)), k.arg) for k in exps]))
        if arg != ZERO:
            d[exp_(arg)] = Fraction(1)
    return tuple(sorted(d.items(), key=lambda kv: _atom_key(kv[0])))


def _atom_key(a):
    return (0, "") if a == X else (1, repr(a))


def _ppow(p, n):
    out = {(): Fraction(1)}
    for _ in range(n):
        out = _pmul(out, p)
    return out


def _single(p):
    return next(iter(p.items())) if len(p) == 1 else None


class _R:
    """num / prod(den_f ** k): num a dict monomial -> coefficient, den keyed by frozen polys."""

    def __init__(self, num, den=None):
        self.num = num
        self.den = den or {}


def _freeze(p):
    return tuple(sorted(p.items(), key=lambda mc: repr(mc[0])))


def _primitive(p):
    """(unit monomial, lead coefficient, monic poly): p = unit * lead * monic."""
    items = sorted(p.items(), key=lambda mc: repr(mc[0]))
    lead = items[0][1]
    atoms = set()
    for m, _ in items:
        atoms.update(k for k, _ in m)
    low = {}
    for a in atoms:
        low[a] = min(dict(m).get(a, 0) for m, _ in items)
    unit = tuple(sorted(((a, q) for a, q in low.items() if q), key=lambda kv: _atom_key(kv[0])))
    inv = tuple((a, -q) for a, q in unit)
    monic = {_mmul(m, inv): c / lead for m, c in items}
    return unit, lead, monic


def _invert(r):
    """1/r."""
    num = {(): Fraction(1)}
    for f, k in r.den.items():
        num = _pmul(num, _ppow(dict(f), k))
    s = _single(r.num)
    if s is not None:
        m, c = s
        return _R(_pmul(num, {tuple((a, -q) for a, q in m): 1 / c}))
    unit, lead, monic = _primitive(r.num)
    num = _pmul(num, {tuple((a, -q) for a, q in unit): 1 / lead})
    return _R(num, {_freeze(monic): 1})


def _rmul(a, b):
    den = dict(a.den)
    for f, k in b.den.items():
        den[f] = den.get(f, 0) + k
    return _R(_pmul(a.num, b.num), den)


def _radd(a, b):
    den = dict(a.den)
    for f, k in b.den.items():
        den[f] = max(den.get(f, 0), k)
    na, nb = a.num, b.num
    for f, k in den.items():
        if k > a.den.get(f, 0):
            na = _pmul(na, _ppow(dict(f), k - a.den.get(f, 0)))
        if k > b.den.get(f, 0):
            nb = _pmul(nb, _ppow(dict(f), k - b.den.get(f, 0)))
    return _R(_padd(na, nb), den)


def _lead(p):
    return max(p.items(), key=lambda mc: _mono_order(mc[0]))


def _mono_order(m):
    return tuple(sorted(((_atom_key(a), q) for a, q in m), reverse=True))


def _divide(num, f):
    """num / f when f divides num exactly (leading-term division), else None."""
    if not num:
        return {}
    lm, lc = _lead(f)
    inv = tuple((a, -q) for a, q in lm)
    quo, rem = {}, dict(num)
    for _ in range(4 * len(num) + 8):
        if not rem:
            return quo
        m, c = _lead(rem)
        t = {_mmul(m, inv): c / lc}
        quo = _padd(quo, t)
        rem = _padd(rem, _pmul(t, f), -1)
    return None


def _cancel(r):
    """Divide out denominator factors that divide the numerator."""
    num, den = r.num, dict(r.den)
    for f, k in list(den.items()):
        fp = dict(f)
        while k:
            q = _divide(num, fp)
            if q is None:
                break
            num, k = q, k - 1
        den[f] = k
    return _R(num, den)


def _atom(e):
    return _R({((e, Fraction(1)),): Fraction(1)})


def _conv(e):
    if isinstance(e, Const):
        return _R({(): e.value} if e.value else {})
    if isinstance(e, Var):
        return _atom(X)
    if isinstance(e, Sum):
        acc = _R({})
        for a in e.args:
            acc = _radd(acc, _conv(a))
        return acc
    if isinstance(e, Prod):
        acc = _R({(): Fraction(1)})
        for a in e.args:
            acc = _rmul(acc, _conv(a))
        return acc
    if isinstance(e, Pow):
        q = e.exp
        b = _conv(e.base)
        if q.denominator == 1:
            n = abs(int(q))
            if n > 64:
                return _atom(e)
            if q < 0:
                b = _invert(b)
            out = _R({(): Fraction(1)})
            for _ in range(n):
                out = _rmul(out, b)
            return out
        s = _single(b.num)
        if s is not None and not b.den and s[1] == 1:
            return _R({tuple((a, p * q) for a, p in s[0]): Fraction(1)})
        return _atom(e)
    if isinstance(e, NamedConst):
        return _atom(e)
    return _atom(e)


def _poly_expr(p):
    terms = []
    for m, c in p.items():
        f = [Const(c)] + [power(a, q) for a, q in m]
        terms.append(mul(*f))
    return add(*terms) if terms else ZERO


def together(e: Expr) -> Expr:
    """e in compact rational form; e itself when the form would be too large."""
    e = normalize(e)
    _work[0] = 0
    try:
        r = _cancel(_conv(e))
    except _TooBig:
        return e
    num = r.num
    den = []
    for f, k in r.den.items():
        if k:
            den.append(power(_poly_expr(dict(f)), -k))
    out = normalize(mul(_poly_expr(num), *den)) if num else ZERO
    return out
