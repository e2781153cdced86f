"""Asymptotic scales and lazily produced nested multiseries for exp-log functions.

A scale is a tuple of elements sorted from slowest to fastest.  Element j
(1-based level) is either ``IterLog(k)``, the function 1/log_k(x) with
log_0(x) = x, or ``ExpElem(L)``, the function exp(-L) where L is a monomial
in slower elements.  Writing every element as exp(-L) gives a uniform rule:
IterLog(k) has L = log_{k+1}(x).

A series at level j is a lazy stream of (exponent, coefficient) pairs with
strictly increasing rational exponents of t_j.  Coefficients are series at
level j-1, and level 0 holds nonzero constant expressions.  Every demanded
coefficient has been zero-tested, so the first term of a stream really is
its leading term.

Expansion is most-rapidly-varying-first.  ``series`` builds the stream
bottom-up from the expression tree.  When it meets a function whose
comparability class is missing from the scale it raises ``NeedElement``,
and the public entry points extend the scale and start again.

Sessions are single-threaded: streams memoize terms without locking.
"""
from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from itertools import islice

import mpmath

from .errors import BudgetExhausted, NotInBaseField, PreconditionError, Unsupported, ZeroUnknown
from .expr import (
    ONE, ZERO, X, Const, Cos, Exp, Expr, Log, OscInt, Pow, Prod, Sin, Sum, Var,
    add, cos_, differentiate, eval_float, exp_, is_constant, log_, mul, neg, normalize, power, sin_,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 50000))

__all__ = [
    "BudgetExhausted", "IterLog", "ExpElem", "Monomial", "Scale", "MSeries", "NeedElement",
    "Cmp", "LESS", "EQUAL", "GREATER", "INF", "NEG_INF", "Primitive",
    "ensure_scale", "expand", "leading", "leading_term", "lead_expr", "cmp_gamma0", "cmp_gamma",
    "is_bowtie", "limit", "shadow", "ghost", "classify_ri", "integrate_base", "to_json",
]


@dataclass
class MSConfig:
    cancel_budget: int = 60     # consecutive cancelling terms tolerated in one stream
    inner_cancel_budget: int = 16   # below the top level, a longer run is taken as a zero tail
    max_extensions: int = 24    # scale elements a single request may add
    term_budget: int = 6        # default terms per level for display / serialization
    integrate_terms: int = 6    # terms produced by integrate_base before truncating


config = MSConfig()


class NeedElement(Exception):
    def __init__(self, elem):
        super().__init__(f"scale needs {elem}")
        self.elem = elem


# ---------------------------------------------------------------- elements

@dataclass(frozen=True)
class IterLog:
    k: int

    @property
    def L(self):
        return Monomial({IterLog(self.k + 1): -1})

    @property
    def L_expr(self):
        return _iter_log(self.k + 1)

    @property
    def expr(self):
        return power(_iter_log(self.k), -1)

    def __str__(self):
        return str(self.expr)

    def __repr__(self):
        return f"IterLog({self.k})"


@dataclass(frozen=True)
class ExpElem:
    L: "Monomial"

    @property
    def L_expr(self):
        return self.L.expr

    @property
    def expr(self):
        return exp_(neg(self.L.expr))

    def __str__(self):
        return str(self.expr)

    def __repr__(self):
        return f"ExpElem({self.L})"


def _iter_log(k):
    e = X
    for _ in range(k):
        e = log_(e)
    return e


@lru_cache(maxsize=None)
def elem_cmp(a, b):
    """+1 if a tends to zero faster than b (higher comparability class), -1 if slower."""
    if a == b:
        return 0
    if isinstance(a, IterLog) and isinstance(b, IterLog):
        return 1 if a.k < b.k else -1
    c = mono_cmp(a.L, b.L)
    if c == 0:
        raise ValueError(f"elements {a} and {b} coincide")
    return c


_elem_key = cmp_to_key(elem_cmp)


def band(t):
    """k such that IterLog(k) <= t < IterLog(k-1)."""
    if isinstance(t, IterLog):
        return t.k
    k = 0
    while elem_cmp(t, IterLog(k)) < 0:
        k += 1
    return k


# ---------------------------------------------------------------- monomials

class Monomial:
    """Power product of scale elements with rational exponents."""
    __slots__ = ("_items", "_hash")

    def __init__(self, mapping=()):
        acc = {}
        pairs = mapping.items() if isinstance(mapping, dict) else mapping
        for e, r in pairs:
            acc[e] = acc.get(e, Fraction(0)) + Fraction(r)
        items = tuple(sorted(((e, r) for e, r in acc.items() if r != 0), key=lambda p: repr(p[0])))
        object.__setattr__(self, "_items", items)
        object.__setattr__(self, "_hash", hash(items))

    def __setattr__(self, k, v):
        raise AttributeError("monomials are immutable")

    def items(self):
        return self._items

    def elems(self):
        return [e for e, _ in self._items]

    def get(self, e, default=Fraction(0)):
        for k, r in self._items:
            if k == e:
                return r
        return default

    __getitem__ = get

    def is_one(self):
        return not self._items

    def __eq__(self, o):
        return isinstance(o, Monomial) and self._items == o._items

    def __hash__(self):
        return self._hash

    def __mul__(self, o):
        return Monomial(self._items + o._items)

    def __truediv__(self, o):
        return Monomial(self._items + tuple((e, -r) for e, r in o._items))

    def __pow__(self, q):
        q = Fraction(q)
        return Monomial(tuple((e, r * q) for e, r in self._items))

    def top(self):
        """Fastest element with a nonzero exponent, or None."""
        if not self._items:
            return None
        return max(self.elems(), key=_elem_key)

    @property
    def expr(self):
        return mul(*[power(e.expr, r) for e, r in self._items]) if self._items else ONE

    def __str__(self):
        return str(self.expr)

    def __repr__(self):
        return f"Monomial({self})"

    def sort_key(self):
        return _mono_key(self)


ONE_MONO = Monomial()


def mono_cmp(m1, m2):
    """+1 if m1 dominates m2 (m1/m2 -> inf), -1 if m1 is smaller, 0 if equal."""
    d = m1 / m2
    top = d.top()
    if top is None:
        return 0
    return 1 if d[top] < 0 else -1


_mono_key = cmp_to_key(mono_cmp)


# ---------------------------------------------------------------- scale

class Scale:
    """Immutable ordered set of scale elements with a per-scale series cache."""

    def __init__(self, elems=(IterLog(0),)):
        elems = set(elems)
        ks = [e.k for e in elems if isinstance(e, IterLog)]
        for k in range(max(ks, default=0) + 1):
            elems.add(IterLog(k))
        self.elems = tuple(sorted(elems, key=_elem_key))
        self._level = {e: i + 1 for i, e in enumerate(self.elems)}
        self._cache = {}

    def __len__(self):
        return len(self.elems)

    def __iter__(self):
        return iter(self.elems)

    def __contains__(self, e):
        return e in self._level

    def __eq__(self, o):
        return isinstance(o, Scale) and self.elems == o.elems

    def __hash__(self):
        return hash(self.elems)

    def level(self, e):
        return self._level[e]

    def elem(self, level):
        return self.elems[level - 1]

    def extend(self, e):
        return Scale(self.elems + (e,))

    def __str__(self):
        return "{" + ", ".join(str(e) for e in self.elems) + "}"

    def __repr__(self):
        return f"Scale{self}"


# ---------------------------------------------------------------- lazy series

class MSeries:
    """Lazy stream of (exponent, coefficient) at one level of a scale."""
    __slots__ = ("scale", "level", "_terms", "_gen", "_error", "budget")

    def __init__(self, scale, level, gen, budget=None):
        self.scale = scale
        self.level = level
        self._terms = []
        self._gen = gen
        self._error = None
        self.budget = budget

    @classmethod
    def from_terms(cls, scale, level, terms):
        s = cls(scale, level, None)
        s._terms = list(terms)
        return s

    def term(self, n):
        terms = self._terms
        while len(terms) <= n:
            if self._error is not None:
                raise self._error
            if self._gen is None:
                return None
            try:
                t = next(self._gen)
            except StopIteration:
                self._gen = None
                return None
            except Exception as err:
                self._gen = None
                self._error = err
                raise
            terms.append(t)
        return terms[n]

    def __iter__(self):
        n = 0
        while True:
            t = self.term(n)
            if t is None:
                return
            yield t
            n += 1

    def is_zero(self):
        return self.term(0) is None

    @property
    def element(self):
        return self.scale.elem(self.level)

    def terms(self, budget=None):
        """Up to `budget` terms (default: the series budget) and a truncation flag."""
        budget = budget or self.budget or config.term_budget
        out = [t for t in islice(iter(self), budget)]
        return out, self.term(budget) is not None

    @property
    def truncated(self):
        return self.terms()[1]

    def leading(self):
        return leading(self)

    def __repr__(self):
        out, more = self.terms(4)
        body = " + ".join(f"({_coeff_str(c)})*t{self.level}^({r})" for r, c in out)
        return f"<MSeries L{self.level}: {body}{' + ...' if more else ''}>"


def _coeff_str(c):
    return str(c) if isinstance(c, Expr) else repr(c)


def _empty(S, lv):
    return ZERO if lv == 0 else MSeries.from_terms(S, lv, [])


def _is_zero(c, lv):
    if lv == 0:
        if not is_constant(c):
            from .trig import leaf_is_zero
            return leaf_is_zero(normalize(c))
        from .zero import const_is_zero
        return const_is_zero(c)
    try:
        return c.term(0) is None
    except BudgetExhausted:
        # a coefficient series that keeps cancelling past the budget is taken as zero
        return True


def _single(A):
    """(0, c) if A is a lifted coefficient, else None."""
    t = A.term(0)
    if t is not None and t[0] == 0 and A.term(1) is None:
        return t[1]
    return None


def _lift(S, c, lv_from, lv_to):
    if lv_from == 0 and c == ZERO:
        return _empty(S, lv_to)
    for lv in range(lv_from + 1, lv_to + 1):
        c = MSeries.from_terms(S, lv, [(Fraction(0), c)] if not (lv > 1 and c.is_zero()) else [])
    return c


def _cancelled(n, S=None, lv=None):
    """True when an inner stream should end: its tail is presumed zero."""
    if S is not None and lv < len(S):
        return n > config.inner_cancel_budget
    if n > config.cancel_budget:
        raise BudgetExhausted(f"more than {config.cancel_budget} consecutive cancelling terms")
    return False


def _add(S, lv, a, b):
    if lv == 0:
        return add(a, b)
    return MSeries(S, lv, _add_gen(S, lv, a, b))


def _add_gen(S, lv, a, b):
    i = j = 0
    ta, tb = a.term(0), b.term(0)
    cancels = 0
    while ta is not None or tb is not None:
        if tb is None or (ta is not None and ta[0] < tb[0]):
            yield ta
            i += 1
            ta = a.term(i)
            cancels = 0
        elif ta is None or tb[0] < ta[0]:
            yield tb
            j += 1
            tb = b.term(j)
            cancels = 0
        else:
            c = _add(S, lv - 1, ta[1], tb[1])
            r = ta[0]
            i += 1
            j += 1
            ta, tb = a.term(i), b.term(j)
            if _is_zero(c, lv - 1):
                cancels += 1
                if _cancelled(cancels, S, lv):
                    return
            else:
                cancels = 0
                yield (r, c)


def _sum(S, lv, items):
    items = list(items)
    if not items:
        return _empty(S, lv)
    while len(items) > 1:
        items = [_add(S, lv, items[k], items[k + 1]) if k + 1 < len(items) else items[k]
                 for k in range(0, len(items), 2)]
    return items[0]


def _mul(S, lv, a, b):
    if lv == 0:
        return mul(a, b)
    ca = _single(a)
    if ca is not None:
        return _mul_coeff(S, lv, b, ca)
    cb = _single(b)
    if cb is not None:
        return _mul_coeff(S, lv, a, cb)
    return MSeries(S, lv, _mul_gen(S, lv, a, b))


def _mul_gen(S, lv, a, b):
    a0, b0 = a.term(0), b.term(0)
    if a0 is None or b0 is None:
        return
    heap = [(a0[0] + b0[0], 0, 0)]
    seen = {(0, 0)}
    cancels = 0
    while heap:
        r = heap[0][0]
        parts = []
        while heap and heap[0][0] == r:
            _, i, k = heapq.heappop(heap)
            ti, tk = a.term(i), b.term(k)
            parts.append(_mul(S, lv - 1, ti[1], tk[1]))
            for i2, k2 in ((i + 1, k), (i, k + 1)):
                if (i2, k2) in seen:
                    continue
                u, v = a.term(i2), b.term(k2)
                if u is not None and v is not None:
                    seen.add((i2, k2))
                    heapq.heappush(heap, (u[0] + v[0], i2, k2))
        c = parts[0] if len(parts) == 1 else _sum(S, lv - 1, parts)
        if len(parts) > 1 and _is_zero(c, lv - 1):
            cancels += 1
            if _cancelled(cancels, S, lv):
                return
            continue
        cancels = 0
        yield (r, c)


def _mul_coeff(S, lv, A, c):
    """A times a coefficient c living at level lv - 1."""
    if lv == 0:
        return mul(A, c)
    if lv == 1 and c == ONE:
        return A
    return MSeries(S, lv, ((r, _mul(S, lv - 1, cc, c)) for r, cc in A))


def _scale_leaf(S, lv, A, c):
    if lv == 0:
        return mul(A, c)
    return MSeries(S, lv, ((r, _scale_leaf(S, lv - 1, cc, c)) for r, cc in A))


def _shift(S, lv, A, r0):
    if r0 == 0:
        return A
    return MSeries(S, lv, ((r + r0, c) for r, c in A))


def _tail(S, lv, A, start):
    return MSeries(S, lv, islice(iter(A), start, None))


def _mono(S, m, lv, coeff=ONE):
    """Series of coeff * m at level lv; every element of m must sit at or below lv."""
    for e in m.elems():
        if e not in S:
            raise NeedElement(e)
        if S.level(e) > lv:
            raise ValueError(f"{e} lies above level {lv}")
    c = coeff
    for l in range(1, lv + 1):
        c = MSeries.from_terms(S, l, [(m.get(S.elem(l)), c)])
    return c


def _lazy_sum(S, lv, streams):
    """Sum of streams given as an iterator of (lower_bound, series-or-None), bounds nondecreasing."""
    return MSeries(S, lv, _lazy_sum_gen(S, lv, streams))


def _lazy_sum_gen(S, lv, streams):
    pending = next(streams, None)
    heads = []
    cancels = 0
    while True:
        m = min((s.term(p)[0] for s, p in heads), default=None)
        while pending is not None and (m is None or pending[0] <= m):
            _, s = pending
            pending = next(streams, None)
            if s is not None:
                t = s.term(0)
                if t is not None:
                    heads.append([s, 0])
                    m = t[0] if m is None or t[0] < m else m
        if m is None:
            return
        parts = []
        for h in heads:
            t = h[0].term(h[1])
            if t[0] == m:
                parts.append(t[1])
                h[1] += 1
        heads = [h for h in heads if h[0].term(h[1]) is not None]
        c = parts[0] if len(parts) == 1 else _sum(S, lv - 1, parts)
        if len(parts) > 1 and _is_zero(c, lv - 1):
            cancels += 1
            if _cancelled(cancels, S, lv):
                return
            continue
        cancels = 0
        yield (m, c)


def _taylor(S, lv, U, coeff):
    """sum_n coeff(n) U^n for U of positive valuation; coeff(n) None ends the sum."""
    v = U.term(0)[0]
    if v <= 0:
        raise ValueError("Taylor composition needs a series tending to zero")

    def streams():
        P = None
        n = 0
        while True:
            a = coeff(n)
            if a is None:
                return
            P = _lift(S, ONE, 0, lv) if n == 0 else (U if n == 1 else _mul(S, lv, P, U))
            yield (n * v, _scale_leaf(S, lv, P, Const(a)) if a != 0 else None)
            n += 1

    return _lazy_sum(S, lv, streams())


def _binom_coeffs(p):
    p = Fraction(p)

    def coeff(n, cache={}):
        if p.denominator == 1 and p >= 0 and n > p:
            return None
        c = Fraction(1)
        for k in range(n):
            c = c * (p - k) / (k + 1)
        return c
    return coeff


def _log_coeff(n):
    return Fraction(0) if n == 0 else Fraction((-1) ** (n + 1), n)


def _exp_coeff(n):
    c = Fraction(1)
    for k in range(2, n + 1):
        c /= k
    return c


def _split_lead(S, lv, A):
    """A = a0 t^r0 (1 + U): returns (r0, a0, U or None)."""
    t0 = A.term(0)
    if t0 is None:
        raise ZeroDivisionError("series is identically zero")
    r0, a0 = t0
    if A.term(1) is None:
        return r0, a0, None
    inv0 = _pow(S, lv - 1, a0, -1)
    U = MSeries(S, lv, ((r - r0, _mul(S, lv - 1, c, inv0)) for r, c in islice(iter(A), 1, None)))
    return r0, a0, U


def _const_sign(c):
    from .zero import const_sign
    v = const_sign(c)
    if v.kind == "unknown":
        raise ZeroUnknown(c, v.bits)
    return v.sign


def _pow(S, lv, A, p):
    p = Fraction(p)
    if lv == 0:
        if p.denominator % 2 == 0 and _const_sign(A) < 0:
            raise ValueError(f"({A})^({p}) is not real")
        return power(A, p)
    if p == 1:
        return A
    r0, a0, U = _split_lead(S, lv, A)
    P0 = _pow(S, lv - 1, a0, p)
    if U is None:
        return MSeries.from_terms(S, lv, [(r0 * p, P0)])
    return _shift(S, lv, _mul_coeff(S, lv, _taylor(S, lv, U, _binom_coeffs(p)), P0), r0 * p)


def _log_t(S, lv):
    t = S.elem(lv)
    if isinstance(t, IterLog) and IterLog(t.k + 1) not in S:
        raise NeedElement(IterLog(t.k + 1))
    return _mono(S, t.L, lv, Const(-1))


def _log(S, lv, A):
    if lv == 0:
        if _const_sign(A) <= 0:
            raise ValueError(f"log of the non-positive constant {A}")
        return log_(A)
    r0, a0, U = _split_lead(S, lv, A)
    parts = [_lift(S, _log(S, lv - 1, a0), lv - 1, lv)]
    if r0 != 0:
        parts.append(_scale_leaf(S, lv, _log_t(S, lv), Const(r0)))
    if U is not None:
        parts.append(_taylor(S, lv, U, _log_coeff))
    return _sum(S, lv, parts)


def _exp_finite(S, lv, A):
    if lv == 0:
        return exp_(A)
    t0 = A.term(0)
    if t0 is None:
        return _lift(S, ONE, 0, lv)
    if t0[0] < 0:
        raise ValueError("exponent tends to infinity")
    if t0[0] == 0:
        E0 = _exp_finite(S, lv - 1, t0[1])
        if A.term(1) is None:
            return MSeries.from_terms(S, lv, [(Fraction(0), E0)])
        U = _tail(S, lv, A, 1)
    else:
        E0 = _lift(S, ONE, 0, lv - 1)
        U = A
    return _mul_coeff(S, lv, _taylor(S, lv, U, _exp_coeff), E0)


def _sin_coeff(n):
    return Fraction(0) if n % 2 == 0 else _exp_coeff(n) * (-1) ** (n // 2)


def _cos_coeff(n):
    return Fraction(0) if n % 2 else _exp_coeff(n) * (-1) ** (n // 2)


def _trig_finite(S, lv, A):
    """(sin A, cos A) for a series A with a finite limit."""
    if lv == 0:
        return sin_(A), cos_(A)
    t0 = A.term(0)
    if t0 is None:
        return _empty(S, lv), _lift(S, ONE, 0, lv)
    if t0[0] < 0:
        raise NotInBaseField("sin/cos of an argument tending to infinity")
    if t0[0] == 0:
        s0, c0 = _trig_finite(S, lv - 1, t0[1])
        if A.term(1) is None:
            return (MSeries.from_terms(S, lv, [(Fraction(0), s0)] if not _is_zero(s0, lv - 1) else []),
                    MSeries.from_terms(S, lv, [(Fraction(0), c0)] if not _is_zero(c0, lv - 1) else []))
        U = _tail(S, lv, A, 1)
    else:
        s0, c0 = _lift(S, ZERO, 0, lv - 1), _lift(S, ONE, 0, lv - 1)
        U = A
    sU, cU = _taylor(S, lv, U, _sin_coeff), _taylor(S, lv, U, _cos_coeff)
    parts = []
    if not _is_zero(s0, lv - 1):
        parts += [_mul_coeff(S, lv, cU, s0)]
    if not _is_zero(c0, lv - 1):
        parts += [_mul_coeff(S, lv, sU, c0)]
    sn = _sum(S, lv, parts)
    parts = []
    if not _is_zero(c0, lv - 1):
        parts += [_mul_coeff(S, lv, cU, c0)]
    if not _is_zero(s0, lv - 1):
        parts += [_scale_leaf(S, lv, _mul_coeff(S, lv, sU, s0), Const(-1))]
    return sn, _sum(S, lv, parts)


def series(e, S):
    """Series of a base-field expression at the top level of S (cached per scale)."""
    cache = S._cache
    if e in cache:
        return cache[e]
    res = _series(e, S, len(S))
    cache[e] = res
    return res


def _series(e, S, m):
    if is_constant(e):
        return _lift(S, e, 0, m)
    if isinstance(e, Var):
        return _mono(S, Monomial({IterLog(0): -1}), m)
    if isinstance(e, Sum):
        return _sum(S, m, [series(a, S) for a in e.args])
    if isinstance(e, Prod):
        acc = series(e.args[0], S)
        for a in e.args[1:]:
            acc = _mul(S, m, acc, series(a, S))
        return acc
    if isinstance(e, Pow):
        return _pow(S, m, series(e.base, S), e.exp)
    if isinstance(e, Log):
        return _log(S, m, series(e.arg, S))
    if isinstance(e, Exp):
        return _exp_series(e.arg, S, m, 0)
    if isinstance(e, (Sin, Cos)):
        sn, cs = _trig_finite(S, m, series(e.arg, S))
        return sn if isinstance(e, Sin) else cs
    raise NotInBaseField(f"{e} is not in the exp-log field")


def _walk(e):
    from .expr import walk
    return walk(e)


def _exp_series(phi, S, m, depth):
    if depth > 40:
        raise Unsupported(f"the infinite part of {phi} does not terminate")
    A = series(phi, S)
    lead = _leading(A, S, m)
    if lead is None:
        return _lift(S, ONE, 0, m)
    c, mono = lead
    if mono_cmp(mono, ONE_MONO) <= 0:
        return _exp_finite(S, m, A)
    for el in S.elems:
        if el.L == mono:
            break
    else:
        raise NeedElement(ExpElem(mono))
    if not isinstance(c, Const):
        raise Unsupported(f"exp({phi}) needs the non-rational power {c} of {el}")
    rest = normalize(add(phi, neg(mul(c, el.L_expr))))
    return _mul(S, m, _mono(S, Monomial({el: -c.value}), m), _exp_series(rest, S, m, depth + 1))


# ---------------------------------------------------------------- derivative

def ms_deriv(A):
    """Series of the derivative of A, at the same top level."""
    S, m = A.scale, A.level
    d = _theta(S, A, m, 0)
    if d is None:
        return _empty(S, m)
    s, l = d
    return _lift(S, s, l, m)


def _P_factor(S, k):
    """P_{k+1}/P_k = log_k(x) as a monomial: IterLog(k)^-1."""
    return Monomial({IterLog(k): -1})


def _theta(S, A, lv, k):
    """(P_k A', level) where P_k = x log x ... log_{k-1} x, or None for zero."""
    if lv == 0:
        return None
    c = _single(A)
    if c is not None:
        return _theta(S, c, lv - 1, k)
    if A.is_zero():
        return None
    t = S.elem(lv)
    b = band(t)
    if b > k:
        inner = _theta(S, A, lv, k + 1)
        if inner is None:
            return None
        s, l = inner
        if IterLog(k) not in S:
            raise NeedElement(IterLog(k))
        tl = max(l, S.level(IterLog(k)))
        return _mul(S, tl, _lift(S, s, l, tl), _mono(S, Monomial({IterLog(k): 1}), tl)), tl
    if b < k:
        raise ValueError("theta applied above its band")

    def below(d):
        if d is None:
            return _empty(S, lv - 1)
        s, l = d
        return _lift(S, s, l, lv - 1)

    if isinstance(t, IterLog):
        def gen():
            for r, cr in A:
                part = _add(S, lv - 1, below(_theta(S, cr, lv - 1, k + 1)),
                            _scale_leaf(S, lv - 1, cr, Const(-r)) if r != 0 else _empty(S, lv - 1))
                if not _is_zero(part, lv - 1):
                    yield (r + 1, part)
    else:
        dL = below(_theta(S, _mono(S, t.L, lv - 1), lv - 1, k))

        def gen():
            for r, cr in A:
                part = below(_theta(S, cr, lv - 1, k))
                if r != 0:
                    part = _add(S, lv - 1, part, _scale_leaf(S, lv - 1, _mul(S, lv - 1, cr, dL), Const(-r)))
                if not _is_zero(part, lv - 1):
                    yield (r, part)
    return MSeries(S, lv, gen()), lv


# ---------------------------------------------------------------- sessions

_default = {"scale": Scale()}


def default_scale():
    return _default["scale"]


def reset_default_scale():
    _default["scale"] = Scale()


def run_with_scale(fn, scale=None):
    """Call fn(S), extending S whenever it reports a missing element."""
    explicit = scale is not None
    S = scale if explicit else _default["scale"]
    for _ in range(config.max_extensions + 1):
        try:
            out = fn(S)
        except NeedElement as need:
            S = S.extend(need.elem)
            continue
        if not explicit and len(S) > len(_default["scale"]):
            _default["scale"] = S
        return out, S
    raise Unsupported("scale extension limit reached")


def _in_field(e):
    e = normalize(e) if not isinstance(e, Expr) else e
    return e


def ensure_scale(e, scale=None):
    """Smallest extension of `scale` over which e has a multiseries."""
    e = normalize(e)
    _, S = run_with_scale(lambda S: _leading(series(e, S), S, len(S)), scale or Scale())
    return S


def expand(e, scale=None, budget=None):
    """Multiseries of e over (an extension of) scale; the result carries its scale."""
    e = normalize(e)
    A, S = run_with_scale(lambda S: _forced(series(e, S), S), scale)
    A.budget = budget
    return A


def _forced(A, S):
    _leading(A, S, len(S))
    return A


# ---------------------------------------------------------------- leading terms and comparisons

def _leading(A, S, lv):
    exps = {}
    c = A
    while lv > 0:
        t = c.term(0)
        if t is None:
            return None
        r, c = t
        if r != 0:
            exps[S.elem(lv)] = r
        lv -= 1
    return c, Monomial(exps)


def leading(ms):
    """(coeff, monomial) of a series; raises PreconditionError for the zero series."""
    lead = _leading(ms, ms.scale, ms.level)
    if lead is None:
        raise PreconditionError("the zero series has no leading term")
    return lead


def leading_term(e, scale=None):
    """((coeff, monomial) or None for zero, scale used)."""
    e = normalize(e)
    if isinstance(e, Const):
        return (None if e.value == 0 else (e, ONE_MONO)), (scale or _default["scale"])
    return run_with_scale(lambda S: _leading(series(e, S), S, len(S)), scale)


def lead_expr(e, scale=None):
    """Leading term of e as an expression c * monomial."""
    lead, _ = leading_term(e, scale)
    if lead is None:
        return ZERO
    return mul(lead[0], lead[1].expr)


def monomial_of(e, scale=None):
    lead, _ = leading_term(e, scale)
    if lead is None:
        raise PreconditionError(f"{e} is identically zero")
    return lead[1]


@dataclass(frozen=True)
class Cmp:
    kind: str                  # "Less", "Equal", "Greater"
    ratio: Expr = None         # limit of f/g for a gamma0 Equal

    def __str__(self):
        return f"Equal({self.ratio})" if self.kind == "Equal" and self.ratio is not None else self.kind


LESS = Cmp("Less")
EQUAL = Cmp("Equal")
GREATER = Cmp("Greater")


def _nonzero_lead(e, scale=None):
    lead, _ = leading_term(e, scale)
    if lead is None:
        raise PreconditionError(f"{e} is identically zero")
    return lead


def cmp_gamma0(f, g, scale=None):
    """Compare f and g by dominance: Greater if f >- g, Equal(lim f/g), Less."""
    cf, mf = _nonzero_lead(f, scale)
    cg, mg = _nonzero_lead(g, scale)
    c = mono_cmp(mf, mg)
    if c > 0:
        return GREATER
    if c < 0:
        return LESS
    return Cmp("Equal", normalize(mul(cf, power(cg, -1))))


def gamma_class(m):
    """Comparability class of a monomial: its fastest element (None for the class of 1)."""
    return m.top()


def _cmp_class(a, b):
    if a is None and b is None:
        return 0
    if a is None:
        return -1
    if b is None:
        return 1
    return elem_cmp(a, b)


def cmp_gamma(f, g, scale=None):
    """Compare comparability classes gamma(f) and gamma(g)."""
    mf = f if isinstance(f, Monomial) else _nonzero_lead(f, scale)[1]
    mg = g if isinstance(g, Monomial) else _nonzero_lead(g, scale)[1]
    c = _cmp_class(gamma_class(mf), gamma_class(mg))
    return GREATER if c > 0 else LESS if c < 0 else EQUAL


def is_bowtie(f, g, scale=None):
    """f = g^(1+o(1)): same class with a ratio of lower class, or both bounded away from 0 and inf."""
    mf = f if isinstance(f, Monomial) else _nonzero_lead(f, scale)[1]
    mg = g if isinstance(g, Monomial) else _nonzero_lead(g, scale)[1]
    if mf.is_one() and mg.is_one():
        return True
    cf, cg = gamma_class(mf), gamma_class(mg)
    if _cmp_class(cf, cg) != 0:
        return False
    return _cmp_class(gamma_class(mf / mg), cf) < 0


class _Infinity:
    def __init__(self, sign):
        self.sign = sign

    def __repr__(self):
        return "+oo" if self.sign > 0 else "-oo"

    __str__ = __repr__


INF = _Infinity(1)
NEG_INF = _Infinity(-1)


def limit(e, scale=None):
    """Limit at +infinity: a constant expression, INF or NEG_INF."""
    lead, _ = leading_term(e, scale)
    if lead is None:
        return ZERO
    c, m = lead
    s = mono_cmp(m, ONE_MONO)
    if s == 0:
        return c
    if s < 0:
        return ZERO
    return INF if _const_sign(c) > 0 else NEG_INF


def is_infinite(e, scale=None):
    return isinstance(limit(e, scale), _Infinity)


# ---------------------------------------------------------------- shadows

def _level_of(S, i):
    if isinstance(i, int):
        if not 1 <= i <= len(S):
            raise PreconditionError(f"scale index {i} out of range 1..{len(S)}")
        return i
    if i not in S:
        raise PreconditionError(f"{i} is not in the scale")
    return S.level(i)


def _as_series(f, scale, i):
    if isinstance(f, MSeries):
        return f
    f = normalize(f)
    if scale is None and not isinstance(i, int):
        scale = _default["scale"]
        if i not in scale:
            scale = scale.extend(i)
    return expand(f, scale)


def _chain(A, i):
    """Walk the leading chain from the top level down to level i.

    Returns ("I", None) if the first nonzero exponent met is positive,
    ("out", None) if negative, ("R", coefficient at level i-1) if all are zero.
    """
    lv = A.level
    c = A
    while lv >= i:
        t = c.term(0)
        if t is None:
            return "I", None
        r, cc = t
        if r > 0:
            return "I", None
        if r < 0:
            return "out", None
        c = cc
        lv -= 1
    return "R", c


def classify_ri(f, i, scale=None):
    """'InI' if f is below a positive power of t_i, 'InRNotI' if in R_i but not I_i, else 'OutsideR'."""
    A = _as_series(f, scale, i)
    k, _ = _chain(A, _level_of(A.scale, i))
    return {"I": "InI", "R": "InRNotI", "out": "OutsideR"}[k]


def shadow(f, i, scale=None):
    """The t_i^0 coefficient of f (f in R_i), lifted back to the top level."""
    A = _as_series(f, scale, i)
    S = A.scale
    lv = _level_of(S, i)
    k, c = _chain(A, lv)
    if k == "out":
        raise PreconditionError(f"not in R_i for {S.elem(lv)}: the expansion has negative powers there")
    if k == "I":
        return _empty(S, A.level)
    return _lift(S, c, lv - 1, A.level)


def ghost(f, i, scale=None):
    A = _as_series(f, scale, i)
    sh = shadow(A, i)
    return _add(A.scale, A.level, A, _scale_leaf(A.scale, A.level, sh, Const(-1)))


# ---------------------------------------------------------------- conversion

def flat_terms(A, per_level=None):
    """Generator of (leaf coefficient, monomial) in expansion order, each level cut at per_level terms."""
    per_level = per_level or A.budget or config.term_budget
    S = A.scale

    def rec(c, lv, mono):
        if lv == 0:
            yield c, Monomial(mono)
            return
        el = S.elem(lv)
        for r, cc in islice(iter(c), per_level):
            m2 = dict(mono)
            if r != 0:
                m2[el] = r
            yield from rec(cc, lv - 1, m2)
    return rec(A, A.level, {})


def to_expr(A, n=None, per_level=None):
    """Sum of the first n flat terms as an expression."""
    terms = flat_terms(A, per_level)
    if n is not None:
        terms = islice(terms, n)
    return add(*[mul(c, m.expr) for c, m in terms])


def _fmt_rat(q):
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _leaf_json(c):
    if isinstance(c, Const):
        return {"rat": _fmt_rat(c.value)}
    return {"const": str(c)}


def to_json(A, budget=None):
    """{level, element, terms:[{exponent, coeff}], truncated} with nested coefficients."""
    budget = budget or A.budget or config.term_budget
    if not isinstance(A, MSeries):
        return _leaf_json(A)
    terms, more = A.terms(budget)
    return {
        "level": A.level,
        "element": str(A.element),
        "terms": [{"exponent": _fmt_rat(r), "coeff": to_json(c, budget) if isinstance(c, MSeries)
                   else _leaf_json(c)} for r, c in terms],
        "truncated": more,
    }


# ---------------------------------------------------------------- base-field integration

class Primitive:
    """An antiderivative H of a base-field function, with H' equal to the integrand exactly.

    `closed` is an expression when one was found.  Otherwise `terms` holds
    the leading asymptotic terms of H and `err` bounds what was left out.
    The constant is fixed by H -> 0 when the integrand is integrable at
    infinity; for divergent integrands the asymptotic series has no
    constant term.
    """

    def __init__(self, integrand, closed=None, terms=(), err=None, convergent=False,
                 remainder=None, factor=None, inner=None):
        self.integrand = integrand          # expression, or None when inner/factor are used
        self.inner = inner                  # Primitive P when the integrand is P * factor
        self.factor = factor
        self.closed = closed
        self.terms = tuple(terms) if closed is None else (closed,)
        self.err = err
        self.convergent = convergent
        self.remainder = remainder          # integrand left after the last term (integrable tail)

    @property
    def is_closed(self):
        return self.closed is not None

    @property
    def approx(self):
        return self.closed if self.closed is not None else add(*self.terms)

    @property
    def lead(self):
        return lead_expr(self.terms[0]) if self.terms else ZERO

    def monomial(self):
        return monomial_of(self.terms[0])

    def integrand_value(self, x, dps=30):
        if self.inner is not None:
            return self.inner.value(x, dps) * eval_float(self.factor, x, dps)
        return eval_float(self.integrand, x, dps)

    def value(self, x, dps=30):
        """Numerical H(x)."""
        if self.closed is not None:
            return eval_float(self.closed, x, dps)
        with mpmath.workdps(dps):
            x = mpmath.mpf(x)
            if self.convergent:
                return -_quad_tail(lambda s: self.integrand_value(s, dps), x)
            base = self.terms_value(x, dps)
            if self.remainder is not None and self.remainder_convergent:
                return base - _quad_tail(lambda s: eval_float(self.remainder, s, dps), x)
            x0 = mpmath.mpf(1)
            return self.terms_value(x0, dps) + mpmath.quad(lambda s: self.integrand_value(s, dps), [x0, x])

    remainder_convergent = False

    def terms_value(self, x, dps=30):
        return mpmath.fsum(eval_float(t, x, dps) for t in self.terms)

    def __str__(self):
        if self.closed is not None:
            return str(self.closed)
        body = " + ".join(str(t) for t in self.terms)
        return f"{body} + O({self.err})" if self.err is not None else body

    def __repr__(self):
        return f"<Primitive {self}>"


def _quad_tail(f, x):
    """int_x^inf f for a non-oscillating integrand decaying at infinity."""
    pts = [x]
    step = max(x, mpmath.mpf(1))
    for _ in range(60):
        pts.append(pts[-1] + step)
        step *= 2
    total = mpmath.quad(f, pts)
    return total + mpmath.quad(f, [pts[-1], mpmath.inf])


def _closed_form(h):
    """Antiderivative by recognizing c*v'*v^r or c*v'*exp(v), applied over sums."""
    h = normalize(h)
    if not isinstance(h, Expr) or h == ZERO:
        return ZERO
    if isinstance(h, Sum):
        parts = [_closed_form(t) for t in h.args]
        if any(p is None for p in parts):
            return None
        return add(*parts)
    if is_constant(h):
        return mul(h, X)
    from .expr import walk
    seen = set()
    for v in walk(h):
        if v in seen or is_constant(v):
            continue
        seen.add(v)
        dv = differentiate(v)
        if dv == ZERO:
            continue
        q = normalize(mul(h, power(dv, -1)))
        if is_constant(q):
            return mul(q, v)
        c, rest = _coeff_rest(q)
        if rest == v:
            return mul(c, Const(Fraction(1, 2)), power(v, 2))
        if isinstance(rest, Pow) and rest.base == v:
            r = rest.exp
            if r == -1:
                sign = _func_sign(v)
                return mul(c, log_(v if sign > 0 else neg(v)))
            return mul(c, Const(1 / (r + 1)), power(v, r + 1))
        if isinstance(rest, Exp) and rest.arg == v:
            return mul(c, rest)
    return None


def _coeff_rest(q):
    if isinstance(q, Prod) and is_constant(q.args[0]):
        consts = [a for a in q.args if is_constant(a)]
        others = [a for a in q.args if not is_constant(a)]
        return mul(*consts), (others[0] if len(others) == 1 else mul(*others))
    return ONE, q


def _func_sign(e):
    from .zero import func_sign_at_infinity
    v = func_sign_at_infinity(e)
    if v.kind == "unknown":
        raise ZeroUnknown(e, v.bits)
    return v.sign


def _is_zero_fn(e):
    e = normalize(e)
    if e == ZERO:
        return True
    lead, _ = leading_term(e)
    return lead is None


def _P(k):
    """x log x ... log_{k-1} x."""
    return mul(*[_iter_log(i) for i in range(k)]) if k else ONE


def integral_lead(r, scale=None, max_depth=8):
    """Leading term T of an antiderivative of r (T -> 0 when r is integrable)."""
    r = normalize(r)
    dr = normalize(mul(differentiate(r), power(r, -1)))
    for k in range(max_depth):
        Pk1 = _P(k + 1)
        rho1 = add(mul(Pk1, dr), *[mul(Pk1, power(_P(i + 1), -1)) for i in range(k + 1)])
        rho1 = normalize(rho1)
        lim = limit(rho1, scale)
        if isinstance(lim, _Infinity) or lim != ZERO:
            return lead_expr(normalize(mul(r, Pk1, power(rho1, -1))), scale)
    raise Unsupported(f"no leading antiderivative found for {r} within {max_depth} iterated logarithms")


def integrate_base(h, scale=None, budget=None):
    """(Primitive H with H' = h, scale).  H -> 0 when h is integrable at infinity."""
    budget = budget or config.integrate_terms
    h = normalize(h)
    S = scale or _default["scale"]
    if h == ZERO:
        return Primitive(h, closed=ZERO, convergent=True), S
    closed = _closed_form(h)
    if closed is not None and _is_zero_fn(add(differentiate(closed), neg(h))):
        lim = limit(closed)
        convergent = not isinstance(lim, _Infinity)
        if convergent and lim != ZERO:
            closed = normalize(add(closed, neg(lim)))
        S = ensure_scale(closed, S)
        return Primitive(h, closed=closed, convergent=convergent), S
    T0 = integral_lead(h)
    convergent = limit(T0) == ZERO
    terms = []
    r = h
    for _ in range(budget):
        T = integral_lead(r) if terms else T0
        terms.append(T)
        r = normalize(add(r, neg(differentiate(T))))
        if _is_zero_fn(r):
            total = add(*terms)
            return Primitive(h, closed=total, convergent=convergent), ensure_scale(total, S)
        c = _closed_form(r)
        if c is not None and _is_zero_fn(add(differentiate(c), neg(r))):
            lim = limit(c)
            if not isinstance(lim, _Infinity) and lim != ZERO:
                c = add(c, neg(lim))
            total = add(*terms, c)
            return Primitive(h, closed=total, convergent=convergent), ensure_scale(total, S)
    nxt = integral_lead(r)
    P = Primitive(h, terms=terms, err=monomial_of(nxt), convergent=convergent, remainder=r)
    P.remainder_convergent = limit(nxt) == ZERO
    for T in terms:
        S = ensure_scale(T, S)
    return P, S
