"""Asymptotic expansion of oscillatory integrals of h sin G and h cos G.

Write S = sin G, C = cos G, g = G'.  One step of integration by parts
turns the current integral into a closed term plus a single new integral,
which is classified afresh before the next step:

* h ~ K g: peel the exact part, int K g S = -K C, and continue with the rest.
* alpha = h^-1 (h/g)' -> 0 (Diff-h): int h S = -(h/g) C + int (h/g)' C.
* |alpha| -> oo (Int-h): int h S = H S - int H g C with H = int h.
* alpha -> K (K-case): two steps at once,
  (1 + K^2) int h S = -b C + alpha b S - int (w (2K + w) h + w' b) S,
  where b = h/g and w = alpha - K.

The cosine versions follow by the same identities.  A change between the
Diff-h and Int-h directions is recorded as a sense switch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import mpmath

from . import multiseries as ms
from .errors import BudgetExhausted, PreconditionError, Unsupported
from .expr import (
    ONE, ZERO, Const, Expr, OscInt, Sum, Prod, Pow, add, cos_, differentiate, eval_float, integral_tag, mul,
    neg, normalize, power, sin_, sort_key, to_string, walk,
)
from .rational import together
from .multiseries import Monomial, ONE_MONO, mono_cmp

__all__ = [
    "CaseTag", "IntegralExpansion", "ExpTerm", "Coef", "OscConfig", "classify", "h_step",
    "H_step", "alpha_of", "expand_osc_integral", "leading_T",
]


@dataclass
class OscConfig:
    max_switches: int = 8       # sense switches allowed in one expansion
    max_kcase: int = 16         # consecutive K-case steps allowed
    cancel_budget: int = 10     # cancellations tolerated by the zero-shadow detector


config = OscConfig()


@dataclass(frozen=True)
class CaseTag:
    kind: str                   # "ClosedForm", "DiffH", "IntH", "KCase"
    K: Expr = None
    omega: Expr = None

    def __str__(self):
        if self.kind == "KCase":
            return f"KCase(K={to_string(self.K)}, omega={to_string(self.omega)})"
        if self.kind == "ClosedForm" and self.K is not None:
            return f"ClosedForm(K={to_string(self.K)})"
        return self.kind


DIFFH = CaseTag("DiffH")
INTH = CaseTag("IntH")


def _is_inf(v):
    return v is ms.INF or v is ms.NEG_INF


def _zero_fn(e):
    return ms._is_zero_fn(e)


def _size(e):
    return sum(1 for _ in walk(e))


def _compact(e):
    """The smaller of e and its rational form."""
    e = normalize(e)
    r = together(e)
    return r if _size(r) < _size(e) else e


def alpha_of(h, G):
    """h^-1 (h/g)'."""
    g = differentiate(G)
    return _compact(mul(power(h, -1), differentiate(mul(h, power(g, -1)))))


def classify(h, G, scale=None):
    h, G = normalize(h), normalize(G)
    if not ms.is_infinite(G, scale) or ms.limit(G, scale) is not ms.INF:
        raise PreconditionError(f"phase {G} does not tend to +oo")
    g = normalize(differentiate(G))
    c = ms.cmp_gamma0(h, g, scale)
    if c.kind == "Equal":
        return CaseTag("ClosedForm", K=c.ratio)
    alpha = alpha_of(h, G)
    lim = ms.limit(alpha, scale)
    if _is_inf(lim):
        return INTH
    if lim == ZERO:
        return DIFFH
    return CaseTag("KCase", K=lim, omega=_compact(add(alpha, neg(lim))))


def h_step(h, g):
    """(h/g)'."""
    return normalize(differentiate(mul(h, power(g, -1))))


def H_step(Hprev, g, scale=None):
    """(Primitive of Hprev * g, scale)."""
    if isinstance(Hprev, ms.Primitive):
        if Hprev.is_closed:
            return ms.integrate_base(mul(Hprev.closed, g), scale)
        return _chain_primitive(Hprev, g, scale)
    return ms.integrate_base(mul(Hprev, g), scale)


def _chain_primitive(P, g, scale):
    terms, S = [], scale
    for T in P.terms:
        Q, S = ms.integrate_base(mul(T, g), S)
        terms.extend(Q.terms)
    err = None
    if P.err is not None:
        err = ms.monomial_of(ms.integral_lead(mul(P.err.expr, g)))
    terms = _combine_terms(terms, err)
    out = ms.Primitive(None, terms=terms, err=err, convergent=P.convergent, inner=P, factor=g)
    return out, S


def _combine_terms(terms, err):
    """Sum like monomials, drop terms not dominating err, sort by dominance."""
    groups = {}
    for T in terms:
        for c, m in ms.flat_terms(ms.expand(T), 8):
            if err is not None and mono_cmp(m, err) <= 0:
                break
            groups[m] = add(groups.get(m, ZERO), c)
    out = []
    for m in sorted(groups, key=ms._mono_key, reverse=True):
        c = normalize(groups[m])
        if c != ZERO:
            out.append(mul(c, m.expr))
    return out


# ---------------------------------------------------------------- coefficients

class _Chain:
    """H<n> of a base function: H<0> = int base, H<k+1> = int H<k> g."""

    def __init__(self, base, G):
        self.base = base
        self.G = G
        self.g = normalize(differentiate(G))
        P, _ = ms.integrate_base(base)
        self.convergent = P.convergent
        self._approx = [(list(P.terms), P.err)]

    def approx(self, n):
        while len(self._approx) <= n:
            terms, err = self._approx[-1]
            new = []
            for T in terms:
                Q, _ = ms.integrate_base(mul(T, self.g))
                new.extend(Q.terms)
            err2 = None if err is None else ms.monomial_of(ms.integral_lead(mul(err.expr, self.g)))
            self._approx.append((_combine_terms(new, err2), err2))
        return self._approx[n]

    def value(self, n, x, dps=30):
        with mpmath.workdps(dps):
            x = mpmath.mpf(x)
            if self.convergent:
                Gx = eval_float(self.G, x, dps)
                f = lambda s: (eval_float(self.base, s, dps)
                               * (eval_float(self.G, s, dps) - Gx) ** n / factorial(n))
                return (-1) ** (n + 1) * ms._quad_tail(f, x)
            terms, _ = self.approx(n)
            return mpmath.fsum(eval_float(t, x, dps) for t in terms)


class Coef:
    """A coefficient function: a closed expression or +-H<n> of a chain."""

    def __init__(self, expr=None, chain=None, n=0, sign=1):
        self.closed = normalize(expr) if expr is not None else None
        self.chain, self.n, self.sign = chain, n, sign

    @property
    def is_closed(self):
        return self.closed is not None

    def approx_terms(self):
        if self.closed is not None:
            return [self.closed], None
        terms, err = self.chain.approx(self.n)
        return [mul(Const(self.sign), t) for t in terms], err

    @property
    def approx(self):
        terms, _ = self.approx_terms()
        return add(*terms) if terms else ZERO

    @property
    def err(self):
        return self.approx_terms()[1]

    def monomial(self):
        terms, err = self.approx_terms()
        if terms:
            return ms.monomial_of(terms[0])
        return err

    def value(self, x, dps=30):
        if self.closed is not None:
            return eval_float(self.closed, x, dps)
        return self.sign * self.chain.value(self.n, x, dps)

    def scaled(self, c):
        if self.closed is not None:
            return Coef(mul(c, self.closed))
        if not isinstance(c, Const) or abs(c.value) != 1:
            raise Unsupported("only sign changes of an unevaluated primitive are tracked")
        return Coef(chain=self.chain, n=self.n, sign=self.sign * int(c.value))

    def __str__(self):
        if self.closed is not None:
            return to_string(self.closed)
        terms, err = self.approx_terms()
        body = " + ".join(f"({to_string(t)})" for t in terms) if terms else "0"
        return f"{body} + O({err})" if err is not None else body


# ---------------------------------------------------------------- expansion terms

@dataclass
class ExpTerm:
    parts: list                  # [(Coef, "sin" | "cos" | "1")]
    G: Expr
    gamma0: Monomial
    tags: tuple = ()

    def trig(self, fn):
        return ONE if fn == "1" else (sin_(self.G) if fn == "sin" else cos_(self.G))

    @property
    def expr(self):
        return add(*[mul(c.approx, self.trig(fn)) for c, fn in self.parts])

    @property
    def exact_expr(self):
        if not all(c.is_closed for c, _ in self.parts):
            return None
        return add(*[mul(c.closed, self.trig(fn)) for c, fn in self.parts])

    def value(self, x, dps=30):
        with mpmath.workdps(dps):
            Gx = eval_float(self.G, x, dps)
            tv = {"sin": mpmath.sin(Gx), "cos": mpmath.cos(Gx), "1": mpmath.mpf(1)}
            return mpmath.fsum(c.value(x, dps) * tv[fn] for c, fn in self.parts)

    def envelope(self, x, dps=30):
        """Bound on |term| over a period: sum of coefficient magnitudes."""
        with mpmath.workdps(dps):
            return mpmath.fsum(abs(c.value(x, dps)) for c, _ in self.parts)

    def to_json(self):
        rows = []
        for c, fn in self.parts:
            row = {"gamma0": to_string(self.gamma0.expr), "coeff": to_string(c.approx),
                   "trig": {"fn": fn, "arg": to_string(self.G) if fn != "1" else ""},
                   "constants": list(self.tags)}
            if not c.is_closed and c.err is not None:
                row["error"] = to_string(c.err.expr)
            rows.append(row)
        return rows

    def __str__(self):
        return " + ".join(f"({c})*{fn}({to_string(self.G)})" if fn != "1" else f"({c})"
                          for c, fn in self.parts)


# ---------------------------------------------------------------- the recurrence

@dataclass
class _ChainIntegrand:
    """sign * H<n> * g, the integrand left after an Int-h step with no closed primitive."""
    chain: _Chain
    n: int
    sign: int


def _step(a, fn, G, g, scale):
    """One integration-by-parts step on int a*fn(G).

    Returns (case, parts, new_integrand, new_fn); new_integrand is None when
    the integral was evaluated exactly.
    """
    if isinstance(a, _ChainIntegrand):
        ch, n = a.chain, a.n
        terms_n, _ = ch.approx(n)
        if n == 0:
            alpha = mul(ch.base, power(mul(add(*terms_n), g), -1))
        else:
            alpha = mul(add(*ch.approx(n - 1)[0]), power(add(*terms_n), -1))
        if not _is_inf(ms.limit(normalize(alpha), scale)):
            raise Unsupported("an unevaluated primitive left the Int-h regime")
        A = Coef(chain=ch, n=n + 1, sign=a.sign)
        nxt = _ChainIntegrand(ch, n + 1, -a.sign if fn == "sin" else a.sign)
        return INTH, [(A, fn)], nxt, ("cos" if fn == "sin" else "sin")

    case = classify(a, G, scale)
    b = _compact(mul(a, power(g, -1)))
    if case.kind == "ClosedForm":
        K = case.K
        part = (Coef(neg(K)), "cos") if fn == "sin" else (Coef(K), "sin")
        eps = normalize(add(a, neg(mul(K, g))))
        return case, [part], (None if _zero_fn(eps) else eps), fn
    if case.kind == "DiffH":
        db = _compact(differentiate(b))
        if fn == "sin":
            part, nxt, nfn = (Coef(neg(b)), "cos"), db, "cos"
        else:
            part, nxt, nfn = (Coef(b), "sin"), normalize(neg(db)), "sin"
        return case, [part], (None if _zero_fn(nxt) else nxt), nfn
    if case.kind == "IntH":
        P, _ = ms.integrate_base(a, scale)
        nfn = "cos" if fn == "sin" else "sin"
        sgn = -1 if fn == "sin" else 1
        if P.is_closed:
            A = Coef(P.closed)
            nxt = normalize(mul(Const(sgn), P.closed, g))
            return case, [(A, fn)], (None if _zero_fn(nxt) else nxt), nfn
        ch = _Chain(a, G)
        return case, [(Coef(chain=ch, n=0), fn)], _ChainIntegrand(ch, 0, sgn), nfn
    K, w = case.K, case.omega
    d = normalize(add(ONE, mul(K, K)))
    inv = power(d, -1)
    alpha_b = mul(add(K, w), b)
    if fn == "sin":
        parts = [(Coef(mul(neg(b), inv)), "cos"), (Coef(mul(alpha_b, inv)), "sin")]
    else:
        parts = [(Coef(mul(b, inv)), "sin"), (Coef(mul(alpha_b, inv)), "cos")]
    rem = _compact(mul(Const(-1), inv, add(mul(w, add(mul(Const(2), K), w), a), mul(differentiate(w), b))))
    return case, parts, (None if _zero_fn(rem) else rem), fn


@dataclass
class IntegralExpansion:
    """Lazily produced expansion of int h*fn(G) with its case history."""
    h: Expr
    G: Expr
    fn: str = "sin"
    tag: str = None
    scale: object = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.h, self.G = normalize(self.h), normalize(self.G)
        self.g = normalize(differentiate(self.G))
        if self.tag is None:
            self.tag = integral_tag(self.h, self.G, self.fn)
        self._terms = []
        self._state = (self.h, self.fn)
        self._done = _zero_fn(self.h)
        self._dir = None
        self._switches = 0
        self._kruns = 0
        self.exhausted = None
        self._T = None

    @property
    def exact(self):
        """True once the remainder integral vanished: the expansion is a closed form."""
        return self._done and self.exhausted is None

    @property
    def remainder(self):
        """(integrand, fn) of the integral still to be expanded, or None."""
        return None if self._done else self._state

    def _advance(self):
        a, fn = self._state
        case, parts, nxt, nfn = _step(a, fn, self.G, self.g, self.scale)
        switched = False
        if case.kind in ("DiffH", "IntH"):
            if self._dir is not None and case.kind != self._dir:
                switched = True
                self._switches += 1
            self._dir = case.kind
        self._kruns = self._kruns + 1 if case.kind == "KCase" else 0
        self.history.append({"step": len(self.history), "case": str(case), "switched": switched})
        if self._switches > config.max_switches:
            self.exhausted = "sense-switch budget"
            raise BudgetExhausted(f"more than {config.max_switches} sense switches")
        if self._kruns > config.max_kcase:
            self.exhausted = "K-case budget"
            raise BudgetExhausted(f"more than {config.max_kcase} consecutive K-case steps")
        self._state = (nxt, nfn)
        if nxt is None:
            self._done = True
        return parts

    def _emit(self, parts):
        mono = None
        keep = []
        for c, f in parts:
            m = c.monomial() if c.is_closed is False or not _zero_fn(c.closed) else None
            if m is None:
                continue
            keep.append((c, f))
            mono = m if mono is None or mono_cmp(m, mono) > 0 else mono
        if not keep:
            return
        last = self._terms[-1] if self._terms else None
        if last is not None and mono_cmp(mono, last.gamma0) == 0:
            last.parts.extend(keep)
            return
        self._terms.append(ExpTerm(keep, self.G, mono, (self.tag,)))

    def _fill(self, n):
        """Make at least n terms available when possible (one extra step settles ties)."""
        while not self._done and len(self._terms) <= n:
            self._emit(self._advance())

    def terms(self, n):
        try:
            self._fill(n)
        except BudgetExhausted:
            pass
        return self._terms[:n]

    def term(self, k):
        ts = self.terms(k + 1)
        return ts[k] if k < len(ts) else None

    def partial_expr(self, n):
        return add(*[t.expr for t in self.terms(n)])

    def partial_value(self, n, x, dps=30):
        with mpmath.workdps(dps):
            return mpmath.fsum(t.value(x, dps) for t in self.terms(n))

    @property
    def T(self):
        if self._T is None:
            self._T = leading_T(self.h, self.G, self.scale)
        return self._T

    @property
    def convergent(self):
        """True when the integral converges at infinity (T -> 0)."""
        return mono_cmp(self.T, ONE_MONO) < 0

    def to_json(self, n):
        rows = []
        for t in self.terms(n):
            rows.extend(t.to_json())
        return {"terms": rows, "history": list(self.history), "constant": self.tag,
                "exact": self.exact, "truncated": not self._done or self.exhausted is not None}


def expand_osc_integral(h, G=None, fn="sin", budget=None, scale=None, tag=None):
    """Expansion of int h*sin(G) (or cos); demands `budget` terms up front when given."""
    if isinstance(h, OscInt):
        h, G, fn, tag = h.integrand, h.phase, h.kind, h.tag
    E = IntegralExpansion(h, G, fn, tag, scale)
    if budget:
        E.terms(budget)
    return E


def leading_T(h, G, scale=None):
    """Monomial T with int h sin G asymptotic to T times a trig coefficient."""
    h, G = normalize(h), normalize(G)
    case = classify(h, G, scale)
    g = differentiate(G)
    if case.kind == "ClosedForm":
        return ONE_MONO
    if case.kind in ("DiffH", "KCase"):
        return ms.monomial_of(normalize(mul(h, power(g, -1))), scale)
    P, _ = ms.integrate_base(h, scale)
    return ms.monomial_of(P.terms[0], scale)


# ---------------------------------------------------------------- shadows and ghosts

def _scale_for(exprs, i=None, scale=None):
    """A scale over which every expression expands and which contains the element i."""
    S = scale or ms.default_scale()
    if i is not None and not isinstance(i, int) and i not in S:
        S = S.extend(i)
    for e in exprs:
        if e is not None and not isinstance(e, Monomial):
            S = ms.ensure_scale(e, S)
    return S


def _element(i, S):
    return S.elem(ms._level_of(S, i))


def _ge_class(f, t, S):
    """gamma(f) >= gamma(t) for an expression or monomial f and an element t."""
    m = f if isinstance(f, Monomial) else ms.monomial_of(f, S)
    return ms.cmp_gamma(m, Monomial({t: 1})).kind != "Less"


def _eta(f, i, S, depth=0):
    """(i-shadow of f as an expression, exact flag)."""
    f = normalize(f)
    if isinstance(f, Const):
        return f, True
    if _zero_fn(f):
        return ZERO, True
    A = ms.expand(f, S)
    kind, _ = ms._chain(A, ms._level_of(A.scale, i))
    if kind == "I":
        return ZERO, True
    if kind == "out":
        raise PreconditionError(f"{to_string(f)} has no shadow: it grows against the element {_element(i, S)}")
    try:
        if ms.ghost(A, i).is_zero():
            return f, True
    except BudgetExhausted:
        pass
    if depth < 6:
        if isinstance(f, Sum):
            parts = [_eta(a, i, S, depth + 1) for a in f.args]
            return normalize(add(*[p for p, _ in parts])), all(ok for _, ok in parts)
        if isinstance(f, (Prod, Pow)):
            # eta is multiplicative on units; monomials are kept whole
            factors = f.args if isinstance(f, Prod) else (f,)
            m, out, exact = ONE_MONO, [], True
            for a in factors:
                base, q = (a.base, a.exp) if isinstance(a, Pow) else (a, Fraction(1))
                mb = ms.monomial_of(base, S)
                m = m * mb ** q
                u = together(mul(base, power(mb.expr, -1)))
                e, ok = _eta(u, i, S, depth + 1)
                out.append(power(e, q) if e != ZERO else ZERO)
                exact = exact and ok
            k, _ = ms._chain(ms.expand(m.expr, S), ms._level_of(S, i))
            if k == "I":
                return ZERO, True
            return normalize(mul(m.expr, *out)), exact
    return normalize(ms.to_expr(ms.shadow(A, i), per_level=6)), False


def eta(f, i, scale=None):
    """The i-shadow of f, as an expression: exact when f splits along sums, products and powers."""
    S = _scale_for([f], i, scale)
    return _eta(f, i, S)[0]


def xi(f, i, scale=None):
    """The i-ghost f - eta_i(f)."""
    return _compact(add(f, neg(eta(f, i, scale))))


@dataclass
class ShadowResult:
    """phi_i with T*phi_i = P1*S + P2*C + A (cases i, ii, iv, peel) or int h_i fn(G) + A (case iii)."""
    case: str
    T: Monomial
    A: str                       # name of the arbitrary constant, None when it is forced to 0
    G: Expr
    fn: str
    P: tuple = None              # (P1, P2) in the (sin G, cos G) basis
    integral: Expr = None
    omega: Expr = None
    h_i: Expr = None
    exact: bool = True

    @property
    def bracket(self):
        """T*phi_i - A: the part of the integral seen by the shadow."""
        if self.integral is not None:
            return self.integral
        P1, P2 = self.P
        return normalize(add(mul(P1, sin_(self.G)), mul(P2, cos_(self.G))))

    @property
    def phi(self):
        return _compact(mul(power(self.T.expr, -1), self.bracket))

    def __str__(self):
        body = to_string(self.phi)
        if self.A:
            body += f" + {self.A}/({to_string(self.T.expr)})"
        return f"case {self.case}: {body}"


def _rotate(P1, P2, fn):
    """Coefficients in the (S, C) basis of P1*T1 + P2*T2 where (T1, T2) = (S, C) for sin, (C, -S) for cos."""
    if fn == "sin":
        return P1, P2
    return normalize(neg(P2)), P1


def shadow_phi(h, G=None, i=None, fn="sin", scale=None):
    """The i-shadow of T^-1 int h*fn(G), with T the dominance class of the integral."""
    if isinstance(h, OscInt):
        h, G, fn = h.integrand, h.phase, h.kind
    h, G = normalize(h), normalize(G)
    g = normalize(differentiate(G))
    S = _scale_for([h, G, g], i, scale)
    t = _element(i, S)
    tag = integral_tag(h, G, fn)
    case = classify(h, G, S)
    T = leading_T(h, G, S)
    A = None if _ge_class(T, t, S) else tag
    Te = T.expr
    if case.kind == "ClosedForm":
        P1, P2 = _rotate(ZERO, neg(case.K), fn)
        return ShadowResult("peel", T, A, G, fn, P=(P1, P2))
    alpha = alpha_of(h, G)
    lim = ms.limit(alpha, S)
    a_ge = _ge_class(alpha, t, S) if not _zero_fn(alpha) else False
    if lim == ZERO and a_ge:
        e, ok = _eta(mul(h, power(mul(Te, g), -1)), i, S)
        P1, P2 = _rotate(ZERO, normalize(neg(mul(Te, e))), fn)
        return ShadowResult("i", T, A, G, fn, P=(P1, P2), exact=ok)
    if _is_inf(lim) and a_ge:
        H, _ = ms.integrate_base(h, S)
        Hx = H.closed if H.is_closed else add(*H.terms)
        e, ok = _eta(mul(Hx, power(Te, -1)), i, S)
        P1, P2 = _rotate(normalize(mul(Te, e)), ZERO, fn)
        return ShadowResult("ii", T, A, G, fn, P=(P1, P2), exact=ok and H.is_closed)
    Th = ms.monomial_of(h, S).expr
    e, ok = _eta(mul(h, power(Th, -1)), i, S)
    h_i = normalize(mul(Th, e))
    if not _ge_class(G, t, S):
        I = OscInt(h_i, G, fn) if not _zero_fn(h_i) else ZERO
        return ShadowResult("iii", T, A, G, fn, integral=I, h_i=h_i, exact=ok)
    chi = _compact(mul(differentiate(Te), power(mul(Te, g), -1)))
    w, ok2 = _eta(chi, i, S)
    w = _compact(w)
    d = power(mul(g, add(ONE, mul(w, w))), -1)
    P1, P2 = _rotate(_compact(mul(h_i, w, d)), _compact(neg(mul(h_i, d))), fn)
    return ShadowResult("iv", T, A, G, fn, P=(P1, P2), omega=w, h_i=h_i, exact=ok and ok2)


def ghost_normal_form(h, G=None, i=None, fn="sin", scale=None):
    """(zeta1, zeta2, T) with the i-ghost of T^-1 int h*fn(G) equal to T^-1 (int zeta1 S + int zeta2 C)."""
    if isinstance(h, OscInt):
        h, G, fn = h.integrand, h.phase, h.kind
    h, G = normalize(h), normalize(G)
    g = normalize(differentiate(G))
    r = shadow_phi(h, G, i, fn, scale)
    if r.integral is not None:
        z = _compact(add(h, neg(r.h_i)))
        z1, z2 = (z, ZERO) if fn == "sin" else (ZERO, z)
        return z1, z2, r.T
    P1, P2 = r.P
    # int h T1 - (P1 S + P2 C) written as one integral over S and C
    hs, hc = (h, ZERO) if fn == "sin" else (ZERO, h)
    z1 = _compact(add(hs, neg(differentiate(P1)), mul(g, P2)))
    z2 = _compact(add(hc, neg(differentiate(P2)), neg(mul(g, P1))))
    return z1, z2, r.T


def split_G(G, i, scale=None):
    """(G1, G2) with G = G1 + G2, G2' = o(G1') and gamma(G2'/G1') >= gamma(t_i); G2 = 0 if no split."""
    G = normalize(G)
    S = _scale_for([G], i, scale)
    t = _element(i, S)
    args = list(G.args) if isinstance(G, Sum) else [G]
    keep, moved = [], []
    g = normalize(differentiate(G))
    for a in args:
        da = normalize(differentiate(a))
        if not ms.is_infinite(a, S) or _zero_fn(da):
            keep.append(a)
            continue
        r = normalize(mul(da, power(g, -1)))
        if ms.limit(r, S) == ZERO and _ge_class(r, t, S):
            moved.append(a)
        else:
            keep.append(a)
    if not moved or not keep:
        return G, ZERO
    return normalize(add(*keep)), normalize(add(*moved))


def delta_shadow(G, i, scale=None):
    """eta_i(G')."""
    return eta(differentiate(G), i, scale)


# ---------------------------------------------------------------- merged expansions of sums

@dataclass
class MergedTerm:
    """All contributions of one monomial: [(constant, fn, arg)]."""
    mono: Monomial
    parts: list
    tags: tuple = ()

    @property
    def expr(self):
        out = []
        for c, fn, arg in self.parts:
            trig = ONE if fn == "1" else (sin_(arg) if fn == "sin" else cos_(arg))
            out.append(mul(c, self.mono.expr, trig))
        return add(*out)

    def to_json(self):
        return [{"gamma0": to_string(self.mono.expr), "coeff": to_string(c),
                 "trig": {"fn": fn, "arg": to_string(arg) if fn != "1" else ""},
                 "constants": list(self.tags)} for c, fn, arg in self.parts]

    def __str__(self):
        return to_string(self.expr)


_STOP = object()


def _flat(A):
    """Lazy (monomial, leaf) stream of a multiseries in dominance order."""
    S = A.scale

    def rec(c, lv, mono):
        if lv == 0:
            yield Monomial(mono), c
            return
        el = S.elem(lv)
        for r, cc in c:
            m2 = dict(mono)
            if r != 0:
                m2[el] = r
            yield from rec(cc, lv - 1, m2)
    return rec(A, A.level, {})


def _coef_items(expr, key, scale=None):
    for m, c in _flat(ms.expand(expr, scale)):
        yield m, key, c


def _split_phase(c, fn, G, scale):
    """c*fn(G) as [(coefficient, fn, generator argument)] with constant and vanishing phase moved into c."""
    from .trig import normalize_argument
    Ginf, Gc, G0 = normalize_argument(G, scale)
    phi = normalize(add(Gc, G0))
    if phi == ZERO:
        return [(c, fn, Ginf)]
    cp, sp = cos_(phi), sin_(phi)
    if fn == "sin":
        return [(mul(c, cp), "sin", Ginf), (mul(c, sp), "cos", Ginf)]
    return [(mul(c, cp), "cos", Ginf), (neg(mul(c, sp)), "sin", Ginf)]


class _Source:
    """One summand of a sum: a lazy list of (bound, item stream) providers with decreasing bounds."""

    def __init__(self, providers, tags=()):
        self._it = iter(providers)
        self.tags = tags
        self.pending = next(self._it, None)

    def pop(self):
        p = self.pending
        self.pending = next(self._it, None)
        return p


def _expansion_providers(E, c, budget, scale):
    k = 0
    while True:
        t = E.term(k)
        if t is None:
            if E.exhausted is not None and E._terms:
                m = E._terms[-1].gamma0
                yield m, iter([(m, _STOP, None)])
            return
        if k >= budget:
            yield t.gamma0, iter([(t.gamma0, _STOP, None)])
            return
        provs = []
        for coef, fn in t.parts:
            if coef.is_closed:
                for cc, f2, arg in _split_phase(mul(c, coef.closed), fn, E.G, scale):
                    if _zero_fn(cc):
                        continue
                    provs.append((ms.monomial_of(cc, scale), _coef_items(cc, (f2, arg), scale)))
            else:
                terms, err = coef.approx_terms()
                items = []
                for T in terms:
                    lc, lm = ms.leading_term(mul(c, T), scale)[0]
                    items.append((lm, (fn, E.G), lc))
                if err is not None:
                    items.append((err, _STOP, None))
                provs.append((items[0][0], iter(items)))
        provs.sort(key=lambda p: ms._mono_key(p[0]), reverse=True)
        yield from provs
        k += 1


def _hg_providers(e, scale):
    from .trig import linearize, to_normal_form
    P = to_normal_form(e, scale)
    provs = []
    for c, fn, arg in linearize(P, scale):
        provs.append((ms.monomial_of(c, scale), _coef_items(c, (fn, arg), scale)))
    provs.sort(key=lambda p: ms._mono_key(p[0]), reverse=True)
    return provs


def _summands(F):
    """[(constant, OscInt) or (None, expression)] for the summands of F."""
    F = normalize(F)
    out = []
    for a in (F.args if isinstance(F, Sum) else (F,) if F != ZERO else ()):
        ints = [n for n in walk(a) if isinstance(n, OscInt)]
        if not ints:
            out.append((None, a))
            continue
        if isinstance(a, OscInt):
            out.append((ONE, a))
            continue
        if isinstance(a, Prod) and len(a.args) == 2 and isinstance(a.args[0], Const) \
                and isinstance(a.args[1], OscInt):
            out.append((a.args[0], a.args[1]))
            continue
        raise Unsupported(f"integrals must appear with constant coefficients: {to_string(a)}")
    return out


class _Merge:
    """Merged stream of the summands of F: each step yields a MergedTerm or a cancelled monomial."""

    def __init__(self, F, budget=12, scale=None):
        self.scale = scale
        self.sources, self.expansions = [], []
        for c, part in _summands(F):
            if c is None:
                self.sources.append(_Source(_hg_providers(part, scale)))
            else:
                E = expand_osc_integral(part, scale=scale)
                self.expansions.append((c, E))
                self.sources.append(_Source(_expansion_providers(E, c, budget, scale), (E.tag,)))
        self.active = []          # [head, iterator, tags]
        self.truncated = False

    def _activate(self, m):
        changed = True
        while changed:
            changed = False
            for s in self.sources:
                p = s.pending
                if p is not None and (m is None or mono_cmp(p[0], m) >= 0):
                    s.pop()
                    head = next(p[1], None)
                    if head is not None:
                        self.active.append([head, p[1], s.tags])
                    changed = True
                    m = self._max()

    def _max(self):
        m = None
        for a in self.active:
            if m is None or mono_cmp(a[0][0], m) > 0:
                m = a[0][0]
        return m

    def __iter__(self):
        while True:
            self._activate(self._max())
            m = self._max()
            if m is None:
                return
            group = [a for a in self.active if mono_cmp(a[0][0], m) == 0]
            if any(a[0][1] is _STOP for a in group):
                self.truncated = True
                return
            sums, tags = {}, []
            for a in group:
                _, key, c = a[0]
                sums.setdefault(key, []).append(c)
                tags.extend(a[2])
                a[0] = next(a[1], None)
            self.active = [a for a in self.active if a[0] is not None]
            parts = []
            for (fn, arg), cs in sums.items():
                c = normalize(add(*cs))
                if not ms._is_zero(c, 0):
                    parts.append((c, fn, arg))
            ncontrib = sum(len(cs) for cs in sums.values())
            if not parts:
                yield ("cancel", m, ncontrib)
            else:
                parts.sort(key=lambda p: (p[1], sort_key(p[2])))
                yield ("term", MergedTerm(m, parts, tuple(dict.fromkeys(tags))), ncontrib)


@dataclass
class ZeroShadowResult:
    kind: str                    # "ZeroShadow", "NonzeroAfter", "Exhausted"
    k: int = 0
    cancellations: int = 0
    level: object = None
    ghost: Expr = None

    def __str__(self):
        if self.kind == "NonzeroAfter":
            return f"NonzeroAfter({self.k})"
        if self.kind == "ZeroShadow":
            return f"ZeroShadow({self.level})"
        return "Exhausted"


def _next_faster(m, S):
    """The element of S just faster than the fastest element of m."""
    top = m.top()
    if top is None:
        return S.elem(1)
    lv = S.level(top) if top in S else None
    if lv is None or lv + 1 > len(S):
        return None
    return S.elem(lv + 1)


def _bracket_and_ghost(F, i, S):
    """(sum of the i-shadow brackets of the summands, sum of their i-ghosts)."""
    from .trig import linearize, to_normal_form
    br, gh = [], []
    for c, part in _summands(F):
        if c is None:
            for p, fn, arg in linearize(to_normal_form(part, S), S):
                e, _ = _eta(p, i, S)
                trig = ONE if fn == "1" else (sin_(arg) if fn == "sin" else cos_(arg))
                br.append(mul(e, trig))
                gh.append(mul(_compact(add(p, neg(e))), trig))
            continue
        r = shadow_phi(part, i=i, scale=S)
        br.append(mul(c, r.bracket))
        z1, z2, _ = ghost_normal_form(part, i=i, scale=S)
        for z, kind in ((z1, "sin"), (z2, "cos")):
            if not _zero_fn(z):
                gh.append(mul(c, OscInt(z, part.phase, kind)))
    return normalize(add(*br)), normalize(add(*gh))


def _field_parts(F):
    """Base-field functions whose scale covers every summand of F."""
    from .trig import linearize, to_normal_form
    out = []
    for c, part in _summands(F):
        if c is None:
            for p, fn, arg in linearize(to_normal_form(part)):
                out.extend([p] if fn == "1" else [p, arg])
        else:
            out.extend([part.integrand, part.phase])
    return out


def _is_constant_hg(B, S):
    from .trig import to_normal_form
    return to_normal_form(differentiate(B), S).is_zero()


def detect_zero_shadow(F, i=None, cancel_budget=None, scale=None):
    """Decide whether the expansion of F starts below the i-shadow.

    The summands are expanded together; once cancel_budget monomials have
    cancelled in a row, the shadows of the summands are summed and the sum
    differentiated: a zero derivative means the shadow is a constant, which
    is absorbed into the arbitrary constants.
    """
    if isinstance(F, str):
        from .expr import parse
        F = parse(F)
    F = normalize(F)
    budget = config.cancel_budget if cancel_budget is None else cancel_budget
    if F == ZERO:
        return ZeroShadowResult("ZeroShadow", ghost=ZERO)
    M = _Merge(F, budget + 4, scale)
    k = run = 0
    last = None
    for kind, obj, _ in M:
        k += 1
        if kind == "term":
            return ZeroShadowResult("NonzeroAfter", k, k - 1)
        run += 1
        last = obj
        if run >= budget:
            break
    else:
        if not M.truncated:
            return ZeroShadowResult("ZeroShadow", k, run, ghost=ZERO)
    S = _scale_for(_field_parts(F), None, scale)
    if i is None:
        if last is None:
            return ZeroShadowResult("Exhausted", k, run)
        i = _next_faster(last, S)
        if i is None:
            return ZeroShadowResult("Exhausted", k, run)
    S = _scale_for([], i, S)
    try:
        B, ghost = _bracket_and_ghost(F, i, S)
        if _is_constant_hg(B, S):
            return ZeroShadowResult("ZeroShadow", k, run, _element(i, S), ghost)
    except (Unsupported, PreconditionError):
        pass
    return ZeroShadowResult("Exhausted", k, run)


@dataclass
class GeneralExpansion:
    terms: list
    cancellations: int
    truncated: bool
    zero_shadow: ZeroShadowResult = None
    ghost: "GeneralExpansion" = None
    history: dict = field(default_factory=dict)

    @property
    def expr(self):
        return add(*[t.expr for t in self.terms])

    def to_json(self):
        rows = []
        for t in self.terms:
            rows.extend(t.to_json())
        out = {"terms": rows, "cancellations": self.cancellations, "truncated": self.truncated,
               "history": self.history}
        if self.zero_shadow is not None:
            out["zero_shadow"] = str(self.zero_shadow)
        return out


def expand_general(F, n=3, cancel_budget=None, scale=None, _depth=0):
    """First n nonzero terms of a sum of integrals and trig-algebra elements.

    Products of trig factors under an integral sign must first be written as
    sums (see integrate_hg); summands are expanded separately and merged by
    dominance, equal monomials being combined.  A run of cancelling
    monomials longer than cancel_budget triggers the zero-shadow test, and
    when the shadow vanishes the expansion continues with the ghost.
    """
    if isinstance(F, str):
        from .expr import parse
        F = parse(F)
    budget = config.cancel_budget if cancel_budget is None else cancel_budget
    M = _Merge(F, n + budget + 4, scale)
    out, total, run = [], 0, 0
    last = None
    for kind, obj, _ in M:
        if kind == "cancel":
            total += 1
            run += 1
            last = obj
            if run >= budget:
                break
            continue
        run = 0
        out.append(obj)
        if len(out) >= n:
            break
    else:
        return GeneralExpansion(out, total, M.truncated, history=_histories(M))
    if len(out) >= n:
        return GeneralExpansion(out, total, False, history=_histories(M))
    z = detect_zero_shadow(F, None, budget, scale) if not out else ZeroShadowResult("Exhausted")
    if z.kind != "ZeroShadow" or _depth > 3:
        raise BudgetExhausted(f"{total} cancelling terms and no vanishing shadow found",
                              partial=GeneralExpansion(out, total, True, z, history=_histories(M)))
    inner = expand_general(z.ghost, n, budget, scale, _depth + 1) if z.ghost != ZERO else \
        GeneralExpansion([], 0, False)
    return GeneralExpansion(inner.terms, total + inner.cancellations, inner.truncated, z, inner,
                            history=_histories(M))


def _histories(M):
    return {E.tag: list(E.history) for _, E in M.expansions}


def integrate_hg(P, n=3, scale=None):
    """Expansion of int P for a trig-algebra element P, via its product-to-sum form."""
    from .trig import linearize, to_normal_form
    if isinstance(P, str):
        from .expr import parse
        P = parse(P)
    pieces = []
    for c, fn, arg in linearize(to_normal_form(P, scale) if isinstance(P, Expr) else P, scale):
        if fn == "1":
            Q, _ = ms.integrate_base(c, scale)
            if not Q.is_closed:
                raise Unsupported(f"no closed primitive for {to_string(c)}")
            pieces.append(Q.closed)
        else:
            pieces.append(OscInt(c, arg, fn))
    return expand_general(add(*pieces), n, scale=scale)


# ---------------------------------------------------------------- second-order equations

@dataclass
class ODESolution:
    """y = S int h C - C int h S + K1 S + K2 C with h = -f/g^2, solving g y'' - g' y' + g^3 y + f = 0."""
    g: Expr
    f: Expr
    G: Expr
    h: Expr
    int_s: IntegralExpansion
    int_c: IntegralExpansion
    K1: Expr = ZERO
    K2: Expr = ZERO

    def expr(self, n=3):
        """Truncation with n terms of each integral, in trig normal form."""
        from .trig import to_normal_form
        S, C = sin_(self.G), cos_(self.G)
        y = add(mul(S, self.int_c.partial_expr(n)), neg(mul(C, self.int_s.partial_expr(n))),
                mul(self.K1, S), mul(self.K2, C))
        return to_normal_form(y).expr

    def terms(self, n=2, max_depth=12):
        """The first n terms of y, each a (trig polynomial, monomial) product.

        Terms of the two integrals may cancel in y, so the integrals are
        deepened until every kept term dominates the first omitted one.
        """
        from .trig import expand_hg, to_normal_form
        for k in range(n, n + max_depth):
            y = to_normal_form(self.expr(k))
            if y.is_zero():
                return []
            nxt = [E.term(k) for E in (self.int_s, self.int_c)]
            cut = [t.gamma0 for t in nxt if t is not None]
            sure = []
            for c, m in ms.flat_terms(expand_hg(y), n + 4):
                if any(mono_cmp(m, b) <= 0 for b in cut):
                    break
                sure.append(normalize(mul(c, m.expr)))
                if len(sure) == n:
                    return sure
            if not cut:
                return sure
        raise BudgetExhausted(f"fewer than {n} certain terms after {n + max_depth} terms of each integral")

    def residual(self, n=3, y=None):
        """g y'' - g' y' + g^3 y + f for the n-term truncation (or for y), in trig normal form."""
        from .trig import to_normal_form
        y = self.expr(n) if y is None else y
        g = self.g
        r = add(mul(g, differentiate(differentiate(y))), neg(mul(differentiate(g), differentiate(y))),
                mul(power(g, 3), y), self.f)
        return to_normal_form(r)


def solve_ode(g, f, K1=ZERO, K2=ZERO, scale=None):
    """Solution of g y'' - g' y' + g^3 y + f = 0 through two oscillatory integrals."""
    from .expr import as_expr
    g, f = normalize(as_expr(g)), normalize(as_expr(f))
    P, _ = ms.integrate_base(g, scale)
    if not P.is_closed:
        raise Unsupported(f"no closed primitive for g = {to_string(g)}")
    G = P.closed
    h = _compact(neg(mul(f, power(g, -2))))
    return ODESolution(g, f, G, h, expand_osc_integral(h, G, "sin", scale=scale),
                       expand_osc_integral(h, G, "cos", scale=scale), as_expr(K1), as_expr(K2))
