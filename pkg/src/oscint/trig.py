"""The algebra of exp-log coefficients times sines and cosines of unbounded arguments.

An element is held in normal form as a sum of p * sigma, where p lies in the
exp-log field and sigma is a product of powers of sin(G) and cos(G) over a
set of generators G.  Cosines appear at most to the first power: every cos^2
is rewritten as 1 - sin^2.  Generators are rationally independent.  Since
only rational multipliers are supported, arguments that are rational
multiples of one another share a single generator and multiple angles are
expanded with the addition formulae.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import product
from math import gcd

from . import multiseries as ms
from .errors import HypothesisViolation, Unsupported, ZeroUnknown
from .expr import (
    ONE, ZERO, Const, Cos, Exp, Expr, Log, OscInt, Pow, Prod, Sin, Sum,
    add, cos_, differentiate, has_trig, mul, neg, normalize, power, sin_, sort_key, to_string,
)
from .multiseries import Monomial, ONE_MONO, mono_cmp

__all__ = [
    "TrigMonomial", "HGElem", "normalize_argument", "to_normal_form", "gamma0_hg", "diff_hg",
    "flutter", "quotient_derivative_gamma0", "quotient_derivative_gamma0_direct", "expand_hg",
    "linearize", "hg_to_json",
]


# ---------------------------------------------------------------- argument normalization

def normalize_argument(G, scale=None, max_terms=16):
    """Split G into (G_inf, G_c, G_0): unbounded part, constant, part tending to 0."""
    G = normalize(G)
    parts = G.args if isinstance(G, Sum) else (G,)
    inf, fin = [], []
    for a in parts:
        if not ms.is_infinite(a, scale):
            fin.append(a)
            continue
        head = _infinite_head(a, scale, max_terms)
        if head is None:
            inf.append(a)
        else:
            inf.append(head)
            fin.append(normalize(add(a, neg(head))))
    rest = normalize(add(*fin)) if fin else ZERO
    Gc = ms.limit(rest, scale) if rest != ZERO else ZERO
    if Gc is ms.INF or Gc is ms.NEG_INF:
        raise AssertionError("finite part diverges")
    G0 = normalize(add(rest, neg(Gc)))
    return normalize(add(*inf)) if inf else ZERO, normalize(Gc), G0


def _infinite_head(a, scale, max_terms):
    """Sum of the unbounded terms of a's expansion, if there are finitely many."""
    A = ms.expand(a, scale)
    head = []
    for c, m in ms.flat_terms(A, max_terms):
        if mono_cmp(m, ONE_MONO) <= 0:
            break
        head.append(mul(c, m.expr))
        if len(head) >= max_terms:
            return None
    if not head:
        return None
    h = normalize(add(*head))
    if h == a or ms.is_infinite(normalize(add(a, neg(h))), scale):
        return None
    return h


# ---------------------------------------------------------------- generators

class _Generators:
    """Groups unbounded arguments into rational multiples of common generators."""

    def __init__(self, scale=None, seeds=()):
        self.scale = scale
        self.groups = []          # [ref, {Ginf: q}] with Ginf = q * ref
        for g in seeds:
            self._place(normalize(g))
        self._final = None

    def _ratio(self, a, ref):
        r = normalize(mul(a, power(ref, -1)))
        if isinstance(r, Const):
            return r.value
        lead, _ = ms.leading_term(r, self.scale)
        if lead is None or not lead[1].is_one() or not isinstance(lead[0], Const):
            return None
        q = lead[0].value
        from .zero import func_sign_at_infinity
        if func_sign_at_infinity(add(a, neg(mul(Const(q), ref))), self.scale).kind == "zero":
            return q
        return None

    def _place(self, a):
        for grp in self.groups:
            q = self._ratio(a, grp[0])
            if q is not None:
                grp[1][a] = q
                return
        self.groups.append([a, {a: Fraction(1)}])

    def add(self, a):
        self._final = None
        self._place(a)

    def finalize(self):
        if self._final is None:
            table = {}
            for ref, members in self.groups:
                qs = list(members.values())
                num = reduce(gcd, [q.numerator for q in qs])
                den = reduce(lambda u, v: u * v // gcd(u, v), [q.denominator for q in qs])
                step = Fraction(num, den)
                gen = normalize(mul(Const(step), ref))
                if ms.limit(gen, self.scale) is ms.NEG_INF:
                    gen, step = normalize(neg(gen)), -step
                for a, q in members.items():
                    table[a] = (gen, int(q / step))
            self._final = table
        return self._final

    def lookup(self, a):
        return self.finalize()[a]


# ---------------------------------------------------------------- trig monomials

@dataclass(frozen=True)
class TrigMonomial:
    """Product over generators of sin(G)^a cos(G)^b with b in {0, 1}."""
    factors: tuple = ()       # ((G, a, b), ...) sorted by G

    @staticmethod
    def make(pairs):
        fs = tuple(sorted(((G, a, b) for G, a, b in pairs if a or b), key=lambda f: sort_key(f[0])))
        return TrigMonomial(fs)

    def is_one(self):
        return not self.factors

    @property
    def degree(self):
        return sum(a + b for _, a, b in self.factors)

    @property
    def generators(self):
        return [G for G, _, _ in self.factors]

    @property
    def expr(self):
        out = []
        for G, a, b in self.factors:
            if a:
                out.append(power(sin_(G), a))
            if b:
                out.append(cos_(G))
        return mul(*out) if out else ONE

    def key(self):
        return (self.degree, tuple((sort_key(G), a, b) for G, a, b in self.factors))

    def __str__(self):
        return to_string(self.expr)


ONE_SIGMA = TrigMonomial()


def _sigma_mul(s1, s2):
    """Product of two trig monomials as [(rational, sigma)], reducing cos^2."""
    acc = {}
    for G, a, b in s1.factors + s2.factors:
        a0, b0 = acc.get(G, (0, 0))
        acc[G] = (a0 + a, b0 + b)
    options = []
    for G, (a, b) in acc.items():
        if b == 2:
            options.append([(Fraction(1), (G, a, 0)), (Fraction(-1), (G, a + 2, 0))])
        else:
            options.append([(Fraction(1), (G, a, b))])
    out = []
    for combo in product(*options):
        c = Fraction(1)
        for k, _ in combo:
            c *= k
        out.append((c, TrigMonomial.make([f for _, f in combo])))
    return out


# ---------------------------------------------------------------- normal-form elements

def _coeff_zero(p, scale=None):
    p = normalize(p)
    if p == ZERO:
        return True
    from .zero import const_sign, func_sign_at_infinity
    from .expr import is_constant
    v = const_sign(p) if is_constant(p) else func_sign_at_infinity(p, scale)
    if v.kind == "unknown":
        raise ZeroUnknown(p, v.bits)
    return v.kind == "zero"


class HGElem:
    """Sum of p * sigma with base-field p and distinct trig monomials sigma."""

    def __init__(self, mapping=None, scale=None, pruned=False):
        items = {}
        for s, p in (mapping or {}).items():
            p = normalize(p)
            if pruned or not _coeff_zero(p, scale):
                items[s] = p
        self.terms = tuple(sorted(items.items(), key=lambda t: t[0].key()))

    @classmethod
    def base(cls, p):
        return cls({ONE_SIGMA: p})

    def as_dict(self):
        return dict(self.terms)

    def is_zero(self):
        return not self.terms

    @property
    def expr(self):
        return add(*[mul(p, s.expr) for s, p in self.terms]) if self.terms else ZERO

    def generators(self):
        seen = []
        for s, _ in self.terms:
            for G in s.generators:
                if G not in seen:
                    seen.append(G)
        return seen

    def __add__(self, o):
        d = self.as_dict()
        for s, p in o.terms:
            d[s] = add(d[s], p) if s in d else p
        return HGElem(d)

    def __neg__(self):
        return HGElem({s: neg(p) for s, p in self.terms}, pruned=True)

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o):
        if not isinstance(o, HGElem):
            return HGElem({s: mul(p, o) for s, p in self.terms})
        d = {}
        for s1, p1 in self.terms:
            for s2, p2 in o.terms:
                for c, s in _sigma_mul(s1, s2):
                    t = mul(Const(c), p1, p2)
                    d[s] = add(d[s], t) if s in d else t
        return HGElem(d)

    def __eq__(self, o):
        return isinstance(o, HGElem) and (self - o).is_zero()

    __hash__ = None

    def __str__(self):
        return to_string(self.expr)

    def __repr__(self):
        return f"HGElem({self})"


# ---------------------------------------------------------------- conversion to normal form

@lru_cache(maxsize=None)
def _multiple_angle(n):
    """sin(n t), cos(n t) as polynomials {(a, b): rational} in s = sin t, c = cos t with b <= 1."""
    S, C = {}, {(0, 0): Fraction(1)}
    for _ in range(abs(n)):
        # sin((k+1)t) = sin(kt) c + cos(kt) s ; cos((k+1)t) = cos(kt) c - sin(kt) s
        S2, C2 = {}, {}
        for (a, b), v in S.items():
            _poly_acc(S2, a, b + 1, v)
            _poly_acc(C2, a + 1, b, -v)
        for (a, b), v in C.items():
            _poly_acc(S2, a + 1, b, v)
            _poly_acc(C2, a, b + 1, v)
        S, C = S2, C2
    if n < 0:
        S = {k: -v for k, v in S.items()}
    return S, C


def _poly_acc(d, a, b, v):
    if b == 2:
        _poly_acc(d, a, 0, v)
        _poly_acc(d, a + 2, 0, -v)
        return
    d[(a, b)] = d.get((a, b), Fraction(0)) + v
    if d[(a, b)] == 0:
        del d[(a, b)]


def _poly_to_hg(poly, G):
    d = {}
    for (a, b), v in poly.items():
        d[TrigMonomial.make([(G, a, b)])] = Const(v)
    return HGElem(d, pruned=True)


def _trig_args(e, out):
    if isinstance(e, (Sin, Cos)):
        out.append(e.arg)
    for c in _kids(e):
        _trig_args(c, out)
    return out


def _kids(e):
    from .expr import children
    return children(e)


def to_normal_form(e, scale=None, generators=()):
    """Normal form of an expression in the trig algebra.

    ``generators`` optionally seeds the generator set, so that for example
    sin(2x) is written in terms of sin(x) and cos(x).
    """
    e = normalize(e)
    gens = _Generators(scale, generators)
    split = {}
    for arg in _trig_args(e, []):
        if has_trig(arg):
            raise Unsupported(f"trigonometric function inside the argument {arg}")
        if arg in split:
            continue
        parts = normalize_argument(arg, scale)
        if parts[0] == ZERO:
            split[arg] = None
            continue
        if not ms.is_infinite(parts[0], scale):
            raise Unsupported(f"argument {arg} does not split off an unbounded part")
        split[arg] = parts
        gens.add(parts[0])
    return _hg(e, gens, split, scale)


def _hg(e, gens, split, scale):
    if not has_trig(e):
        return HGElem.base(e)
    if isinstance(e, Sum):
        return reduce(lambda u, v: u + v, [_hg(a, gens, split, scale) for a in e.args])
    if isinstance(e, Prod):
        return reduce(lambda u, v: u * v, [_hg(a, gens, split, scale) for a in e.args])
    if isinstance(e, Pow):
        q = e.exp
        if q.denominator != 1 or q < 0:
            raise Unsupported(f"{e}: quotients and roots of trigonometric expressions are outside the algebra")
        b = _hg(e.base, gens, split, scale)
        acc = HGElem.base(ONE)
        for _ in range(int(q)):
            acc = acc * b
        return acc
    if isinstance(e, (Sin, Cos)):
        parts = split[e.arg]
        if parts is None:
            return HGElem.base(e)
        Ginf, Gc, G0 = parts
        G, n = gens.lookup(Ginf)
        Sn, Cn = _multiple_angle(n)
        Sn, Cn = _poly_to_hg(Sn, G), _poly_to_hg(Cn, G)
        phi = normalize(add(Gc, G0))
        if phi == ZERO:
            return Sn if isinstance(e, Sin) else Cn
        sp, cp = sin_(phi), cos_(phi)
        if isinstance(e, Sin):
            return Sn * cp + Cn * sp
        return Cn * cp - Sn * sp
    if isinstance(e, (Exp, Log)):
        raise Unsupported(f"{e}: trigonometric functions inside exp/log are outside the algebra")
    if isinstance(e, OscInt):
        raise Unsupported("integrals are not elements of the trig algebra")
    raise Unsupported(f"cannot bring {e} to normal form")


def as_hg(P, scale=None):
    return P if isinstance(P, HGElem) else to_normal_form(P, scale)


# ---------------------------------------------------------------- gamma0, differentiation, flutter

def gamma0_hg(P, scale=None):
    """Dominance class of P: the largest coefficient monomial (no partial cancellation)."""
    P = as_hg(P, scale)
    if P.is_zero():
        raise ValueError("gamma0 of zero")
    best = None
    for _, p in P.terms:
        m = ms.monomial_of(p, scale)
        if best is None or mono_cmp(m, best) > 0:
            best = m
    return best


def diff_hg(P, scale=None):
    P = as_hg(P, scale)
    d = {}

    def put(s, p):
        d[s] = add(d[s], p) if s in d else p

    for s, p in P.terms:
        put(s, differentiate(p))
        for i, (G, a, b) in enumerate(s.factors):
            g = differentiate(G)
            others = [f for j, f in enumerate(s.factors) if j != i]
            if a:
                # a s^(a-1) c^(b+1) g
                if b:
                    put(TrigMonomial.make(others + [(G, a - 1, 0)]), mul(Const(a), p, g))
                    put(TrigMonomial.make(others + [(G, a + 1, 0)]), mul(Const(-a), p, g))
                else:
                    put(TrigMonomial.make(others + [(G, a - 1, 1)]), mul(Const(a), p, g))
            if b:
                put(TrigMonomial.make(others + [(G, a + 1, 0)]), mul(Const(-1), p, g))
    return HGElem(d, scale)


def flutter(P, scale=None):
    """Per-term maximal flutter: {sigma: monomial of the fastest G'} for nonconstant sigma."""
    P = as_hg(P, scale)
    out = {}
    for s, _ in P.terms:
        if s.is_one():
            continue
        out[s] = _max_mono([ms.monomial_of(differentiate(G), scale) for G in s.generators])
    return out


def _max_mono(ms_list):
    best = None
    for m in ms_list:
        if best is None or mono_cmp(m, best) > 0:
            best = m
    return best


# ---------------------------------------------------------------- derivative of a quotient

def _lead_part(P, m, scale):
    """{sigma: lim p/m} over the terms of maximal gamma0."""
    out = {}
    for s, p in P.terms:
        lead, _ = ms.leading_term(p, scale)
        if mono_cmp(lead[1], m) == 0:
            out[s] = lead[0]
    return out


def _max_class(P, scale):
    best = None
    for _, p in P.terms:
        c = ms.gamma_class(ms.monomial_of(p, scale))
        if best is None or ms._cmp_class(c, best) > 0:
            best = c
    return best


def _check_hypotheses(P, Q, scale):
    from .zero import const_sign
    mP, mQ = gamma0_hg(P, scale), gamma0_hg(Q, scale)
    if mono_cmp(mP, mQ) == 0:
        lp, lq = _lead_part(P, mP, scale), _lead_part(Q, mQ, scale)
        if set(lp) == set(lq):
            ratios = [normalize(mul(lp[s], power(lq[s], -1))) for s in lp]
            if all(const_sign(add(r, neg(ratios[0]))).kind == "zero" for r in ratios):
                raise HypothesisViolation(
                    "K-plus-small", f"P/Q = {ratios[0]} + o(1): the leading parts are proportional")
    cP, cQ = _max_class(P, scale), _max_class(Q, scale)
    if cP is not None and ms._cmp_class(cP, cQ) == 0:
        raise HypothesisViolation(
            "equal-gamma-maxima", f"both numerator and denominator have maximal class of {cP}")
    # a trig factor shared by P and Q, or by their parts of maximal gamma0 (whose
    # flutter terms then cancel in P'Q - PQ')
    lead_sigmas = list(_lead_part(P, mP, scale)) + list(_lead_part(Q, mQ, scale))
    for sigmas, where in (([s for s, _ in P.terms + Q.terms], "P and Q"),
                          (lead_sigmas, "the leading parts of P and Q")):
        common = None
        for s in sigmas:
            fs = {(G, "s") for G, a, _ in s.factors if a} | {(G, "c") for G, _, b in s.factors if b}
            common = fs if common is None else common & fs
        if common:
            G, fn = sorted(common, key=lambda t: sort_key(t[0]))[0]
            raise HypothesisViolation("common-factor", f"{'sin' if fn == 's' else 'cos'}({G}) divides {where}")
    for A, B in ((P, Q), (Q, P)):
        if len(A.terms) == len(B.terms) and any(not s.is_one() for s, _ in A.terms):
            if [s for s, _ in A.terms] == [s for s, _ in B.terms]:
                (s0, a0), (_, b0) = A.terms[0], B.terms[0]
                f = normalize(mul(a0, power(b0, -1)))
                if all(_coeff_zero(add(a, neg(mul(f, b))), scale)
                       for (_, a), (_, b) in zip(A.terms, B.terms)):
                    raise HypothesisViolation(
                        "common-factor", "numerator and denominator differ by a base-field factor")
            break


def quotient_derivative_gamma0(P, Q, scale=None):
    """gamma0((P/Q)') from the coefficients and flutters of P and Q, after checking hypotheses."""
    P, Q = as_hg(P, scale), as_hg(Q, scale)
    _check_hypotheses(P, Q, scale)
    fP, fQ = flutter(P, scale), flutter(Q, scale)
    cands = []
    for sj, pj in P.terms:
        mp = ms.monomial_of(pj, scale)
        dp = normalize(differentiate(pj))
        mdp = None if _coeff_zero(dp, scale) else ms.monomial_of(dp, scale)
        for tk, qk in Q.terms:
            mq = ms.monomial_of(qk, scale)
            dq = normalize(differentiate(qk))
            if mdp is not None:
                cands.append(mdp * mq)
            if not _coeff_zero(dq, scale):
                cands.append(mp * ms.monomial_of(dq, scale))
            if sj in fP:
                cands.append(mp * mq * fP[sj])
            if tk in fQ:
                cands.append(mp * mq * fQ[tk])
    mq_max = _max_mono([ms.monomial_of(q, scale) for _, q in Q.terms])
    return _max_mono(cands) / mq_max ** 2


def quotient_derivative_gamma0_direct(P, Q, scale=None):
    """gamma0 of (P'Q - PQ')/Q^2 read off the expansion of the numerator and of Q."""
    P, Q = as_hg(P, scale), as_hg(Q, scale)
    N = diff_hg(P, scale) * Q - P * diff_hg(Q, scale)
    lead_n = ms.leading(expand_hg(N, scale))[1]
    lead_q = ms.leading(expand_hg(Q, scale))[1]
    return lead_n / lead_q ** 2


# ---------------------------------------------------------------- expansion

def expand_hg(P, scale=None, budget=None):
    """Multiseries whose leaf coefficients are trig polynomials with constant coefficients."""
    P = as_hg(P, scale)

    def build(S):
        top = len(S)
        parts = [ms._scale_leaf(S, top, ms.series(p, S), s.expr) for s, p in P.terms]
        A = ms._sum(S, top, parts)
        ms._leading(A, S, top)
        return A
    A, S = ms.run_with_scale(build, scale)
    A.budget = budget or A.budget
    return A


@lru_cache(maxsize=4096)
def leaf_is_zero(c):
    """Zero test for a multiseries leaf that is a trig polynomial over constants."""
    return to_normal_form(c).is_zero()


# ---------------------------------------------------------------- linearization

def linearize(P, scale=None):
    """Product-to-sum form: [(coeff, 'sin'|'cos'|'1', argument)] with distinct arguments."""
    P = as_hg(P, scale)
    gens = sorted(P.generators(), key=sort_key)
    idx = {G: i for i, G in enumerate(gens)}
    zero = (0,) * len(gens)
    acc = {}
    for s, p in P.terms:
        cur = {("c", zero): Fraction(1)}
        for G, a, b in s.factors:
            unit = tuple(1 if j == idx[G] else 0 for j in range(len(gens)))
            for fn in ["s"] * a + ["c"] * b:
                cur = _ptos(cur, fn, unit)
        for (fn, v), c in cur.items():
            key = (fn, v)
            acc[key] = add(acc.get(key, ZERO), mul(Const(c), p))
    out = []
    for (fn, v), p in sorted(acc.items(), key=lambda t: (t[0][1], t[0][0])):
        p = normalize(p)
        if _coeff_zero(p, scale):
            continue
        if not any(v):
            out.append((p, "1", ZERO))
            continue
        arg = normalize(add(*[mul(Const(k), G) for k, G in zip(v, gens) if k]))
        out.append((p, "sin" if fn == "s" else "cos", arg))
    return out


def _canon(fn, v, c):
    first = next((k for k in v if k), 0)
    if first < 0:
        v = tuple(-k for k in v)
        if fn == "s":
            c = -c
    if not any(v) and fn == "s":
        return None
    return fn, v, c


def _ptos(cur, fn, unit):
    out = {}
    for (f0, v), c in cur.items():
        plus = tuple(a + b for a, b in zip(v, unit))
        minus = tuple(a - b for a, b in zip(v, unit))
        if f0 == "s" and fn == "s":
            terms = [("c", minus, c / 2), ("c", plus, -c / 2)]
        elif f0 == "s" and fn == "c":
            terms = [("s", plus, c / 2), ("s", minus, c / 2)]
        elif f0 == "c" and fn == "c":
            terms = [("c", minus, c / 2), ("c", plus, c / 2)]
        else:
            terms = [("s", plus, c / 2), ("s", minus, -c / 2)]
        for t in terms:
            t = _canon(*t)
            if t is None:
                continue
            k = (t[0], t[1])
            out[k] = out.get(k, Fraction(0)) + t[2]
            if out[k] == 0:
                del out[k]
    return out


# ---------------------------------------------------------------- JSON

def hg_to_json(P):
    rows = []
    for s, p in P.terms:
        trig = []
        for G, a, b in s.factors:
            if a:
                trig.append({"arg": to_string(G), "fn": "sin", "pow": a})
            if b:
                trig.append({"arg": to_string(G), "fn": "cos", "pow": b})
        rows.append({"coeff": to_string(p), "trig": trig})
    return rows


def hg_from_json(rows):
    from .expr import parse
    d = {}
    for r in rows:
        fs = {}
        for t in r["trig"]:
            G = parse(t["arg"])
            a, b = fs.get(G, (0, 0))
            fs[G] = (a + t["pow"], b) if t["fn"] == "sin" else (a, b + t["pow"])
        d[TrigMonomial.make([(G, a, b) for G, (a, b) in fs.items()])] = parse(r["coeff"])
    return HGElem(d, pruned=True)
