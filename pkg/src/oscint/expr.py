"""Symbolic expressions in one variable x over exact rationals.

Nodes are immutable and compared structurally.  The smart constructors
(`add`, `mul`, `power`, `exp_`, `log_`, `sin_`, `cos_`) assume normalized
arguments and return normalized results, so a tree built only through them
is already in normal form.  `normalize` rebuilds an arbitrary tree that way.

Normal form rules:
  * Sum and Prod are flat, have at least two operands and are sorted.
  * like terms are merged (2*x + 3*x -> 5*x), a rational factor is
    distributed over a single Sum factor (2*(x + 1) -> 2*x + 2).
  * powers of a common base are merged; exp factors are merged into one.
  * Pow never has a rational base: non-rational roots of rationals become
    exp(q*log(c)), and log of a rational is split over its prime factors.
  * exp(log u) -> u, log(exp u) -> u, (u^p)^q -> u^(p*q)  (x > 0 domain).
"""
from __future__ import annotations

import hashlib
import re
import threading
from fractions import Fraction

import mpmath
from mpmath import iv


class Expr:
    __slots__ = ("_hash", "_str")
    rank = 99

    def _fields(self):
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and self._fields() == other._fields()

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._fields()))
            object.__setattr__(self, "_hash", h)
            return h

    def __setattr__(self, name, value):
        raise AttributeError("expressions are immutable")

    def __str__(self):
        try:
            return self._str
        except AttributeError:
            s = _to_string(self)
            object.__setattr__(self, "_str", s)
            return s

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"

    # arithmetic sugar for tests and internal code
    def __add__(self, o):
        return add(self, as_expr(o))

    def __radd__(self, o):
        return add(as_expr(o), self)

    def __sub__(self, o):
        return add(self, neg(as_expr(o)))

    def __rsub__(self, o):
        return add(as_expr(o), neg(self))

    def __mul__(self, o):
        return mul(self, as_expr(o))

    def __rmul__(self, o):
        return mul(as_expr(o), self)

    def __truediv__(self, o):
        return mul(self, power(as_expr(o), -1))

    def __rtruediv__(self, o):
        return mul(as_expr(o), power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, q):
        return power(self, Fraction(q))


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)
    rank = 0

    def __init__(self, value):
        _init(self, value=Fraction(value))

    def _fields(self):
        return (self.value,)


class NamedConst(Expr):
    __slots__ = ("name",)
    rank = 1

    def __init__(self, name):
        if name not in ("pi", "e"):
            raise ValueError(f"unknown constant {name!r}")
        _init(self, name=name)

    def _fields(self):
        return (self.name,)


class Var(Expr):
    __slots__ = ()
    rank = 2

    def _fields(self):
        return ()


class Sum(Expr):
    __slots__ = ("args",)
    rank = 9

    def __init__(self, args):
        _init(self, args=tuple(args))

    def _fields(self):
        return self.args


class Prod(Expr):
    __slots__ = ("args",)
    rank = 8

    def __init__(self, args):
        _init(self, args=tuple(args))

    def _fields(self):
        return self.args


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = 7

    def __init__(self, base, exp):
        exp = Fraction(exp)
        if exp == 0:
            raise ValueError("Pow exponent must be nonzero")
        if isinstance(base, Const):
            raise ValueError("Pow base must not be a rational constant")
        _init(self, base=base, exp=exp)

    def _fields(self):
        return (self.base, self.exp)


class _Unary(Expr):
    __slots__ = ("arg",)
    fname = ""

    def __init__(self, arg):
        _init(self, arg=arg)

    def _fields(self):
        return (self.arg,)


class Exp(_Unary):
    __slots__ = ()
    rank = 4
    fname = "exp"


class Log(_Unary):
    __slots__ = ()
    rank = 3
    fname = "log"


class Sin(_Unary):
    __slots__ = ()
    rank = 5
    fname = "sin"


class Cos(_Unary):
    __slots__ = ()
    rank = 6
    fname = "cos"


class OscInt(Expr):
    """An integral of integrand*sin(phase) or integrand*cos(phase).

    `tag` names the arbitrary constant of this integral.
    """
    __slots__ = ("integrand", "phase", "kind", "tag")
    rank = 10

    def __init__(self, integrand, phase, kind, tag=None):
        if kind not in ("sin", "cos"):
            raise ValueError("kind must be 'sin' or 'cos'")
        for part in (integrand, phase):
            if has_trig(part):
                raise ValueError("integrand and phase must be free of sin, cos and integrals")
        if tag is None:
            tag = integral_tag(integrand, phase, kind)
        _init(self, integrand=integrand, phase=phase, kind=kind, tag=tag)

    def _fields(self):
        return (self.integrand, self.phase, self.kind, self.tag)


def integral_tag(integrand, phase, kind):
    # content-addressed, so equal integrals share their constant
    digest = hashlib.sha1(f"{integrand}|{kind}|{phase}".encode()).hexdigest()
    return "A" + digest[:6]


ZERO = Const(0)
ONE = Const(1)
X = Var()
PI = NamedConst("pi")
E = NamedConst("e")


def as_expr(v):
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, str):
        return parse(v)
    raise TypeError(f"cannot convert {v!r} to an expression")


def sort_key(e):
    return (e.rank, str(e))


# ---------------------------------------------------------------- constructors

def _split_coeff(t):
    """t -> (rational coefficient, rest) with rest None for a pure constant."""
    if isinstance(t, Const):
        return t.value, None
    if isinstance(t, Prod) and isinstance(t.args[0], Const):
        rest = t.args[1:]
        return t.args[0].value, rest[0] if len(rest) == 1 else Prod(rest)
    return Fraction(1), t


def add(*terms):
    coeffs = {}
    order = []
    const = Fraction(0)
    stack = list(terms)
    flat = []
    while stack:
        t = stack.pop(0)
        if isinstance(t, Sum):
            stack[0:0] = list(t.args)
        else:
            flat.append(t)
    for t in flat:
        c, rest = _split_coeff(t)
        if rest is None:
            const += c
            continue
        if rest in coeffs:
            coeffs[rest] += c
        else:
            coeffs[rest] = c
            order.append(rest)
    out = []
    for rest in order:
        c = coeffs[rest]
        if c == 0:
            continue
        out.append(rest if c == 1 else _scaled(c, rest))
    out.sort(key=sort_key)
    if const != 0:
        out.append(Const(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Sum(out)


def _scaled(c, rest):
    if isinstance(rest, Prod):
        return Prod((Const(c),) + rest.args)
    return Prod((Const(c), rest))


def neg(e):
    return mul(Const(-1), e)


def _base_exp(f):
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, Fraction(1)


def mul(*factors):
    coeff = Fraction(1)
    powers = {}
    order = []
    exp_args = []
    stack = list(factors)
    while stack:
        f = stack.pop()
        if isinstance(f, Prod):
            stack.extend(f.args)
            continue
        if isinstance(f, Const):
            coeff *= f.value
            continue
        if isinstance(f, Exp):
            exp_args.append(f.arg)
            continue
        if f == E:
            exp_args.append(ONE)
            continue
        if isinstance(f, Pow) and f.base == E:
            exp_args.append(Const(f.exp))
            continue
        b, q = _base_exp(f)
        if b in powers:
            powers[b] += q
        else:
            powers[b] = q
            order.append(b)
    if coeff == 0:
        return ZERO
    out = []
    again = []
    for b in order:
        q = powers[b]
        if q == 0:
            continue
        p = power(b, q)
        if isinstance(p, Const):
            coeff *= p.value
        elif isinstance(p, (Prod, Exp)):
            again.append(p)
        else:
            out.append(p)
    if exp_args:
        ex = exp_(add(*exp_args))
        if isinstance(ex, Const):
            coeff *= ex.value
        elif isinstance(ex, Prod):
            again.append(ex)
        elif ex != ONE:
            out.append(ex)
    if again:
        return mul(Const(coeff), *out, *again)
    if coeff == 0:
        return ZERO
    if not out:
        return Const(coeff)
    if len(out) == 1 and isinstance(out[0], Sum) and coeff != 1:
        return add(*[mul(Const(coeff), t) for t in out[0].args])
    out.sort(key=sort_key)
    if coeff != 1:
        out.insert(0, Const(coeff))
    if len(out) == 1:
        return out[0]
    return Prod(out)


def _rational_root(v, q):
    """Exact value of v**q for rational v, q, or None."""
    v = Fraction(v)
    if q.denominator == 1:
        return v ** q.numerator
    d = q.denominator
    if v < 0 and d % 2 == 0:
        return None
    sign = -1 if v < 0 else 1
    num = _int_root(abs(v.numerator), d)
    den = _int_root(v.denominator, d)
    if num is None or den is None:
        return None
    return (sign * Fraction(num, den)) ** q.numerator


def _int_root(n, d):
    r = round(n ** (1.0 / d)) if n < 2 ** 1000 else None
    if r is None:
        lo, hi = 0, 1 << (n.bit_length() // d + 1)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if mid ** d <= n:
                lo = mid
            else:
                hi = mid - 1
        r = lo
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** d == n:
            return c
    return None


def power(b, q):
    q = Fraction(q)
    if q == 0:
        return ONE
    if q == 1:
        return b
    if isinstance(b, Const):
        if b.value == 0:
            if q < 0:
                raise ZeroDivisionError("division by zero")
            return ZERO
        r = _rational_root(b.value, q)
        if r is not None:
            return Const(r)
        if b.value > 0:
            return exp_(mul(Const(q), log_(b)))
        raise ValueError(f"{b}^({q}) is not real")
    if b == E:
        return exp_(Const(q))
    if isinstance(b, Pow):
        return power(b.base, b.exp * q)
    if isinstance(b, Exp):
        return exp_(mul(Const(q), b.arg))
    if isinstance(b, Prod):
        c, _ = _split_coeff(b)
        if q.denominator == 1 or c > 0:
            return mul(*[power(f, q) for f in b.args])
    return Pow(b, q)


def exp_(a):
    if isinstance(a, Const):
        if a.value == 0:
            return ONE
        if a.value == 1:
            return E
        return Exp(a)
    if isinstance(a, Log):
        return a.arg
    terms = a.args if isinstance(a, Sum) else (a,)
    pulled = []
    rest = []
    for t in terms:
        c, r = _split_coeff(t)
        if isinstance(r, Log) and not (isinstance(r.arg, Const)
                                       and _rational_root(r.arg.value, c) is None):
            pulled.append(power(r.arg, c))
        else:
            rest.append(t)
    if not pulled:
        return Exp(a)
    return mul(*pulled, exp_(add(*rest)) if rest else ONE)


def _prime_factors(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def log_(a):
    if isinstance(a, Const):
        v = a.value
        if v <= 0:
            raise ValueError(f"log of non-positive constant {v}")
        if v == 1:
            return ZERO
        fac = _prime_factors(v.numerator)
        for p, k in _prime_factors(v.denominator).items():
            fac[p] = fac.get(p, 0) - k
        if len(fac) == 1:
            (p, k), = fac.items()
            if k == 1:
                return Log(Const(p))
        return add(*[mul(Const(k), Log(Const(p))) for p, k in sorted(fac.items())])
    if a == E:
        return ONE
    if isinstance(a, Exp):
        return a.arg
    if isinstance(a, Pow):
        return mul(Const(a.exp), log_(a.base))
    if isinstance(a, Prod):
        c, _ = _split_coeff(a)
        if c > 0:
            return add(*[log_(f) for f in a.args])
    return Log(a)


def sin_(a):
    if a == ZERO:
        return ZERO
    return Sin(a)


def cos_(a):
    if a == ZERO:
        return ONE
    return Cos(a)


def osc_int(integrand, phase, kind="sin", tag=None):
    return OscInt(integrand, phase, kind, tag)


# ---------------------------------------------------------------- traversal

def children(e):
    if isinstance(e, (Sum, Prod)):
        return e.args
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, _Unary):
        return (e.arg,)
    if isinstance(e, OscInt):
        return (e.integrand, e.phase)
    return ()


def walk(e):
    """Pre-order traversal of all subexpressions."""
    yield e
    for c in children(e):
        yield from walk(c)


def has_trig(e):
    return any(isinstance(s, (Sin, Cos, OscInt)) for s in walk(e))


def has_var(e):
    return any(isinstance(s, Var) for s in walk(e))


def is_constant(e):
    return not has_var(e) and not any(isinstance(s, OscInt) for s in walk(e))


def rebuild(e, f):
    """Apply f to the children of e and rebuild through the smart constructors."""
    if isinstance(e, Sum):
        return add(*[f(a) for a in e.args])
    if isinstance(e, Prod):
        return mul(*[f(a) for a in e.args])
    if isinstance(e, Pow):
        return power(f(e.base), e.exp)
    if isinstance(e, Exp):
        return exp_(f(e.arg))
    if isinstance(e, Log):
        return log_(f(e.arg))
    if isinstance(e, Sin):
        return sin_(f(e.arg))
    if isinstance(e, Cos):
        return cos_(f(e.arg))
    if isinstance(e, OscInt):
        return OscInt(f(e.integrand), f(e.phase), e.kind, e.tag)
    return e


def normalize(e):
    return rebuild(e, normalize)


def substitute(e, mapping):
    """Replace subexpressions (matched structurally) and renormalize."""
    if e in mapping:
        return mapping[e]
    return rebuild(e, lambda c: substitute(c, mapping))


# ---------------------------------------------------------------- calculus

def differentiate(e):
    if isinstance(e, (Const, NamedConst)):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Sum):
        return add(*[differentiate(a) for a in e.args])
    if isinstance(e, Prod):
        terms = []
        for i, f in enumerate(e.args):
            df = differentiate(f)
            if df != ZERO:
                terms.append(mul(df, *e.args[:i], *e.args[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        return mul(Const(e.exp), power(e.base, e.exp - 1), differentiate(e.base))
    if isinstance(e, Exp):
        return mul(e, differentiate(e.arg))
    if isinstance(e, Log):
        return mul(differentiate(e.arg), power(e.arg, -1))
    if isinstance(e, Sin):
        return mul(cos_(e.arg), differentiate(e.arg))
    if isinstance(e, Cos):
        return neg(mul(sin_(e.arg), differentiate(e.arg)))
    if isinstance(e, OscInt):
        trig = sin_(e.phase) if e.kind == "sin" else cos_(e.phase)
        return mul(e.integrand, trig)
    raise TypeError(f"cannot differentiate {e!r}")


# ---------------------------------------------------------------- printing

def _fmt_rat(q):
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _fmt_exponent(q):
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    return f"({_fmt_rat(q)})"


def _atomic(e):
    return isinstance(e, (Var, NamedConst, _Unary, OscInt)) or (
        isinstance(e, Const) and e.value.denominator == 1 and e.value >= 0)


def _paren(s, e):
    return s if _atomic(e) else f"({s})"


def _num_den(e):
    """Split a term into (sign, numerator factors, denominator factors)."""
    coeff = Fraction(1)
    factors = []
    if isinstance(e, Prod):
        for f in e.args:
            if isinstance(f, Const):
                coeff *= f.value
            else:
                factors.append(f)
    elif isinstance(e, Const):
        coeff = e.value
    else:
        factors.append(e)
    num, den = [], []
    if abs(coeff.numerator) != 1:
        num.append(str(abs(coeff.numerator)))
    if coeff.denominator != 1:
        den.append(str(coeff.denominator))
    for f in factors:
        if isinstance(f, Pow) and f.exp < 0:
            den.append(_power_str(f.base, -f.exp))
        else:
            num.append(_factor_str(f))
    return (-1 if coeff < 0 else 1), num, den


def _power_str(b, q):
    if q == 1:
        return _factor_str(b)
    return f"{_paren(to_string(b), b)}^{_fmt_exponent(q)}"


def _factor_str(f):
    if isinstance(f, Pow):
        return _power_str(f.base, f.exp)
    if isinstance(f, Sum):
        return f"({to_string(f)})"
    return to_string(f)


def _term_str(e):
    sign, num, den = _num_den(e)
    s = "*".join(num) if num else "1"
    if den:
        d = den[0] if len(den) == 1 else "(" + "*".join(den) + ")"
        s = f"{s}/{d}"
    return sign, s


def to_string(e):
    return str(e)


def _to_string(e):
    if isinstance(e, Const):
        return _fmt_rat(e.value)
    if isinstance(e, NamedConst):
        return e.name
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Sum):
        parts = []
        for i, t in enumerate(e.args):
            sign, s = _term_str(t)
            if i == 0:
                parts.append(("-" if sign < 0 else "") + s)
            else:
                parts.append((" - " if sign < 0 else " + ") + s)
        return "".join(parts)
    if isinstance(e, (Prod, Pow)):
        sign, s = _term_str(e)
        return ("-" if sign < 0 else "") + s
    if isinstance(e, _Unary):
        return f"{e.fname}({to_string(e.arg)})"
    if isinstance(e, OscInt):
        return f"Int({to_string(e.integrand)}, {e.kind}, {to_string(e.phase)})"
    raise TypeError(repr(e))


def to_latex(e):
    """LaTeX rendering (display only, not parsed back)."""
    if isinstance(e, Const):
        q = e.value
        if q.denominator == 1:
            return str(q.numerator)
        return ("-" if q < 0 else "") + rf"\frac{{{abs(q.numerator)}}}{{{q.denominator}}}"
    if isinstance(e, NamedConst):
        return r"\pi" if e.name == "pi" else "e"
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Sum):
        out = ""
        for i, t in enumerate(e.args):
            s = to_latex(t)
            if i and not s.startswith("-"):
                out += " + " + s
            elif i:
                out += " - " + s[1:]
            else:
                out += s
        return out
    if isinstance(e, Prod) or (isinstance(e, Pow) and e.exp < 0):
        args = e.args if isinstance(e, Prod) else (e,)
        coeff = Fraction(1)
        num, den = [], []
        for f in args:
            if isinstance(f, Const):
                coeff *= f.value
            elif isinstance(f, Pow) and f.exp < 0:
                den.append(to_latex(power(f.base, -f.exp)))
            else:
                s = to_latex(f)
                num.append(f"\\left({s}\\right)" if isinstance(f, Sum) else s)
        if abs(coeff.numerator) != 1:
            num.insert(0, str(abs(coeff.numerator)))
        if coeff.denominator != 1:
            den.insert(0, str(coeff.denominator))
        n = " ".join(num) if num else "1"
        s = rf"\frac{{{n}}}{{{' '.join(den)}}}" if den else n
        return ("-" if coeff < 0 else "") + s
    if isinstance(e, Pow):
        b = to_latex(e.base)
        if not _atomic(e.base) or isinstance(e.base, _Unary):
            b = f"\\left({b}\\right)"
        q = e.exp
        ex = str(q.numerator) if q.denominator == 1 else rf"{q.numerator}/{q.denominator}"
        return f"{b}^{{{ex}}}"
    if isinstance(e, _Unary):
        name = {"exp": r"\exp", "log": r"\log", "sin": r"\sin", "cos": r"\cos"}[e.fname]
        return rf"{name}\left({to_latex(e.arg)}\right)"
    if isinstance(e, OscInt):
        trig = r"\sin" if e.kind == "sin" else r"\cos"
        return rf"\int {to_latex(e.integrand)}\,{trig}\left({to_latex(e.phase)}\right)dx"
    raise TypeError(repr(e))


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^(),]))")
_FUNCS = {"exp": exp_, "log": log_, "sin": sin_, "cos": cos_,
          "sqrt": lambda u: power(u, Fraction(1, 2))}


def _tokenize(text):
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("num", m.group(1), start))
        elif m.group(2):
            toks.append(("id", m.group(2), start))
        else:
            toks.append(("op", "^" if m.group(3) == "**" else m.group(3), start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t[1] != op:
            raise ParseError(f"expected {op!r}, got {t[1] or 'end of input'!r}", t[2])
        return t

    def expr(self):
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else neg(t))
        return add(*terms)

    def term(self):
        f = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            g = self.factor()
            f = mul(f, g) if op == "*" else mul(f, power(g, -1))
        return f

    def factor(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return neg(self.factor())
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            q = self.rational()
            if q == 0:
                return ONE
            return power(base, q)
        return base

    def integer(self):
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        t = self.take()
        if t[0] != "num" or not t[1].isdigit():
            raise ParseError("expected an integer exponent", t[2])
        return sign * int(t[1])

    def rational(self):
        if self.peek()[1] == "(":
            self.take()
            n = self.integer()
            d = 1
            if self.peek()[1] == "/":
                self.take()
                d = self.integer()
                if d == 0:
                    raise ParseError("zero denominator in exponent", self.peek()[2])
            self.expect(")")
            return Fraction(n, d)
        return Fraction(self.integer())

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(Fraction(val))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "id":
            if val == "x":
                return X
            if val == "pi":
                return PI
            if val == "e":
                return E
            if val in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                try:
                    return _FUNCS[val](arg)
                except ValueError as err:
                    raise ParseError(str(err), pos) from None
            if val == "Int":
                self.expect("(")
                h = self.expr()
                self.expect(",")
                k = self.take()
                if k[1] not in ("sin", "cos"):
                    raise ParseError("expected 'sin' or 'cos' as integral kind", k[2])
                self.expect(",")
                g = self.expr()
                self.expect(")")
                try:
                    return OscInt(h, g, k[1])
                except ValueError as err:
                    raise ParseError(str(err), pos) from None
            raise ParseError(f"unknown identifier {val!r}", pos)
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)


def parse(text):
    p = _Parser(text)
    e = p.expr()
    t = p.peek()
    if t[0] != "end":
        raise ParseError(f"unexpected {t[1]!r}", t[2])
    return e


# ---------------------------------------------------------------- numerics

class NumericInterval:
    __slots__ = ("lo", "hi", "precision")

    def __init__(self, lo, hi, precision):
        self.lo, self.hi, self.precision = lo, hi, precision

    def __repr__(self):
        return f"NumericInterval([{mpmath.nstr(self.lo, 20)}, {mpmath.nstr(self.hi, 20)}], {self.precision} bits)"

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, v):
        return self.lo <= v <= self.hi

    def excludes_zero(self):
        return self.lo > 0 or self.hi < 0

    def inside(self, other):
        return other.lo <= self.lo and self.hi <= other.hi


class DomainError(ValueError):
    pass


_iv_lock = threading.RLock()


def _iv_rat(q):
    q = Fraction(q)
    v = iv.mpf(q.numerator)
    if q.denominator != 1:
        v = v / q.denominator
    return v


def _iv_eval(e, xv, cache):
    if e in cache:
        return cache[e]
    if isinstance(e, Const):
        v = _iv_rat(e.value)
    elif isinstance(e, NamedConst):
        v = iv.pi if e.name == "pi" else iv.e
    elif isinstance(e, Var):
        v = xv
    elif isinstance(e, Sum):
        v = _iv_eval(e.args[0], xv, cache)
        for a in e.args[1:]:
            v = v + _iv_eval(a, xv, cache)
    elif isinstance(e, Prod):
        v = _iv_eval(e.args[0], xv, cache)
        for a in e.args[1:]:
            v = v * _iv_eval(a, xv, cache)
    elif isinstance(e, Pow):
        b = _iv_eval(e.base, xv, cache)
        q = e.exp
        if q.denominator == 1:
            if q < 0 and b.a <= 0 <= b.b:
                raise DomainError(f"division by an enclosure containing 0 in {e}")
            v = b ** int(q)
        else:
            if b.a <= 0:
                raise DomainError(f"fractional power of a non-positive enclosure in {e}")
            v = iv.exp(_iv_rat(q) * iv.log(b))
    elif isinstance(e, Exp):
        v = iv.exp(_iv_eval(e.arg, xv, cache))
    elif isinstance(e, Log):
        a = _iv_eval(e.arg, xv, cache)
        if a.a <= 0:
            raise DomainError(f"log of an enclosure reaching {mpmath.nstr(a.a, 5)} in {e}")
        v = iv.log(a)
    elif isinstance(e, Sin):
        v = iv.sin(_iv_eval(e.arg, xv, cache))
    elif isinstance(e, Cos):
        v = iv.cos(_iv_eval(e.arg, xv, cache))
    elif isinstance(e, OscInt):
        raise ValueError("integrals are evaluated by the verify module, not eval_numeric")
    else:
        raise TypeError(repr(e))
    cache[e] = v
    return v


def eval_numeric(e, x0, precision=128):
    """Enclosure of e(x0) computed in interval arithmetic at `precision` bits."""
    with _iv_lock:
        old = iv.prec
        iv.prec = precision
        try:
            xv = x0 if isinstance(x0, iv.mpf) else _iv_rat(Fraction(x0))
            v = _iv_eval(e, xv, {})
        finally:
            iv.prec = old
    return NumericInterval(mpmath.mpf(v.a), mpmath.mpf(v.b), precision)


def eval_float(e, x0, dps=30):
    """Plain mpmath evaluation at `dps` digits (no enclosure); x0 may be an mpf."""
    with mpmath.workdps(dps):
        return _mp_eval(e, mpmath.mpf(x0) if not isinstance(x0, Fraction)
                        else mpmath.mpf(x0.numerator) / x0.denominator, {})


def _mp_eval(e, xv, cache):
    if e in cache:
        return cache[e]
    if isinstance(e, Const):
        v = mpmath.mpf(e.value.numerator) / e.value.denominator
    elif isinstance(e, NamedConst):
        v = +mpmath.pi if e.name == "pi" else +mpmath.e
    elif isinstance(e, Var):
        v = xv
    elif isinstance(e, Sum):
        v = mpmath.fsum(_mp_eval(a, xv, cache) for a in e.args)
    elif isinstance(e, Prod):
        v = mpmath.fprod(_mp_eval(a, xv, cache) for a in e.args)
    elif isinstance(e, Pow):
        b = _mp_eval(e.base, xv, cache)
        q = e.exp
        v = b ** int(q) if q.denominator == 1 else b ** (mpmath.mpf(q.numerator) / q.denominator)
    elif isinstance(e, Exp):
        v = mpmath.exp(_mp_eval(e.arg, xv, cache))
    elif isinstance(e, Log):
        v = mpmath.log(_mp_eval(e.arg, xv, cache))
    elif isinstance(e, Sin):
        v = mpmath.sin(_mp_eval(e.arg, xv, cache))
    elif isinstance(e, Cos):
        v = mpmath.cos(_mp_eval(e.arg, xv, cache))
    else:
        raise ValueError(f"cannot evaluate {e} pointwise")
    cache[e] = v
    return v
