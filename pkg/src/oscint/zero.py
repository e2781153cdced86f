"""Sign and zero decisions for constants and for functions at infinity.

A constant is declared zero only when normalization reduces it to the
rational 0.  Otherwise its sign comes from interval evaluation at
escalating precision; if no enclosure excludes zero the answer is
`Unknown`.  Numerics never prove zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ZeroUnknown
from .expr import Const, DomainError, eval_numeric, is_constant, normalize


@dataclass(frozen=True)
class Verdict:
    kind: str                 # "zero", "positive", "negative", "unknown"
    bits: int = 0

    @property
    def sign(self):
        return {"zero": 0, "positive": 1, "negative": -1}.get(self.kind)

    def __str__(self):
        return f"Unknown({self.bits})" if self.kind == "unknown" else self.kind.capitalize()


ZERO = Verdict("zero")
POSITIVE = Verdict("positive")
NEGATIVE = Verdict("negative")


def Unknown(bits):
    return Verdict("unknown", bits)


@dataclass
class ZeroConfig:
    min_bits: int = 64
    max_bits: int = 4096
    max_x: float = 1e8


config = ZeroConfig()

_cache = {}


def const_sign(e, max_bits=None):
    if max_bits is None:
        max_bits = config.max_bits
    e = normalize(e)
    if not is_constant(e):
        raise ValueError(f"{e} is not a constant")
    if isinstance(e, Const):
        return ZERO if e.value == 0 else (POSITIVE if e.value > 0 else NEGATIVE)
    key = (e, max_bits)
    if key in _cache:
        return _cache[key]
    bits = config.min_bits
    verdict = None
    while bits <= max_bits:
        try:
            v = eval_numeric(e, 1, bits)
        except DomainError:
            v = None
        if v is not None and v.excludes_zero():
            verdict = POSITIVE if v.lo > 0 else NEGATIVE
            break
        bits *= 2
    if verdict is None:
        verdict = Unknown(min(bits, max_bits))
    _cache[key] = verdict
    return verdict


def const_is_zero(e):
    """True/False for a constant, raising ZeroUnknown when undecided."""
    v = const_sign(e)
    if v.kind == "unknown":
        raise ZeroUnknown(e, v.bits)
    return v.kind == "zero"


def func_sign_at_infinity(e, scale=None):
    """Eventual sign of a base-field function, from its leading coefficient."""
    from . import multiseries as ms
    e = normalize(e)
    if isinstance(e, Const):
        return const_sign(e)
    try:
        lead, _ = ms.leading_term(e, scale)
    except ZeroUnknown as err:
        return ZERO if _rational_zero(e) else Unknown(err.bits)
    except ms.BudgetExhausted:
        return ZERO if _rational_zero(e) else Unknown(config.max_bits)
    if lead is None:
        return ZERO
    return const_sign(lead[0])


def _rational_zero(e):
    """Structural zero test through the compact rational form."""
    from .rational import together
    return together(e) == Const(0)


def sign_consistent_numerically(e, verdict, points=(Fraction(10 ** 4), Fraction(10 ** 8)), bits=512):
    """Cross-check an eventual-sign verdict by evaluation at large x."""
    if verdict.kind == "unknown":
        return True
    for x0 in points:
        if x0 > config.max_x:
            continue
        v = eval_numeric(e, x0, bits)
        if verdict.kind == "zero" and v.excludes_zero():
            return False
        if verdict.kind == "positive" and v.hi <= 0:
            return False
        if verdict.kind == "negative" and v.lo >= 0:
            return False
    return True
