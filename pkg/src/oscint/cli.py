"""Command-line front end.

    oscint expand "Int(1, sin, x^2)" --terms 3
    oscint verify "Int(exp(-x), sin, log(x))" --grid 5,10
    oscint classify "Int(exp(-x), sin, log(x))"
    oscint shadow "Int(1, sin, x^2)" --scale-index 1/x
    oscint limit "x*(exp(1/x) - 1)"
    oscint mlimit "1/(x*cos(x))" --alpha "1/x" --at 1e2,1e3

Exit codes: 0 success, 1 failed check or unsupported input, 2 parse error,
3 undecided constant, 4 budget exhausted (partial output is still printed).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import integrate as itg
from . import multiseries as ms
from . import zero
from .errors import BudgetExhausted, OscintError, ZeroUnknown
from .expr import OscInt, ParseError, Prod, Const, normalize, parse, to_latex, to_string

__all__ = ["CliConfig", "run", "main"]


@dataclass
class CliConfig:
    terms: int = 3
    format: str = "text"
    grid: list = field(default_factory=list)
    precision: int = 106
    zero_max_bits: int = None
    zero_max_x: float = None
    budget_switches: int = None
    budget_cancel: int = None
    scale_index: str = None

    def __post_init__(self):
        if self.terms < 1:
            raise ValueError("--terms must be at least 1")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("--grid must be strictly increasing")


def _grid(text):
    return [Fraction(t.strip()) for t in text.split(",") if t.strip()]


def _parser():
    p = argparse.ArgumentParser(prog="oscint", description="Asymptotic expansion of oscillatory integrals.")
    p.add_argument("command", choices=["expand", "verify", "classify", "shadow", "limit", "mlimit"])
    p.add_argument("expr")
    p.add_argument("--terms", type=int, default=3)
    p.add_argument("--format", choices=["text", "json", "latex"], default="text")
    p.add_argument("--grid", type=_grid, default=None)
    p.add_argument("--precision", type=int, default=int(os.environ.get("OSCINT_PRECISION", 106)))
    p.add_argument("--zero-max-bits", type=int, default=None)
    p.add_argument("--zero-max-x", type=float, default=None)
    p.add_argument("--budget-switches", type=int, default=None)
    p.add_argument("--budget-cancel", type=int, default=None)
    p.add_argument("--scale-index", default=None,
                   help="scale element: a level number (1 = slowest) or an element such as 1/x or exp(-x)")
    p.add_argument("--alpha", default="1/x", help="mlimit: decreasing weight function")
    p.add_argument("--value", type=Fraction, default=Fraction(0), help="mlimit: candidate limit")
    p.add_argument("--eps", type=float, default=0.01, help="mlimit: tolerance")
    p.add_argument("--at", default="1e2,1e3,1e4", help="mlimit: comma-separated starting points")
    return p


def _apply(cfg):
    if cfg.zero_max_bits is not None:
        zero.config.max_bits = cfg.zero_max_bits
    if cfg.zero_max_x is not None:
        zero.config.max_x = cfg.zero_max_x
    if cfg.budget_switches is not None:
        itg.config.max_switches = cfg.budget_switches
    if cfg.budget_cancel is not None:
        itg.config.cancel_budget = cfg.budget_cancel


def _single_integral(e):
    e = normalize(e)
    if isinstance(e, OscInt):
        return e
    return None


def _element(text, exprs):
    """Scale element named by a level number or an element expression."""
    S = ms.default_scale()
    for e in exprs:
        S = ms.ensure_scale(e, S)
    if text is None:
        return S.elem(len(S))
    try:
        return int(text)
    except ValueError:
        pass
    m = ms.monomial_of(parse(text), S)
    items = list(m.items())
    if len(items) != 1 or items[0][1] != 1:
        raise OscintError(f"{text} is not a scale element")
    return items[0][0]


def _emit_terms(rows, cfg, out, extra=None):
    """rows: [(expression, gamma0 monomial, json rows)]."""
    if cfg.format == "json":
        payload = {"terms": [r for _, _, js in rows for r in js]}
        payload.update(extra or {})
        out.write(json.dumps(payload, indent=2) + "\n")
    elif cfg.format == "latex":
        out.write(" + ".join(to_latex(e) for e, _, _ in rows) + "\n")
    else:
        for e, m, _ in rows:
            out.write(f"{to_string(e)}    [gamma0 {to_string(m.expr)}]\n")


def _cmd_expand(e, cfg, out, err):
    I = _single_integral(e)
    if I is not None:
        E = itg.expand_osc_integral(I)
        terms = E.terms(cfg.terms)
        rows = [(t.expr, t.gamma0, t.to_json()) for t in terms]
        _emit_terms(rows, cfg, out, {"history": E.history, "constant": E.tag, "exact": E.exact})
        for h in E.history:
            err.write(f"step {h['step']}: {h['case']}{' (sense switch)' if h['switched'] else ''}\n")
        if E.exhausted is not None:
            err.write(f"budget exhausted: {E.exhausted}\n")
            return 4
        return 0
    try:
        G = itg.expand_general(e, cfg.terms)
    except BudgetExhausted as exc:
        if exc.partial is not None:
            rows = [(t.expr, t.mono, t.to_json()) for t in exc.partial.terms]
            _emit_terms(rows, cfg, out, {"truncated": True})
        err.write(f"budget exhausted: {exc}\n")
        return 4
    if G.zero_shadow is not None:
        err.write(f"{G.zero_shadow} after {G.zero_shadow.cancellations} cancellations; "
                  f"expanding the ghost {to_string(G.zero_shadow.ghost)}\n")
    rows = [(t.expr, t.mono, t.to_json()) for t in G.terms]
    _emit_terms(rows, cfg, out, {"cancellations": G.cancellations})
    return 0


def _cmd_verify(e, cfg, out, err):
    from .verify import check_expansion
    I = _single_integral(e)
    if I is None:
        raise OscintError("verify takes a single integral Int(h, sin|cos, G)")
    grid = cfg.grid or [Fraction(10), Fraction(20), Fraction(40)]
    rep = check_expansion(I.integrand, I.phase, cfg.terms, grid, fn=I.kind, precision=cfg.precision)
    if cfg.format == "json":
        out.write(json.dumps(rep, indent=2) + "\n")
    else:
        out.write(f"{'x':>10} {'n':>3} {'remainder':>12} {'bound':>12} {'ratio':>8}  pass\n")
        for r in rep["rows"]:
            out.write(f"{r['x']:>10g} {r['n']:>3} {r['remainder']:>12.4e} {r['bound']:>12.4e} "
                      f"{r['ratio']:>8.4f}  {'yes' if r['pass'] else 'NO'}\n")
        out.write("PASS\n" if rep["pass"] else "FAIL\n")
    return 0 if rep["pass"] else 1


def _cmd_classify(e, cfg, out, err):
    I = _single_integral(e)
    if I is None:
        raise OscintError("classify takes a single integral Int(h, sin|cos, G)")
    case = itg.classify(I.integrand, I.phase)
    E = itg.expand_osc_integral(I)
    E.terms(cfg.terms)
    if cfg.format == "json":
        out.write(json.dumps({"case": str(case), "history": E.history}, indent=2) + "\n")
    else:
        out.write(f"{case}\n")
        for h in E.history:
            out.write(f"  step {h['step']}: {h['case']}{' (sense switch)' if h['switched'] else ''}\n")
    return 4 if E.exhausted is not None else 0


def _cmd_shadow(e, cfg, out, err):
    I = _single_integral(e)
    if I is not None:
        i = _element(cfg.scale_index, [I.integrand, I.phase])
        r = itg.shadow_phi(I, i=i)
        z1, z2, T = itg.ghost_normal_form(I, i=i)
        if cfg.format == "json":
            out.write(json.dumps({"case": r.case, "phi": to_string(r.phi), "T": to_string(r.T.expr),
                                  "A": r.A, "exact": r.exact,
                                  "ghost": {"zeta1": to_string(z1), "zeta2": to_string(z2)}}, indent=2) + "\n")
        elif cfg.format == "latex":
            out.write(to_latex(r.phi) + "\n")
        else:
            out.write(f"{r}\n")
            out.write(f"ghost: T^-1 (Int({to_string(z1)}, sin) + Int({to_string(z2)}, cos)), T = {to_string(T.expr)}\n")
        return 0
    i = None if cfg.scale_index is None else _element(cfg.scale_index, itg._field_parts(e))
    z = itg.detect_zero_shadow(e, i)
    if cfg.format == "json":
        out.write(json.dumps({"result": str(z), "cancellations": z.cancellations,
                              "ghost": to_string(z.ghost) if z.ghost is not None else None}, indent=2) + "\n")
    else:
        out.write(f"{z}\n")
        if z.ghost is not None:
            out.write(f"ghost: {to_string(z.ghost)}\n")
    return 4 if z.kind == "Exhausted" else 0


def _cmd_limit(e, cfg, out, err):
    v = ms.limit(e)
    s = str(v) if isinstance(v, ms._Infinity) else to_string(v)
    if cfg.format == "json":
        out.write(json.dumps({"limit": s}) + "\n")
    else:
        out.write(s + "\n")
    return 0


def _cmd_mlimit(e, cfg, args, out, err):
    from .verify import measured_limit_estimate
    alpha = parse(args.alpha)
    rows = []
    for X in (float(t) for t in args.at.split(",")):
        s = measured_limit_estimate(e, alpha, float(args.value), args.eps, X)
        rows.append({"X": s.X, "estimate": s.estimate, "horizon": s.horizon, "tail": s.tail})
    if cfg.format == "json":
        out.write(json.dumps({"samples": rows}, indent=2) + "\n")
    else:
        for r in rows:
            out.write(f"X={r['X']:g}  estimate={r['estimate']:.6f}  horizon={r['horizon']:g}\n")
    return 0


def run(argv=None, out=None, err=None):
    """Run one command; returns the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    args = _parser().parse_args(argv)
    try:
        cfg = CliConfig(args.terms, args.format, args.grid or [], args.precision, args.zero_max_bits,
                        args.zero_max_x, args.budget_switches, args.budget_cancel, args.scale_index)
    except ValueError as exc:
        err.write(f"error: {exc}\n")
        return 2
    _apply(cfg)
    try:
        e = parse(args.expr)
    except ParseError as exc:
        err.write(f"parse error: {exc}\n")
        return 2
    try:
        if args.command == "expand":
            return _cmd_expand(e, cfg, out, err)
        if args.command == "verify":
            return _cmd_verify(e, cfg, out, err)
        if args.command == "classify":
            return _cmd_classify(e, cfg, out, err)
        if args.command == "shadow":
            return _cmd_shadow(e, cfg, out, err)
        if args.command == "limit":
            return _cmd_limit(e, cfg, out, err)
        return _cmd_mlimit(e, cfg, args, out, err)
    except ZeroUnknown as exc:
        err.write(f"undecided: {to_string(exc.expr) if hasattr(exc.expr, 'rank') else exc.expr} "
                  f"(sign unknown after {exc.bits} bits)\n")
        return 3
    except BudgetExhausted as exc:
        err.write(f"budget exhausted: {exc}\n")
        return 4
    except OscintError as exc:
        err.write(f"error: {exc}\n")
        return 1


def main():
    sys.exit(run())
