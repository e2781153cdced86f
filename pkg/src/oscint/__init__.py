"""Asymptotic expansions of oscillatory integrals over exp-log functions."""
from .errors import (
    BudgetExhausted, HypothesisViolation, NotInBaseField, OscintError, PreconditionError,
    Unsupported, ZeroUnknown,
)
from .expr import differentiate, normalize, parse, to_latex, to_string
from .integrate import (
    classify, detect_zero_shadow, expand_general, expand_osc_integral, ghost_normal_form,
    integrate_hg, shadow_phi, solve_ode,
)
from .multiseries import expand, limit
from .trig import to_normal_form
from .verify import check_expansion, measured_limit_estimate, quad_osc

__all__ = [
    "BudgetExhausted", "HypothesisViolation", "NotInBaseField", "OscintError", "PreconditionError",
    "Unsupported", "ZeroUnknown", "differentiate", "normalize", "parse", "to_latex", "to_string",
    "classify", "detect_zero_shadow", "expand_general", "expand_osc_integral", "ghost_normal_form",
    "integrate_hg", "shadow_phi", "solve_ode", "expand", "limit", "to_normal_form",
    "check_expansion", "measured_limit_estimate", "quad_osc",
]
