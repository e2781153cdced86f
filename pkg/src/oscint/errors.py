"""Exceptions shared across the package."""


class OscintError(Exception):
    pass


class ZeroUnknown(OscintError):
    """The zero oracle could not decide the sign of a constant."""

    def __init__(self, expr, bits):
        super().__init__(f"cannot decide whether {expr} is zero (tried up to {bits} bits)")
        self.expr = expr
        self.bits = bits


class BudgetExhausted(OscintError):
    """A configured term, cancellation or sense-switch budget ran out."""

    def __init__(self, message="", partial=None):
        super().__init__(message)
        self.partial = partial


class Unsupported(OscintError):
    pass


class NotInBaseField(OscintError):
    pass


class PreconditionError(OscintError):
    pass


class HypothesisViolation(OscintError):
    def __init__(self, which, detail=""):
        super().__init__(f"{which}: {detail}" if detail else which)
        self.which = which
