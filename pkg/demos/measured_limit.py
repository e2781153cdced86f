"""Measured limits: 1/(x cos x) tends to 0 in x^-1 measure, its log2 composition does not."""
from oscint import measured_limit_estimate, parse

for name, f in (("x^-1 sec x", "1/(x*cos(x))"),
                ("composed with log2", "1/(log(log(x))*cos(log(log(x))))")):
    est = [measured_limit_estimate(parse(f), parse("1/x"), 0, 0.01, X).estimate for X in (1e2, 1e3, 1e4)]
    print(f"{name:>20}: " + "  ".join(f"{v:.4f}" for v in est))
