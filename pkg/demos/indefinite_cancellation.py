"""Three summands whose leading terms cancel forever.

The merged expansion of F keeps cancelling; the x^-1 shadow of F is
constant, so the expansion restarts from the ghost.
"""
import mpmath

from oscint import detect_zero_shadow, expand_general, parse
from oscint.expr import to_string
from oscint.verify import oracle_tail

F = ("Int(1/(x*log(x)+sqrt(x)), sin, log(x)) + cos(log(x))/log(x)"
     " + Int(1/(x*log(x)^2), cos, log(x))")
z = detect_zero_shadow(F)
print(f"{z} after {z.cancellations} cancellations")
print("ghost:", to_string(z.ghost))

ge = expand_general(F, 1)
print("leading term:", ge.terms[0].expr)

p = parse("1/(x*log(x)+sqrt(x)) - 1/(x*log(x))")
for k in (4, 6, 8):
    x = mpmath.e ** k
    Fx = oracle_tail(p, parse("log(x)"), x).mid
    print(f"x = e^{k}:  |F| x^(1/2) log^2 x = {float(abs(Fx) * mpmath.sqrt(x) * k * k):.4f}")
