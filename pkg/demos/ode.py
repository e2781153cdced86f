"""y'' + y = 1/x by variation of parameters, with asymptotic integrals."""
from oscint import solve_ode
from oscint.expr import add, to_string

s = solve_ode(1, "-1/x")
print("int h sin:", [str(t.expr) for t in s.int_s.terms(3)])
print("int h cos:", [str(t.expr) for t in s.int_c.terms(3)])
y = s.terms(2)
print("y =", " + ".join(map(to_string, y)))
print("residual:", to_string(s.residual(y=add(*y)).expr))
