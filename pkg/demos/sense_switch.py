"""A Diff-h run that turns into Int-h: h = x^3 (1 + e^(-x^3)), G = x^2/2.

The first terms shrink by a factor x^2 each, until the e^(-x^3) part takes
over and h<2> < h<3>.  The engine peels the closed form and switches sense.
"""
from oscint import expand_osc_integral, parse
from oscint.integrate import h_step
from oscint.multiseries import cmp_gamma0

h, g = parse("x^3*(1+exp(-x^3))"), parse("x")
seq = [h]
for _ in range(3):
    seq.append(h_step(seq[-1], g))
for k, hk in enumerate(seq):
    print(f"h<{k}> = {hk}")
print("h<2> vs h<3>:", cmp_gamma0(seq[2], seq[3]))

E = expand_osc_integral(h, parse("x^2/2"))
for t, row in zip(E.terms(4), E.history):
    print(f"{row['case']:>16}{' (switch)' if row['switched'] else '':9}  {t}")
