"""Expand int sin(x^2) and compare the partial sums with quadrature."""
from oscint import expand_osc_integral, check_expansion, parse

h, G = parse("1"), parse("x^2")
E = expand_osc_integral(h, G)
print("int sin(x^2) dx =")
for t in E.terms(4):
    print(f"    {t.expr}")
print("history:", [r["case"] for r in E.history])

rep = check_expansion(h, G, 3, [10, 20, 40], expansion=E)
print(f"\n{'x':>6} {'n':>3} {'remainder':>12} {'next term':>12} {'ratio':>7}")
for r in rep["rows"]:
    print(f"{r['x']:>6g} {r['n']:>3} {r['remainder']:>12.3e} {r['bound']:>12.3e} {r['ratio']:>7.3f}")
