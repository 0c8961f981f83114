"""Kato's cusp condition from the conormal symbol hierarchy.

For the radial s-wave Coulomb problem chi'' + 2Z/r chi + 2E chi = 0 the
indicial roots are 0 and -1 (chi ~ r).  Propagating the regular solution
through the parametrix hierarchy gives chi = c0 r (1 - Z r + ...), i.e.
c1/c0 = -Z, which we compare with a Frobenius series computed directly.
"""

from conecalc import build_model, conormal_hierarchy, kernel_probe, parametrix_hierarchy
from conecalc.frobenius import frobenius_oracle

N = 4
print(" Z    c1/c0 (parametrix)   c2/c0 (parametrix)   c1/c0 (Frobenius)")
for Z in (1, 2, 3.5):
    _, A = build_model("coulomb_swave", {"Z": Z})
    P = parametrix_hierarchy(conormal_hierarchy(A, L=N), 0.0, 0, N)
    chi = next(u for z, _, u in kernel_probe(P, depth=N) if abs(z + 1) < 1e-8)
    c = [chi.coefficient(-1 - j, 0)[0] for j in range(3)]
    v = next(v for v in frobenius_oracle(A, N=N).kernel()
             if abs(v.coefficient(0, 0)[0]) < 1e-12 and abs(v.coefficient(-1, 0)[0]) > 0)
    ratio = v.coefficient(-2, 0)[0] / v.coefficient(-1, 0)[0]
    print(f"{Z:4g}   {(c[1] / c[0]).real:18.12f}   {(c[2] / c[0]).real:18.12f}   {ratio.real:18.12f}")
print("\nexpected c1/c0 = -Z and c2/c0 = Z^2/2 (E = -Z^2/2)")
