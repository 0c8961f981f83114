"""Regenerate the frozen reference values used in test_solver.py and test_frobenius.py.

Pure sympy, direct differentiation in r; shares no code with conecalc.
Run: python tests/oracles/symbolic_values.py
"""

import sympy as sp

r = sp.symbols("r", positive=True)
half = sp.Rational(1, 2)


def D(u):
    return -r * sp.diff(u, r)


def A(u):
    """r^-2((-r d_r)^2 - 1/4)."""
    return sp.simplify(r**-2 * (D(D(u)) - u / 4))


u = -r**-half * sp.log(r) - r**-half + r**half
print("A(resonant u) =", sp.simplify(A(u)))
print("A(r^2) =", A(r**2), "  A(log r) =", A(sp.log(r)))
print("A(4/15 r^2) =", A(sp.Rational(4, 15) * r**2))

# reduced Coulomb s-wave chi'' + 2Z/r chi + 2E chi = 0, chi = sum a_j r^(j+1), E = -Z^2/2
for Z in (1, 2):
    E = -sp.Rational(Z**2, 2)
    a = sp.symbols("a0:5")
    chi = sum(a[j] * r ** (j + 1) for j in range(5))
    expr = sp.expand(sp.diff(chi, r, 2) + 2 * Z / r * chi + 2 * E * chi)
    sol = sp.solve([expr.coeff(r, k) for k in range(3)], a[1:4], dict=True)[0]
    print(f"Z={Z}: a1/a0 =", sp.simplify(sol[a[1]] / a[0]), "  a2/a0 =", sp.simplify(sol[a[2]] / a[0]))

nu = sp.Rational(3, 2)
for e in (nu, -nu):
    print(f"Euler r^{e}:", sp.simplify(r**2 * sp.diff(r**e, r, 2) + r * sp.diff(r**e, r) - nu**2 * r**e))
