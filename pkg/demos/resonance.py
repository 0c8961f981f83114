"""A resonant right-hand side produces a logarithm.

The operator r^-2((-r d_r)^2 - 1/4) has indicial roots +-1/2.  For the
right-hand side f = r^-5/2 the exponent of the particular solution lands on
the root 1/2, and the parametrix returns a double pole: the expansion picks
up r^-1/2 log r.  We solve, print the expansion and check it against a
direct numerical application of the operator.
"""

import numpy as np

from conecalc import FuchsOperator, SingularExpansion, SpectralModel, apply_fuchs, solve_asymptotics

A = FuchsOperator(2, SpectralModel.point(), np.array([[-0.25], [0.0], [1.0]]))
f = SingularExpansion.scalar([(2.5, 0, 1.0)])      # r^-p with p = 5/2

S = solve_asymptotics(A, f, gamma=-0.25, N=2)
print("expansion of u (terms c r^-p log^k r):")
print(S.u.pruned().table())
print("\nasymptotic type:", S.type)
print("residual of A u - f:", S.residual.scale(), " flat:", S.flat_ok)

# finite-difference check of A u = f on a few radii
r = np.array([0.05, 0.1, 0.3])
h = 1e-4
u = lambda x: S.u.evaluate(x)[:, 0]
d1 = (u(r * (1 + h)) - u(r * (1 - h))) / (2 * h)                  # r d_r u
d2 = (u(r * (1 + h)) - 2 * u(r) + u(r * (1 - h))) / h**2 + d1      # (r d_r)^2 u to O(h)
Au = r**-2 * (d2 - u(r) / 4)
print("\nA u at r =", r, "->", np.round(Au.real, 4))
print("f   at r =", r, "->", np.round(r**-2.5, 4))
print("symbolic check, A u - f:", (apply_fuchs(A, S.u) - f).scale())
