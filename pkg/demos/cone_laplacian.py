"""The flat Laplacian near the tip of a 2D cone, mode by mode.

In polar coordinates r^-2((r d_r)^2 + d_phi^2) acts on the Fourier modes
e^{ik phi} through h0(z) = z^2 - k^2.  The indicial roots are +-k; at k = 0
the root is double and gives the solutions 1 and log r.  We list the roots,
the homogeneous solutions inside the weight strip and the defect of the
parametrix hierarchy.
"""

from conecalc import build_model, conormal_hierarchy, kernel_probe, parametrix_hierarchy, verify_parametrix
from conecalc.solver import indicial_roots

K, gamma, L = 4, 0.5, 3
_, A = build_model("cone_laplacian_s1", {"K": K})
print("indicial roots (z, multiplicity of det h0):")
print("  ", [(round(z.real, 12), m) for z, m in indicial_roots(A)])

H = conormal_hierarchy(A, L=L)
P = parametrix_hierarchy(H, gamma, 1, L)
print(f"\nhomogeneous solutions with weight gamma = {gamma}:")
labels = A.model.mode_labels
for zeta, (e, shift), u in kernel_probe(P, depth=L):
    logs = max(k for p, k, _ in u.terms if abs(p - zeta) < 1e-8)
    power = round(-zeta.real, 10) + 0.0
    print(f"   mode k = {labels[e]:+d}:  r^{power:g}" + (" log r" if logs else ""))

rep = verify_parametrix(H, P)
print("\nparametrix defect per level:", [f"{x:.1e}" for x in rep.left])
print("remainder class:", rep.remainder)
