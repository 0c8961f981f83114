"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np

from conecalc.cone import FuchsOperator, SpectralModel, conormal_hierarchy
from conecalc.edge import (
    conormal_inverse_field,
    cone_consistency,
    edge_parametrix_hierarchy,
    verify_edge_parametrix,
)
from conecalc.frobenius import frobenius_oracle
from conecalc.mero import mero_inverse
from conecalc.models import build_model
from conecalc.parametrix import parametrix_hierarchy
from conecalc.solver import SingularExpansion, apply_fuchs, indicial_roots, kernel_probe
from conecalc.suites import (
    defect_suite,
    flat_residual_suite,
    frobenius_suite,
    recursion_suite,
    remainder_suite,
    translation_product_suite,
)

RESULTS = []
SEED = 0


def record(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_01_cone_laplacian_indicial_data():
    t0 = time.perf_counter()
    _, A = build_model("cone_laplacian_s1", {"K": 8})
    roots = indicial_roots(A)
    h0 = conormal_hierarchy(A, L=0)[0]
    orders = {round(p.location.real): p.order for p in mero_inverse(h0).poles}
    dt = time.perf_counter() - t0
    err = max(abs(z - round(z.real)) for z, _ in roots)
    got = sorted(round(z.real) for z, _ in roots)
    ok = (got == list(range(-8, 9)) and err < 1e-10 and orders[0] == 2
          and all(orders[k] == 1 for k in orders if k) and dt < 1.0)
    record(1, "cone Laplacian indicial data", ok,
           f"17 roots +-k, root error {err:.1e}, log term at 0: {orders[0] == 2}, {dt:.3f}s")


def test_criterion_02_translation_product():
    r = translation_product_suite(seed=SEED, cases=50)
    record(2, "translation product = direct composition", r.passed, f"max rel error {r.metric:.2e} over {r.cases} pairs")


def test_criterion_03_defect_identities():
    r = defect_suite(seed=SEED, cases=20, L=6, samples=100)
    ok = r.passed and r.seconds < 30
    record(3, "parametrix defect identities", ok, f"max residual {r.metric:.2e}, {r.seconds:.1f}s")


def test_criterion_04_recursion_cross_check():
    r = recursion_suite(seed=SEED, cases=10, N=3)
    record(4, "operator recursion cross-check", r.passed,
           f"max deviation {r.metric:.2e}, trees 2/4 terms: {not r.details}")


def test_criterion_05_frobenius_equivalence():
    r = frobenius_suite(seed=SEED, cases=10, N=6)
    record(5, "Frobenius oracle equivalence", r.passed,
           f"structure match {not r.details}, coefficient error {r.metric:.2e}")


def test_criterion_06_resonance():
    A = FuchsOperator(2, SpectralModel.point(), np.array([[-0.25], [0.0], [1.0]]))
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    u = SingularExpansion.scalar([(0.5, 1, -1.0), (0.5, 0, -1.0), (-0.5, 0, 1.0)])
    res = (apply_fuchs(A, u) - f).scale()
    record(6, "resonance worked example", res < 1e-12, f"coefficient residual {res:.1e}")


def _coulomb_ratio(Z):
    _, A = build_model("coulomb_swave", {"Z": Z})
    P = parametrix_hierarchy(conormal_hierarchy(A, L=3), 0.0, 0, 3)
    u = next(u for z, _, u in kernel_probe(P, depth=3) if abs(z + 1) < 1e-8)
    ours = u.coefficient(-2, 0)[0] / u.coefficient(-1, 0)[0]
    v = next(v for v in frobenius_oracle(A, N=3).kernel()
             if abs(v.coefficient(0, 0)[0]) < 1e-12 and abs(v.coefficient(-1, 0)[0]) > 0)
    oracle = v.coefficient(-2, 0)[0] / v.coefficient(-1, 0)[0]
    return ours, oracle


def test_criterion_07_coulomb_cusp():
    worst = 0.0
    for Z in (1, 2):
        ours, oracle = _coulomb_ratio(Z)
        worst = max(worst, abs(ours + Z), abs(oracle + Z))
    record(7, "Coulomb cusp c1/c0 = -Z", worst < 1e-8, f"max |c1/c0 + Z| {worst:.1e} (parametrix and oracle)")


def test_criterion_08_edge_consistency():
    _, A = build_model("edge_laplacian_r3", {"K": 4})
    grid = np.linspace(-1, 1, 11)
    drift = conormal_inverse_field(A, grid, tol=1e-12).drift
    rep = verify_edge_parametrix(edge_parametrix_hierarchy(A, 4, gamma=0.5), samples=50, seed=SEED)
    cons = max(max(cone_consistency(A, [y], 0.5, 4, samples=5)) for y in grid)
    ok = drift < 1e-12 and len(rep.residuals) == 5 and rep.max_residual < 1e-10 and cons <= 1e-12
    record(8, "edge consistency", ok,
           f"drift {drift:.1e}, Leibniz residual {rep.max_residual:.1e} (L=4), cone path {cons:.1e}")


def test_criterion_09_remainder_algebra():
    r = remainder_suite()
    record(9, "remainder-class algebra", r.passed, f"{int(r.metric)} violations in {r.cases} pairs and triples")


def test_criterion_10_flat_residual():
    r = flat_residual_suite(seed=SEED, cases=10, N=5)
    record(10, "flat-residual law", r.passed, f"smallest residual gap {r.metric:g} orders (need >= 4)")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_criterion")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
