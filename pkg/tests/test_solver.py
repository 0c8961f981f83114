import numpy as np
import pytest

from conecalc.cone import FuchsOperator, SpectralModel, conormal_hierarchy
from conecalc.models import build_model
from conecalc.parametrix import parametrix_hierarchy
from conecalc.solver import (
    SingularExpansion,
    apply_fuchs,
    apply_parametrix,
    indicial_roots,
    kernel_probe,
    solve_asymptotics,
)

POINT = SpectralModel.point()
# r^-2((-r d_r)^2 - 1/4)
A_RES = FuchsOperator(2, POINT, np.array([[-0.25], [0.0], [1.0]]))

# frozen symbolic results (sympy, direct differentiation)
RESONANT_U = {(0.5, 1): -1.0, (0.5, 0): -1.0, (-0.5, 0): 1.0}
A_OF_R2 = 15 / 4
COULOMB_RATIOS = {1: (-1.0, 0.5), 2: (-2.0, 2.0)}   # a1/a0, a2/a0 of the regular chi


def as_dict(u, tol=1e-12):
    return {(round(p.real, 9), k): complex(c[0]) for p, k, c in u.terms if abs(c[0]) > tol}


def test_apply_fuchs_power():
    u = SingularExpansion.scalar([(-2, 0, 1.0)])
    out = as_dict(apply_fuchs(A_RES, u))
    assert set(out) == {(0, 0)}
    assert abs(out[(0, 0)] - A_OF_R2) < 1e-14


def test_apply_fuchs_log():
    out = as_dict(apply_fuchs(A_RES, SingularExpansion.scalar([(0, 1, 1.0)])))
    assert out == {(2, 1): -0.25}


def test_apply_fuchs_identity():
    I = FuchsOperator(0, POINT, np.array([[1.0]]))
    u = SingularExpansion.scalar([(0.3, 2, 1.5), (-1.2, 0, -2.0)])
    assert as_dict(apply_fuchs(I, u)) == as_dict(u)


def test_apply_fuchs_linear():
    rng = np.random.default_rng(0)
    A = FuchsOperator(2, POINT, rng.normal(size=(3, 3)))
    u = SingularExpansion.scalar([(0.3, 1, 1.0), (-0.4, 0, 2.0)])
    v = SingularExpansion.scalar([(0.3, 0, -1.0), (-1.4, 2, 0.5)])
    a, b = 0.7, -1.3
    lhs = apply_fuchs(A, a * u + b * v)
    rhs = a * apply_fuchs(A, u) + b * apply_fuchs(A, v)
    assert (lhs - rhs).scale() < 1e-12 * lhs.scale()


def resonant_hierarchy(depth=0):
    return parametrix_hierarchy(conormal_hierarchy(A_RES, L=depth), -0.25, 0, depth)


def test_apply_parametrix_resonance():
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    u = apply_parametrix(resonant_hierarchy(), f, 0)
    got = as_dict(u)
    assert set(got) == set(RESONANT_U)
    for key, c in RESONANT_U.items():
        assert abs(got[key] - c) < 1e-12
    assert (apply_fuchs(A_RES, u) - f).scale() < 1e-12


def test_apply_parametrix_constant():
    P = parametrix_hierarchy(conormal_hierarchy(A_RES, L=0), -1.0, 0, 0)
    u = apply_parametrix(P, SingularExpansion.scalar([(0, 0, 1.0)]), 0)
    got = as_dict(u)
    assert abs(got[(-2, 0)] - 4 / 15) < 1e-13
    # the remaining terms are kernel terms r^-+1/2
    assert set(got) - {(-2, 0)} <= {(0.5, 0), (-0.5, 0)}


def test_apply_parametrix_holomorphic():
    P = parametrix_hierarchy(conormal_hierarchy(A_RES, L=0), -0.25, 0, 0)
    # p = 2.6 is not a pole of q0, so the particular part is a single power
    f = SingularExpansion.scalar([(2.6, 0, 1.0)])
    part, _ = apply_parametrix(P, f, 0, split=True)
    got = as_dict(part)
    assert list(got) == [(0.6, 0)]
    assert abs(got[(0.6, 0)] - 1 / (0.6**2 - 0.25)) < 1e-12


def test_apply_parametrix_linear():
    P = resonant_hierarchy(2)
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    g = SingularExpansion.scalar([(2.2, 1, 1.0)])
    lhs = apply_parametrix(P, 2 * f - 3 * g)
    rhs = 2 * apply_parametrix(P, f) - 3 * apply_parametrix(P, g)
    assert (lhs - rhs).scale() < 1e-12 * lhs.scale()


def test_solve_resonance_end_to_end():
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    S = solve_asymptotics(A_RES, f, -0.25, 1)
    assert S.flat_ok
    assert S.residual.scale() < 1e-12
    got = as_dict(S.u)
    for key, c in RESONANT_U.items():
        assert abs(got[key] - c) < 1e-12


def test_cone_laplacian_homogeneous_probes():
    _, A = build_model("cone_laplacian_s1", {"K": 3})
    P = parametrix_hierarchy(conormal_hierarchy(A, L=0), 0.5, 1, 0)
    seen = {}
    for zeta, _, u in kernel_probe(P, roots="all", depth=0):
        key = round(zeta.real, 9)
        seen[key] = max(seen.get(key, 0), max(k for p, k, _ in u.terms if abs(p - zeta) < 1e-8))
    assert seen == {-3: 0, -2: 0, -1: 0, 0: 1, 1: 0, 2: 0, 3: 0}


@pytest.mark.parametrize("Z", [1, 2])
def test_coulomb_cusp(Z):
    _, A = build_model("coulomb_swave", {"Z": Z})
    P = parametrix_hierarchy(conormal_hierarchy(A, L=3), 0.0, 0, 3)
    probes = [u for zeta, _, u in kernel_probe(P, depth=3) if abs(zeta + 1) < 1e-8]
    assert len(probes) == 1
    u = probes[0]
    c0, c1, c2 = (u.coefficient(-1 - j, 0)[0] for j in range(3))
    want1, want2 = COULOMB_RATIOS[Z]
    assert abs(c1 / c0 - want1) < 1e-8
    assert abs(c2 / c0 - want2) < 1e-8


def test_indicial_roots():
    roots = sorted((round(z.real, 9), m) for z, m in indicial_roots(A_RES))
    assert roots == [(-0.5, 1), (0.5, 1)]


def test_expansion_rejects_terms_outside_strip():
    with pytest.raises(ValueError):
        SingularExpansion.scalar([(1.0, 0, 1.0)], gamma=0.0, n=0)


def test_expansion_json_round_trip():
    u = SingularExpansion([(0.5 + 0.25j, 1, [1.0, -2j]), (-0.5, 0, [0.0, 3.0])], 2)
    v = SingularExpansion.from_dict(u.to_dict())
    assert v.to_dict() == u.to_dict()


def test_probes_only_from_null_space():
    _, A = build_model("cone_laplacian_s1", {"K": 4})
    P = parametrix_hierarchy(conormal_hierarchy(A, L=1), 0.5, 1, 1)
    labels = A.model.mode_labels
    got = sorted((round(z.real), labels[e], s) for z, (e, s), _ in kernel_probe(P))
    want = sorted([(0, 0, 0), (0, 0, 1)] + [(-k, sgn * k, 0) for k in range(1, 5) for sgn in (1, -1)])
    assert got == want
