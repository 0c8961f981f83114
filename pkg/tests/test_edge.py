import warnings

import numpy as np
import pytest

from conecalc.cone import SpectralModel
from conecalc.edge import (
    EdgeDegenerateOperator,
    YCallback,
    check_edge_ellipticity,
    cone_consistency,
    conormal_inverse_field,
    edge_mellin_symbol,
    edge_parametrix_hierarchy,
    reduce_to_cone,
    subordinate_conormal,
    verify_edge_parametrix,
)
from conecalc.models import build_model

GRID = np.linspace(-1, 1, 11)
POINT = SpectralModel.point()


def laplacian(K=3):
    return build_model("edge_laplacian_r3", {"K": K})[1]


def drifting():
    # sigma_c(y, z) = z - y: the pole moves with y
    return EdgeDegenerateOperator(1, 1, POINT, {(1, (0,), 0): [[1.0]], (0, (0,), 0): {(1,): [[-1.0]]}})


def variable():
    # y- and r-dependent second-order operator, elliptic near the edge
    return EdgeDegenerateOperator(2, 1, POINT, {
        (2, (0,), 0): {(0,): [[1.0]], (2,): [[0.2]]},
        (1, (0,), 1): {(1,): [[0.3]]},
        (0, (0,), 0): [[-0.25]],
        (0, (2,), 0): [[-1.0]],
        (1, (1,), 0): {(0,): [[0.1]]},
    })


def test_laplacian_subordinate_conormal():
    A = laplacian()
    sc = subordinate_conormal(A)
    assert sc.is_y_independent()
    k = np.arange(-3, 4)
    z = np.array([0.3 + 1j, 2.0])
    for y in (-1.0, 0.4):
        vals = sc(np.array([y]))(z)
        for t in range(2):
            assert np.allclose(vals[t], np.diag(z[t] ** 2 - k**2))


def test_laplacian_drift_zero():
    f = conormal_inverse_field(laplacian(), GRID)
    assert f.drift < 1e-12 and f.constant_type
    assert f.verdict == "constant Mellin asymptotic type"


def test_scaling_keeps_poles():
    A = laplacian(2).scaled({(0,): 1.0, (2,): 1.0})
    f = conormal_inverse_field(A, GRID)
    assert f.drift < 1e-12
    assert sorted(round(p.real, 9) for p, _ in f.poles[0]) == [-2, -1, 0, 1, 2]


def test_drift_detected():
    with pytest.warns(RuntimeWarning):
        f = conormal_inverse_field(drifting(), GRID)
    assert abs(f.drift - 2) < 1e-10
    assert not f.constant_type and f.warnings


def test_ellipticity_pass():
    rep = check_edge_ellipticity(laplacian(), 0.5, GRID)
    assert rep.elliptic and rep.sigma0_ok and rep.conormal_ok
    assert abs(rep.sigma0_min - 1) < 1e-12


def test_ellipticity_offending_mode():
    # line Re z = 1 hits the modes k = +-1
    rep = check_edge_ellipticity(laplacian(), 0.0, GRID[:2])
    assert rep.sigma0_ok and not rep.conormal_ok
    assert {lab for _, _, lab in rep.offending} == {1, -1}


def test_ellipticity_zero_operator():
    A = EdgeDegenerateOperator(2, 1, POINT, {})
    rep = check_edge_ellipticity(A, 0.3, GRID)
    assert rep.sigma0_status == "not elliptic" and not rep.elliptic


def test_constant_operator_higher_levels_vanish():
    A = EdgeDegenerateOperator(2, 1, POINT, {(2, (0,), 0): [[1.0]], (0, (0,), 0): [[-0.25]]})
    P = edge_parametrix_hierarchy(A, 3, gamma=0.2)
    vals = P.levels(0.4, [0.1], complex(P.line, 0.7), [1.3]).values()
    assert all(np.abs(v).max() == 0 for v in vals[1:])
    z = complex(P.line, 0.7) - 2
    assert abs(vals[0][0, 0] - 1 / (z * z - 0.25)) < 1e-14


def test_laplacian_levels_vanish_at_zero_eta():
    P = edge_parametrix_hierarchy(laplacian(), 3, gamma=0.5)
    vals = P.levels(0.6, [0.2], complex(P.line, 1.1), [0.0]).values()
    assert all(np.abs(v).max() < 1e-15 for v in vals[1:])


@pytest.mark.parametrize("make", [laplacian, variable])
def test_leibniz_residuals(make):
    P = edge_parametrix_hierarchy(make(), 4, gamma=0.5 if make is laplacian else 0.2)
    rep = verify_edge_parametrix(P, samples=20)
    assert len(rep.residuals) == 5
    assert rep.max_residual < 1e-10


def test_callback_matches_polynomial():
    A = variable()
    coeffs = dict(A.coefficients)
    poly = coeffs[(2, (0,), 0)]
    coeffs[(2, (0,), 0)] = YCallback(1, lambda y: poly(y))
    B = EdgeDegenerateOperator(2, 1, POINT, coeffs)
    pt = (0.3, [0.4], complex(2.7, 0.9), [0.8])
    a = edge_parametrix_hierarchy(A, 2, gamma=0.2).levels(*pt).values()
    b = edge_parametrix_hierarchy(B, 2, gamma=0.2).levels(*pt).values()
    for x, w in zip(a, b):
        assert np.abs(x - w).max() < 1e-6 * max(np.abs(x).max(), 1e-3)


def test_reduce_to_cone():
    B = reduce_to_cone(laplacian(3), [0.5])
    _, C = build_model("cone_laplacian_s1", {"K": 3})
    assert np.allclose(B.taylor[:, :1], C.taylor[:, :1])
    assert np.allclose(B.taylor[:, 1:], 0)


def test_reduce_to_cone_with_eta():
    B = reduce_to_cone(laplacian(1), [0.0], eta=[2.0])
    # (r D_y)^2 -> r^2 eta^2 enters the r^2 Taylor coefficient
    assert np.allclose(B.taylor[0, 2], -4 * np.eye(3))


def test_cone_consistency():
    d_sym, dev = cone_consistency(laplacian(), [0.3], 0.5, 3)
    assert d_sym <= 1e-12 and dev <= 1e-12


def test_shifted_symbol():
    A = laplacian(1)
    m = edge_mellin_symbol(A)
    z = complex(2.5, 0.3)
    want = np.diag((z - 2) ** 2 - np.arange(-1, 2) ** 2.0)
    assert np.allclose(m(0.5, np.array([0.0]), z, np.array([0.0])), want)
