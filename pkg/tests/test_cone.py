import numpy as np
import pytest

from conecalc.cone import (
    FuchsOperator,
    SpectralModel,
    check_conormal_ellipticity,
    check_sigma0_ellipticity,
    conormal_hierarchy,
    direct_compose,
    translation_product,
    weight_shift_commute,
)
from conecalc.mero import MatPolynomial, mero_inverse
from conecalc.models import build_model
from conecalc.suites import random_fuchs_pair

POINT = SpectralModel.point()


def scalar(mu, a):
    return FuchsOperator(mu, POINT, np.asarray(a, float))


def coeffs(h):
    return np.asarray(h.coeffs)[:, 0, 0]


def test_cone_laplacian_hierarchy():
    _, A = build_model("cone_laplacian_s1", {"K": 3})
    H = conormal_hierarchy(A, L=2)
    k = np.arange(-3, 4)
    want = np.array([np.diag(-k**2.0), np.zeros((7, 7)), np.eye(7)])
    assert np.allclose(H[0].coeffs, want)
    assert H[1].is_zero() and H[2].is_zero()


def test_hierarchy_taylor_readoff():
    a0, a1 = 2.0, -3.0
    A = scalar(1, [[0, 0], [a0, a1]])
    H = conormal_hierarchy(A, L=1)
    assert np.allclose(coeffs(H[0]), [0, a0])
    assert np.allclose(coeffs(H[1]), [0, a1])


def test_identity_hierarchy():
    H = conormal_hierarchy(scalar(0, [[1.0]]), L=2)
    assert np.allclose(coeffs(H[0]), [1])
    assert H[1].is_zero() and H[2].is_zero()


def test_translation_product_forced_shift():
    A = scalar(1, [[0], [1]])
    H = conormal_hierarchy(A, L=0)
    out = translation_product(H, H)
    # (z + 1) z
    assert np.allclose(coeffs(out[0]), [0, 1, 1])
    assert out.mu == 2


def test_translation_product_identity():
    rng = np.random.default_rng(1)
    A = scalar(2, rng.normal(size=(3, 3)))
    HA = conormal_hierarchy(A, L=2)
    out = translation_product(HA, conormal_hierarchy(scalar(0, [[1.0, 0, 0]]), L=2))
    for l in range(3):
        assert out[l].allclose(HA[l])


def test_direct_compose_hand_expansion():
    A = scalar(1, [[0], [1]])
    C = direct_compose(A, A)
    assert C.mu == 2
    assert np.allclose(C.taylor[:, 0, 0, 0], [0, 1, 1])


def test_direct_compose_identity():
    rng = np.random.default_rng(2)
    A = scalar(2, rng.normal(size=(3, 2)))
    C = direct_compose(A, scalar(0, [[1.0]]))
    assert np.allclose(C.taylor[:, : A.r_order + 1], A.taylor)


@pytest.mark.parametrize("seed", range(5))
def test_translation_product_matches_direct(seed):
    rng = np.random.default_rng(seed)
    A, B = random_fuchs_pair(rng)
    L = A.r_order + B.r_order
    lhs = translation_product(conormal_hierarchy(A, L=L), conormal_hierarchy(B, L=L))
    rhs = conormal_hierarchy(direct_compose(A, B), L=L)
    for l in range(L + 1):
        assert lhs[l].allclose(rhs[l], rtol=1e-12)


def test_conormal_zero_on_line():
    rep = check_conormal_ellipticity(MatPolynomial([-0.25, 0, 1]), 0.0, 0)
    assert not rep.elliptic and rep.line == 0.5


def test_conormal_off_line():
    rep = check_conormal_ellipticity(MatPolynomial([-0.25, 0, 1]), 0.3, 0)
    assert rep.elliptic
    assert abs(rep.line - 0.2) < 1e-15
    assert abs(rep.min_distance - 0.3) < 1e-10


def test_conormal_cone_laplacian():
    _, A = build_model("cone_laplacian_s1", {"K": 8})
    H = conormal_hierarchy(A, L=0)
    assert check_conormal_ellipticity(H, 0.5, 1).elliptic
    # line Re z = 1 - gamma hits k = 1
    assert not check_conormal_ellipticity(H, 0.0, 1).elliptic


def test_weight_shift_legal():
    f = mero_inverse(MatPolynomial([0, 1]))
    w = weight_shift_commute(f, 0.0, 0, 1.0)
    assert w.legal and w.eps_used == 0
    assert [round(p.location.real, 12) for p in w.shifted.poles] == [1]


def test_weight_shift_blocked():
    f = mero_inverse(MatPolynomial([0.5, 1]))
    w = weight_shift_commute(f, 0.0, 0, 1.0)
    assert not w.legal
    assert w.eps_used == 0.25


def test_weight_shift_zero():
    f = mero_inverse(MatPolynomial([0.5, 1]))
    w = weight_shift_commute(f, 0.0, 0, 0.0)
    assert w.legal and w.shifted is f


@pytest.mark.parametrize("name", ["cone_laplacian_s1", "cone_laplacian_s2", "coulomb_swave"])
def test_sigma0_builtins(name):
    _, A = build_model(name, {"K": 2} if "laplacian" in name else {})
    rep = check_sigma0_ellipticity(A)
    assert rep.elliptic
    assert abs(rep.min_modulus - 1) < 1e-12


def test_sigma0_zero_operator():
    assert check_sigma0_ellipticity(scalar(2, np.zeros((3, 1)))).status == "not elliptic"


def test_sigma0_vanishing_leading():
    assert check_sigma0_ellipticity(scalar(2, [[1.0], [0.0], [0.0]])).status == "not elliptic"
