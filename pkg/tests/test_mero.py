import numpy as np
import pytest

from conecalc.mero import (
    MatPolynomial,
    MeroMatrix,
    invert_one_plus,
    laurent_at,
    mero_add,
    mero_inverse,
    mero_mul,
    polyeig,
    translate,
)

Z = MatPolynomial([0, 1])  # the scalar z


def roots(h):
    return [(complex(round(z.real, 9), round(z.imag, 9)), m) for z, m in polyeig(h)]


def test_polyeig_simple_roots():
    assert roots(MatPolynomial([2, -3, 1])) == [(1, 1), (2, 1)]


def test_polyeig_double_root():
    assert roots(MatPolynomial([0, 0, 1])) == [(0, 2)]


def test_polyeig_diagonal():
    h = MatPolynomial(np.array([np.diag([0, -1]), np.eye(2)]))
    assert roots(h) == [(0, 1), (1, 1)]


def test_polyeig_cone_modes():
    K = 8
    k = np.arange(-K, K + 1)
    h = MatPolynomial(np.array([np.diag(-k**2.0), np.zeros((17, 17)), np.eye(17)]))
    got = polyeig(h)
    want = {0: 2, **{j: 2 for j in range(1, K + 1)}}
    # +-k are distinct simple roots; each has multiplicity 2 in det because k and -k share them
    assert sum(m for _, m in got) == 34
    for z, m in got:
        assert abs(z.imag) < 1e-10
        r = round(z.real)
        assert abs(z.real - r) < 1e-10
        assert m == want[abs(r)]


def test_inverse_partial_fractions():
    inv = mero_inverse(MatPolynomial([-1, 0, 1]))
    locs = sorted(p.location.real for p in inv.poles)
    assert np.allclose(locs, [-1, 1])
    assert all(p.order == 1 for p in inv.poles)
    assert abs(inv.pole_near(1.0).principal[0][0, 0] - 0.5) < 1e-12


def test_inverse_diagonal():
    h = MatPolynomial(np.array([np.diag([0, -2]), np.eye(2)]))
    inv = mero_inverse(h)
    z = np.array([0.3 + 1j, -1.7, 4.1j])
    want = np.zeros((3, 2, 2), complex)
    want[:, 0, 0] = 1 / z
    want[:, 1, 1] = 1 / (z - 2)
    assert np.allclose(inv(z), want, atol=1e-13)


def test_inverse_random_quadratic():
    rng = np.random.default_rng(3)
    h = MatPolynomial(rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3)))
    inv = mero_inverse(h)
    z = rng.normal(size=100) * 3 + 1j * rng.normal(size=100) * 3
    prod = np.einsum("tij,tjk->tik", h(z), inv(z))
    assert np.abs(prod - np.eye(3)).max() < 1e-10


def test_translate_polynomial():
    assert translate(Z, 1).allclose(MatPolynomial([1, 1]))
    assert translate(Z, 0) is Z


def test_translate_moves_pole():
    f = translate(mero_inverse(Z), 1)
    assert [round(p.location.real, 12) for p in f.poles] == [-1]
    assert abs(f.poles[0].principal[0][0, 0] - 1) < 1e-12
    assert abs(f(np.array([1.0]))[0, 0, 0] - 0.5) < 1e-14


def test_mul_cancellation():
    f = mero_mul(mero_inverse(Z), Z)
    assert len(getattr(f, "poles", ())) == 0
    assert np.allclose(f(np.array([0.3, 2j]))[:, 0, 0], 1)


def test_mul_partial_fractions():
    f = mero_mul(mero_inverse(Z), mero_inverse(MatPolynomial([-1, 1])))
    res = {round(p.location.real, 9): p.principal[0][0, 0] for p in f.poles}
    assert set(res) == {0, 1}
    assert abs(res[0] + 1) < 1e-10 and abs(res[1] - 1) < 1e-10


def test_mul_order_drop():
    f = mero_mul(Z, mero_inverse(MatPolynomial([0, 0, 1])))
    assert [p.order for p in f.poles] == [1]
    assert abs(f.poles[0].principal[0][0, 0] - 1) < 1e-10


def test_invert_one_plus_scalar():
    l = invert_one_plus(mero_inverse(Z))
    z = np.array([0.5, 2 + 1j, -3.0])
    assert np.allclose(l(z)[:, 0, 0], -1 / (z + 1))


def test_invert_one_plus_zero():
    l = invert_one_plus(MatPolynomial.zero(2))
    assert np.allclose(l(np.array([1.0, 2j])), 0)


def test_invert_one_plus_nilpotent():
    N = MatPolynomial(np.array([[0, 1], [0, 0]], complex))
    m = mero_mul(N, mero_inverse(MatPolynomial(np.array([np.zeros((2, 2)), np.eye(2)]))))
    l = invert_one_plus(m)
    z = np.array([0.7, -1.3 + 2j])
    assert np.allclose(l(z), -m(z))


def test_laurent_double_pole():
    c = laurent_at(mero_inverse(MatPolynomial([0, 0, 1])), 0, 0)
    assert np.allclose([x[0, 0] for x in c], [1, 0, 0], atol=1e-12)


@pytest.mark.parametrize("p,res", [(0, -1), (1, 1)])
def test_laurent_residue(p, res):
    f = mero_inverse(MatPolynomial([0, -1, 1]))
    c = laurent_at(f, p, 2)
    # c[0] is the (z - p)^-1 coefficient for a simple pole
    assert abs(c[0][0, 0] - res) < 1e-12


def test_laurent_holomorphic_part():
    # 1/(z(z-1)) = -1/z - 1 - z - ... near 0
    f = mero_inverse(MatPolynomial([0, -1, 1]))
    c = laurent_at(f, 0, 3)
    assert np.allclose([x[0, 0] for x in c], [-1, -1, -1, -1, -1], atol=1e-10)


def test_add_cancels_poles():
    f = mero_inverse(Z)
    g = mero_add([(1, f), (-1, f)])
    assert g is None or isinstance(g, MatPolynomial) or not getattr(g, "poles", ())
