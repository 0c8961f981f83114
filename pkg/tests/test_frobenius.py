import numpy as np
import pytest

from conecalc.cone import FuchsOperator, SpectralModel
from conecalc.frobenius import NotBlockDiagonal, frobenius_oracle, log_derivative_matrix, oracle_equivalence
from conecalc.models import build_model
from conecalc.solver import SingularExpansion, apply_fuchs, solve_asymptotics

POINT = SpectralModel.point()


def scalar(mu, a):
    return FuchsOperator(mu, POINT, np.asarray(a, float))


def supports(vs, tol=1e-10):
    return [sorted((round(p.real, 9), k) for p, k, c in v.terms if abs(c[0]) > tol) for v in vs]


def test_log_derivative_matrix():
    # -r d_r (r^-p log r) = p r^-p log r - r^-p
    M = log_derivative_matrix(0.5, 1)
    assert np.allclose(M @ [0, 1], [-1, 0.5])


def test_euler_kernel():
    nu = 1.5
    A = scalar(2, [[-nu**2], [0], [1]])
    R = frobenius_oracle(A, N=4)
    got = sorted(s for v in supports(R.kernel()) for s in v)
    assert got == [(-nu, 0), (nu, 0)]
    for v in R.kernel():
        assert apply_fuchs(A, v).scale() < 1e-12 * v.scale()


def test_double_root_log():
    A = scalar(2, [[0], [0], [1]])
    R = frobenius_oracle(A, N=2)
    assert len(R.classes) == 1 and R.classes[0].logs == 2
    span = np.array([[v.coefficient(0, k)[0] for k in (0, 1)] for v in R.kernel()])
    assert np.linalg.matrix_rank(span, tol=1e-10) == 2


def test_resonant_particular():
    A = scalar(2, [[-0.25], [0], [1]])
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    R = frobenius_oracle(A, f, gamma=-0.25, N=2)
    u = R.particular()
    assert (apply_fuchs(A, u) - f).scale() < 1e-12
    assert abs(abs(u.coefficient(0.5, 1)[0]) - 1) < 1e-12


def test_weight_filter():
    A = scalar(2, [[-2.25], [0], [1]])
    R = frobenius_oracle(A, gamma=0.0, N=2)
    assert [round(z.real, 9) for z, _ in R.roots] == [-1.5]


def test_coulomb_series():
    _, A = build_model("coulomb_swave", {"Z": 1})
    R = frobenius_oracle(A, N=3)
    regular = [v for v in R.kernel() if abs(v.coefficient(0, 0)[0]) < 1e-12 and abs(v.coefficient(-1, 0)[0]) > 0]
    assert regular
    v = regular[0]
    c = [v.coefficient(-1 - j, 0)[0] for j in range(3)]
    assert abs(c[1] / c[0] + 1) < 1e-10 and abs(c[2] / c[0] - 0.5) < 1e-10


def test_not_block_diagonal():
    _, A = build_model("cone_laplacian_s1", {"K": 1})
    with pytest.raises(NotBlockDiagonal):
        frobenius_oracle(A)
    R = frobenius_oracle(A, block=(1,))
    assert len(R.kernel()) == 2          # k = 0 mode: 1 and log r


def test_coupled_block_rejected():
    t = np.zeros((3, 2, 2, 2))
    t[2, 0] = np.eye(2)
    t[0, 0] = np.diag([-0.25, -1.0])
    t[0, 1, 0, 1] = 1.0                  # couples the modes at order r
    A = FuchsOperator(2, SpectralModel("pair", 1, 2), t)
    with pytest.raises(NotBlockDiagonal):
        frobenius_oracle(A, block=(0,))


def test_equivalence_resonance():
    A = scalar(2, [[-0.25], [0.3], [1]])
    f = SingularExpansion.scalar([(2.5, 0, 1.0), (2.2, 1, -0.5)])
    S = solve_asymptotics(A, f, -0.25, 3)
    rep = oracle_equivalence(S, frobenius_oracle(A, f, gamma=-0.25, N=3), 3)
    assert rep.ok, rep


def test_equivalence_detects_tampering():
    A = scalar(2, [[-0.25], [0.3], [1]])
    f = SingularExpansion.scalar([(2.5, 0, 1.0)])
    S = solve_asymptotics(A, f, -0.25, 3)
    R = frobenius_oracle(A, f, gamma=-0.25, N=3)
    S.particular = S.particular + SingularExpansion.scalar([(-0.5, 0, 1.0)])
    assert not oracle_equivalence(S, R, 3).ok
