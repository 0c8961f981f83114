"""Built-in operators: Euler ODEs, cone and edge Laplacians, Coulomb s-wave."""

from __future__ import annotations

import numpy as np

from .cone import FuchsOperator, SpectralModel
from .edge import EdgeDegenerateOperator

BUILTINS = (
    "euler_ode",
    "cone_laplacian_s1",
    "cone_laplacian_s2",
    "coulomb_swave",
    "edge_laplacian_r3",
)


class UnknownModel(KeyError):
    pass


class InvalidParams(ValueError):
    pass


def _get(params, key, default=None, kind=float):
    if key not in params:
        if default is None:
            raise InvalidParams(f"missing parameter {key!r}")
        return default
    try:
        return kind(params[key])
    except (TypeError, ValueError) as e:
        raise InvalidParams(f"parameter {key!r}: {e}") from e


def _kmax(params, default=8):
    k = params.get("K", params.get("kmax", default))
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise InvalidParams("K must be a nonnegative integer")
    return int(k)


def euler_ode(params):
    """Scalar ``r^-mu sum_j a_j(r) (-r d_r)^j``.

    ``a`` is either a list over j (r-independent) or a nested list a[j][i].
    """
    a = params.get("a")
    if a is None:
        raise InvalidParams("euler_ode needs coefficients 'a'")
    a = np.array([[_cplx(x) for x in row] if isinstance(row, (list, tuple)) else [_cplx(row)] for row in a])
    mu = len(a) - 1
    if mu < 0 or not np.any(a[-1]):
        raise InvalidParams("leading coefficient a[mu] must be nonzero")
    lead = a[-1]

    def symbol(r, rho, *_):
        return sum(lead[i] * r**i for i in range(len(lead))) * (-1j * rho) ** mu

    return FuchsOperator(mu, SpectralModel.point(), a, principal_symbol=symbol, builtin="euler_ode")


def _cplx(x):
    if isinstance(x, dict):
        return complex(x.get("re", 0.0), x.get("im", 0.0))
    return complex(x)


def cone_laplacian_s1(params):
    """``r^-2((r d_r)^2 + d_phi^2)``, the flat Laplacian in polar coordinates."""
    model = SpectralModel.circle(_kmax(params))
    K = model.basis_size
    k = model.mode_variable()
    taylor = np.zeros((3, 1, K, K), complex)
    taylor[2, 0] = np.eye(K)
    taylor[0, 0] = np.diag(-k**2)
    return FuchsOperator(2, model, taylor, principal_symbol=lambda r, rho, xi=0.0: -(rho**2 + xi**2),
                         builtin="cone_laplacian_s1")


def cone_laplacian_s2(params):
    """``r^-2((r d_r)^2 + r d_r + Delta_S2)``, the flat Laplacian in R^3."""
    model = SpectralModel.sphere(_kmax(params, 4))
    K = model.basis_size
    l = model.mode_variable()
    taylor = np.zeros((3, 1, K, K), complex)
    taylor[2, 0] = np.eye(K)
    taylor[1, 0] = -np.eye(K)
    taylor[0, 0] = np.diag(-l * (l + 1))
    return FuchsOperator(2, model, taylor, principal_symbol=lambda r, rho, xi=0.0: -(rho**2 + xi**2),
                         builtin="cone_laplacian_s2")


def coulomb_swave(params):
    """s-wave part of ``-1/2 Delta - Z/r - E``, scaled by -2 to be monic.

    With ``reduced`` (default) the unknown is chi = r R and the operator is
    ``chi'' + 2Z/r chi + 2E chi``, so h0 = z(z + 1); otherwise it acts on R
    with h0 = z(z - 1).
    """
    Z = _get(params, "Z", 1.0)
    E = _get(params, "E", -Z**2 / 2)
    reduced = bool(params.get("reduced", True))
    taylor = np.zeros((3, 3), complex)
    taylor[2, 0] = 1.0
    taylor[1, 0] = 1.0 if reduced else -1.0
    taylor[0, 1] = 2 * Z
    taylor[0, 2] = 2 * E
    return FuchsOperator(2, SpectralModel.point(), taylor,
                         principal_symbol=lambda r, rho, *_: -(rho**2), builtin="coulomb_swave")


def edge_laplacian_r3(params):
    """``r^-2((r d_r)^2 + d_phi^2 + (r d_y)^2)`` in cylindrical coordinates."""
    model = SpectralModel.circle(_kmax(params))
    q = int(params.get("q", 1))
    K = model.basis_size
    k = model.mode_variable()
    zero = (0,) * q
    coeffs = {(2, zero, 0): np.eye(K), (0, zero, 0): np.diag(-k**2)}
    for c in range(q):
        alpha = tuple(2 if t == c else 0 for t in range(q))
        coeffs[(0, alpha, 0)] = -np.eye(K)

    def symbol(r, y, rho, xi, eta):
        return -(rho**2 + xi**2 + float(np.sum(np.square(eta))))

    return EdgeDegenerateOperator(2, q, model, coeffs, principal_symbol=symbol, builtin="edge_laplacian_r3")


_BUILDERS = {
    "euler_ode": euler_ode,
    "cone_laplacian_s1": cone_laplacian_s1,
    "cone_laplacian_s2": cone_laplacian_s2,
    "coulomb_swave": coulomb_swave,
    "edge_laplacian_r3": edge_laplacian_r3,
}


def build_model(name, params=None):
    """Return (SpectralModel, operator) for a built-in name."""
    if name not in _BUILDERS:
        raise UnknownModel(f"unknown model {name!r}; known: {', '.join(BUILTINS)}")
    op = _BUILDERS[name](dict(params or {}))
    return op.model, op
