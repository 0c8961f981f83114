"""Fuchs-type cone operators at spectral truncation and their conormal symbols.

A cone operator near the tip is ``r^-mu sum_j a_j(r) (-r d_r)^j`` with the
cross-section operators ``a_j(r)`` given as K x K matrices in a fixed
spectral basis.  Writing ``a_j(r) = sum_i a[j][i] r^i`` the level-i conormal
symbol is ``h_i(z) = sum_j a[j][i] z^j``; composition acts on these levels
through the Mellin translation product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import warnings
from math import comb

import numpy as np

from .mero import (
    DEFAULT_TOL,
    MatPolynomial,
    MeroMatrix,
    SingularSymbolError,
    as_mero,
    mero_add,
    mero_invert,
    mero_mul,
    polyeig,
    translate,
)

MAX_R_ORDER = 64
REGISTERED_MODELS = ("point", "s1", "s2")


class NotEllipticError(ValueError):
    """Raised when an ellipticity condition fails; ``zeros`` names the culprits."""

    def __init__(self, message, zeros=()):
        super().__init__(message)
        self.zeros = list(zeros)


class CompositionOverflow(ValueError):
    pass


@dataclass(frozen=True)
class SpectralModel:
    """Finite spectral stand-in for the cross-section X."""

    name: str
    n: int
    basis_size: int
    mode_labels: tuple = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.basis_size < 1:
            raise ValueError("basis size must be positive")
        if self.n == 0 and self.basis_size != 1 and self.name == "point":
            raise ValueError("the point model has a single mode")
        if self.mode_labels and len(self.mode_labels) != self.basis_size:
            raise ValueError("one label per basis function")

    @classmethod
    def point(cls):
        return cls("point", 0, 1, (0,))

    @classmethod
    def circle(cls, kmax):
        """Fourier modes e^{ik phi}, |k| <= kmax."""
        labels = tuple(range(-kmax, kmax + 1))
        return cls("s1", 1, len(labels), labels, {"kmax": kmax})

    @classmethod
    def sphere(cls, lmax):
        """Spherical harmonics Y_lm, l <= lmax."""
        labels = tuple((l, m) for l in range(lmax + 1) for m in range(-l, l + 1))
        return cls("s2", 2, len(labels), labels, {"lmax": lmax})

    def mode_variable(self):
        """Scalar covariable magnitude attached to each basis function."""
        if self.name == "s1":
            return np.array(self.mode_labels, float)
        if self.name == "s2":
            return np.array([l for l, _ in self.mode_labels], float)
        return np.zeros(self.basis_size)


class FuchsOperator:
    """``r^-mu sum_j a_j(r) (-r d_r)^j`` with ``a_j(r) = sum_i taylor[j, i] r^i``.

    ``taylor`` has shape (mu + 1, r_order + 1, K, K).
    """

    def __init__(self, mu, model, taylor, principal_symbol=None, builtin=None, truncated=False):
        a = np.asarray(taylor, complex)
        if a.ndim == 2:  # scalar operator given as a[j][i]
            a = a[:, :, None, None]
        if mu < 0:
            raise ValueError("order must be nonnegative")
        if a.shape[0] != mu + 1:
            raise ValueError(f"need {mu + 1} z-powers, got {a.shape[0]}")
        K = model.basis_size
        if a.shape[2:] != (K, K):
            raise ValueError(f"coefficients must be {K}x{K}")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite coefficient")
        a = a.copy()
        a.setflags(write=False)
        self.mu = int(mu)
        self.model = model
        self.taylor = a
        self.principal_symbol = principal_symbol
        self.builtin = builtin
        self.truncated = truncated

    @property
    def r_order(self):
        return self.taylor.shape[1] - 1

    @property
    def size(self):
        return self.model.basis_size

    def level(self, i):
        if i > self.r_order:
            return MatPolynomial.zero(self.size)
        return MatPolynomial(self.taylor[:, i])

    def coefficient(self, j, r):
        """a_j(r) evaluated at a scalar r."""
        powers = r ** np.arange(self.r_order + 1)
        return np.tensordot(powers, self.taylor[j], axes=(0, 0))

    def scaled(self, c):
        return FuchsOperator(self.mu, self.model, self.taylor * c, None, None, self.truncated)

    def __repr__(self):
        return f"FuchsOperator(mu={self.mu}, K={self.size}, r_order={self.r_order})"


def identity_operator(model):
    K = model.basis_size
    return FuchsOperator(0, model, np.eye(K, dtype=complex)[None, None])


@dataclass(frozen=True)
class SmoothingMellinPart:
    """Terms ``(j, gamma_j, f_j)`` of a smoothing Mellin operator.

    Validated against the ambient weight ``gamma`` and dimension ``n``: no
    pole of f_j may lie on Re z = (n+1)/2 - gamma_j, and gamma - j <= gamma_j <= gamma.
    """

    terms: tuple
    gamma: float
    n: int
    tol: float = 1e-8

    def __post_init__(self):
        for j, gj, f in self.terms:
            if not (self.gamma - j - self.tol <= gj <= self.gamma + self.tol):
                raise ValueError(f"term {j}: weight {gj} outside [gamma - j, gamma]")
            line = (self.n + 1) / 2 - gj
            if isinstance(f, MeroMatrix):
                bad = [p.location for p in f.poles if abs(p.location.real - line) <= self.tol]
                if bad:
                    raise ValueError(f"term {j}: poles {bad} on the weight line Re z = {line}")

    def symbol(self, j):
        fs = [f for jj, _, f in self.terms if jj == j]
        if not fs:
            return None
        return mero_add([(1, f) for f in fs])


class ConormalHierarchy:
    """Levels ``h[0..L]`` of conormal symbols of an operator of order ``mu``."""

    def __init__(self, mu, levels):
        self.mu = mu
        self.levels = list(levels)
        self.size = self.levels[0].size

    @property
    def depth(self):
        return len(self.levels) - 1

    def __getitem__(self, l):
        return self.levels[l]

    def __len__(self):
        return len(self.levels)

    def is_polynomial(self):
        return all(isinstance(h, MatPolynomial) for h in self.levels)

    def __repr__(self):
        return f"ConormalHierarchy(mu={self.mu}, depth={self.depth})"


def _zero_like(size):
    return MatPolynomial.zero(size)


def _is_zero(h):
    return h is None or (isinstance(h, MatPolynomial) and h.is_zero())


def conormal_hierarchy(A, mellin=None, L=None):
    """Level-l conormal symbols ``sum_j a[j][l] z^j + f_l`` for l = 0..L."""
    if L is None:
        L = A.r_order
    if L < 0:
        raise ValueError("depth must be nonnegative")
    levels = []
    for l in range(L + 1):
        h = A.level(l)
        f = mellin.symbol(l) if mellin is not None else None
        if f is not None:
            h = mero_add([(1, h), (1, f)])
        levels.append(h if h is not None else _zero_like(A.size))
    return ConormalHierarchy(A.mu, levels)


def single_level_hierarchy(mu, level, symbol, size):
    """Hierarchy that vanishes except at one level (e.g. r^i A_i)."""
    levels = [_zero_like(size) for _ in range(level)] + [symbol]
    return ConormalHierarchy(mu, levels)


def translation_product(HA, HB, L=None):
    """Conormal hierarchy of a composition from those of its factors.

    Level l of the result is ``sum_{i+j=l} (T^{nu-j} hA_i) hB_j`` where nu is
    the order of the right factor.
    """
    if HA.size != HB.size:
        raise ValueError("matrix sizes differ")
    avail = min(HA.depth, HB.depth)
    if L is None:
        L = avail
    if L > avail:
        raise ValueError(f"requested depth {L} exceeds available depth {avail}")
    nu = HB.mu
    levels = []
    for l in range(L + 1):
        terms = []
        for i in range(l + 1):
            j = l - i
            a, b = HA[i], HB[j]
            if _is_zero(a) or _is_zero(b):
                continue
            terms.append((1, mero_mul(translate(a, nu - j), b)))
        s = mero_add(terms) if terms else None
        levels.append(s if s is not None else _zero_like(HA.size))
    return ConormalHierarchy(HA.mu + HB.mu, levels)


def direct_compose(A, B, r_order=None, max_degree=64):
    """Compose two Fuchs operators by normal ordering monomials.

    Uses ``(-r d_r)^j r^s = r^s (-r d_r - s)^j`` term by term.  The r-Taylor
    order of the product is truncated at ``r_order`` (default: full order,
    capped at MAX_R_ORDER); the result records whether anything was dropped.
    """
    if A.model != B.model:
        raise ValueError("operators live on different spectral models")
    mu, nu = A.mu, B.mu
    if mu + nu > max_degree:
        raise CompositionOverflow(f"z-degree {mu + nu} exceeds the configured maximum {max_degree}")
    full = A.r_order + B.r_order
    if r_order is None:
        if full > MAX_R_ORDER:
            raise CompositionOverflow(f"r-order {full} exceeds the configured maximum {MAX_R_ORDER}")
        r_order = full
    K = A.size
    c = np.zeros((mu + nu + 1, r_order + 1, K, K), complex)
    truncated = False
    for i in range(A.r_order + 1):
        for j in range(mu + 1):
            a = A.taylor[j, i]
            if not np.any(a):
                continue
            for ib in range(B.r_order + 1):
                s = ib - nu
                for jb in range(nu + 1):
                    b = B.taylor[jb, ib]
                    if not np.any(b):
                        continue
                    ab = a @ b
                    for t in range(j + 1):
                        coef = comb(j, t) * (-s) ** (j - t)
                        if coef == 0:
                            continue
                        if i + ib > r_order:
                            truncated = True
                            continue
                        c[t + jb, i + ib] += coef * ab
    return FuchsOperator(mu + nu, A.model, c, truncated=truncated or A.truncated or B.truncated)


# ---------------------------------------------------------------------------
# ellipticity
# ---------------------------------------------------------------------------

def weight_line(gamma, n):
    return (n + 1) / 2 - gamma


@dataclass
class ConormalReport:
    elliptic: bool
    line: float
    zeros: list            # (zero, multiplicity, distance to the line)
    min_distance: float

    def to_dict(self):
        return {
            "elliptic": self.elliptic,
            "line": self.line,
            "min_distance": self.min_distance,
            "zeros": [
                {"re": z.real, "im": z.imag, "multiplicity": m, "distance": d} for z, m, d in self.zeros
            ],
        }


def symbol_zeros(h, tol=DEFAULT_TOL):
    """Zeros of det h with multiplicities; h polynomial or meromorphic."""
    try:
        if isinstance(h, MatPolynomial):
            return polyeig(h, allow_infinite=True, tol=tol)
        inv = mero_invert(h, tol)
        return [(p.location, p.order) for p in inv.poles]
    except SingularSymbolError as e:
        raise NotEllipticError("not sigma_1-elliptic for any gamma: identically singular conormal symbol") from e


def check_conormal_ellipticity(H, gamma, n, tol=1e-8):
    """Check that h[0] has no zero on the weight line Re z = (n+1)/2 - gamma."""
    h0 = H[0] if isinstance(H, ConormalHierarchy) else H
    line = weight_line(gamma, n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = symbol_zeros(h0)
    listed = [(z, m, abs(z.real - line)) for z, m in zeros]
    dmin = min((d for _, _, d in listed), default=float("inf"))
    return ConormalReport(dmin > tol, line, listed, dmin)


def shift_legality(poles, gamma, n, beta, eps_fallback=None, tol=1e-8):
    """Decide how far r^beta may be commuted through a symbol with these poles.

    Returns (legal, eps, blocking).  The commutation is legal when no pole
    sits on Re z = (n+1)/2 - (gamma + beta).  Otherwise the shift is reduced
    to beta - eps, eps defaulting to min(0.25, gap/2) with gap the distance
    from the target line to the next pole on the side the line moves.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0:
        return True, 0.0, []
    line = weight_line(gamma + beta, n)
    blocking = [p for p in poles if abs(p.real - line) <= tol]
    if not blocking:
        return True, 0.0, []
    if eps_fallback is None:
        ahead = [p.real - line for p in poles if p.real - line > tol]
        eps_fallback = min(0.25, min(ahead, default=np.inf) / 2)
    if eps_fallback >= beta or eps_fallback <= 0:
        raise NotEllipticError(
            f"no admissible eps for the weight shift by {beta}: poles {blocking} block Re z = {line}",
            blocking,
        )
    moved = line + eps_fallback
    if any(abs(p.real - moved) <= tol for p in poles):
        raise NotEllipticError(f"eps-adjusted line Re z = {moved} is blocked as well", blocking)
    return False, float(eps_fallback), blocking


@dataclass
class WeightShift:
    shifted: object
    legal: bool
    eps_used: float
    blocking: list


def weight_shift_commute(f, gamma, n, beta, eps_fallback=None, tol=1e-8):
    """Commute r^beta through a Mellin operator with symbol f on weight gamma.

    The result is T^-beta f when legal and T^-(beta - eps) f otherwise; see
    shift_legality for the rule.
    """
    poles = [p.location for p in f.poles] if isinstance(f, MeroMatrix) else []
    legal, eps, blocking = shift_legality(poles, gamma, n, beta, eps_fallback, tol)
    if beta == 0:
        return WeightShift(f, True, 0.0, [])
    return WeightShift(translate(f, -(beta - eps)), legal, eps, blocking)


@dataclass
class Sigma0Report:
    status: str                 # "elliptic", "not elliptic" or "undeterminable"
    min_modulus: float | None
    method: str
    note: str = ""

    @property
    def elliptic(self):
        return self.status == "elliptic"

    def to_dict(self):
        return {"status": self.status, "min_modulus": self.min_modulus, "method": self.method, "note": self.note}


def _sphere_samples(dim, count):
    """Points on the unit sphere in R^dim (dim = 1, 2 or 3)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    # Fibonacci lattice
    i = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * i / count)
    th = np.pi * (1 + 5**0.5) * i
    return np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)


def mode_polynomials(model, mats, max_degree):
    """Fit diagonal mode entries by polynomials in the mode variable.

    ``mats`` has shape (..., K, K).  Returns coefficient arrays (ascending) of
    shape (..., max_degree + 1), or None when the matrices are not diagonal or
    the entries are not polynomial of that degree.
    """
    K = model.basis_size
    mats = np.asarray(mats)
    off = mats * (1 - np.eye(K))
    if np.any(np.abs(off) > 0):
        return None
    diag = np.diagonal(mats, axis1=-2, axis2=-1)
    if K == 1:
        out = np.zeros(diag.shape[:-1] + (max_degree + 1,), complex)
        out[..., 0] = diag[..., 0]
        return out
    x = model.mode_variable()
    # entries must depend on the mode only through x
    V = np.vander(x, max_degree + 1, increasing=True)
    flat = diag.reshape(-1, K)
    coef, *_ = np.linalg.lstsq(V, flat.T, rcond=None)
    resid = np.abs(V @ coef - flat.T).max() if flat.size else 0.0
    scale = max(1.0, np.abs(flat).max()) if flat.size else 1.0
    if resid > 1e-9 * scale:
        return None
    return coef.T.reshape(diag.shape[:-1] + (max_degree + 1,))


def check_sigma0_ellipticity(A, r_samples=21, n_dirs=64, tol=1e-12):
    """Sample the rescaled principal symbol on [0, 1] x unit covariable sphere.

    Built-in operators carry a closed-form callback.  Diagonal operators on
    the registered models get their symbol from a polynomial fit in the mode
    variable; other operators fall back to invertibility of the leading
    coefficient a_mu(r).
    """
    rs = np.linspace(0.0, 1.0, r_samples)
    if A.principal_symbol is not None:
        dirs = _sphere_samples(2 if A.model.n > 0 else 1, n_dirs)
        vals = []
        for r in rs:
            for d in dirs:
                s = np.atleast_2d(A.principal_symbol(r, *d))
                vals.append(np.linalg.svd(s, compute_uv=False).min())
        m = float(min(vals))
        return Sigma0Report("elliptic" if m > tol else "not elliptic", m, "closed-form")
    mu = A.mu
    if A.model.name in REGISTERED_MODELS:
        fits = mode_polynomials(A.model, A.taylor, mu)
        if fits is not None:
            # c[j, i, t]: coefficient of r^i x^t in a_j
            dirs = _sphere_samples(2 if A.model.n > 0 else 1, n_dirs)
            m = np.inf
            for r in rs:
                pw = r ** np.arange(A.r_order + 1)
                cj = np.tensordot(pw, fits, axes=(0, 1))  # (mu+1, mu+1) over (j, t)
                for d in dirs:
                    rho = d[0]
                    xi = d[1] if len(d) > 1 else 0.0
                    val = sum(cj[j, mu - j] * (-1j * rho) ** j * xi ** (mu - j) for j in range(mu + 1))
                    m = min(m, abs(val))
            m = float(m)
            return Sigma0Report("elliptic" if m > tol else "not elliptic", m, "mode-polynomial")
        lead = [np.linalg.svd(A.coefficient(mu, r), compute_uv=False).min() for r in rs]
        m = float(min(lead))
        if m <= tol:
            return Sigma0Report("not elliptic", m, "leading-block")
        return Sigma0Report(
            "elliptic", m, "leading-block", "only the leading (-r d_r)^mu block was checked"
        )
    return Sigma0Report("undeterminable", None, "none", "no principal symbol data for this model")
