"""Matrix polynomials and meromorphic matrix functions of one complex variable.

A :class:`MeroMatrix` couples an exact evaluation route (a small expression
tree of polynomial, inverse, product, sum and shift nodes) with the list of
its poles and their Laurent principal parts.  Principal parts are obtained by
trapezoidal contour integration of the evaluation route on circles around
each candidate pole, so products and sums only need to know *where* poles may
sit, never how to multiply partial fractions symbolically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


@dataclass(frozen=True)
class Tolerances:
    """Numerical knobs shared by the mero-core routines."""

    merge: float = 1e-8          # relative root clustering, scaled by 1 + |z|
    ambiguity: float = 1e-6      # clusters closer than this are reported as ambiguous
    cancel: float = 1e-10        # principal parts below cancel * circle max are dropped
    contour_points: int = 64
    contour_radius: float = 0.5  # cap on the circle radius around a pole
    infinite: float = 1e-12      # |beta| / |alpha| below this is an infinite eigenvalue
    coalesce: float = 1e-2       # eigenvalues this close are tested for being one multiple zero
    multiple: float = 1e-12      # m zeros spread below multiple**(1/m) form one m-fold zero


DEFAULT_TOL = Tolerances()


class SingularSymbolError(ValueError):
    """Raised when a symbol is singular for every z."""


class ClusteringError(ValueError):
    """Root clustering is ambiguous; carries both candidate clusterings."""

    def __init__(self, message, tight, loose):
        super().__init__(message)
        self.tight = tight
        self.loose = loose


def _as_matrix(a, size=None):
    m = np.atleast_2d(np.asarray(a, dtype=complex))
    if size is not None and m.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} matrix, got {m.shape}")
    return m


# ---------------------------------------------------------------------------
# matrix polynomials
# ---------------------------------------------------------------------------

class MatPolynomial:
    """Square matrix polynomial ``sum_j coeffs[j] z**j``.

    Trailing zero coefficients are trimmed, so ``degree`` is the index of the
    last nonzero coefficient (0 for the zero polynomial).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 1:  # scalar polynomial given as a coefficient list
            c = c[:, None, None]
        elif c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ValueError(f"coefficients must be square matrices, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite polynomial coefficient")
        nz = np.flatnonzero(np.any(c.reshape(len(c), -1) != 0, axis=1))
        d = int(nz[-1]) if len(nz) else 0
        c = c[: d + 1].copy()
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def identity(cls, size):
        return cls(np.eye(size, dtype=complex)[None])

    @classmethod
    def zero(cls, size):
        return cls(np.zeros((1, size, size), dtype=complex))

    @classmethod
    def monomial(cls, matrix, power):
        m = _as_matrix(matrix)
        c = np.zeros((power + 1,) + m.shape, dtype=complex)
        c[power] = m
        return cls(c)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def size(self):
        return self.coeffs.shape[1]

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def is_zero(self):
        return not np.any(self.coeffs)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.broadcast_to(self.coeffs[-1], z.shape + self.shape).copy()
        for c in self.coeffs[-2::-1]:
            out = out * z[..., None, None] + c
        return out

    def __add__(self, other):
        if not isinstance(other, MatPolynomial):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        c = np.zeros((n,) + self.shape, dtype=complex)
        c[: len(self.coeffs)] += self.coeffs
        c[: len(other.coeffs)] += other.coeffs
        return MatPolynomial(c)

    def __neg__(self):
        return MatPolynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, MatPolynomial):
            a, b = self.coeffs, other.coeffs
            c = np.zeros((len(a) + len(b) - 1,) + self.shape, dtype=complex)
            for i, ai in enumerate(a):
                c[i : i + len(b)] += np.einsum("ij,tjk->tik", ai, b)
            return MatPolynomial(c)
        if np.isscalar(other):
            return MatPolynomial(self.coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def derivative(self, m=1):
        c = self.coeffs
        for _ in range(m):
            if len(c) == 1:
                return MatPolynomial.zero(self.size)
            c = c[1:] * np.arange(1, len(c))[:, None, None]
        return MatPolynomial(c)

    def translate(self, beta):
        """Return ``z -> self(z + beta)`` by repeated synthetic division."""
        if beta == 0:
            return self
        c = self.coeffs.copy()
        d = len(c) - 1
        # Taylor shift: after pass k, c[k] holds the k-th coefficient about -beta.
        for k in range(d):
            for j in range(d - 1, k - 1, -1):
                c[j] = c[j] + beta * c[j + 1]
        return MatPolynomial(c)

    def block(self, idx):
        idx = np.asarray(idx)
        return MatPolynomial(self.coeffs[:, idx[:, None], idx[None, :]])

    def allclose(self, other, rtol=1e-12):
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        pa = np.zeros((n,) + self.shape, complex)
        pb = np.zeros((n,) + self.shape, complex)
        pa[: len(a)] = a
        pb[: len(b)] = b
        scale = max(1.0, np.abs(pb).max())
        return bool(np.abs(pa - pb).max() <= rtol * scale)

    def __repr__(self):
        return f"MatPolynomial(degree={self.degree}, size={self.size})"


# ---------------------------------------------------------------------------
# polynomial eigenvalues
# ---------------------------------------------------------------------------

def _blocks(h):
    pattern = np.any(h.coeffs != 0, axis=0)
    pattern = pattern | pattern.T
    n, labels = connected_components(csr_matrix(pattern), directed=False)
    return [np.flatnonzero(labels == b) for b in range(n)]


def _block_eigs(h, tol):
    """Finite eigenvalues of one irreducible block plus the infinite count."""
    size = h.size
    d = h.degree
    c = h.coeffs
    if d == 0:
        if np.linalg.matrix_rank(c[0]) < size:
            raise SingularSymbolError("identically singular symbol")
        return np.zeros(0, complex), 0
    if size == 1:
        coef = c[::-1, 0, 0]
        # leading zeros were trimmed, so the scalar polynomial has exact degree d
        return np.roots(coef).astype(complex), 0
    n = size * d
    A = np.zeros((n, n), complex)
    B = np.eye(n, dtype=complex)
    A[: n - size, size:] = np.eye(n - size)
    for j in range(d):
        A[n - size :, j * size : (j + 1) * size] = -c[j]
    B[n - size :, n - size :] = c[d]
    w = linalg.eig(A, B, right=False, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    scale = np.maximum(np.abs(alpha), np.abs(beta))
    if np.any(scale < tol.infinite * max(1.0, np.abs(c).max())):
        raise SingularSymbolError("identically singular symbol")
    finite = np.abs(beta) > tol.infinite * np.abs(alpha)
    return alpha[finite] / beta[finite], int(np.count_nonzero(~finite))


def _cluster(z, rel_tol, mult=None):
    """Single-linkage clustering with distance threshold rel_tol * (1 + |z|)."""
    z = np.asarray(z, complex)
    mult = np.ones(len(z), int) if mult is None else np.asarray(mult, int)
    groups = _cluster_indices(z, rel_tol)
    out = [(complex(np.average(z[g], weights=mult[g])), int(mult[g].sum())) for g in groups]
    return sorted(out, key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))


def _coalesce(h, z, tol):
    """Collapse numerically split multiple zeros.

    A multiple zero of rounded coefficients splits into m computed zeros
    spread over roughly eps^(1/m).  A group of m zeros whose spread is below
    (tol.multiple)^(1/m) (1 + |center|) is taken as one zero of multiplicity
    m at the group mean (the mean is well conditioned); wider groups are
    split at their largest gap and examined again.
    """
    z = np.asarray(z, complex)
    pts, mult = [], []
    for g in _cluster_indices(z, tol.coalesce):
        for c, m in _split_group(z[g], tol):
            pts.append(c)
            mult.append(m)
    return pts, mult


def _polish(h, z, m, steps=3):
    """Newton steps z <- z - m / tr(h^-1 h') on log det h; kept only if tiny."""
    dh = h.derivative()
    z0 = z
    for _ in range(steps):
        try:
            t = np.trace(np.linalg.solve(h(np.array([z]))[0], dh(np.array([z]))[0]))
        except np.linalg.LinAlgError:
            break
        if not np.isfinite(t) or t == 0:
            break
        step = m / t
        if abs(step) > 1e-7 * (1 + abs(z0)) or abs(z + step - z0) > 1e-7 * (1 + abs(z0)):
            break
        z = z - step
        if abs(step) <= 1e-16 * (1 + abs(z)):
            break
    return complex(z)


def _split_group(zg, tol):
    m = len(zg)
    c = complex(zg.mean())
    if m == 1:
        return [(c, 1)]
    spread = np.abs(zg - c).max()
    thr = tol.multiple ** (1.0 / m) * (1 + abs(c))
    if spread <= thr:
        return [(c, m)]
    radius = spread / (1 + abs(c))
    while radius > tol.merge:
        radius /= 4
        groups = _cluster_indices(zg, radius)
        if len(groups) > 1:
            return [cm for g in groups for cm in _split_group(zg[g], tol)]
    return [(complex(x), 1) for x in zg]


def _cluster_indices(z, rel_tol):
    parent = list(range(len(z)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            if abs(z[i] - z[j]) <= rel_tol * (1 + max(abs(z[i]), abs(z[j]))):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(z)):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def polyeig(h, allow_infinite=False, tol=DEFAULT_TOL):
    """Finite zeros of ``det h(z)`` with algebraic multiplicities.

    The matrix polynomial is split into irreducible diagonal blocks first;
    each block is linearized with the block companion pencil and solved as a
    generalized eigenvalue problem.  Numerically split multiple roots are
    merged when they lie within ``tol.merge * (1 + |z|)`` of each other.

    Returns a list of ``(zero, multiplicity)`` sorted by real then imaginary
    part.  Infinite eigenvalues (singular leading coefficient) raise unless
    ``allow_infinite`` is set, in which case they are dropped with a warning.
    """
    if not isinstance(h, MatPolynomial):
        h = MatPolynomial(h)
    zeros, mults, n_inf = [], [], 0
    for idx in _blocks(h):
        sub = h.block(idx)
        z, ninf = _block_eigs(sub, tol)
        if sub.size == 1:
            ninf = h.degree - sub.degree
        z, m = _coalesce(sub, z, tol)
        z = [_polish(sub, zz, mm) for zz, mm in zip(z, m)]
        zeros.extend(z)
        mults.extend(m)
        n_inf += ninf
    allz = np.array(zeros, complex)
    if h.size > 0 and n_inf and not allow_infinite:
        lead = h.coeffs[h.degree]
        if np.linalg.matrix_rank(lead) < h.size:
            raise ValueError(
                f"leading coefficient is singular ({n_inf} infinite eigenvalues); "
                "pass allow_infinite=True to drop them"
            )
    if n_inf and allow_infinite:
        warnings.warn(f"dropped {n_inf} infinite eigenvalues", RuntimeWarning, stacklevel=2)
    tight = _cluster(allz, tol.merge, mults)
    loose = _cluster(allz, tol.ambiguity, mults)
    if len(loose) != len(tight):
        # separated by more than the merge tolerance yet closer than the ambiguity radius
        raise ClusteringError(
            "root clustering is ambiguous: zeros lie between merge and ambiguity tolerance",
            tight,
            loose,
        )
    _check_residuals(h, tight)
    return tight


def _check_residuals(h, zeros):
    if not zeros:
        return
    pts = np.array([z for z, _ in zeros])
    vals = h(pts)
    norms = [np.linalg.norm(c, 2) for c in h.coeffs]
    for (z, m), v in zip(zeros, vals):
        s = np.linalg.svd(v, compute_uv=False)
        nrm = max(sum(c * abs(z) ** j for j, c in enumerate(norms)), 1e-300)
        if s[-1] / nrm > 1e-6:
            warnings.warn(
                f"ill-conditioned linearization: residual bound {s[-1] / nrm:.2e} at zero {z:.6g}",
                RuntimeWarning,
                stacklevel=3,
            )


# ---------------------------------------------------------------------------
# evaluation nodes
# ---------------------------------------------------------------------------

class Node:
    """Evaluation route of a matrix function; ``node(z)`` has shape (len(z), K, K)."""

    kind = "node"

    def children(self):
        return ()


class PolyNode(Node):
    kind = "poly"

    def __init__(self, poly):
        self.poly = poly

    def __call__(self, z):
        return self.poly(z)


class InverseNode(Node):
    """Pointwise inverse of a matrix polynomial (adjugate over determinant)."""

    kind = "inverse"

    def __init__(self, poly):
        self.poly = poly

    def __call__(self, z):
        v = self.poly(z)
        eye = np.broadcast_to(np.eye(self.poly.size, dtype=complex), v.shape)
        return np.linalg.solve(v, eye)


class InvertNode(Node):
    """Pointwise inverse of another node."""

    kind = "invert"

    def __init__(self, child):
        self.child = child

    def children(self):
        return (self.child,)

    def __call__(self, z):
        v = self.child(z)
        eye = np.broadcast_to(np.eye(v.shape[-1], dtype=complex), v.shape)
        return np.linalg.solve(v, eye)


class ProductNode(Node):
    kind = "product"

    def __init__(self, factors):
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    def __call__(self, z):
        out = self.factors[0](z)
        for f in self.factors[1:]:
            out = out @ f(z)
        return out


class SumNode(Node):
    kind = "sum"

    def __init__(self, terms):
        self.terms = tuple((complex(c), n) for c, n in terms)

    def children(self):
        return tuple(n for _, n in self.terms)

    def __call__(self, z):
        out = None
        for c, n in self.terms:
            v = n(z) if c == 1 else c * n(z)
            out = v if out is None else out + v
        return out


class ShiftNode(Node):
    kind = "shift"

    def __init__(self, child, beta):
        self.child = child
        self.beta = float(beta)

    def children(self):
        return (self.child,)

    def __call__(self, z):
        return self.child(np.asarray(z, complex) + self.beta)


# ---------------------------------------------------------------------------
# meromorphic matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoleDatum:
    """A pole with its Laurent principal part.

    ``principal[k]`` is the coefficient of ``(z - location)**-(k + 1)``.
    """

    location: complex
    principal: np.ndarray
    ranks: tuple = field(default=())

    def __post_init__(self):
        p = np.asarray(self.principal, complex)
        p.setflags(write=False)
        object.__setattr__(self, "principal", p)
        object.__setattr__(self, "location", complex(self.location))
        if not self.ranks:
            object.__setattr__(
                self, "ranks", tuple(int(np.linalg.matrix_rank(c, tol=1e-10 * max(1.0, np.abs(c).max()))) for c in p)
            )

    @property
    def order(self):
        return len(self.principal)

    def moved(self, location):
        return PoleDatum(location, self.principal, self.ranks)


def _merge_candidates(cands, tol, combine):
    """Merge (location, order_bound) pairs that coincide within tolerance."""
    out = []
    for loc, order in cands:
        for i, (l2, o2) in enumerate(out):
            if abs(loc - l2) <= tol.merge * (1 + max(abs(loc), abs(l2))):
                out[i] = ((l2 + loc) / 2 if combine == "sum" else l2, combine_orders(o2, order, combine))
                break
        else:
            out.append((complex(loc), int(order)))
    return out


def combine_orders(a, b, how):
    return a + b if how == "sum" else max(a, b)


def _contour_radii(locs, tol):
    locs = np.asarray(locs, complex)
    if len(locs) == 1:
        return np.array([tol.contour_radius])
    d = np.abs(locs[:, None] - locs[None, :])
    np.fill_diagonal(d, np.inf)
    return np.minimum(0.5 * d.min(axis=1), tol.contour_radius)


def _contour_coefficients(node, locs, radii, nmin, nmax, tol):
    """Laurent coefficients c_n, nmin <= n <= nmax, of node around each center.

    Returns (coefficient array of shape (len(locs), nmax - nmin + 1, K, K),
    max norm of the samples on each circle).
    """
    npts = max(tol.contour_points, 2 * (nmax - nmin + 1) + 16)
    theta = 2 * np.pi * np.arange(npts) / npts
    unit = np.exp(1j * theta)
    pts = (np.asarray(locs)[:, None] + np.asarray(radii)[:, None] * unit[None, :]).ravel()
    vals = node(pts)
    K = vals.shape[-1]
    vals = vals.reshape(len(locs), npts, K, K)
    F = np.fft.fft(vals, axis=1) / npts
    ns = np.arange(nmin, nmax + 1)
    coef = F[:, ns % npts] / (np.asarray(radii)[:, None, None, None] ** ns[None, :, None, None])
    smax = np.abs(vals).max(axis=(1, 2, 3))
    return coef, smax


def resolve_poles(node, candidates, tol=DEFAULT_TOL, combine="sum"):
    """Principal parts of ``node`` at candidate locations; vanishing ones are removed."""
    cands = _merge_candidates(candidates, tol, combine)
    cands = [(l, o) for l, o in cands if o > 0]
    if not cands:
        return ()
    locs = np.array([l for l, _ in cands])
    radii = _contour_radii(locs, tol)
    mmax = max(o for _, o in cands)
    coef, smax = _contour_coefficients(node, locs, radii, -mmax, -1, tol)
    poles = []
    for idx, (loc, order) in enumerate(cands):
        rho = radii[idx]
        principal = []
        for k in range(order):
            c = coef[idx, mmax - k - 1]  # coefficient of (z - loc)^-(k+1)
            if np.abs(c).max() * rho ** (-(k + 1)) <= tol.cancel * smax[idx]:
                c = np.zeros_like(c)
            principal.append(c)
        while principal and not np.any(principal[-1]):
            principal.pop()
        if principal:
            poles.append(PoleDatum(loc, np.array(principal)))
    return tuple(poles)


class MeroMatrix:
    """Meromorphic square-matrix function of z with known poles.

    Parameters
    ----------
    node : Node
        Exact evaluation route.
    poles : sequence of PoleDatum
        All poles, with pairwise distinct locations.
    valid_strip : (float, float) or None
        Re-z interval on which the data is guaranteed; None means everywhere.
    """

    def __init__(self, node, poles, size, valid_strip=None, _base=None, _shift=0.0):
        self.node = node
        self.poles = tuple(poles)
        self.size = int(size)
        self.valid_strip = valid_strip
        self._base = _base
        self._shift = _shift

    @classmethod
    def from_poly(cls, poly):
        return cls(PolyNode(poly), (), poly.size)

    @classmethod
    def from_node(cls, node, candidates, size, tol=DEFAULT_TOL, combine="sum", valid_strip=None):
        return cls(node, resolve_poles(node, candidates, tol, combine), size, valid_strip)

    @property
    def shape(self):
        return (self.size, self.size)

    @property
    def pole_locations(self):
        return np.array([p.location for p in self.poles], complex)

    def pole_near(self, z, tol=DEFAULT_TOL):
        hits = [p for p in self.poles if abs(p.location - z) <= tol.merge * (1 + abs(z))]
        if len(hits) > 1:
            raise ValueError(f"{z} is within merge tolerance of {len(hits)} distinct poles")
        return hits[0] if hits else None

    def __call__(self, z):
        z = np.asarray(z, complex)
        flat = z.reshape(-1)
        return self.node(flat).reshape(z.shape + self.shape)

    def principal_part(self, z):
        """Sum of all principal parts evaluated at z."""
        z = np.asarray(z, complex)
        out = np.zeros(z.shape + self.shape, complex)
        for p in self.poles:
            w = z - p.location
            for k, c in enumerate(p.principal):
                out = out + c * (w ** (-(k + 1)))[..., None, None]
        return out

    def holomorphic_part(self, z):
        return self(z) - self.principal_part(z)

    def is_zero(self):
        return False

    def __repr__(self):
        return f"MeroMatrix(size={self.size}, poles={[(complex(p.location), p.order) for p in self.poles]})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def as_mero(f):
    if isinstance(f, MeroMatrix):
        return f
    if isinstance(f, MatPolynomial):
        return MeroMatrix.from_poly(f)
    raise TypeError(f"cannot interpret {type(f).__name__} as a meromorphic matrix")


def mero_inverse(h, tol=DEFAULT_TOL):
    """Inverse of a matrix polynomial as a MeroMatrix.

    Candidate poles are the zeros of ``det h`` with their algebraic
    multiplicities as order bounds; the actual orders come from the contour
    principal parts.
    """
    if not isinstance(h, MatPolynomial):
        h = MatPolynomial(h)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = polyeig(h, allow_infinite=True, tol=tol)
    node = InverseNode(h)
    return MeroMatrix.from_node(node, zeros, h.size, tol, combine="max")


def translate(f, beta):
    """``(T^beta f)(z) = f(z + beta)``; pole locations move by ``-beta``."""
    if beta == 0:
        return f
    if isinstance(f, MatPolynomial):
        return f.translate(beta)
    base = f._base if f._base is not None else f
    shift = f._shift + beta
    poles = tuple(p.moved(p.location - shift) for p in base.poles)
    strip = None if base.valid_strip is None else (base.valid_strip[0] - shift, base.valid_strip[1] - shift)
    return MeroMatrix(ShiftNode(base.node, shift), poles, f.size, strip, _base=base, _shift=shift)


def product_candidates(factors):
    cands = []
    for f in factors:
        if isinstance(f, MeroMatrix):
            cands.extend((p.location, p.order) for p in f.poles)
    return cands


def _node_of(f):
    return f.node if isinstance(f, MeroMatrix) else PolyNode(f)


def mero_mul(*factors, tol=DEFAULT_TOL):
    """Pointwise product; poles whose principal part cancels are removed."""
    if len(factors) == 1:
        return factors[0]
    if all(isinstance(f, MatPolynomial) for f in factors):
        out = factors[0]
        for f in factors[1:]:
            out = out * f
        return out
    size = factors[0].size
    node = ProductNode([_node_of(f) for f in factors])
    return MeroMatrix.from_node(node, product_candidates(factors), size, tol, combine="sum")


def mero_add(terms, tol=DEFAULT_TOL):
    """Linear combination ``sum c_i f_i`` given as (coefficient, function) pairs."""
    terms = [(c, f) for c, f in terms if not _is_zero(f)]
    if not terms:
        return None
    if all(isinstance(f, MatPolynomial) for _, f in terms):
        out = None
        for c, f in terms:
            out = f * c if out is None else out + f * c
        return out
    size = terms[0][1].size
    node = SumNode([(c, _node_of(f)) for c, f in terms])
    return MeroMatrix.from_node(node, product_candidates([f for _, f in terms]), size, tol, combine="max")


def _is_zero(f):
    return f is None or (isinstance(f, MatPolynomial) and f.is_zero())


def mero_invert(f, tol=DEFAULT_TOL):
    """Inverse of a general MeroMatrix (or MatPolynomial)."""
    if isinstance(f, MatPolynomial):
        return mero_inverse(f, tol)
    numerator = rational_numerator(f, tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = polyeig(numerator, allow_infinite=True, tol=tol)
    return MeroMatrix.from_node(InvertNode(f.node), zeros, f.size, tol, combine="max")


def denominator(f):
    """Scalar polynomial coefficients (ascending) of prod (z - p)^order over poles."""
    d = np.array([1.0 + 0j])
    for p in f.poles:
        for _ in range(p.order):
            d = np.convolve(d, [-p.location, 1.0])
    return d


def rational_numerator(f, tol=DEFAULT_TOL):
    """Matrix polynomial N with f = N / d, d the monic pole denominator.

    N is interpolated from samples on a circle enclosing all poles; its degree
    is found from the decay of the interpolated coefficients.
    """
    d = denominator(f)
    locs = f.pole_locations
    center = complex(locs.mean()) if len(locs) else 0.0
    radius = 1.0 + 2.0 * (np.abs(locs - center).max() if len(locs) else 0.0)
    npts = 128
    while True:
        theta = 2 * np.pi * np.arange(npts) / npts
        w = radius * np.exp(1j * theta)
        vals = f(center + w) * np.polyval(d[::-1], center + w)[:, None, None]
        coef = np.fft.fft(vals, axis=0) / npts / (radius ** np.arange(npts))[:, None, None]
        mags = np.abs(coef).max(axis=(1, 2)) * radius ** np.arange(npts)
        top = mags.max()
        keep = np.flatnonzero(mags > 1e-11 * top)
        deg = int(keep[-1]) if len(keep) else 0
        if deg < npts // 2 or npts >= 4096:
            break
        npts *= 2
    local = MatPolynomial(coef[: deg + 1])
    # coefficients are in powers of (z - center); move them to powers of z
    return local.translate(-center)


def invert_one_plus(m, tol=DEFAULT_TOL):
    """Return l with (I + m)(I + l) = (I + l)(I + m) = I off poles."""
    m = as_mero(m) if not isinstance(m, MeroMatrix) else m
    size = m.size
    eye = MatPolynomial.identity(size)
    one_plus = mero_add([(1, eye), (1, m)], tol)
    if isinstance(one_plus, MatPolynomial):
        inv = mero_inverse(one_plus, tol)
    else:
        inv = mero_invert(one_plus, tol)
    node = SumNode([(1, inv.node), (-1, PolyNode(eye))])
    return MeroMatrix(node, inv.poles, size)


def laurent_at(f, p, depth, tol=DEFAULT_TOL):
    """Laurent coefficients of f at p, from (z-p)^-m up to (z-p)^depth.

    Principal coefficients come from the stored pole data; the holomorphic
    ones from contour sampling of the holomorphic remainder.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if isinstance(f, MatPolynomial):
        out = []
        g = f
        for k in range(depth + 1):
            out.append(g(np.array([p]))[0] / math.factorial(k))
            g = g.derivative()
        return out
    pole = f.pole_near(p, tol)
    center = pole.location if pole is not None else complex(p)
    others = [q.location for q in f.poles if q is not pole]
    if others:
        rho = min(0.5 * min(abs(center - o) for o in others), tol.contour_radius)
    else:
        rho = tol.contour_radius
    m = pole.order if pole is not None else 0
    coef, _ = _contour_coefficients(f.node, [center], [rho], -m, depth, tol)
    out = list(coef[0])
    if pole is not None:
        for k in range(m):
            out[m - 1 - k] = pole.principal[k]
    return out
