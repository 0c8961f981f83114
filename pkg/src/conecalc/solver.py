"""Singular expansions and their image under Fuchs operators and parametrices.

Terms are ``c r^-p log^k r`` (note the sign of the exponent).  The Mellin
datum of such a term is ``(-1)^k k! (z - p)^-(k+1) c``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np

from .asymptypes import AsymptoticType, shadow_closure
from .cone import conormal_hierarchy, weight_line
from .mero import MatPolynomial, MeroMatrix, laurent_at, polyeig
from .parametrix import parametrix_hierarchy

MERGE_TOL = 1e-8


def _key(t):
    p, k, _ = t
    return (-round(p.real, 9), round(p.imag, 9), k)


@dataclass
class SingularExpansion:
    """Finite sum of c r^-p log^k r with coefficient vectors c.

    Everything with Re p <= flat_order is not represented.
    """

    terms: list
    size: int
    flat_order: float = -math.inf
    gamma: float | None = None
    n: int | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        merged = []
        for p, k, c in self.terms:
            p = complex(p)
            c = np.asarray(c, complex).reshape(self.size)
            if k < 0:
                raise ValueError("log powers are nonnegative")
            for i, (q, kq, cq) in enumerate(merged):
                if kq == k and abs(p - q) <= MERGE_TOL * (1 + abs(p)):
                    merged[i] = (q, k, cq + c)
                    break
            else:
                merged.append((p, int(k), c))
        merged = [t for t in merged if t[0].real > self.flat_order + 1e-12]
        self.terms = sorted(merged, key=_key)
        if self.gamma is not None and self.n is not None:
            hi = weight_line(self.gamma, self.n)
            for p, _, _ in self.terms:
                if p.real >= hi + 1e-8:
                    raise ValueError(f"term r^-({p}) is not in the weight strip Re p < {hi}")

    @classmethod
    def scalar(cls, terms, **kw):
        return cls([(p, k, [c]) for p, k, c in terms], 1, **kw)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def _like(self, terms, flat=None):
        return SingularExpansion(terms, self.size, self.flat_order if flat is None else flat, None, None,
                                 list(self.notes))

    def __add__(self, other):
        return self._like(self.terms + other.terms, max(self.flat_order, other.flat_order))

    def __neg__(self):
        return self._like([(p, k, -c) for p, k, c in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        return self._like([(p, k, s * c) for p, k, c in self.terms])

    __rmul__ = __mul__

    def scale(self):
        return max((np.abs(c).max() for _, _, c in self.terms), default=0.0)

    def pruned(self, rtol=1e-12):
        s = self.scale()
        return self._like([t for t in self.terms if np.abs(t[2]).max() > rtol * s])

    def coefficient(self, p, k=0):
        for q, kq, c in self.terms:
            if kq == k and abs(p - q) <= MERGE_TOL * (1 + abs(p)):
                return c
        return np.zeros(self.size, complex)

    def exponents(self, rtol=1e-10):
        """{(p, k)} of the terms that are not negligible."""
        return [(p, k) for p, k, _ in self.pruned(rtol).terms]

    def max_log(self, p):
        return max((k for q, k, _ in self.terms if abs(q - p) <= MERGE_TOL * (1 + abs(p))), default=-1)

    def evaluate(self, r):
        """sum c r^-p log^k r at the radii r (shape (len(r), size))."""
        r = np.asarray(r, float)
        out = np.zeros(r.shape + (self.size,), complex)
        for p, k, c in self.terms:
            out += (r ** (-p) * np.log(r) ** k)[..., None] * c
        return out

    def to_dict(self):
        return {
            "terms": [
                {"p_re": p.real, "p_im": p.imag, "k": k, "c": [_num(x) for x in c]}
                for p, k, c in self.terms
            ],
            "flat_order": None if math.isinf(self.flat_order) else self.flat_order,
        }

    @classmethod
    def from_dict(cls, d, size=None):
        terms = [
            (complex(t["p_re"], t.get("p_im", 0.0)), t["k"], [_parse_num(x) for x in t["c"]])
            for t in d["terms"]
        ]
        if size is None:
            size = len(terms[0][2]) if terms else 1
        flat = d.get("flat_order")
        return cls(terms, size, -math.inf if flat is None else flat)

    def table(self):
        rows = ["   r^-p: p          plain exponent     log^k   |c|"]
        for p, k, c in self.terms:
            rows.append(f"   {_fmt(p):<18} {_fmt(-p):<18} {k:<7} {np.abs(c).max():.6g}")
        return "\n".join(rows)


def _num(x):
    x = complex(x)
    return x.real if x.imag == 0 else {"re": x.real, "im": x.imag}


def _parse_num(x):
    return complex(x["re"], x["im"]) if isinstance(x, dict) else complex(x)


def _fmt(z):
    z = complex(z) + 0.0
    return f"{z.real:.10g}" if abs(z.imag) < 1e-14 else f"{z.real:.8g}{z.imag:+.8g}j"


# ---------------------------------------------------------------------------
# operators acting on expansions
# ---------------------------------------------------------------------------

def _taylor(h, p, k):
    """[h(p), h'(p), ..., h^(k)(p)] for polynomial or meromorphic h."""
    if isinstance(h, MatPolynomial):
        out, g = [], h
        for _ in range(k + 1):
            out.append(g(np.array([p]))[0])
            g = g.derivative()
        return out
    if h.pole_near(p) is not None:
        raise ValueError(f"symbol has a pole at the exponent {p}")
    coef = laurent_at(h, p, k)
    return [factorial(j) * c for j, c in enumerate(coef[-(k + 1):])]


def apply_fuchs(A, u, N=None, mellin=None):
    """Image of a singular expansion under A (plus an optional Mellin part).

    Level i of the operator sends c r^-p log^k r to
    sum_j (-1)^j C(k, j) h_i^(j)(p) c r^-(p + mu - i) log^(k-j) r.
    """
    L = A.r_order if N is None else N
    if mellin is not None:
        L = max(L, max((j for j, _, _ in mellin.terms), default=0))
    H = conormal_hierarchy(A, mellin, L)
    mu = A.mu
    out = []
    for i, h in enumerate(H.levels):
        if isinstance(h, MatPolynomial) and h.is_zero():
            continue
        for p, k, c in u.terms:
            ders = _taylor(h, p, k)
            for j in range(k + 1):
                v = (-1) ** j * comb(k, j) * (ders[j] @ c)
                out.append((p + mu - i, k - j, v))
    flat = u.flat_order + mu
    if N is not None and N < A.r_order and u.terms:
        top = max(p.real for p, _, _ in u.terms)
        flat = max(flat, top + mu - (N + 1))
    return SingularExpansion(out, u.size, flat)


def _mellin_taylor(p, k, z0, count):
    """Taylor coefficients at z0 of (-1)^k k! (z - p)^-(k+1)."""
    d = z0 - p
    s = (-1) ** k * factorial(k)
    # binomial(-(k+1), m) = (-1)^m binomial(k+m, m)
    return [s * (-1) ** m * comb(k + m, m) * d ** (-(k + 1) - m) for m in range(count)]


def _residue_terms(q, z0, p, k, c):
    """Residue of r^-z q(z) Mf(z) at z0 as a list of (log power, vector)."""
    pole = q.pole_near(z0) if isinstance(q, MeroMatrix) else None
    m = pole.order if pole is not None else 0
    same = abs(z0 - p) <= MERGE_TOL * (1 + abs(p))
    if same:
        coef = laurent_at(q, z0, k)  # q_{-m} .. q_k
        lo = -m
        F = {}
        s = (-1) ** k * factorial(k)
        for j in range(k + m + 1):
            idx = k - j  # F_{-(j+1)} = s q_{k-j}
            F[j] = s * coef[idx - lo]
    else:
        if m == 0:
            return []
        coef = laurent_at(q, z0, 0)
        mf = _mellin_taylor(p, k, z0, m)
        F = {}
        for j in range(m):
            # F_{-(j+1)} = sum_b q_{-(j+1)-b} mf_b
            acc = 0
            for b in range(m - j):
                a = -(j + 1) - b
                acc = acc + coef[a + m] * mf[b]
            F[j] = acc
    out = []
    for j, Fj in F.items():
        v = (-1) ** j / factorial(j) * (Fj @ c)
        out.append((j, v))
    return out


def apply_parametrix(P, f, depth=None, split=False, tol=1e-8):
    """Singular expansion of P f, level by level through residues.

    For every level l and term of f, residues of r^-z q_l(z) Mf(z) are taken
    at the exponent of the term and at the poles of q_l left of the line
    Re z = (n+1)/2 - (gamma - mu) on which f lives; the results are shifted
    by r^(mu+l).  Residues at the exponent of the term form the particular
    part, the others the kernel part.
    """
    mu, n, gamma = P.mu, P.n, P.gamma
    L = P.depth if depth is None else min(depth, P.depth)
    line = weight_line(gamma - mu, n)
    lower = weight_line(gamma, n) + P.theta
    part, kern = [], []
    for p, _, _ in f.terms:
        if p.real >= line - tol:
            raise ValueError(f"right-hand side term r^-({p}) is not in the strip Re p < {line}")
    for l in range(L + 1):
        q = P[l]
        if isinstance(q, MatPolynomial) and q.is_zero():
            continue
        poles = q.poles if isinstance(q, MeroMatrix) else ()
        for pole in poles:
            if abs(pole.location.real - line) <= tol:
                warnings.warn(f"pole {pole.location} of level {l} lies on the weight line; skipped",
                              RuntimeWarning, stacklevel=2)
        for p, k, c in f.terms:
            points = [(p, True)]
            for pole in poles:
                z0 = pole.location
                if abs(z0 - p) <= MERGE_TOL * (1 + abs(p)):
                    continue
                if z0.real < line - tol:
                    points.append((z0, False))
            for z0, own in points:
                pout = z0 - mu - l
                if pout.real <= lower + tol:
                    if abs(pout.real - lower) <= tol:
                        warnings.warn(f"contribution at r^-({pout}) sits on the strip boundary",
                                      RuntimeWarning, stacklevel=2)
                    continue
                for j, v in _residue_terms(q, z0, p, k, c):
                    (part if own else kern).append((pout, j, v))
    flat = max(lower, f.flat_order - mu)
    particular = SingularExpansion(part, f.size, flat)
    kernel = SingularExpansion(kern, f.size, flat)
    if split:
        return particular, kernel
    return particular + kernel


def kernel_probe(P, roots=None, depth=None, tol=1e-8):
    """Homogeneous asymptotics seeded by unit data at each indicial root.

    For a root zeta of det h_0, a basis vector e_k and s below the pole
    order of q_0 at zeta + mu, the residues of r^-z q_l(z) (z - zeta - mu)^s e_k
    give the terms r^-(zeta - l) of a formal solution of Au = 0; s > 0
    reaches the shorter members of a log chain.  Returns a list of
    (zeta, (k, s), expansion), dropping seeds that give nothing new at zeta.
    With roots None, roots in the weight strip are probed; pass "all" to
    probe every root.
    """
    mu = P.mu
    L = P.depth if depth is None else min(depth, P.depth)
    q0 = P[0]
    hi = weight_line(P.gamma, P.n)
    lo = hi + P.theta
    if roots is None or isinstance(roots, str):
        zs = sorted({round(pole.location.real, 12) + 1j * round(pole.location.imag, 12): pole
                     for pole in q0.poles}.values(), key=lambda d: (-d.location.real, d.location.imag))
        cands = [d.location - mu for d in zs]
        if roots is None:
            cands = [z for z in cands if lo + tol < z.real < hi - tol]
    else:
        cands = [complex(z) for z in roots]
    out = []
    size = P.size
    for zeta in cands:
        z0 = zeta + mu
        p0 = q0.pole_near(z0)
        depth0 = len(p0.principal) if p0 is not None else 1
        # coefficients are judged against the principal part, so that basis
        # vectors outside the null space give nothing rather than round-off
        ref = max((np.abs(F).max() for F in p0.principal), default=0.0) if p0 is not None else 0.0
        for e in range(size):
            c = np.zeros(size, complex)
            c[e] = 1.0
            for shift in range(depth0):
                terms = []
                for l in range(L + 1):
                    q = P[l]
                    pole = q.pole_near(z0) if isinstance(q, MeroMatrix) else None
                    if pole is None:
                        continue
                    for j, F in enumerate(pole.principal[shift:]):
                        terms.append((zeta - l, j, (-1) ** j / factorial(j) * (F @ c)))
                terms = [t for t in terms if np.abs(t[2]).max() > 1e-12 * ref]
                u = SingularExpansion(terms, size).pruned(1e-12)
                if any(abs(t[0] - zeta) < tol for t in u.terms):
                    u.notes.append("homogeneous probe: seeded kernel data, not a solution of Au = f")
                    out.append((zeta, (e, shift), u))
    return out


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

@dataclass
class Solution:
    u: SingularExpansion
    particular: SingularExpansion
    kernel: SingularExpansion
    type: AsymptoticType
    residual: SingularExpansion
    particular_residual: SingularExpansion
    flat_ok: bool
    flat_gap: float
    hierarchy: object = None
    notes: list = field(default_factory=list)


def solve_asymptotics(A, f, gamma, N, mellin=None, theta=-math.inf, hierarchy=None, rtol=1e-10):
    """Asymptotics of solutions of Au = f through a depth-N parametrix.

    The residual A u - f of the particular part contains only terms at
    least N - 1 orders flatter than the leading right-hand side term;
    ``flat_gap`` is the number of orders actually achieved.
    """
    n = A.model.n
    if hierarchy is None:
        H = conormal_hierarchy(A, mellin, max(N, A.r_order))
        hierarchy = parametrix_hierarchy(H, gamma, n, N, theta)
    P = hierarchy
    particular, kernel = apply_parametrix(P, f, N, split=True)
    u = particular + kernel
    L = max(A.r_order, max((j for j, _, _ in mellin.terms), default=0) if mellin else 0)
    residual = (apply_fuchs(A, u, L, mellin) - f).pruned(1e-14)
    pres = (apply_fuchs(A, particular, L, mellin) - f).pruned(1e-14)
    scale = max(f.scale(), 1e-300)
    big = [p for p, _, c in pres.terms if np.abs(c).max() > rtol * scale]
    notes = []
    if f.terms:
        lead = max(p.real for p, _, _ in f.terms)
        gap = lead - max((p.real for p in big), default=-math.inf)
        ok = gap >= N - 1 - 1e-9
    else:
        gap, ok = math.inf, True
    if not ok:
        notes.append(f"residual only {gap} orders flatter than the right-hand side")
    typ = expansion_type(u, gamma, n, theta)
    return Solution(u, particular, kernel, typ, residual, pres, ok, gap, P, notes)


def expansion_type(u, gamma, n, theta=-math.inf):
    """Asymptotic type carried by an expansion (shadow-closed for finite theta)."""
    pts = {}
    for p, k, c in u.pruned(1e-12).terms:
        key = min(pts, key=lambda q: abs(q - p), default=None)
        if key is not None and abs(key - p) <= MERGE_TOL * (1 + abs(p)):
            pts[key] = max(pts[key], k)
        else:
            pts[p] = k
    typ = AsymptoticType(tuple(pts.items()), gamma, n, theta)
    if math.isfinite(theta):
        typ = shadow_closure(typ)
    return typ


def indicial_roots(A, mellin=None):
    """Zeros of det h_0 with multiplicities."""
    H = conormal_hierarchy(A, mellin, 0)
    h0 = H[0]
    if isinstance(h0, MatPolynomial):
        return polyeig(h0, allow_infinite=True)
    from .cone import symbol_zeros

    return symbol_zeros(h0)
