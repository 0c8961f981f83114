"""Frobenius-method oracle for regular singular ODE systems.

Works directly on the r-Taylor data of a Fuchs operator, one diagonal block
at a time, without any Mellin machinery: the ansatz
``u = sum_t sum_k c_{t,k} r^-(top - t) log^k r`` is substituted into
``sum_i r^(i - mu) h_i(-r d_r) u = f`` and the resulting block-triangular
linear system is solved by forward substitution, one exponent at a time.
Singular diagonal blocks (indicial roots) bring in free parameters and
consistency conditions; what survives the conditions spans the homogeneous
solutions in the window, one per root counted with multiplicity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import weight_line
from .mero import MatPolynomial, _blocks, polyeig
from .solver import SingularExpansion, kernel_probe


class NotBlockDiagonal(ValueError):
    pass


def log_derivative_matrix(p, m):
    """Matrix of -r d_r on span{r^-p log^k r : k <= m} (coefficient vectors)."""
    M = p * np.eye(m + 1, dtype=complex)
    for k in range(1, m + 1):
        M[k - 1, k] = -k
    return M


def _poly_at_matrix(coeffs, M):
    """sum_j coeffs[j] (x) M^j for matrix coefficients acting on blocks."""
    K = coeffs.shape[1]
    out = np.zeros((K * M.shape[0],) * 2, complex)
    P = np.eye(M.shape[0], dtype=complex)
    for a in coeffs:
        out += np.kron(a, P)
        P = P @ M
    return out


@dataclass
class FrobeniusClass:
    top: complex
    logs: int
    particular: SingularExpansion
    kernel: list                 # SingularExpansion per null vector
    residual: float
    null_gap: float = 0.0


@dataclass
class FrobeniusResult:
    classes: list
    block: tuple
    roots: list

    def particular(self):
        out = None
        for c in self.classes:
            out = c.particular if out is None else out + c.particular
        return out

    def kernel(self):
        return [k for c in self.classes for k in c.kernel]


def _integer_classes(seeds, tol=1e-8):
    classes = []
    for s in seeds:
        for cl in classes:
            d = cl[0] - s
            if abs(d.imag) < tol and abs(d.real - round(d.real)) < tol:
                cl.append(s)
                break
        else:
            classes.append([s])
    return classes


def frobenius_oracle(A, f=None, gamma=None, N=6, block=None):
    """Formal solutions of A u = f restricted to one block of the basis.

    Exponents come in classes differing by integers.  In each class the
    window holds the exponents top - t, t = 0..T with T = N plus the spread
    of the class; the number of log powers allowed is the largest log power
    in f plus the total multiplicity of the indicial roots in the class.
    Roots are used only inside the weight strip when gamma is given.
    """
    taylor = A.taylor
    K = A.size
    mu = A.mu
    if block is None:
        blocks = _blocks(MatPolynomial(taylor.sum(axis=1)))
        # the full operator, all r-orders, must respect the same splitting
        allmat = np.abs(taylor).sum(axis=(0, 1))
        for b in blocks:
            rest = [i for i in range(K) if i not in b]
            if np.any(allmat[np.ix_(b, rest)]) or np.any(allmat[np.ix_(rest, b)]):
                raise NotBlockDiagonal("operator couples different blocks at higher r-order")
        if len(blocks) != 1:
            raise NotBlockDiagonal("operator splits into blocks; pass block= to choose one")
        block = tuple(range(K))
    else:
        block = tuple(block)
        rest = [i for i in range(K) if i not in block]
        allmat = np.abs(taylor).sum(axis=(0, 1))
        if rest and (np.any(allmat[np.ix_(block, rest)]) or np.any(allmat[np.ix_(rest, block)])):
            raise NotBlockDiagonal(f"block {block} is coupled to the rest of the basis")
    idx = np.array(block)
    a = taylor[:, :, idx][:, :, :, idx]          # (mu+1, I+1, b, b)
    b = len(block)
    I = a.shape[1] - 1
    h0 = MatPolynomial(a[:, 0])
    roots = polyeig(h0, allow_infinite=True)
    if gamma is not None:
        hi = weight_line(gamma, A.model.n)
        roots = [(z, m) for z, m in roots if z.real < hi]
    fterms = []
    if f is not None:
        for p, k, c in f.terms:
            fterms.append((p - mu, p, k, np.asarray(c)[idx]))
    seeds = [z for z, _ in roots] + [s for s, _, _, _ in fterms]
    classes = []
    for cl in _integer_classes(seeds):
        top = max(cl, key=lambda z: z.real)
        spread = int(round(max((top - s).real for s in cl)))
        T = N + spread
        mult = sum(m for z, m in roots if any(abs(z - s) < 1e-8 for s in cl))
        kf = max((k for s, _, k, _ in fterms if any(abs(s - x) < 1e-8 for x in cl)), default=-1)
        logs = max(kf + 1, 0) + mult   # log powers 0..logs-1
        m = max(logs - 1, 0)
        nb = b * (m + 1)
        # unknown block t, equation block s: sum_i h_i(M_{top-(s-i)}) c_{s-i}
        Amat = np.zeros(((T + 1) * nb,) * 2, complex)
        rhs = np.zeros((T + 1) * nb, complex)
        for s in range(T + 1):
            for i in range(min(s, I) + 1):
                t = s - i
                Mt = log_derivative_matrix(top - t, m)
                Amat[s * nb:(s + 1) * nb, t * nb:(t + 1) * nb] = _poly_at_matrix(a[:, i], Mt)
        for s_u, p, k, c in fterms:
            d = top - s_u
            if abs(d.imag) > 1e-8 or abs(d.real - round(d.real)) > 1e-8:
                continue
            s = int(round(d.real))
            if s > T:
                continue
            # f term c r^-p log^k r; vector layout: component-major, log-minor
            for comp in range(b):
                rhs[s * nb + comp * (m + 1) + k] += c[comp]
        sol, null, gap = _forward_solve(Amat, rhs, T, nb, I)
        res = np.abs(Amat @ sol - rhs).max() / max(np.abs(Amat).max() * np.abs(sol).max() + np.abs(rhs).max(), 1e-300)
        # one formal solution per root (with multiplicity) inside the window
        dim = sum(mz for z, mz in roots
                  if any(abs(z - s) < 1e-8 for s in cl) and -1e-8 <= (top - z).real <= T + 1e-8)
        if null.shape[1] != dim:
            raise ArithmeticError(f"kernel dimension {null.shape[1]} differs from the root count {dim}")
        classes.append(
            FrobeniusClass(
                top,
                logs,
                _to_expansion(sol, top, T, b, m, idx, K),
                [_to_expansion(v, top, T, b, m, idx, K) for v in null.T],
                float(res),
                float(gap),
            )
        )
    return FrobeniusResult(classes, block, roots)


def _forward_solve(Amat, rhs, T, nb, I, rtol=1e-10):
    """Block forward substitution for the lower-triangular window system.

    The solution is kept affine in free parameters lam: c_t = x_t + X_t lam.
    A singular diagonal block contributes new parameters (its null space)
    and consistency constraints (the orthogonal complement of its range),
    which are solved once all blocks are done.  Returns the particular
    solution, a kernel basis and the relative size of the largest rejected
    constraint singular value.
    """
    x = np.zeros((T + 1) * nb, complex)
    X = np.zeros(((T + 1) * nb, 0), complex)
    cons, cons_rhs = [], []
    for s in range(T + 1):
        rows = slice(s * nb, (s + 1) * nb)
        g = rhs[rows].copy()
        G = np.zeros((nb, X.shape[1]), complex)
        lo = max(0, s - I) * nb
        if s * nb > lo:
            blk = Amat[rows, lo:s * nb]
            g -= blk @ x[lo:s * nb]
            G -= blk @ X[lo:s * nb]
        B = Amat[rows, rows]
        U, sv, Vh = np.linalg.svd(B)
        rank = int(np.sum(sv > rtol * max(sv.max(initial=0.0), 1.0)))
        Ur, Vr = U[:, :rank], Vh[:rank].conj().T
        pinv = Vr @ np.diag(1 / sv[:rank]) @ Ur.conj().T
        x[rows] = pinv @ g
        new = nb - rank
        X = np.hstack([X, np.zeros((X.shape[0], new), complex)])
        X[rows, :G.shape[1]] = pinv @ G
        if new:
            X[rows, G.shape[1]:] = Vh[rank:].conj().T
            Un = U[:, rank:].conj().T
            cons.append(np.hstack([Un @ G, np.zeros((new, new), complex)]))
            cons_rhs.append(-(Un @ g))
    npar = X.shape[1]
    if not cons:
        return x, X, 0.0
    C = np.vstack([np.hstack([c, np.zeros((c.shape[0], npar - c.shape[1]), complex)]) for c in cons])
    d = np.concatenate(cons_rhs)
    # constraints are compared with the size of the products that formed them
    scale = max(np.abs(Amat).max() * max(np.abs(X).max(), np.abs(x).max(), 1.0), np.abs(rhs).max(), 1e-300)
    U, sv, Vh = np.linalg.svd(C / scale)
    rank = int(np.sum(sv > rtol))
    lam = Vh[:rank].conj().T @ ((U[:, :rank].conj().T @ (d / scale)) / sv[:rank])
    null = Vh[rank:].conj().T
    gap = float(sv[rank]) if rank < len(sv) else 0.0
    return x + X @ lam, X @ null, gap


def _to_expansion(vec, top, T, b, m, idx, K):
    terms = []
    nb = b * (m + 1)
    for t in range(T + 1):
        blk = vec[t * nb:(t + 1) * nb].reshape(b, m + 1)
        for k in range(m + 1):
            c = np.zeros(K, complex)
            c[idx] = blk[:, k]
            terms.append((top - t, k, c))
    return SingularExpansion(terms, K).pruned(1e-13) if terms else SingularExpansion([], K)


# ---------------------------------------------------------------------------
# comparison with the parametrix route
# ---------------------------------------------------------------------------

def _window(u, top, N):
    out = []
    for p, k, c in u.terms:
        d = top - p
        if abs(d.imag) < 1e-8 and abs(d.real - round(d.real)) < 1e-8 and -1e-8 < d.real < N + 0.5:
            out.append((p, k, c))
    return SingularExpansion(out, u.size)


def _group(p):
    return (round(p.real, 6) + 0.0, round(p.imag, 6) + 0.0)


def _support(u, rtol):
    """(exponent, log) pairs that are not negligible.

    Coefficients can grow by orders of magnitude down a window, so a term
    is measured against its own exponent and the two neighbours p -+ 1
    rather than against the whole expansion.
    """
    size = {}
    for p, _, c in u.terms:
        g = _group(p)
        size[g] = max(size.get(g, 0.0), float(np.abs(c).max()))
    out = set()
    for p, k, c in u.terms:
        re, im = _group(p)
        local = max(size.get((round(re + d, 6) + 0.0, im), 0.0) for d in (-1, 0, 1))
        if local > 0 and np.abs(c).max() > rtol * local:
            out.add((re, im, k))
    return out


def _vectorize(u, keys):
    rows = []
    for key in keys:
        p = complex(key[0], key[1])
        rows.append(u.coefficient(p, key[2]))
    return np.concatenate(rows) if rows else np.zeros(0)


@dataclass
class EquivalenceReport:
    structure_match: bool
    coefficient_error: float
    oracle_residual: float
    null_gap: float
    missing: set
    extra: set

    @property
    def ok(self):
        return (self.structure_match and self.coefficient_error < 1e-6 and self.oracle_residual < 1e-9
                and self.null_gap < 1e-6)


def oracle_equivalence(solution, oracle, N, rtol=1e-8, probes=None):
    """Compare parametrix asymptotics with the oracle class by class.

    Both sides describe an affine family: a particular solution plus a
    kernel span.  Structure: the (exponent, log) support of the parametrix
    expansion together with its homogeneous probes must equal that of the
    oracle particular solution together with its kernel basis.
    Coefficients: the two particular solutions must differ by an element of
    the oracle kernel span (least squares, relative error).
    """
    if probes is None:
        probes = [u for _, _, u in kernel_probe(solution.hierarchy, depth=N)]
    worst, worst_res, worst_gap = 0.0, 0.0, 0.0
    missing, extra = set(), set()
    for cl in oracle.classes:
        ours_full = _window(solution.u, cl.top, N)
        ours_part = _window(solution.particular, cl.top, N)
        theirs = _window(cl.particular, cl.top, N)
        kern = [_window(v, cl.top, N) for v in cl.kernel]
        s_ours = _support(ours_full, rtol) | _support(ours_part, rtol)
        s_theirs = _support(theirs, rtol)
        for v in probes:
            s_ours |= _support(_window(v, cl.top, N), rtol)
        for v in kern:
            s_theirs |= _support(v, rtol)
        missing |= s_theirs - s_ours
        extra |= s_ours - s_theirs
        keys = sorted(s_ours | s_theirs | _support(ours_part, 1e-14))
        d = _vectorize(ours_part, keys) - _vectorize(theirs, keys)
        if kern:
            Kmat = np.stack([_vectorize(v, keys) for v in kern], axis=1)
            coef, *_ = np.linalg.lstsq(Kmat, d, rcond=None)
            d = d - Kmat @ coef
        ref = max(np.abs(_vectorize(ours_part, keys)).max(initial=0.0), 1e-300)
        worst = max(worst, float(np.abs(d).max(initial=0.0) / ref) if ref > 1e-300 else float(np.abs(d).max(initial=0.0)))
        worst_res = max(worst_res, cl.residual)
        worst_gap = max(worst_gap, cl.null_gap)
    return EquivalenceReport(not missing and not extra, worst, worst_res, worst_gap, missing, extra)
