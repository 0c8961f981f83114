"""Asymptotic parametrices at the level of conormal symbols.

The parametrix is ``P = sum_l r^(mu+l) op_M(q_l)`` with
``q_0(z) = h_0(z - mu)^-1`` and the higher levels fixed by the left defect
identity ``sum_{i+j=l} q_i(z + mu - j) h_j(z) = delta_l0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .asymptypes import RemainderClass, WeightData, remainder_compose
from .cone import (
    ConormalHierarchy,
    NotEllipticError,
    check_conormal_ellipticity,
    shift_legality,
    conormal_hierarchy,
    weight_line,
)
from .mero import (
    DEFAULT_TOL,
    MatPolynomial,
    MeroMatrix,
    ProductNode,
    ShiftNode,
    SumNode,
    mero_add,
    mero_inverse,
    mero_invert,
    mero_mul,
    translate,
)
from .mero import Node, _merge_candidates, _node_of


@dataclass
class ParametrixHierarchy:
    mu: int
    levels: list
    gamma: float
    n: int
    theta: float = -math.inf
    remainders: list = field(default_factory=list)

    @property
    def depth(self):
        return len(self.levels) - 1

    @property
    def weights(self):
        """Weight data of the parametrix, inverse to that of the operator."""
        return WeightData(self.gamma - self.mu, self.gamma, self.theta)

    @property
    def size(self):
        return self.levels[0].size

    def __getitem__(self, l):
        return self.levels[l]

    def __len__(self):
        return len(self.levels)


@dataclass
class TaylorTerm:
    index: int
    symbol: object              # level-i conormal symbol of A_i
    tag: RemainderClass
    mellin: list = field(default_factory=list)   # (f, weight, carried r-power)
    green_flag: bool = False


def taylor_decompose(A, mellin=None, N=None):
    """Split A = sum_i r^i A_i, A_i with r-independent coefficients.

    Smoothing Mellin terms r^j op^{gamma_j}(f_j) whose weight gamma_j sits
    below the ambient gamma are carried one level down, as r^(j-1) times a
    Mellin operator with raised weight; such regrouping may create a Green
    operator and is flagged.
    """
    if N is None:
        N = A.r_order
    H = conormal_hierarchy(A, mellin, N)
    terms = [TaylorTerm(i, H[i], RemainderClass.flat(i)) for i in range(N + 1)]
    if mellin is not None:
        g = mellin.gamma
        for j, gj, f in mellin.terms:
            if j > N:
                continue
            if gj < g - 1e-12 and j >= 1:
                gt = min(g, max(g - 1, gj + 1))
                t = terms[j - 1]
                t.mellin.append((f, gt, 1))
                t.green_flag = True
                t.tag = RemainderClass("Flat", t.index, True)
            else:
                terms[j].mellin.append((f, gj, 0))
    return terms


def leading_parametrix(h0, mu, gamma, n):
    """q_0(z) = h_0(z - mu)^-1, after checking ellipticity on the weight line."""
    rep = check_conormal_ellipticity(h0, gamma, n)
    if not rep.elliptic:
        bad = [z for z, _, d in rep.zeros if d <= 1e-8]
        raise NotEllipticError(
            f"conormal symbol has zeros {bad} on the weight line Re z = {rep.line}", bad
        )
    shifted = translate(h0, -mu)
    if isinstance(shifted, MatPolynomial):
        return mero_inverse(shifted)
    return mero_invert(shifted)


def _level(H, j, size):
    if j < len(H.levels):
        return H.levels[j]
    return MatPolynomial.zero(size)


def _zero(f):
    return f is None or (isinstance(f, MatPolynomial) and f.is_zero())


class _LevelNode(Node):
    """q_l evaluated through the pointwise recursion, memoized per call.

    q_l(z) = -[sum_{j=1}^{l} q_{l-j}(z - j) h_j(z - mu)] q_0(z); every
    (level, integer shift) pair is evaluated once per call.
    """

    kind = "parametrix-level"

    def __init__(self, q0, H, mu, level):
        self.q0 = _node_of(q0)
        self.h = [None if _zero(x) else _node_of(x) for x in H.levels]
        self.mu = mu
        self.level = level

    def __call__(self, z):
        z = np.asarray(z, complex)
        memo = {}
        h_memo = {}

        def hval(j, s):
            key = (j, s)
            if key not in h_memo:
                h_memo[key] = self.h[j](z - s - self.mu)
            return h_memo[key]

        def q(l, s):
            key = (l, s)
            if key in memo:
                return memo[key]
            if l == 0:
                v = self.q0(z - s)
            else:
                acc = None
                for j in range(1, l + 1):
                    if j >= len(self.h) or self.h[j] is None:
                        continue
                    t = q(l - j, s + j) @ hval(j, s)
                    acc = t if acc is None else acc + t
                if acc is None:
                    v = np.zeros((len(z),) + (self.q0(z[:1]).shape[-2:]), complex)
                else:
                    v = -(acc @ q(0, s))
            memo[key] = v
            return v

        return q(self.level, 0)


def _order_bounds(levels, H, mu, l):
    """Upper bounds for pole orders of q_l from the resolved lower levels."""
    def orders(f, shift):
        return {p.location + shift: p.order for p in f.poles} if isinstance(f, MeroMatrix) else {}

    left = []
    for j in range(1, l + 1):
        hj = _level(H, j, H.size)
        if _zero(hj) or _zero(levels[l - j]):
            continue
        left.append(orders(levels[l - j], j))
        left.append(orders(hj, mu))
    cands = [(z, o) for d in left for z, o in d.items()]
    q0 = orders(levels[0], 0)
    # a pole of the bracket and of q_0 at the same place add up
    return cands, list(q0.items())


def parametrix_hierarchy(H, gamma, n, L=None, theta=-math.inf):
    """Levels q_0..q_L of the formal inverse of the hierarchy H."""
    if L is None:
        L = H.depth
    mu = H.mu
    size = H.size
    q0 = leading_parametrix(H[0], mu, gamma, n)
    levels = [q0]
    for l in range(1, L + 1):
        bracket, q0c = _order_bounds(levels, H, mu, l)
        if not bracket:
            levels.append(MatPolynomial.zero(size))
            continue
        merged = _merge_candidates(bracket, DEFAULT_TOL, "max")
        cands = _merge_candidates(merged + q0c, DEFAULT_TOL, "sum")
        node = _LevelNode(q0, H, mu, l)
        levels.append(MeroMatrix.from_node(node, cands, size, DEFAULT_TOL, combine="max"))
    rem = [RemainderClass("Flat", l + 1, True) for l in range(L + 1)]
    return ParametrixHierarchy(mu, levels, gamma, n, theta, rem)


# ---------------------------------------------------------------------------
# operator-form recursion
# ---------------------------------------------------------------------------

def compositions(j):
    """Ordered tuples of positive integers summing to j."""
    out = []
    for k in range(1, j + 1):
        for cuts in combinations(range(1, j), k - 1):
            bounds = (0,) + cuts + (j,)
            out.append(tuple(bounds[i + 1] - bounds[i] for i in range(k)))
    return out


@dataclass(frozen=True)
class CompositionTerm:
    """(-1)^k P_0 r^{c_1} A_{c_1} P_0 ... r^{c_k} A_{c_k} P_0."""

    parts: tuple

    @property
    def sign(self):
        return (-1) ** len(self.parts)

    def __str__(self):
        body = " ".join(
            ("r" if c == 1 else f"r^{c}") + f" A{c} P0" for c in self.parts
        )
        return ("+" if self.sign > 0 else "-") + "P0 " + body


@dataclass
class RecursionResult:
    levels: list                 # symbol of the r^(mu+j) coefficient of bold P_j
    trees: list                  # CompositionTerm lists per level
    remainders: list
    shifts: list                 # (level, term, position, legal, eps, blocking) per commutation
    deviation: list              # max relative deviation from a reference hierarchy per level


def _pole_list(f):
    return [(p.location, p.order) for p in f.poles] if isinstance(f, MeroMatrix) else []


def operator_recursion(taylor_terms, P0, N, reference=None):
    """Bold P_j = -(sum_{m+i=j, m<j} P_m r^i A_i) P_0 as composition trees.

    Each tree is a sum over compositions of j.  Every r-power is commuted to
    the left through the meromorphic symbol accumulated so far, and the
    legality of that weight shift is recorded.  With ``reference`` (a
    ParametrixHierarchy) the extracted r^(mu+j) symbols are compared with the
    reference levels at sample points.
    """
    ref = reference if reference is not None else P0
    q0 = P0[0] if isinstance(P0, ParametrixHierarchy) else P0
    mu, gamma, n = ref.mu, ref.gamma, ref.n
    size = q0.size
    h = {t.index: t.symbol for t in taylor_terms}
    flags = {t.index: t.green_flag for t in taylor_terms}
    # r^c A_c P_0 = r^c h_c(D - mu) q_0(D)
    B = {}
    for c, hc in h.items():
        if c >= 1 and not _zero(hc):
            B[c] = mero_mul(translate(hc, -mu), q0)
    levels, trees, shifts = [q0], [[]], []
    rems = [RemainderClass.exact()]
    for j in range(1, N + 1):
        tree, nodes, cands = [], [], []
        rem = RemainderClass.exact()
        for parts in compositions(j):
            if any(c not in B for c in parts):
                continue
            term = CompositionTerm(parts)
            tree.append(term)
            # running symbol g (node plus candidate poles) of r^s g(D)
            node, gc = _node_of(q0), _pole_list(q0)
            for pos, c in enumerate(parts):
                legal, eps, blocking = shift_legality([z for z, _ in gc], gamma - mu, n, c)
                shifts.append((j, term, pos, legal, eps, blocking))
                if not legal:
                    rem = remainder_compose(rem, RemainderClass.green())
                if flags.get(c):
                    rem = remainder_compose(rem, RemainderClass("Flat", 0, True))
                node = ProductNode([ShiftNode(node, -c), _node_of(B[c])])
                gc = [(z + c, o) for z, o in gc] + _pole_list(B[c])
            nodes.append((term.sign, node))
            cands.extend(gc)
        if nodes:
            levels.append(MeroMatrix.from_node(SumNode(nodes), cands, size, DEFAULT_TOL, combine="sum"))
        else:
            levels.append(MatPolynomial.zero(size))
        trees.append(tree)
        rems.append(remainder_compose(RemainderClass.flat(j), rem))
    deviation = []
    if reference is not None:
        deviation = [level_deviation(levels[j], reference[j], size) for j in range(min(N, reference.depth) + 1)]
    return RecursionResult(levels, trees, rems, shifts, deviation)


def _sample_points(avoid, count, center, rng, radius=3.0, gap=0.05):
    pts = []
    avoid = np.asarray(avoid, complex)
    while len(pts) < count:
        z = center + rng.uniform(-radius, radius) + 1j * rng.uniform(-radius, radius)
        if avoid.size == 0 or np.abs(avoid - z).min() > gap:
            pts.append(z)
    return np.array(pts)


def _poles_of(f, shift=0.0):
    if isinstance(f, MeroMatrix):
        return [p.location - shift for p in f.poles]
    return []


def level_deviation(f, g, size, count=24, seed=0):
    """max |f - g| / max(1, |g|) at random points off the poles of both."""
    if _zero(f) and _zero(g):
        return 0.0
    rng = np.random.default_rng(seed)
    z = _sample_points(_poles_of(f) + _poles_of(g), count, 0.0, rng, radius=4.0, gap=0.1)
    fv = f(z) if not _zero(f) else np.zeros((count, size, size))
    gv = g(z) if not _zero(g) else np.zeros((count, size, size))
    scale = max(1.0, np.abs(gv).max())
    return float(np.abs(fv - gv).max() / scale)


@dataclass
class VerifyReport:
    left: list
    right: list
    flat_order: int
    remainder: RemainderClass
    samples: int

    @property
    def max_residual(self):
        return max(self.left + self.right)

    def to_dict(self):
        return {
            "left_residuals": self.left,
            "right_residuals": self.right,
            "flat_order": self.flat_order,
            "remainder": str(self.remainder),
            "samples": self.samples,
        }


def _value(f, z, size):
    if _zero(f):
        return np.zeros((len(z), size, size), complex)
    return f(z)


def _defect(pairs, z, size, delta):
    """Relative residual of sum F(z) G(z) - delta I."""
    total = np.zeros((len(z), size, size), complex)
    scale = 1.0
    for F, G in pairs:
        v = F @ G
        total += v
        scale = max(scale, np.abs(v).max())
    if delta:
        total -= np.eye(size)
    return float(np.abs(total).max() / scale)


def verify_parametrix(H, P, samples=100, seed=0):
    """Left and right defect residuals per level and the achieved flatness.

    The left identity is sum_{i+j=l} q_i(z + mu - j) h_j(z) = delta_l0 and the
    right one sum_{i+j=l} h_i(z - mu - j) q_j(z) = delta_l0.
    """
    mu, size = H.mu, H.size
    L = P.depth
    rng = np.random.default_rng(seed)
    center = weight_line(P.gamma, P.n)
    left, right = [], []
    for l in range(L + 1):
        avoid = []
        for i in range(l + 1):
            j = l - i
            avoid += _poles_of(P[i], mu - j) + _poles_of(_level(H, j, size))
            avoid += _poles_of(_level(H, i, size), -mu - j) + _poles_of(P[j])
        z = _sample_points(avoid, samples, center, rng)
        lp, rp = [], []
        for i in range(l + 1):
            j = l - i
            lp.append((_value(P[i], z + mu - j, size), _value(_level(H, j, size), z, size)))
            rp.append((_value(_level(H, i, size), z - mu - j, size), _value(P[j], z, size)))
        left.append(_defect(lp, z, size, l == 0))
        right.append(_defect(rp, z, size, l == 0))
    # identities through level L leave an r^(L+1) remainder: flat of order L
    achieved = 0
    for a, b in zip(left, right):
        if max(a, b) >= 1e-8:
            break
        achieved += 1
    if achieved == 0:
        return VerifyReport(left, right, 0, RemainderClass("SmoothingMellin"), samples)
    flat = achieved - 1
    remainder = RemainderClass("GreenFlat", flat, True)
    return VerifyReport(left, right, flat, remainder, samples)
