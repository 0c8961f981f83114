"""Seeded random problem generators and the verification suites built on them."""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .asymptypes import LABELS, RemainderClass, remainder_compose
from .cone import (
    FuchsOperator,
    SpectralModel,
    conormal_hierarchy,
    direct_compose,
    translation_product,
    weight_line,
)
from .frobenius import frobenius_oracle, oracle_equivalence
from .mero import MatPolynomial, polyeig
from .parametrix import (
    operator_recursion,
    parametrix_hierarchy,
    taylor_decompose,
    verify_parametrix,
)
from .solver import SingularExpansion, solve_asymptotics


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metric: float
    threshold: float
    cases: int
    seconds: float = 0.0
    details: list = field(default_factory=list)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: {self.metric:.3g} (limit {self.threshold:g}, {self.cases} cases, {self.seconds:.2f}s)"

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "metric": self.metric,
            "threshold": self.threshold,
            "cases": self.cases,
        }


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _custom(K, n=1):
    return SpectralModel("custom", n, K)


def random_fuchs(rng, K_max=4, mu_max=3, r_max=3, monic=False):
    K = int(rng.integers(1, K_max + 1))
    mu = int(rng.integers(0, mu_max + 1))
    I = int(rng.integers(0, r_max + 1))
    a = rng.normal(size=(mu + 1, I + 1, K, K)) + 1j * rng.normal(size=(mu + 1, I + 1, K, K))
    if monic:
        a[mu, 0] = np.eye(K)
    return FuchsOperator(mu, _custom(K), a)


def random_fuchs_pair(rng, **kw):
    A = random_fuchs(rng, **kw)
    B = random_fuchs(rng, **kw)
    B = FuchsOperator(B.mu, A.model, _resize(B.taylor, A.size, rng))
    return A, B


def _resize(t, K, rng):
    if t.shape[2] == K:
        return t
    shape = t.shape[:2] + (K, K)
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _free_gamma(zeros, n, margin=0.05):
    """A weight gamma whose line keeps at least ``margin`` from the zeros."""
    for g in np.linspace(-2, 2, 161):
        if min((abs(z.real - weight_line(g, n)) for z in zeros), default=1.0) > margin:
            return float(g)
    raise RuntimeError("no free weight line found")


def random_elliptic_hierarchy(rng, L=6, K_max=4, mu_max=3):
    K = int(rng.integers(1, K_max + 1))
    mu = int(rng.integers(1, mu_max + 1))
    a = rng.normal(size=(mu + 1, L + 1, K, K)) + 1j * rng.normal(size=(mu + 1, L + 1, K, K))
    a[mu, 0] = np.eye(K)
    A = FuchsOperator(mu, _custom(K), a)
    H = conormal_hierarchy(A, L=L)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = [z for z, _ in polyeig(H[0], allow_infinite=True)]
    return A, H, _free_gamma(zeros, 1)


def random_regular_singular(rng, mu_max=4, r_max=3):
    """Scalar Fuchs ODE with resonant roots and a right-hand side.

    Indicial roots include repeated roots and roots differing by integers;
    some right-hand side exponents sit on shifted roots (resonance).
    """
    mu = int(rng.integers(1, mu_max + 1))
    I = int(rng.integers(1, r_max + 1))
    roots = []
    while len(roots) < mu:
        kind = rng.integers(0, 3)
        if kind == 0 or not roots:
            roots.append(round(rng.uniform(-2, 1), 3))
        elif kind == 1:
            roots.append(roots[-1] - int(rng.integers(1, 3)))
        else:
            roots.append(roots[-1])
    h0 = np.poly(roots)[::-1].real
    a = rng.normal(size=(mu + 1, I + 1))
    a[:, 0] = h0
    A = FuchsOperator(mu, SpectralModel.point(), a)
    gamma = 0.5 - (max(roots) + 0.5)
    fs = []
    for _ in range(int(rng.integers(1, 3))):
        if rng.random() < 0.5:
            p = rng.choice(roots) + mu - int(rng.integers(0, 2))
        else:
            p = rng.uniform(-1, 0.4) + max(roots) + mu
        fs.append((p, int(rng.integers(0, 2)), rng.normal()))
    return A, SingularExpansion.scalar(fs), gamma


def random_elliptic_problem(rng, K_max=2, mu_max=3, r_max=3):
    """Monic Fuchs system with a right-hand side inside the output strip."""
    K = int(rng.integers(1, K_max + 1))
    mu = int(rng.integers(1, mu_max + 1))
    I = int(rng.integers(1, r_max + 1))
    a = rng.normal(size=(mu + 1, I + 1, K, K))
    a[mu, 0] = np.eye(K)
    A = FuchsOperator(mu, _custom(K, 0), a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        zeros = [z for z, _ in polyeig(A.level(0), allow_infinite=True)]
    gamma = _free_gamma(zeros, 0, margin=0.1)
    top = weight_line(gamma, 0) + mu     # f lives below the output line
    fs = []
    for _ in range(int(rng.integers(1, 3))):
        p = top - rng.uniform(0.1, 1.5)
        fs.append((p, int(rng.integers(0, 2)), rng.normal(size=K)))
    return A, SingularExpansion(fs, K), gamma


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _hier_rel_error(H1, H2, size, count=16, seed=0):
    worst = 0.0
    rng = np.random.default_rng(seed)
    z = rng.uniform(-3, 3, count) + 1j * rng.uniform(-3, 3, count)
    for a, b in zip(H1.levels, H2.levels):
        va = a(z) if not (isinstance(a, MatPolynomial) and a.is_zero()) else np.zeros((count, size, size))
        vb = b(z) if not (isinstance(b, MatPolynomial) and b.is_zero()) else np.zeros((count, size, size))
        scale = max(np.abs(vb).max(), 1e-300)
        if np.abs(va).max() == 0 and np.abs(vb).max() == 0:
            continue
        worst = max(worst, float(np.abs(va - vb).max() / scale))
    return worst


def translation_product_suite(seed=0, cases=50, threshold=1e-12):
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for _ in range(cases):
            A, B = random_fuchs_pair(rng)
            L = A.r_order + B.r_order
            HA, HB = conormal_hierarchy(A, L=L), conormal_hierarchy(B, L=L)
            HT = translation_product(HA, HB, L)
            HD = conormal_hierarchy(direct_compose(A, B), L=L)
            worst = max(worst, _hier_rel_error(HT, HD, A.size))
        return worst

    worst, dt = _timed(run)
    return SuiteResult("translation product vs direct composition", worst < threshold, worst, threshold, cases, dt)


def defect_suite(seed=0, cases=20, L=6, threshold=1e-10, samples=100):
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for _ in range(cases):
            _, H, g = random_elliptic_hierarchy(rng, L)
            P = parametrix_hierarchy(H, g, 1, L)
            worst = max(worst, verify_parametrix(H, P, samples=samples, seed=int(rng.integers(1 << 30))).max_residual)
        return worst

    worst, dt = _timed(run)
    return SuiteResult("parametrix defect identities", worst < threshold, worst, threshold, cases, dt)


def worked_recursion_instance(c=1.0, N=3):
    """h0 = z^2 - 1/4, h1 = c (scalar, mu = 2)."""
    a = np.zeros((3, 2), complex)
    a[2, 0], a[0, 0], a[0, 1] = 1.0, -0.25, c
    return FuchsOperator(2, SpectralModel.point(), a)


def recursion_deviation(A, gamma, N):
    H = conormal_hierarchy(A, L=N)
    P = parametrix_hierarchy(H, gamma, A.model.n, N)
    R = operator_recursion(taylor_decompose(A, N=N), P, N, reference=P)
    return max(R.deviation), R


def recursion_suite(seed=0, cases=10, N=3, threshold=1e-12):
    rng = np.random.default_rng(seed)

    def run():
        worst, _ = recursion_deviation(worked_recursion_instance(), 0.25, N)
        trees_ok = True
        for _ in range(cases):
            A, H, g = random_elliptic_hierarchy(rng, N, K_max=3, mu_max=2)
            d, R = recursion_deviation(A, g, N)
            worst = max(worst, d)
            # all of A_1..A_3 are present, so every composition contributes
            trees_ok &= len(R.trees[2]) == 2 and len(R.trees[3]) == 4
        return worst, trees_ok

    (worst, trees_ok), dt = _timed(run)
    res = SuiteResult("operator recursion vs pointwise recursion", worst < threshold and trees_ok, worst,
                      threshold, cases + 1, dt)
    if not trees_ok:
        res.details.append("P2/P3 composition trees do not have 2 and 4 terms")
    return res


def frobenius_suite(seed=0, cases=10, N=6, threshold=1e-6):
    rng = np.random.default_rng(seed)

    def run():
        worst, structure = 0.0, True
        for _ in range(cases):
            A, f, g = random_regular_singular(rng)
            S = solve_asymptotics(A, f, g, N)
            O = frobenius_oracle(A, f, g, N)
            rep = oracle_equivalence(S, O, N)
            structure &= rep.structure_match and rep.oracle_residual < 1e-9 and rep.null_gap < 1e-6
            worst = max(worst, rep.coefficient_error)
        return worst, structure

    (worst, structure), dt = _timed(run)
    res = SuiteResult("Frobenius oracle equivalence", structure and worst < threshold, worst, threshold, cases, dt)
    if not structure:
        res.details.append("exponent/log structure mismatch")
    return res


def remainder_table():
    """All classes with orders 0..2 and both flag values, as far as valid."""
    out = []
    for label in LABELS:
        for order in (0, 1, 2):
            for flag in (False, True):
                try:
                    out.append(RemainderClass(label, order, flag))
                except ValueError:
                    pass
    return out


def remainder_rule(c1, c2):
    """Reference composition rule, written independently of remainder_compose."""
    if c1.label == "Exact":
        return c2
    if c2.label == "Exact":
        return c1
    if "Green" in (c1.label, c2.label):
        return RemainderClass("Green")
    order = c1.order + c2.order
    flag = c1.green_flag or c2.green_flag or c2.order > 0
    if "GreenFlat" in (c1.label, c2.label):
        return RemainderClass("GreenFlat", order, flag)
    if "SmoothingMellin" in (c1.label, c2.label):
        return RemainderClass("SmoothingMellin", order, flag)
    return RemainderClass("Flat", order, flag)


def remainder_suite():
    def run():
        table = remainder_table()
        bad = 0
        for c1, c2 in itertools.product(table, repeat=2):
            if remainder_compose(c1, c2) != remainder_rule(c1, c2):
                bad += 1
        for c1, c2, c3 in itertools.product(table, repeat=3):
            left = remainder_compose(remainder_compose(c1, c2), c3)
            right = remainder_compose(c1, remainder_compose(c2, c3))
            if left != right:
                bad += 1
        return bad, len(table)

    (bad, n), dt = _timed(run)
    return SuiteResult("remainder-class algebra", bad == 0, float(bad), 0.5, n**2 + n**3, dt)


def flat_residual_suite(seed=0, cases=10, N=5):
    rng = np.random.default_rng(seed)

    def run():
        worst = math.inf
        for _ in range(cases):
            A, f, g = random_elliptic_problem(rng)
            S = solve_asymptotics(A, f, g, N)
            worst = min(worst, S.flat_gap)
        return worst

    gap, dt = _timed(run)
    res = SuiteResult("flat-residual law", gap >= N - 1 - 1e-9, gap, N - 1, cases, dt)
    return res


SUITES = {
    "translation": translation_product_suite,
    "defect": defect_suite,
    "recursion": recursion_suite,
    "frobenius": frobenius_suite,
    "remainder": lambda seed=0: remainder_suite(),
    "flat": flat_residual_suite,
}


def run_suites(seed=0, names=None, quick=False):
    out = []
    for name in names or SUITES:
        fn = SUITES[name]
        if quick and name == "translation":
            out.append(fn(seed=seed, cases=10))
        elif quick and name == "defect":
            out.append(fn(seed=seed, cases=5, samples=30))
        else:
            out.append(fn(seed=seed))
    return out
