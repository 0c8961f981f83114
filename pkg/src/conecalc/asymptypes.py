"""Weight data, asymptotic types and the remainder-class algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MERGE_TOL = 1e-8


class WeightMismatch(ValueError):
    pass


@dataclass(frozen=True)
class WeightData:
    """(gamma, gamma_out, Theta) with Theta = (theta, 0]."""

    gamma: float
    gamma_out: float
    theta: float = -math.inf

    def __post_init__(self):
        if not self.theta < 0:
            raise ValueError("theta must be negative")

    @classmethod
    def for_order(cls, gamma, mu, theta=-math.inf):
        return cls(gamma, gamma - mu, theta)

    def inverse(self):
        return WeightData(self.gamma_out, self.gamma, self.theta)

    def output_strip(self, n):
        """Strip of exponents p allowed in asymptotics of the output."""
        hi = (n + 1) / 2 - self.gamma_out
        return hi + self.theta, hi

    def input_strip(self, n):
        hi = (n + 1) / 2 - self.gamma
        return hi + self.theta, hi


def compose_weight_data(g, h):
    """Weight data of AB from g (for A) and h (for B)."""
    if not math.isclose(h.gamma_out, g.gamma, abs_tol=1e-12):
        raise WeightMismatch(f"output weight {h.gamma_out} of the right factor does not match {g.gamma}")
    if g.theta != h.theta:
        raise WeightMismatch("weight intervals differ")
    return WeightData(h.gamma, g.gamma_out, g.theta)


def _sort_key(pm):
    p = pm[0]
    return (-round(p.real, 9), round(p.imag, 9))


def _merge_points(points, tol=MERGE_TOL):
    out = []
    for p, m in points:
        p = complex(p)
        for i, (q, mq) in enumerate(out):
            if abs(p - q) <= tol:
                out[i] = (q, max(m, mq))
                break
        else:
            out.append((p, int(m)))
    return sorted(out, key=_sort_key)


@dataclass(frozen=True)
class AsymptoticType:
    """Exponents p with log multiplicity m for terms r^-p log^k r, k <= m.

    ``spaces`` optionally carries coefficient spaces (lists of vectors) per
    point; only their count is checked.
    """

    points: tuple
    gamma: float
    n: int
    theta: float = -math.inf
    spaces: tuple | None = None
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        pts = _merge_points(self.points)
        object.__setattr__(self, "points", tuple(pts))
        lo, hi = self.strip
        for p, m in pts:
            if m < 0:
                raise ValueError("multiplicities are nonnegative")
            if not p.real < hi + MERGE_TOL:
                raise ValueError(f"point {p} violates Re p < {hi}")
            if math.isfinite(self.theta) and not p.real > lo - MERGE_TOL:
                raise ValueError(f"point {p} violates Re p > {lo}")
        if self.spaces is not None and len(self.spaces) != len(pts):
            raise ValueError("one coefficient space per point")

    @property
    def strip(self):
        hi = (self.n + 1) / 2 - self.gamma
        return hi + self.theta, hi

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def contains(self, p, m=0, tol=MERGE_TOL):
        return any(abs(p - q) <= tol and m <= mq for q, mq in self.points)

    def union(self, other):
        if (self.gamma, self.n, self.theta) != (other.gamma, other.n, other.theta):
            raise WeightMismatch("asymptotic types live on different strips")
        return AsymptoticType(self.points + other.points, self.gamma, self.n, self.theta,
                              notes=self.notes + other.notes)

    def to_dict(self):
        return {
            "points": [{"p_re": p.real, "p_im": p.imag, "m": m} for p, m in self.points],
            "gamma": self.gamma,
            "theta": None if math.isinf(self.theta) else self.theta,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d):
        theta = d.get("theta")
        pts = [(complex(q["p_re"], q.get("p_im", 0.0)), q["m"]) for q in d["points"]]
        return cls(tuple(pts), d["gamma"], d["n"], -math.inf if theta is None else theta)


def shadow_closure(P):
    """Add p - j for every j >= 1 that stays inside the strip."""
    if not math.isfinite(P.theta):
        raise ValueError("shadow closure over an infinite weight interval is infinite")
    lo, _ = P.strip
    pts = list(P.points)
    for p, m in P.points:
        j = 1
        while (p - j).real > lo + MERGE_TOL:
            pts.append((p - j, m))
            j += 1
    return AsymptoticType(tuple(pts), P.gamma, P.n, P.theta, notes=P.notes)


def type_from_poles(q, g, n, tol=1e-8):
    """Asymptotic type read off the poles of q inside the output strip of g."""
    if not math.isfinite(g.theta):
        raise ValueError("type_from_poles needs a finite weight interval")
    lo, hi = g.output_strip(n)
    pts, notes = [], []
    for pole in getattr(q, "poles", []):
        p = pole.location
        if abs(p.real - hi) <= tol or abs(p.real - lo) <= tol:
            notes.append(f"pole {p} lies on the strip boundary")
            continue
        if lo < p.real < hi:
            pts.append((p, pole.order - 1))
    return AsymptoticType(tuple(pts), g.gamma_out, n, g.theta, notes=tuple(notes))


# ---------------------------------------------------------------------------
# remainder classes
# ---------------------------------------------------------------------------

EXACT, FLAT, MELLIN, GREEN, GREEN_FLAT = "Exact", "Flat", "SmoothingMellin", "Green", "GreenFlat"
LABELS = (EXACT, FLAT, MELLIN, GREEN, GREEN_FLAT)
_RANK = {FLAT: 0, MELLIN: 1}


@dataclass(frozen=True)
class RemainderClass:
    """Composable label for the ideal a remainder belongs to.

    ``order`` is the flatness order (r^order factor).  ``green_flag`` records
    that a Green operator may have been generated as a side effect, e.g. by
    commuting r-powers through smoothing Mellin operators.
    """

    label: str
    order: int = 0
    green_flag: bool = False
    payload: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown remainder label {self.label!r}")
        if self.order < 0:
            raise ValueError("flat order must be nonnegative")
        if self.label in (EXACT, GREEN) and self.order:
            raise ValueError(f"{self.label} carries no order")

    @classmethod
    def exact(cls):
        return cls(EXACT)

    @classmethod
    def flat(cls, N):
        return cls(FLAT, N)

    @classmethod
    def green(cls, payload=None):
        return cls(GREEN, payload=payload)

    def __str__(self):
        s = self.label if self.label in (EXACT, GREEN) else f"{self.label}({self.order})"
        return s + (" + green_flag" if self.green_flag else "")


def remainder_compose(c1, c2):
    """Class of AB for A in c1 and B in c2."""
    if c1.label == EXACT:
        return c2
    if c2.label == EXACT:
        return c1
    if GREEN in (c1.label, c2.label):
        payload = c1.payload if c1.label == GREEN else c2.payload
        return RemainderClass(GREEN, payload=payload)
    order = c1.order + c2.order
    # r-powers of the right factor get commuted to the left through A
    flag = c1.green_flag or c2.green_flag or c2.order > 0
    if GREEN_FLAT in (c1.label, c2.label):
        return RemainderClass(GREEN_FLAT, order, flag)
    label = max(c1.label, c2.label, key=_RANK.get)
    return RemainderClass(label, order, flag)
