"""Serialization, problem specifications and the on-disk cache.

JSON is canonical: keys sorted, floats with 17 significant digits, complex
numbers as ``{"re": .., "im": ..}`` (plain numbers when real).  Meromorphic
levels are stored exactly as principal parts plus a polynomial part, so a
stored hierarchy evaluates without recomputation.
"""

from __future__ import annotations

import hashlib
import json
import math
import numbers
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import jsonschema

from .asymptypes import RemainderClass
from .cone import FuchsOperator, SmoothingMellinPart, SpectralModel
from .edge import EdgeDegenerateOperator, YPoly
from .mero import MatPolynomial, MeroMatrix, Node, PoleDatum
from .models import BUILTINS, InvalidParams, UnknownModel, build_model
from .parametrix import ParametrixHierarchy
from .solver import SingularExpansion

FORMAT_VERSION = 1


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------

def _float(x):
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if x == int(x) and abs(x) < 1e17 and "e" not in s:
        s = s + ".0" if "." not in s else s
    return s


def _encode(obj, indent, level):
    pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
    end = "" if indent is None else "\n" + " " * (indent * level)
    sep = "," if indent is None else ","
    colon = ":" if indent is None else ": "
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, numbers.Integral):
        return str(int(obj))
    if isinstance(obj, numbers.Real):
        return _float(float(obj))
    if isinstance(obj, numbers.Complex):
        return _encode(num(obj), indent, level)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + colon + _encode(obj[k], indent, level + 1) for k in sorted(obj, key=str)]
        return "{" + pad + (sep + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + (sep + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=None):
    """Canonical JSON text."""
    return _encode(obj, indent, 0)


def loads(text):
    return json.loads(text)


def num(x):
    x = complex(x)
    return x.real if x.imag == 0 else {"re": x.real, "im": x.imag}


def parse_num(x):
    if isinstance(x, dict):
        return complex(x.get("re", 0.0), x.get("im", 0.0))
    return complex(x)


def matrix_to_json(a):
    a = np.asarray(a, complex)
    if a.ndim == 0:
        return num(a)
    return [matrix_to_json(x) for x in a]


def matrix_from_json(x):
    if isinstance(x, list):
        return np.array([matrix_from_json(v) for v in x], complex)
    return np.array(parse_num(x), complex)


# ---------------------------------------------------------------------------
# meromorphic levels
# ---------------------------------------------------------------------------

class PartialFractionNode(Node):
    """``sum_poles sum_k c_k (z - p)^-(k+1) + polynomial(z)``."""

    kind = "partial_fractions"

    def __init__(self, poles, poly):
        self.poles = poles
        self.poly = poly

    def __call__(self, z):
        z = np.asarray(z, complex)
        out = self.poly(z)
        for p in self.poles:
            w = z - p.location
            for k, c in enumerate(p.principal):
                out = out + c * (w ** (-(k + 1)))[..., None, None]
        return out


def polynomial_part(f, max_degree=64):
    """Entire part of a rational MeroMatrix (a matrix polynomial)."""
    locs = f.pole_locations
    center = complex(locs.mean()) if len(locs) else 0.0
    radius = 2.0 + 2.0 * (np.abs(locs - center).max() if len(locs) else 0.0)
    npts = 2 * max_degree + 2
    w = radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = f.holomorphic_part(center + w)
    coef = np.fft.fft(vals, axis=0) / npts / (radius ** np.arange(npts))[:, None, None]
    mags = np.abs(coef).max(axis=(1, 2)) * radius ** np.arange(npts)
    ref = max(np.abs(vals).max(), max((np.abs(p.principal).max() for p in f.poles), default=0.0), 1e-300)
    keep = np.flatnonzero(mags[: max_degree + 1] > 1e-10 * ref)
    if not len(keep):
        return MatPolynomial.zero(f.size)
    deg = int(keep[-1])
    return MatPolynomial(coef[: deg + 1]).translate(-center)


def mero_to_json(f):
    if isinstance(f, MatPolynomial):
        return {"kind": "polynomial", "coeffs": matrix_to_json(f.coeffs)}
    if not isinstance(f, MeroMatrix):
        raise TypeError(f"cannot serialize {type(f).__name__}")
    node = f.node
    poly = node.poly if isinstance(node, PartialFractionNode) else polynomial_part(f)
    return {
        "kind": "partial_fractions",
        "size": f.size,
        "poles": [
            {"re": p.location.real, "im": p.location.imag, "principal": matrix_to_json(p.principal)}
            for p in f.poles
        ],
        "polynomial": matrix_to_json(poly.coeffs),
    }


def mero_from_json(d):
    if d["kind"] == "polynomial":
        return MatPolynomial(matrix_from_json(d["coeffs"]))
    poles = tuple(PoleDatum(complex(p["re"], p["im"]), matrix_from_json(p["principal"])) for p in d["poles"])
    poly = MatPolynomial(matrix_from_json(d["polynomial"]))
    return MeroMatrix(PartialFractionNode(poles, poly), poles, d["size"])


def _inf_to_none(x):
    return None if x is None or not math.isfinite(x) else x


def hierarchy_to_json(P):
    return {
        "format": FORMAT_VERSION,
        "mu": P.mu,
        "gamma": P.gamma,
        "n": P.n,
        "theta": _inf_to_none(P.theta),
        "levels": [mero_to_json(q) for q in P.levels],
        "remainders": [remainder_to_json(c) for c in P.remainders],
    }


def hierarchy_from_json(d):
    theta = d.get("theta")
    return ParametrixHierarchy(
        d["mu"],
        [mero_from_json(x) for x in d["levels"]],
        d["gamma"],
        d["n"],
        -math.inf if theta is None else theta,
        [remainder_from_json(c) for c in d.get("remainders", [])],
    )


def remainder_to_json(c):
    return {"label": c.label, "order": c.order, "green_flag": c.green_flag}


def remainder_from_json(d):
    return RemainderClass(d["label"], d.get("order", 0), d.get("green_flag", False))


def expansion_to_json(u):
    return u.to_dict()


def expansion_from_json(d, size=None):
    return SingularExpansion.from_dict(d, size)


# ---------------------------------------------------------------------------
# schemas
# ---------------------------------------------------------------------------

def load_schema(name):
    ref = resources.files("conecalc").joinpath("schemas", f"{name}.schema.json")
    return json.loads(ref.read_text())


def validate(obj, name):
    try:
        jsonschema.validate(obj, load_schema(name))
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise SchemaError(f"{name}: {where}: {e.message}") from e


# ---------------------------------------------------------------------------
# problem specifications
# ---------------------------------------------------------------------------

def _model_from_json(d):
    name = d.get("name", "point")
    K = d.get("K")
    if name == "point":
        return SpectralModel.point()
    if name == "s1":
        return SpectralModel.circle(int(K))
    if name == "s2":
        return SpectralModel.sphere(int(K))
    if K is None:
        raise SchemaError(f"model {name!r} needs the basis size K")
    return SpectralModel(name, int(d.get("n", 0)), int(K))


@dataclass
class ProblemSpec:
    raw: dict
    operator: object
    gamma: float
    theta: float = -math.inf
    rhs: SingularExpansion | None = None
    depth: int = 4
    mellin: SmoothingMellinPart | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def is_edge(self):
        return isinstance(self.operator, EdgeDegenerateOperator)

    @property
    def model(self):
        return self.operator.model

    def key_material(self):
        return self.raw


def _edge_from_json(d, model, mu):
    q = int(d["q"])
    coeffs = {}
    for t in d["coefficients"]:
        key = (int(t["j"]), tuple(t.get("alpha", [0] * q)), int(t.get("i", 0)))
        beta = tuple(t.get("beta", [0] * q))
        if len(beta) != q:
            raise SchemaError("beta must have q entries")
        if "y_degree" in d and sum(beta) > d["y_degree"]:
            raise SchemaError(f"y monomial {beta} exceeds y_degree {d['y_degree']}")
        poly = coeffs.setdefault(key, {})
        m = matrix_from_json(t["matrix"])
        poly[beta] = poly.get(beta, 0) + np.atleast_2d(m)
    return EdgeDegenerateOperator(mu, q, model, {k: YPoly(q, v) for k, v in coeffs.items()})


def problem_from_json(d):
    """Validate and build a ProblemSpec from parsed JSON."""
    validate(d, "problem_spec")
    op_d = d["operator"]
    edge_d = d.get("edge")
    try:
        if "builtin" in op_d:
            _, op = build_model(op_d["builtin"], op_d.get("params", {}))
            if edge_d is not None and not isinstance(op, EdgeDegenerateOperator):
                raise SchemaError(f"builtin {op_d['builtin']!r} is not an edge operator")
        else:
            model = _model_from_json(d.get("model", {}))
            mu = int(op_d["mu"])
            if edge_d is not None:
                op = _edge_from_json(edge_d, model, mu)
            else:
                if "taylor" not in op_d:
                    raise SchemaError("operator needs 'taylor' or 'builtin'")
                taylor = matrix_from_json(op_d["taylor"])
                if taylor.ndim == 2:
                    taylor = taylor[:, :, None, None]
                op = FuchsOperator(mu, model, taylor)
    except (UnknownModel, InvalidParams) as e:
        raise SchemaError(str(e)) from e
    except ValueError as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"operator: {e}") from e
    w = d["weight"]
    gamma = float(w["gamma"])
    theta = w.get("theta")
    theta = -math.inf if theta is None else float(theta)
    mellin = None
    if "mellin_part" in op_d:
        mp = op_d["mellin_part"]
        try:
            mellin = SmoothingMellinPart(
                tuple((int(t["j"]), float(t["gamma_j"]), mero_from_json(t["symbol"])) for t in mp["terms"]),
                float(mp.get("gamma", gamma)),
                op.model.n,
            )
        except ValueError as e:
            raise SchemaError(f"mellin_part: {e}") from e
    rhs = None
    if d.get("rhs") is not None:
        try:
            rhs = SingularExpansion.from_dict(d["rhs"], op.size)
        except ValueError as e:
            raise SchemaError(f"rhs: {e}") from e
    return ProblemSpec(d, op, gamma, theta, rhs, int(d.get("depth", 4)), mellin, dict(d.get("tolerances", {})))


def load_problem(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e
    return problem_from_json(d)


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------

def cache_key(material, kind, depth, version=None):
    from . import __version__

    blob = dumps({"spec": material, "kind": kind, "depth": depth,
                  "version": __version__ if version is None else version, "format": FORMAT_VERSION})
    return hashlib.sha256(blob.encode()).hexdigest()


class Cache:
    """Content-addressed JSON store ``<dir>/<hex>.json`` with atomic writes."""

    def __init__(self, directory):
        self.dir = os.fspath(directory)
        self.hits = 0
        self.misses = 0

    @classmethod
    def from_env(cls, directory=None):
        d = directory or os.environ.get("CONECALC_CACHE")
        return cls(d) if d else None

    def path(self, key):
        return os.path.join(self.dir, f"{key}.json")

    def get(self, key):
        path = self.path(key)
        if not os.path.exists(path):
            self.misses += 1
            return None
        try:
            with open(path) as fh:
                text = fh.read()
            obj = json.loads(text)
            if not isinstance(obj, dict) or obj.get("key") != key or "payload" not in obj:
                raise ValueError("entry does not match its key")
        except (OSError, ValueError) as e:
            warnings.warn(f"corrupt cache entry {path} ({e}); recomputing", RuntimeWarning, stacklevel=2)
            self.misses += 1
            return None
        self.hits += 1
        return obj["payload"]

    def put(self, key, payload):
        os.makedirs(self.dir, exist_ok=True)
        text = dumps({"key": key, "payload": payload})
        fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, self.path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def fetch(self, key, compute):
        """Return (payload, hit); compute() must return a JSON-able payload."""
        got = self.get(key)
        if got is not None:
            return got, True
        payload = compute()
        # store and reload so that hits and misses yield the same objects
        self.put(key, payload)
        return json.loads(dumps(payload)), False


__all__ = [
    "BUILTINS",
    "Cache",
    "ProblemSpec",
    "SchemaError",
    "cache_key",
    "dumps",
    "hierarchy_from_json",
    "hierarchy_to_json",
    "load_problem",
    "mero_from_json",
    "mero_to_json",
    "problem_from_json",
    "validate",
]
