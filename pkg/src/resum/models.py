"""Coefficient models: singularity locations paired with Laplace kernels.

A model stands for the coefficients

    f_k = sum_j a_j**-k * integral_0^inf exp(-k p) F_j(p) dp,   k >= 1,

and its ``kind`` says how they are turned back into a function: as a Taylor
series with finite radius, as the entire series sum f_k z^k / k!, or as the
divergent series sum f_k k! z^(k+1) to be Borel summed.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .kernels import Kernel, expression_kernel, kernel_from_name
from .quadrature import Decay, QuadratureResult

BOUNDED_SAMPLES = np.array([1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0])
BOUNDED_LIMIT = 1e6


class ModelKind(enum.Enum):
    FINITE_RADIUS = "FiniteRadius"
    ENTIRE = "Entire"
    BOREL = "Borel"


class ModelError(ValueError):
    """Malformed or inconsistent model file."""


@dataclass(frozen=True)
class SingularTerm:
    """One singularity: location ``a`` and kernel ``F`` (Laplace convention).

    ``kernel_spec`` is what the model file said about the kernel, either a
    built-in name or ``{"expr": ..., "cut": ...}``; it is kept for saving.
    """

    a: complex
    kernel: Kernel
    decay: Decay = field(default_factory=Decay)
    kernel_spec: object = None

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        if self.a == 0:
            raise ModelError("singularity location a must be nonzero")

    @property
    def F(self):
        return self.kernel.branched


def _check_bounded(kernel: Kernel):
    """Sampled check that exp(-p) F(p) is bounded and decays on [1, inf).

    Plain boundedness of F is too strict: the f2 kernel carries a pole term
    exp(0.71 p), yet every coefficient integral with k >= 1 converges."""
    vals = np.asarray(kernel(BOUNDED_SAMPLES), dtype=complex) * np.exp(-BOUNDED_SAMPLES)
    mags = np.abs(vals)
    if not np.all(np.isfinite(vals)) or mags.max() > BOUNDED_LIMIT or mags[-1] > mags[:4].max():
        raise ModelError(f"kernel {kernel.name!r} grows too fast on [1, inf) for k >= 1 coefficients")


@dataclass(frozen=True)
class CoefficientModel:
    kind: ModelKind
    terms: tuple
    f0: complex = 0j
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "f0", complex(self.f0))
        if not self.terms:
            raise ModelError("a model needs at least one singular term")
        locs = [t.a for t in self.terms]
        for i, a in enumerate(locs):
            if any(abs(a - b) <= 1e-14 * abs(a) for b in locs[i + 1:]):
                raise ModelError(f"duplicate singularity location {a}")
        if self.kind is not ModelKind.FINITE_RADIUS and self.f0 != 0:
            raise ModelError("f0 is only meaningful for FiniteRadius models")

    @property
    def radius(self) -> float:
        return min(abs(t.a) for t in self.terms)


# ---------------------------------------------------------------------------
# file format

def _complex_from(value, what: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ModelError(f"{what} must be a number or a [re, im] pair")


def _kernel_from_spec(spec) -> Kernel:
    if isinstance(spec, str):
        try:
            return kernel_from_name(spec)
        except ValueError as exc:
            raise ModelError(str(exc)) from None
    if isinstance(spec, dict) and "expr" in spec:
        cut = spec.get("cut", "principal")
        if cut != "principal":
            raise ModelError(f"expression kernels use the principal cut, got {cut!r}")
        try:
            return expression_kernel(spec["expr"])
        except ValueError as exc:
            raise ModelError(f"bad kernel expression: {exc}") from None
    raise ModelError("kernel must be a built-in name or an {expr, cut} object")


def model_from_dict(d: dict, name: str = "") -> CoefficientModel:
    if not isinstance(d, dict):
        raise ModelError("model document must be an object")
    unknown = set(d) - {"kind", "f0", "terms", "name"}
    if unknown:
        raise ModelError(f"unknown field(s) {sorted(unknown)}")
    try:
        kind = ModelKind(d.get("kind"))
    except ValueError:
        raise ModelError(f"kind must be one of {[k.value for k in ModelKind]}") from None
    f0 = _complex_from(d.get("f0", 0), "f0")
    raw = d.get("terms")
    if not isinstance(raw, list) or not raw:
        raise ModelError("terms must be a nonempty list")
    terms = []
    for i, t in enumerate(raw):
        if not isinstance(t, dict) or "a" not in t or "kernel" not in t:
            raise ModelError(f"term {i} needs fields a and kernel")
        a = _complex_from(t["a"], f"terms[{i}].a")
        if a == 0:
            raise ModelError(f"terms[{i}].a must be nonzero")
        kernel = _kernel_from_spec(t["kernel"])
        _check_bounded(kernel)
        try:
            decay = Decay.from_dict(t.get("decay", {}))
        except (ValueError, TypeError) as exc:
            raise ModelError(f"terms[{i}].decay: {exc}") from None
        terms.append(SingularTerm(a, kernel, decay, t["kernel"]))
    return CoefficientModel(kind, terms, f0, d.get("name", name))


def model_to_dict(model: CoefficientModel) -> dict:
    d = {"kind": model.kind.value}
    if model.name:
        d["name"] = model.name
    if model.kind is ModelKind.FINITE_RADIUS:
        d["f0"] = [model.f0.real, model.f0.imag]
    d["terms"] = [
        {
            "a": [t.a.real, t.a.imag],
            "kernel": t.kernel_spec if t.kernel_spec is not None else t.kernel.name,
            "decay": t.decay.to_dict(),
        }
        for t in model.terms
    ]
    return d


def load_model(path) -> CoefficientModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc, name=path.name.removesuffix(".resum.json"))


def save_model(model: CoefficientModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n")


def bundled_model_path(name: str) -> Path:
    """Path of a bundled example model: f1, f2, f3-stirling or borel-sqrt."""
    p = resources.files("resum") / "data" / f"{name}.resum.json"
    if not p.is_file():
        raise FileNotFoundError(f"no bundled model {name!r}")
    return Path(str(p))


def resolve_model(name_or_path) -> CoefficientModel:
    """Load a model file, falling back to the bundled examples by name."""
    p = Path(name_or_path)
    if p.is_file():
        return load_model(p)
    stem = p.name.removesuffix(".resum.json")
    try:
        return load_model(bundled_model_path(stem))
    except FileNotFoundError:
        raise FileNotFoundError(f"model file {name_or_path!r} not found") from None


BUNDLED = ("f1", "f2", "f3-stirling", "borel-sqrt")


# ---------------------------------------------------------------------------
# operations

def coefficient_result(model: CoefficientModel, k: int) -> QuadratureResult:
    if int(k) != k or k < 1:
        raise ValueError("coefficient index k must be an integer >= 1")
    k = int(k)
    parts = [t.kernel.laplace(k).scaled(t.a ** (-k)) for t in model.terms]
    total = parts[0]
    for r in parts[1:]:
        total = total + r
    return total


def coefficient(model: CoefficientModel, k: int) -> complex:
    """f_k of the model, k >= 1."""
    return coefficient_result(model, k).value


def rescale(model: CoefficientModel, A: complex) -> CoefficientModel:
    """Model with coefficients A**k f_k, obtained by a_j -> a_j / A."""
    A = complex(A)
    if A == 0:
        raise ValueError("rescale factor must be nonzero")
    terms = [replace(t, a=t.a / A) for t in model.terms]
    return replace(model, terms=tuple(terms))
