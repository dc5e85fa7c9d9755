"""Contour quadrature: loops around the positive axis, Laplace-type half-line
integrals, the origin-anchored contours used for growing coefficients, and
Cauchy coefficients on circles.

All integrands are vectorized over numpy arrays of nodes.  Sums are taken with
``numpy.sum`` over fixed, panel-ordered arrays so results are reproducible
bit for bit for a given configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .complexfn import BranchedFunction, Side

_EPS = np.finfo(float).eps


class QuadratureError(RuntimeError):
    """A numerical integration could not be completed to a trustworthy result."""


class NonIntegrableError(QuadratureError):
    pass


class TailBoundError(QuadratureError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    nodes_used: int

    def __post_init__(self):
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        if self.error_estimate < 0 or not math.isfinite(self.error_estimate):
            raise ValueError("error estimate must be finite and nonnegative")
        if self.nodes_used <= 0:
            raise ValueError("nodes_used must be positive")

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.nodes_used + other.nodes_used,
        )

    def scaled(self, c: complex) -> "QuadratureResult":
        return QuadratureResult(self.value * c, self.error_estimate * abs(c), self.nodes_used)


@dataclass(frozen=True)
class Decay:
    """Tail behaviour of an integrand, declared by the caller.

    ``exponential``: |g(s)| <= |g(T)| exp(-rate (s - T)) for s > T.
    ``algebraic``:   |g(s)| <= |g(T)| (T / s)**rate with rate > 1.
    """

    kind: str = "exponential"
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in ("exponential", "algebraic"):
            raise ValueError(f"unknown decay class {self.kind!r}")
        if self.kind == "exponential" and self.rate <= 0:
            raise ValueError("exponential decay rate must be positive")
        if self.kind == "algebraic" and self.rate <= 1:
            raise ValueError("algebraic decay needs power > 1 for a finite tail")

    def tail_bound(self, magnitude_at_T: float, T: float) -> float:
        if self.kind == "exponential":
            return magnitude_at_T / self.rate
        return magnitude_at_T * T / (self.rate - 1.0)

    def to_dict(self) -> dict:
        return {"type": self.kind, "rate": self.rate}

    @classmethod
    def from_dict(cls, d: dict) -> "Decay":
        return cls(d.get("type", "exponential"), float(d.get("rate", 1.0)))


@dataclass(frozen=True)
class LoopContour:
    """Loop around the positive real axis: the circle |s| = epsilon plus both
    edges of [epsilon, tail_length].  Also reused by the origin-anchored
    contours, where ``epsilon`` is the radius of the turning arc."""

    epsilon: float = 1e-3
    tail_length: float = 40.0
    panels_per_decade: int = 8
    circle_nodes: int = 64

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.tail_length <= 10 * self.epsilon:
            raise ValueError("tail_length must exceed 10*epsilon")
        if self.panels_per_decade < 4:
            raise ValueError("panels_per_decade must be at least 4")
        if self.circle_nodes < 16:
            raise ValueError("circle_nodes must be at least 16")

    def refined(self) -> "LoopContour":
        return LoopContour(self.epsilon / 2, self.tail_length * 2, self.panels_per_decade, self.circle_nodes)


# ---------------------------------------------------------------------------
# Gauss-Legendre panels

@lru_cache(maxsize=None)
def _gl(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel_nodes(edges: np.ndarray, order: int):
    x, w = _gl(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)), half * w


def _panel_quad(f: Callable, edges: np.ndarray):
    """Panelwise GL16 with an embedded GL8 comparison.

    Returns (value, error estimate, |w f| mass, nodes used)."""
    x16, w16 = _panel_nodes(edges, 16)
    x8, w8 = _panel_nodes(edges, 8)
    f16 = np.asarray(f(x16), dtype=complex)
    f8 = np.asarray(f(x8), dtype=complex)
    q16 = np.sum(w16 * f16, axis=1)
    q8 = np.sum(w8 * f8, axis=1)
    if not (np.all(np.isfinite(q16)) and np.all(np.isfinite(q8))):
        raise QuadratureError("integrand produced non-finite values")
    mass = float(np.sum(np.abs(w16 * f16)))
    err = float(np.sum(np.abs(q16 - q8))) + 16 * _EPS * mass
    return complex(np.sum(q16)), err, mass, f16.size + f8.size


def _graded_edges(lo: float, hi: float, per_decade: int) -> np.ndarray:
    n = max(1, int(math.ceil(math.log10(hi / lo) * per_decade)))
    return np.geomspace(lo, hi, n + 1)


def _edge_grid(contour: LoopContour) -> np.ndarray:
    eps, T, ppd = contour.epsilon, contour.tail_length, contour.panels_per_decade
    if T <= 1.0:
        return _graded_edges(eps, T, ppd)
    inner = _graded_edges(eps, 1.0, ppd)
    outer = _graded_edges(1.0, T, ppd)
    return np.concatenate([inner, outer[1:]])


def _arc(f: Callable, radius: float, theta0: float, theta1: float, nodes: int):
    """Integral of f(p) dp along p = radius*exp(i theta), theta0 -> theta1.

    ``f`` receives (p, log p) with log p continuous along the arc."""
    panels = max(1, nodes // 16)
    edges = np.linspace(theta0, theta1, panels + 1)

    def integrand(theta):
        lp = math.log(radius) + 1j * theta
        p = np.exp(lp)
        return f(p, lp) * 1j * p

    return _panel_quad(integrand, edges)


# ---------------------------------------------------------------------------

def _as_side_callable(g):
    if isinstance(g, BranchedFunction):
        return g
    return BranchedFunction(lambda p: np.asarray(g(p), dtype=complex))


def loop_integral(
    g,
    contour: LoopContour | None = None,
    tail_decay: Decay = Decay("exponential", 1.0),
    tol: float | None = None,
) -> QuadratureResult:
    """Loop integral of ``g`` around the positive real axis.

    The loop comes in from +infinity below the axis, turns clockwise around the
    origin on the circle |s| = epsilon and leaves above the axis, so the value is
    the upper-minus-lower jump integral over [epsilon, T] plus the circle.  For
    t off the axis, a factor G(s)/(s - t) with G branched at 0 then yields the
    local term +2 pi i G(t).  ``g`` must have its cut along the positive axis
    (slit convention); single-valued callables are accepted as well.
    """
    contour = contour or LoopContour()
    g = _as_side_callable(g)
    if abs(g.cut_origin) > 0 or abs(g.cut_direction - 1) > 1e-15:
        raise ValueError("loop_integral needs a function cut along the positive real axis")

    def jump(x):
        return g(x, Side.UPPER) - g(x, Side.LOWER)

    edges = _edge_grid(contour)
    val_e, err_e, _, n_e = _panel_quad(jump, edges)

    def on_circle(p, lp):
        return g(p, Side.OFF)

    eps = contour.epsilon
    # clockwise: arg 2pi -> 0
    val_c, err_c, _, n_c = _arc(on_circle, eps, 2 * math.pi, 0.0, contour.circle_nodes)
    val_c2, _, _, _ = _arc(on_circle, eps, 2 * math.pi, 0.0, 2 * contour.circle_nodes)
    drift = abs(val_c2 - val_c)
    if drift > 1e-6 * max(1.0, abs(val_c2)):
        raise NonIntegrableError(
            f"circle contribution does not settle under refinement (change {drift:.3g}); "
            "the origin singularity is not integrable on this loop"
        )
    T = contour.tail_length
    tail = tail_decay.tail_bound(abs(complex(jump(np.array([T]))[0])), T)
    if tol is not None and tail > tol:
        raise TailBoundError(f"tail bound {tail:.3g} exceeds tolerance {tol:.3g}; increase tail_length")
    return QuadratureResult(val_e + val_c2, err_e + err_c + drift + tail, n_e + n_c)


# ---------------------------------------------------------------------------
# double exponential rule on a half line

def exp_sinh(
    h: Callable[[np.ndarray], np.ndarray],
    direction: complex = 1.0,
    scale: float = 1.0,
    x_max: float | None = None,
    tol: float = 1e-14,
    max_level: int = 8,
    min_level: int = 3,
    check_origin: bool = True,
):
    """Integral of h along the ray {r * direction : r >= 0}.

    Nodes r = scale * exp(pi/2 sinh t).  ``h`` receives complex points and may
    return an array whose leading axis runs over nodes; trailing axes are
    integrated independently.  Returns (value, error estimate, nodes used),
    where the estimate is the change from the previous halving of the step
    plus end-truncation and roundoff terms.
    """
    direction = complex(direction) / abs(direction)
    r_lo = scale * 1e-250
    r_hi = scale * 800.0 if x_max is None else x_max
    t_lo = -math.asinh(math.log(scale / r_lo) * 2 / math.pi)
    t_hi = math.asinh(max(math.log(r_hi / scale), 1e-3) * 2 / math.pi)

    def values(level: int):
        # contributions of nodes first appearing at this level
        step = 2.0 ** -level
        j0 = math.ceil(t_lo / step)
        j1 = math.floor(t_hi / step)
        j = np.arange(j0, j1 + 1)
        if level > 0:
            j = j[j % 2 != 0]
        t = j * step
        r = scale * np.exp(0.5 * math.pi * np.sinh(t))
        w = r * 0.5 * math.pi * np.cosh(t)
        hv = np.asarray(h(r * direction), dtype=complex)
        wshape = (len(w),) + (1,) * (hv.ndim - 1)
        return t, w.reshape(wshape) * direction * hv

    sums = []
    total_nodes = 0
    mass = 0.0
    est = None
    level_terms = []
    for level in range(max_level + 1):
        t, terms = values(level)
        if not np.all(np.isfinite(terms)):
            raise QuadratureError("integrand produced non-finite values")
        total_nodes += len(t)
        level_terms.append((t, terms))
        part = np.sum(terms, axis=0) * 2.0 ** -level
        prev = sums[-1] * 0.5 if sums else 0.0
        s = prev + part
        sums.append(s)
        mass = mass * 0.5 + np.sum(np.abs(terms), axis=0) * 2.0 ** -level
        if level >= 1:
            est = np.abs(sums[-1] - sums[-2])
            if level >= min_level and np.all(est <= tol * np.maximum(np.abs(s), 1e-300)):
                break
    # end-truncation proxy: magnitude of the outermost node contributions
    t_all = np.concatenate([lt[0] for lt in level_terms])
    terms_all = np.concatenate([lt[1] for lt in level_terms], axis=0)
    left = np.abs(terms_all[np.argmin(t_all)])
    right = np.abs(terms_all[np.argmax(t_all)])
    if check_origin and np.any(left > 1e-6 * np.maximum(mass, 1e-300)):
        raise NonIntegrableError("integrand is not integrable at the origin of the ray")
    err = est + left + right + 32 * _EPS * mass
    value = sums[-1]
    return value, err, total_nodes


def halfline_integral(h, direction: complex = 1.0, scale: float = 1.0, **kw) -> QuadratureResult:
    value, err, n = exp_sinh(h, direction, scale, **kw)
    return QuadratureResult(complex(value), float(err), n)


def laplace_integral(F, k: complex, tol: float = 1e-14) -> QuadratureResult:
    """Integral of exp(-k p) F(p) over p > 0, F taken from the upper side.

    Algebraic endpoint singularities p**alpha with alpha > -1 are absorbed by
    the double exponential clustering of nodes at the origin.
    """
    k = complex(k)
    if k.real <= 0:
        raise ValueError("Laplace integral needs Re k > 0")
    if isinstance(F, BranchedFunction):
        def f(p):
            return F(p, Side.UPPER)
    else:
        f = F

    def h(p):
        return np.exp(-k * p) * f(p)

    scale = 1.0 / abs(k)
    return halfline_integral(h, 1.0, scale, x_max=800.0 / k.real, tol=tol)


# ---------------------------------------------------------------------------
# origin-anchored contours for coefficient growth of type exp(sqrt(n))

def _anchored_contour(g, start_arg: float, contour: LoopContour, tail_decay: Decay, tol):
    """Integral along: the ray of argument ``start_arg`` from 0 out to radius R,
    the arc of radius R from ``start_arg`` down to 0, then out along the positive
    axis.  ``g(p, logp)`` gets log p continued along the path, so multivalued
    factors follow the winding."""
    R = contour.epsilon
    ppd = contour.panels_per_decade
    e_dir = complex(math.cos(start_arg), math.sin(start_arg))
    r_min = R * 1e-12

    def radial(r):
        lp = np.log(r) + 1j * start_arg
        return g(np.exp(lp), lp) * e_dir

    edges = _graded_edges(r_min, R, ppd)
    v1, e1, m1, n1 = _panel_quad(radial, edges)
    at_origin = abs(complex(radial(np.array([r_min]))[0])) * r_min
    if at_origin > 1e-10 * max(m1, 1e-300):
        raise NonIntegrableError("integrand does not vanish fast enough at the origin of the contour")
    v2, e2, _, n2 = _arc(g, R, start_arg, 0.0, contour.circle_nodes)

    def outward(x):
        lp = np.log(x) + 0j
        return g(x + 0j, lp)

    T = contour.tail_length
    v3, e3, _, n3 = _panel_quad(outward, _graded_edges(R, T, ppd))
    tail = tail_decay.tail_bound(abs(complex(outward(np.array([T]))[0])), T)
    if tol is not None and tail > tol:
        raise TailBoundError(f"tail bound {tail:.3g} exceeds tolerance {tol:.3g}")
    return QuadratureResult(v1 + v2 + v3, e1 + e2 + e3 + at_origin + tail, n1 + n2 + n3)


def contour_c1_integral(
    g,
    contour: LoopContour | None = None,
    tail_decay: Decay = Decay("exponential", 1.0),
    tol: float | None = None,
) -> QuadratureResult:
    """Integral over C1: leaves the origin along the positive axis on the sheet
    arg p = 2 pi, turns clockwise once around the origin on |p| = R and runs out
    to +infinity on the principal sheet.  ``g(p, logp)``."""
    contour = contour or LoopContour(epsilon=0.5, tail_length=60.0)
    return _anchored_contour(g, 2 * math.pi, contour, tail_decay, tol)


def contour_c_integral(
    g,
    contour: LoopContour | None = None,
    tail_decay: Decay = Decay("exponential", 1.0),
    tol: float | None = None,
) -> QuadratureResult:
    """Integral over C: leaves the origin along the negative axis (arg pi), turns
    clockwise through the upper half plane on |p| = R and runs out to
    +infinity.  ``g(p, logp)``."""
    contour = contour or LoopContour(epsilon=0.5, tail_length=60.0)
    return _anchored_contour(g, math.pi, contour, tail_decay, tol)


# ---------------------------------------------------------------------------

def circle_coeff_integral(f, n: int, r: float, nodes: int | None = None,
                          analyticity_radius: float | None = None) -> complex:
    """n-th Taylor coefficient (1/2 pi i) \\oint f(s) s^{-n-1} ds on |s| = r.

    The trapezoid rule on the circle is spectrally accurate for f analytic on
    a neighbourhood of the closed disk.
    """
    if n < 0:
        raise ValueError("coefficient index must be nonnegative")
    if r <= 0:
        raise ValueError("radius must be positive")
    if analyticity_radius is not None and r >= analyticity_radius:
        raise ValueError(f"radius {r} is not inside the analyticity radius {analyticity_radius}")
    if nodes is None:
        nodes = 1 << max(6, int(math.ceil(math.log2(4 * (n + 1)))))
    theta = 2 * math.pi * np.arange(nodes) / nodes
    s = r * np.exp(1j * theta)
    vals = np.asarray(f(s), dtype=complex)
    return complex(np.sum(vals * np.exp(-1j * n * theta)) / nodes / r**n)
