"""Built-in coefficient kernels.

A kernel F is stored in Laplace convention: the coefficient it produces for
the singularity at ``a`` is ``a**-k * integral_0^inf exp(-k p) F(p) dp``.  F is
analytic on (0, inf) and evaluated off the axis by analytic continuation with
the principal branch (cut along the negative axis).  Where it is known in closed
form, ``loop`` gives the equivalent kernel for the loop integral: a function on
the plane slit along (0, inf) whose upper-minus-lower jump is F.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gamma as _gamma

from . import complexfn
from .complexfn import BranchedFunction, pow_slit
from .quadrature import (
    Decay,
    LoopContour,
    QuadratureError,
    QuadratureResult,
    _edge_grid,
    _panel_nodes,
    contour_c1_integral,
    laplace_integral,
    loop_integral,
)


@dataclass(frozen=True)
class Kernel:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    loop: Callable[[np.ndarray], np.ndarray] | None = None
    coefficient_override: Callable[[int], QuadratureResult] | None = None

    def __call__(self, p):
        out = self.func(np.asarray(p, dtype=complex))
        return out if np.ndim(p) else complex(out)

    @property
    def branched(self) -> BranchedFunction:
        return BranchedFunction(self.func, 0j, -1 + 0j, label=self.name)

    def laplace(self, k, tol: float = 1e-14) -> QuadratureResult:
        """Integral of exp(-k p) F(p) over (0, inf)."""
        if self.coefficient_override is not None:
            return self.coefficient_override(k)
        return laplace_integral(self.func, k, tol=tol)


# ---------------------------------------------------------------------------
# power law

def power_law_kernel(beta: complex) -> Kernel:
    """F(p) = p**(beta-1)/Gamma(beta), so that its Laplace transform is k**-beta."""
    beta = complex(beta)
    if beta.real <= 0:
        raise ValueError("power_law kernel needs Re(beta) > 0")
    g = complex(_gamma(beta))
    b1 = beta - 1

    def func(p):
        return np.exp(b1 * np.log(p)) / g

    loop_factor = 1.0 / (g * (1 - np.exp(2j * np.pi * beta))) if abs(np.exp(2j * np.pi * beta) - 1) > 1e-14 else None

    def loop(t):
        if loop_factor is None:
            # integer beta: F is a polynomial, its loop kernel carries a logarithm
            return -func(t) * complexfn.log_slit(t) / (2j * np.pi)
        return pow_slit(t, b1) * loop_factor

    name = f"power_law:{_fmt(beta)}"
    return Kernel(name, func, loop)


def _fmt(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real) if z.real != int(z.real) else str(int(z.real))
    return f"{z.real!r}{z.imag:+}j"


# ---------------------------------------------------------------------------
# Stirling kernel G(p) = s2'(1+p) - s1'(1+p), s - ln s = 1 + p

def _phi(w):
    """w - log(1+w) without cancellation for small w."""
    w = np.asarray(w, dtype=complex)
    out = w - np.log1p(w)
    small = np.abs(w) < 0.05
    if np.any(small):
        ws = w[small]
        acc = np.zeros_like(ws)
        term = ws * ws
        for m in range(2, 22):
            acc = acc + (term / m if m % 2 == 0 else -term / m)
            term = term * ws
        out[small] = acc
    return out


def _psi(u):
    """exp(u) - 1 - u without cancellation for small u."""
    u = np.asarray(u, dtype=complex)
    out = np.expm1(u) - u
    small = np.abs(u) < 0.05
    if np.any(small):
        us = u[small]
        acc = np.zeros_like(us)
        term = us * us / 2
        for m in range(2, 22):
            acc = acc + term
            term = term * us / (m + 1)
        out[small] = acc
    return out


def _series_w(sigma):
    # inverse of w - log(1+w) = sigma**2/2 near w = 0
    return sigma + sigma**2 / 3 + sigma**3 / 36 - sigma**4 / 270 + sigma**5 / 4320


def _solve_real(p: np.ndarray, max_iter: int = 200):
    """Safeguarded Newton for both branches at real p > 0.

    Returns (w2, u1): w2 = s2 - 1 > 0 and u1 = ln s1 < 0."""
    p = np.asarray(p, dtype=float)
    sigma = np.sqrt(2 * p)
    # upper branch in w = s - 1
    lo, hi = np.zeros_like(p), p + sigma + 1.0
    w = np.where(p < 0.1, _series_w(sigma).real, np.where(p > 10, p + np.log1p(p), 0.5 * (lo + hi)))
    w = np.clip(w, lo + 1e-300, hi)
    for _ in range(max_iter):
        h = _phi(w).real - p
        lo = np.where(h < 0, w, lo)
        hi = np.where(h > 0, w, hi)
        step = h * (1 + w) / w
        new = w - step
        bad = ~((new > lo) & (new < hi))
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - w) <= 4e-16 * np.abs(new)
        w = new
        if np.all(done):
            break
    w2 = w
    # lower branch in u = ln s, s in (0, 1)
    lo, hi = -1.0 - p, np.zeros_like(p)
    w1s = _series_w(-sigma).real
    seed_small = np.log1p(np.clip(w1s, -0.999, -1e-300))
    u = np.where(p < 0.1, seed_small, np.where(p > 10, -1.0 - p + np.exp(-1.0 - p), 0.5 * (lo + hi)))
    u = np.clip(u, lo, hi - 1e-300)
    for _ in range(max_iter):
        h = _psi(u).real - p
        # h decreasing in u on u < 0
        lo = np.where(h > 0, u, lo)
        hi = np.where(h < 0, u, hi)
        step = h / np.expm1(u)
        new = u - step
        bad = ~((new > lo) & (new < hi))
        new = np.where(bad, 0.5 * (lo + hi), new)
        done = np.abs(new - u) <= 4e-16 * np.abs(new)
        u = new
        if np.all(done):
            break
    return w2, u


def _newton_complex(w2, u1, q, iters=8):
    for _ in range(iters):
        w2 = w2 - (_phi(w2) - q) * (1 + w2) / w2
        u1 = u1 - (_psi(u1) - q) / np.expm1(u1)
    return w2, u1


def stirling_branches(p):
    """Both inverse branches of s - ln s = 1 + p as (s2 - 1, ln s1).

    Real positive p is solved with a bracketed Newton iteration.  Complex p off
    the cut (-inf, 0] is reached by continuation along the arc |q| = |p| from
    the positive axis."""
    p = np.asarray(p, dtype=complex)
    if np.any((p.imag == 0) & (p.real <= 0)):
        raise complexfn.BranchError("stirling_G is branched on (-inf, 0]; p = 0 is the branch point")
    r = np.abs(p)
    w2, u1 = _solve_real(r)
    w2 = w2.astype(complex)
    u1 = u1.astype(complex)
    ang = np.angle(p)
    if np.any(ang != 0):
        steps = 48
        for i in range(1, steps + 1):
            q = r * np.exp(1j * ang * i / steps)
            w2, u1 = _newton_complex(w2, u1, q, iters=4 if i < steps else 10)
    res = np.maximum(np.abs(_phi(w2) - p), np.abs(_psi(u1) - p))
    if np.any(~np.isfinite(res)) or np.any(res > 1e-10 * np.maximum(1.0, np.abs(p))):
        raise QuadratureError(f"stirling_G Newton iteration did not converge (residual {np.max(res):.3g})")
    return w2, u1


def stirling_G(p):
    """G(p) = s2'(1+p) - s1'(1+p) with s' = s/(s-1), i.e. 1/w2 - 1/w1."""
    scalar = np.ndim(p) == 0
    w2, u1 = stirling_branches(np.atleast_1d(p))
    out = 1.0 / w2 - 1.0 / np.expm1(u1)
    return complex(out[0]) if scalar else out


def _stirling_loop(t):
    # G is sqrt(p)**-1 times a function of p, so its loop kernel is G/2 with
    # the square root taken on the slit plane.
    t = np.asarray(t, dtype=complex)
    g = stirling_G(t)
    return np.where(t.imag < 0, -0.5 * g, 0.5 * g)


def stirling_kernel() -> Kernel:
    return Kernel("stirling_g", lambda p: stirling_G(p), _stirling_loop)


# ---------------------------------------------------------------------------
# exp(-gamma sqrt(n)) kernels

def exp_sqrt_decay_kernel(gamma: float) -> Kernel:
    """F(p) = gamma/(2 sqrt(pi)) p**(-3/2) exp(-gamma**2/(4p)); Laplace transform exp(-gamma sqrt(k))."""
    gamma = complex(gamma)
    if gamma.real <= 0:
        raise ValueError("exp_sqrt decay kernel needs Re(gamma) > 0; use exp_sqrt_growth_coefficient")
    c = gamma / (2 * math.sqrt(math.pi))

    def func(p):
        return c * np.exp(-1.5 * np.log(p) - gamma**2 / (4 * p))

    return Kernel(f"exp_sqrt:{_fmt(gamma)}", func)


def exp_sqrt_growth_coefficient(n, rate: float = 1.0, contour: LoopContour | None = None) -> QuadratureResult:
    """exp(rate*sqrt(n)) from the C1 contour integral

        -(rate/(2 sqrt(pi))) * int_{C1} p**(-3/2) exp(-rate**2/(4p)) exp(-n p) dp,

    the continuation of the decaying kernel through gamma -> -rate."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    n = complex(n)
    if n.real < 1:
        raise ValueError("exp_sqrt_growth_coefficient needs n >= 1")

    def g(p, lp):
        return np.exp(-1.5 * lp - rate**2 / (4 * p) - n * p)

    res = contour_c1_integral(g, contour, Decay("exponential", n.real), tol=1e-12)
    return res.scaled(-rate / (2 * math.sqrt(math.pi)))


def exp_sqrt_kernel(gamma: float) -> Kernel:
    gamma = float(gamma)
    if gamma > 0:
        return exp_sqrt_decay_kernel(gamma)
    if gamma == 0:
        raise ValueError("exp_sqrt kernel needs gamma != 0")
    rate = -gamma

    def func(p):
        raise QuadratureError("the growth kernel has no values on the positive axis; it lives on C1")

    return Kernel(f"exp_sqrt:{_fmt(gamma)}", func,
                  coefficient_override=lambda k: exp_sqrt_growth_coefficient(k, rate))


# ---------------------------------------------------------------------------
# f2: coefficients 1/(k**pi + ln k)

@lru_cache(maxsize=1)
def _f2_poles():
    """Zeros of x**pi + ln x on the principal sheet and the residues of
    1/(x**pi + ln x) there.

    For |x| >= 2 the power dominates the logarithm and for |x| <= 0.05 the
    logarithm dominates, so all zeros lie in the annulus scanned here."""
    r = np.linspace(0.05, 2.0, 80)
    th = np.linspace(-np.pi + 1e-3, np.pi - 1e-3, 160)
    x = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    for _ in range(80):
        lx = np.log(x)
        f = np.exp(math.pi * lx) + lx
        d = math.pi * np.exp((math.pi - 1) * lx) + 1 / x
        x = x - f / d
        x = np.where(np.isfinite(x) & (np.abs(x) > 1e-3), x, 0.5)
    lx = np.log(x)
    ok = (np.abs(np.exp(math.pi * lx) + lx) < 1e-13) & (np.abs(lx.imag) < math.pi - 1e-9)
    roots: list[complex] = []
    for z in x[ok]:
        if all(abs(z - w) > 1e-9 for w in roots):
            roots.append(complex(z))
    roots.sort(key=lambda z: (z.real, z.imag))
    xs = np.array(roots)
    res = 1.0 / (math.pi * np.exp((math.pi - 1) * np.log(xs)) + 1 / xs)
    return xs, res


def _f2_denominator_inv(u):
    # 1/((-u)**pi + ln(-u)) with the principal branch in -u: cut along u > 0
    lm = np.log(-np.asarray(u, dtype=complex))
    return 1.0 / (np.exp(math.pi * lm) + lm)


@lru_cache(maxsize=1)
def _f2_grid():
    contour = LoopContour(epsilon=1e-3, tail_length=1e12, panels_per_decade=8, circle_nodes=64)
    edges = _edge_grid(contour)
    out = []
    for order in (16, 8):
        x, w = _panel_nodes(edges, order)
        x, w = x.ravel(), w.ravel()
        up = _f2_denominator_inv(x + 1e-150j * (1 + x))
        lo = _f2_denominator_inv(x - 1e-150j * (1 + x))
        # circle |u| = eps, clockwise from arg 2pi to 0
        panels = contour.circle_nodes // 16
        tedges = np.linspace(2 * math.pi, 0.0, panels + 1)
        th, tw = _panel_nodes(tedges, order)
        th, tw = th.ravel(), tw.ravel()
        uc = contour.epsilon * np.exp(1j * th)
        nodes = np.concatenate([x + 0j, uc])
        weights = np.concatenate([w * (up - lo), tw * 1j * uc * _f2_denominator_inv(uc)])
        out.append((nodes, weights))
    return tuple(out)


def f2_kernel_values(p):
    """F1(p) and an error estimate.

    F1 is the inverse Laplace transform of 1/(x**pi + ln x): the Bromwich line
    is folded onto the cut along the negative x axis, giving a loop integral
    in u = -x, plus the residues at the zeros of the denominator (one real
    near 0.7105 and a conjugate pair near 0.11 +- 1.13i)."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    xs, res = _f2_poles()
    (n16, w16), (n8, w8) = _f2_grid()
    out = np.empty(p.shape, dtype=complex)
    err = np.zeros(p.shape)
    tiny = np.abs(p) < 1e-9
    flat = p.ravel()
    for chunk in np.array_split(np.arange(flat.size), max(1, flat.size // 64)):
        pc = flat[chunk]
        v16 = np.exp(-np.outer(pc, n16)) @ w16 / (2j * math.pi)
        v8 = np.exp(-np.outer(pc, n8)) @ w8 / (2j * math.pi)
        out.ravel()[chunk] = v16 + np.exp(np.outer(pc, xs)) @ res
        err.ravel()[chunk] = np.abs(v16 - v8)
    if np.any(tiny):
        # x**-pi behaviour at large x
        out[tiny] = np.exp((math.pi - 1) * np.log(p[tiny])) / math.gamma(math.pi)
    return out, err


def f2_kernel(p):
    scalar = np.ndim(p) == 0
    out, _ = f2_kernel_values(p)
    return complex(out[0]) if scalar else out


def f2_kernel_spec() -> Kernel:
    return Kernel("f2", lambda p: f2_kernel(p))


# ---------------------------------------------------------------------------
# reciprocal Gamma from the Hankel loop

def reciprocal_gamma(n) -> QuadratureResult:
    """1/Gamma(n) = -(i e^{i pi n}/(2 pi)) \\oint s^{-n} e^{-s} ds.

    With s^{-n} on the slit plane (arg s in (0, 2pi)) the phase in front is
    exp(+i pi n).  For |n| >= 1 the rescaled loop s -> n s is used, whose saddle
    sits on the unit circle."""
    n = complex(n)
    if n.imag == 0 and n.real <= 0 and n.real == int(n.real):
        raise ValueError("reciprocal_gamma: n must avoid the nonpositive integers")
    pref = -1j * np.exp(1j * np.pi * n) / (2 * np.pi)
    if abs(n) < 1:
        g = BranchedFunction(lambda s: pow_slit(s, -n) * np.exp(-s))
        res = loop_integral(g, LoopContour(epsilon=0.5, tail_length=60.0), Decay("exponential", 1.0))
        return res.scaled(pref)
    # s^{-n} e^{-s} ds = n^{1-n} (s')^{-n} e^{-n s'} ds' with s = n s'; n^{1-n} principal
    scale = np.exp((1 - n) * np.log(n))
    T = max(60.0 / n.real, 10.0) if n.real > 0 else 60.0
    if n.real <= 0:
        g = BranchedFunction(lambda s: pow_slit(s, -n) * np.exp(-s))
        res = loop_integral(g, LoopContour(epsilon=0.9, tail_length=60.0), Decay("exponential", 1.0))
        return res.scaled(pref)
    g = BranchedFunction(lambda s: pow_slit(s, -n) * np.exp(-n * s))
    res = loop_integral(g, LoopContour(epsilon=0.9, tail_length=T), Decay("exponential", n.real))
    return res.scaled(pref * scale)


def _recip_gamma_array(p):
    p = np.asarray(p, dtype=complex)
    return np.array([reciprocal_gamma(x).value for x in p.ravel()], dtype=complex).reshape(p.shape)


def reciprocal_gamma_kernel() -> Kernel:
    return Kernel("recip_gamma", _recip_gamma_array)


# ---------------------------------------------------------------------------

def kernel_from_name(name: str) -> Kernel:
    """Resolve a model-file kernel name such as ``power_law:0.5``."""
    head, _, arg = name.partition(":")
    head = head.strip()
    if head == "power_law":
        return power_law_kernel(complex(arg) if "j" in arg else float(arg))
    if head == "exp_sqrt":
        return exp_sqrt_kernel(float(arg.replace("−", "-")))
    if arg:
        raise ValueError(f"kernel {head!r} takes no parameter")
    if head == "stirling_g":
        return stirling_kernel()
    if head == "f2":
        return f2_kernel_spec()
    if head == "recip_gamma":
        return reciprocal_gamma_kernel()
    raise ValueError(f"unknown kernel name {name!r}")


def expression_kernel(src: str) -> Kernel:
    """Kernel from a DSL expression in p (Laplace convention)."""
    expr = complexfn.parse_expr(src)
    func = complexfn.compile_expr(expr)
    k = Kernel(complexfn.pretty(expr), func)
    return k


complexfn.BUILTIN_FUNCTIONS.update({
    "stirling_g": stirling_G,
    "f2": f2_kernel,
    "recip_gamma": _recip_gamma_array,
})
