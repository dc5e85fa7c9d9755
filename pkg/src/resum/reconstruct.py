"""Reconstruction of functions from coefficient models, and the way back.

For a finite-radius model the Taylor series is summed under the integral:

    f(z) = f0 + sum_j integral_0^inf F_j(p) / (exp(p - t_j) - 1) dp,  t_j = ln(z / a_j),

which is the loop representation after the substitution s = exp(p) - 1.  The
integrand has poles at p = t_j + 2 pi i m.  For z outside the disk they lie in
the right half plane; the integral along the positive axis is the continuation
to the plane cut along the rays a_j [1, inf).  The ray of integration may be
turned by an angle phi, paying with the residues 2 pi i F_j(p_m) of the poles
swept over.  Turning away from a nearby pole is how points close to a_j, and
one-sided values on the cuts, are computed: the residue collected there is the
local singular term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .complexfn import BranchedFunction, BranchError, Side, log_slit
from .models import CoefficientModel, ModelKind, SingularTerm
from .quadrature import (
    NonIntegrableError,
    QuadratureError,
    QuadratureResult,
    circle_coeff_integral,
    exp_sinh,
)

EULER_GAMMA = 0.5772156649015329
TURN = 0.5  # ray rotation used to step away from poles
NEAR = 0.1  # relative distance to a_j below which poles are avoided
X_MAX = 600.0  # ray truncation; integrands decay at least like exp(-0.29 p)


# ---------------------------------------------------------------------------
# exponential integrals

def _e1(x: float) -> float:
    """E1(x) for x > 0."""
    if x <= 1.0:
        s, term, k = 0.0, 1.0, 1
        while True:
            term *= -x / k
            add = -term / k
            s += add
            if abs(add) < 1e-17 * abs(s):
                break
            k += 1
        return -EULER_GAMMA - math.log(x) + s
    # modified Lentz for the continued fraction of exp(x) E1(x)
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x)


def _ei_scaled_pos(x: float) -> float:
    """exp(-x) Ei(x) for x > 0."""
    if x <= 40.0:
        s, term, k = 0.0, 1.0, 1
        while True:
            term *= x / k
            add = term / k
            s += add
            if add < 1e-17 * s:
                break
            k += 1
        return math.exp(-x) * (EULER_GAMMA + math.log(x) + s)
    # asymptotic series, stopped at its smallest term
    s, term, k = 0.0, 1.0 / x, 0
    while True:
        s += term
        nxt = term * (k + 1) / x
        if nxt >= term or nxt < 1e-17 * s:
            break
        term, k = nxt, k + 1
    return s


def ei(x: float) -> float:
    """Exponential integral Ei(x) for real x != 0 (principal value for x > 0)."""
    x = float(x)
    if x == 0:
        raise ValueError("Ei has a logarithmic singularity at 0")
    if x < 0:
        return -_e1(-x)
    if x > 700:
        return math.inf
    return _ei_scaled_pos(x) * math.exp(x)


def ei_scaled(x):
    """exp(-x) Ei(x) for x > 0, safe for large x; vectorized."""
    return np.vectorize(_ei_scaled_pos, otypes=[float])(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# the ray integral and its residues

def _poles_in_sector(t0: np.ndarray, lo: np.ndarray, hi: np.ndarray, side_sign: np.ndarray):
    """Poles t0 + 2 pi i m with positive real part and argument in (lo, hi).

    ``side_sign`` breaks ties for poles lying on the positive axis: +1 puts
    them just above it, -1 just below.  Returns index arrays (which z, pole).
    """
    idx, poles = [], []
    re = t0.real
    for i in np.nonzero(re > 0)[0]:
        span = math.tan(max(abs(lo[i]), abs(hi[i]))) * re[i]
        m_lo = math.floor((-span - t0[i].imag) / (2 * math.pi)) - 1
        m_hi = math.ceil((span - t0[i].imag) / (2 * math.pi)) + 1
        for m in range(m_lo, m_hi + 1):
            p = t0[i] + 2j * math.pi * m
            arg = math.atan2(p.imag, p.real)
            if p.imag == 0:
                arg = 1e-300 * side_sign[i]
            if lo[i] < arg < hi[i]:
                idx.append(i)
                poles.append(p)
    return np.array(idx, dtype=int), np.array(poles, dtype=complex)


def _choose_angle(t0: np.ndarray, on_cut: np.ndarray) -> np.ndarray:
    """Ray angle in {0, -TURN, +TURN} keeping poles angularly far from the ray."""
    phi = np.zeros(t0.shape)
    for i, t in enumerate(t0):
        if on_cut[i]:
            phi[i] = -TURN
            continue
        if t.real <= 0:
            continue
        args = []
        for m in (-1, 0, 1):
            p = t + 2j * math.pi * m
            args.append(math.atan2(p.imag, p.real))
        best, best_d = 0.0, min(abs(a) for a in args)
        if best_d < 0.3 or abs(t) < NEAR * 1.2:
            for cand in (-TURN, TURN):
                d = min(abs(a - cand) for a in args)
                if d > best_d + 1e-12:
                    best, best_d = cand, d
        phi[i] = best
    return phi


def _inv_expm1(q):
    """1 / (exp(q) - 1), without overflow for large Re q."""
    q = np.asarray(q, dtype=complex)
    # exp(-q) / (1 - exp(-q)) with the exponent folded into the left half plane
    m = np.where(q.real > 0, -q, q)
    d = np.expm1(m)
    return np.where(q.real > 0, -np.exp(m) / d, 1.0 / d) + 0j


def _term_integrals(term: SingularTerm, z: np.ndarray, side: Side, phi: np.ndarray | None, tol: float):
    """Continuation of sum_k (z/a)^k L[F](k) for one term, vectorized over z."""
    F = term.kernel.func
    ratio = z / term.a
    t0 = np.log(ratio)
    on_cut = (np.abs(t0.imag) <= 1e-12 * (1 + np.abs(t0))) & (ratio.real > 1)
    if np.any(on_cut) and side is Side.OFF:
        raise BranchError("point lies on a cut; an upper or lower side is required")
    t0 = np.where(on_cut, t0.real + 0j, t0)
    side_sign = np.where(on_cut, 1.0 if side is Side.UPPER else -1.0, 0.0)
    if phi is None:
        phi = _choose_angle(t0, on_cut)
    else:
        phi = np.broadcast_to(np.asarray(phi, dtype=float), z.shape).copy()
    rot = np.exp(1j * phi)

    def h(r):
        p = r[:, None] * rot[None, :]
        return rot[None, :] * F(p) * _inv_expm1(p - t0[None, :])

    with np.errstate(over="ignore"):
        value, err, n = exp_sinh(h, 1.0, 1.0, x_max=X_MAX, tol=tol)
    value = np.asarray(value, dtype=complex).copy()
    err = np.asarray(err, dtype=float).copy()
    # residues between the turned ray and the positive axis
    neg = phi < 0
    lo = np.where(neg, phi, 0.0)
    hi = np.where(neg, 0.0, phi)
    idx, poles = _poles_in_sector(t0, lo, hi, side_sign)
    if len(idx):
        res = 2j * math.pi * np.asarray(F(poles), dtype=complex)
        sign = np.where(neg[idx], -1.0, 1.0)
        np.add.at(value, idx, sign * res)
    return value, err, n


def _as_array(z):
    return np.atleast_1d(np.asarray(z, dtype=complex))


def _check_kind(model: CoefficientModel, kind: ModelKind):
    if model.kind is not kind:
        raise ValueError(f"model kind is {model.kind.value}, expected {kind.value}")


def finite_radius_result(model: CoefficientModel, z, side: Side = Side.OFF,
                         ray_angle: float | None = None, tol: float = 1e-13):
    """Values and error estimates of the finite-radius reconstruction.

    Returns (values, errors) arrays shaped like ``z``.  ``ray_angle`` forces the
    angle of every ray of integration; by default it is chosen per point."""
    shape = np.shape(z)
    zs = _as_array(z)
    for t in model.terms:
        if np.any(np.abs(zs - t.a) <= 1e-14 * abs(t.a)):
            raise BranchError(f"evaluation at the singularity {t.a}")
    value = np.full(zs.shape, model.f0, dtype=complex)
    err = np.zeros(zs.shape)
    zero = zs == 0
    live = ~zero
    if np.any(live):
        for term in model.terms:
            v, e, _ = _term_integrals(term, zs[live], side, ray_angle, tol)
            value[live] += v
            err[live] += e
    return value.reshape(shape), err.reshape(shape)


def reconstruct_finite_radius(model: CoefficientModel, z, side: Side = Side.OFF,
                              ray_angle: float | None = None):
    """f(z) continued beyond the disk of convergence of sum f_k z^k.

    Points on a cut a_j [1, inf) need ``side``; elsewhere ``side`` is ignored.
    """
    _check_kind(model, ModelKind.FINITE_RADIUS)
    value, _ = finite_radius_result(model, z, side, ray_angle)
    return value if np.ndim(z) else complex(value)


def entire_result(model: CoefficientModel, z, tol: float = 1e-13):
    shape = np.shape(z)
    zs = _as_array(z)
    value = np.zeros(zs.shape, dtype=complex)
    err = np.zeros(zs.shape)
    for term in model.terms:
        F = term.kernel.func
        c = zs / term.a

        def h(p, c=c, F=F):
            return np.expm1(c[None, :] * np.exp(-p)[:, None]) * F(p)[:, None]

        v, e, _ = exp_sinh(h, 1.0, 1.0, x_max=X_MAX, tol=tol)
        value += v
        err += e
    return value.reshape(shape), err.reshape(shape)


def reconstruct_entire(model: CoefficientModel, z):
    """Entire function sum_k f_k z^k / k!, as

        sum_j integral_0^inf (exp(z exp(-p) / a_j) - 1) F_j(p) dp.
    """
    _check_kind(model, ModelKind.ENTIRE)
    value, _ = entire_result(model, z)
    return value if np.ndim(z) else complex(value)


# ---------------------------------------------------------------------------
# Borel summation

LATERAL = 0.3  # angle of the lateral Laplace rays around a singular direction


class SingularDirectionError(QuadratureError):
    """The Laplace ray runs into a singularity of the Borel transform."""


def _ray_angles(model: CoefficientModel, z: complex, mode: str, strict: bool):
    az = math.atan2(z.imag, z.real)
    nearest = None
    for t in model.terms:
        d = math.remainder(math.atan2(t.a.imag, t.a.real) - az, 2 * math.pi)
        if nearest is None or abs(d) < abs(nearest):
            nearest = d
    if abs(nearest) <= 1e-12:
        if strict:
            raise SingularDirectionError(f"singular direction arg z = {az}")
        if mode == "median":
            return [az + LATERAL, az - LATERAL]
        return [az + LATERAL] if mode == "above" else [az - LATERAL]
    if abs(nearest) < LATERAL:
        # turn away from the nearby singular direction without crossing it
        return [az - math.copysign(LATERAL, nearest)]
    return [az]


def borel_result(model: CoefficientModel, z: complex, mode: str = "median",
                 strict: bool = False, tol: float = 1e-13) -> QuadratureResult:
    z = complex(z)
    if z.real <= 0:
        raise ValueError("Borel summation needs Re z > 0")
    if mode not in ("median", "above", "below"):
        raise ValueError(f"unknown mode {mode!r}")
    angles = _ray_angles(model, z, mode, strict)
    results = []
    for ang in angles:
        d = complex(math.cos(ang), math.sin(ang))

        def h(P, d=d):
            P = np.asarray(P, dtype=complex)
            v = np.zeros(P.shape, dtype=complex)
            e = np.zeros(P.shape)
            for term in model.terms:
                tv, te, _ = _term_integrals(term, P, Side.OFF, None, tol)
                v += tv
                e += te
            w = np.exp(-P / z)
            return np.stack([w * v, np.abs(w) * e], axis=-1)

        value, err, n = exp_sinh(h, d, abs(z), x_max=700 * abs(z), tol=tol)
        results.append(QuadratureResult(complex(value[0]), float(err[0] + abs(value[1])), n))
    out = results[0]
    if len(results) == 2:
        out = (results[0] + results[1]).scaled(0.5)
    return out


def borel_sum(model: CoefficientModel, z: complex, mode: str = "median", strict: bool = False) -> complex:
    """Borel sum of sum_k f_k k! z^(k+1) for Re z > 0.

    The Laplace transform of the finite-radius reconstruction f(p) is taken
    along arg z.  If a singularity a_j lies in that direction the two lateral
    sums (rays turned by +-0.3) are computed; ``mode`` picks the one above,
    below, or their average (the median sum, default).  ``strict`` turns
    singular directions into a ``SingularDirectionError``."""
    _check_kind(model, ModelKind.BOREL)
    return borel_result(model, z, mode, strict).value


def _ei_tail(y: np.ndarray) -> np.ndarray:
    """y exp(-y) Ei(y) - 1 for y > 0, without cancellation for large y."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.shape)
    small = y <= 40.0
    out[small] = y[small] * ei_scaled(y[small]) - 1.0
    for i in np.nonzero(~small)[0]:
        s, term, k = 0.0, 1.0, 0
        while True:
            nxt = term * (k + 1) / y[i]
            if nxt >= term or nxt < 1e-17 * max(s, 1e-300):
                break
            term, k = nxt, k + 1
            s += term
        out[i] = s
    return out


def borel_sum_ei(model: CoefficientModel, z: float, tol: float = 1e-13) -> QuadratureResult:
    """Cross-check of the median Borel sum through exponential integrals.

    For real z > 0 and real a_j > 0, summing the k-series under the Laplace
    integral of the coefficients gives

        z sum_j integral_0^inf F_j(p) (y exp(-y) Ei(y) - 1) dp,  y = a_j exp(p) / z,

    with Ei the principal value."""
    z = float(z)
    if z <= 0:
        raise ValueError("the Ei form needs real z > 0")
    total = None
    for term in model.terms:
        if term.a.imag != 0 or term.a.real <= 0:
            raise ValueError("the Ei form needs real positive singularities")
        a = term.a.real
        F = term.kernel.func

        def h(p, F=F, a=a):
            p = np.asarray(p, dtype=complex)
            return z * F(p) * _ei_tail(a * np.exp(p.real) / z)

        v, e, n = exp_sinh(h, 1.0, 1.0, x_max=X_MAX, tol=tol)
        r = QuadratureResult(complex(v), float(e), n)
        total = r if total is None else total + r
    return total


# ---------------------------------------------------------------------------
# singular parts

def _local_radius(model: CoefficientModel, j: int) -> float:
    a = model.terms[j].a
    r = 0.5 * abs(a)
    for i, t in enumerate(model.terms):
        if i != j:
            r = min(r, 0.5 * abs(t.a - a))
    return r


def _local_term_func(term: SingularTerm) -> Callable:
    """z -> 2 pi i Phi(ln(z/a)) with Phi the loop form of F, on the slit plane.

    Kernels without a closed loop form use Phi(t) = -F(t) ln(t) / (2 pi i) with
    the slit logarithm, which has the same jump F across the cut."""
    F, loop, a = term.kernel.func, term.kernel.loop, term.a

    def func(z):
        t = np.log(np.asarray(z, dtype=complex) / a)
        if loop is not None:
            return 2j * math.pi * loop(t)
        return -F(t) * log_slit(t)

    return func


def local_term(model: CoefficientModel, j: int) -> BranchedFunction:
    """The local singular term at a_j, with its cut along a_j [1, inf)."""
    term = model.terms[j]
    d = term.a / abs(term.a)
    return BranchedFunction(_local_term_func(term), term.a, d, label=f"local term at {term.a}")


def singular_part(model: CoefficientModel, j: int, z, side: Side = Side.OFF):
    """Non-analytic part of the finite-radius reconstruction at a_j.

    The difference reconstruct - singular_part is analytic near a_j; across the
    cut both jump by 2 pi i F_j(ln(z/a_j))."""
    _check_kind(model, ModelKind.FINITE_RADIUS)
    if not 0 <= j < len(model.terms):
        raise IndexError(f"no singular term {j}")
    a = model.terms[j].a
    zs = _as_array(z)
    dist = np.abs(zs - a)
    if np.any(dist <= 1e-14 * abs(a)):
        raise BranchError(f"evaluation at the singularity {a}")
    radius = _local_radius(model, j)
    if np.any(dist > radius):
        raise ValueError(f"z is farther than {radius:g} from the singularity {a}")
    out = local_term(model, j)(zs, side)
    return out.reshape(np.shape(z)) if np.ndim(z) else complex(out[0])


@dataclass(frozen=True)
class SingularityReport:
    location: complex
    local_term: BranchedFunction
    probe: complex
    measured_jump: complex
    predicted_jump: complex
    error_estimate: float

    @property
    def consistent(self) -> bool:
        return abs(self.measured_jump - self.predicted_jump) <= max(self.error_estimate, 1e-12 * abs(self.predicted_jump))

    def to_dict(self) -> dict:
        c = lambda w: [w.real, w.imag]
        return {
            "location": c(self.location),
            "probe": c(self.probe),
            "measured_jump": c(self.measured_jump),
            "predicted_jump": c(self.predicted_jump),
            "error_estimate": self.error_estimate,
            "consistent": self.consistent,
        }


def singularity_report(model: CoefficientModel, j: int, offset: float = 0.1) -> SingularityReport:
    """Compare the cut jump of the reconstruction at a_j (1 + offset) with the
    jump of the local term."""
    _check_kind(model, ModelKind.FINITE_RADIUS)
    if not 0 < offset:
        raise ValueError("offset must be positive")
    a = model.terms[j].a
    z = a * (1 + offset)
    up, eu = finite_radius_result(model, z, Side.UPPER)
    lo, el = finite_radius_result(model, z, Side.LOWER)
    lt = local_term(model, j)
    predicted = complex(lt.jump(z))
    return SingularityReport(a, lt, z, complex(up - lo), predicted, float(eu + el))


# ---------------------------------------------------------------------------
# from a function back to its coefficients

DECAY_RADII = (1e2, 1e3, 1e4)
JUMP_S0 = 1e-9  # start of the numerically resolved part of a cut


class DecayCheckError(ValueError):
    """Sampled growth at infinity is too fast for the coefficient formula."""


def sided(func: Callable, singularities) -> Callable:
    """Wrap an analytic numpy expression as f(z, side) for points on the cuts
    a_j [1, inf).  The upper side is to the left when walking out along a cut."""
    locs = [complex(a) for a in singularities]

    def f(z, side: Side = Side.OFF):
        z = np.asarray(z, dtype=complex)
        if side is Side.OFF:
            return func(z)
        sign = 1.0 if side is Side.UPPER else -1.0
        shift = np.zeros(z.shape, dtype=complex)
        for a in locs:
            w = z / a - 1
            on = (w.real >= 0) & (np.abs(w.imag) <= 1e-12 * (1 + np.abs(w)))
            shift = np.where(on, sign * 1j * a / abs(a) * 1e-150 * (1 + np.abs(z)), shift)
        return func(z + shift)

    return f


def _sample_sup(f: Callable, R: float, cut_args: list, count: int = 16) -> float:
    theta = 2 * math.pi * (np.arange(count) + 0.5) / count
    if cut_args:
        # keep the samples off the cut directions
        theta = theta + 0.5 * math.pi / count + cut_args[0]
    z = R * np.exp(1j * theta)
    return float(np.max(np.abs(f(z, Side.OFF))))


def decay_profile(f: Callable, singularities, order: float) -> list:
    """sup over a circle of |f(z)| |z|^order, at each of DECAY_RADII."""
    args = [math.atan2(complex(a).imag, complex(a).real) for a in singularities]
    return [_sample_sup(f, R, args) * R**order for R in DECAY_RADII]


def check_decay(f: Callable, singularities, order: float, slack: float = 2.0) -> None:
    prof = decay_profile(f, singularities, order)
    if not all(np.isfinite(prof)) or any(b > slack * a for a, b in zip(prof, prof[1:])):
        raise DecayCheckError(f"|f(z)| |z|^{order:g} grows along radii {DECAY_RADII}: {prof}")


def in_m_prime(f: Callable, singularities, eps: float = 0.1) -> bool:
    """Sampled test of |f(z)| = O(|z|^(-1-eps)) at infinity."""
    try:
        check_decay(f, singularities, 1 + eps)
    except DecayCheckError:
        return False
    return True


def coeffs_from_function(f: Callable, singularities, k, eps: float = 0.1,
                         verify_decay: bool = True, tol: float = 1e-12):
    """f_k from the cut jumps of f:

        f_k = (1/2 pi i) sum_j a_j^-k integral_0^inf exp(-k s) [f]_j(a_j e^s) ds,

    where [f]_j is the upper minus lower value across the cut a_j [1, inf).

    ``f(z, side)`` must accept arrays.  Pulling the Cauchy circle out to
    infinity needs |f(z)| = o(|z|^k); the sampled check asks for
    O(|z|^(k - eps)), which every function decaying like O(|z|^(-1-eps))
    passes.  ``k`` may be a sequence, in which case the jumps are sampled once
    and a list of results is returned."""
    ks = np.atleast_1d(k)
    if ks.size == 0 or np.any(ks < 1) or np.any(ks != np.round(ks)):
        raise ValueError("coefficient index k must be an integer >= 1")
    ks = ks.astype(int)
    locs = [complex(a) for a in singularities]
    if not locs:
        raise ValueError("at least one singularity is required")
    if verify_decay:
        check_decay(f, locs, eps - ks.min())
    totals = None
    for a in locs:
        def jump(s, a=a):
            z = a * np.exp(s)
            return np.asarray(f(z, Side.UPPER)) - np.asarray(f(z, Side.LOWER))

        # s |jump(s)| must vanish at the start of the cut
        probe = np.abs(np.array([1e-6, 1e-10]) * jump(np.array([1e-6, 1e-10])))
        if not np.all(np.isfinite(probe)) or probe[1] > 0.5 * probe[0]:
            raise NonIntegrableError(f"the jump across the cut from {a} is not integrable at its start")

        # a exp(s) cannot resolve small s, so [0, S0] is covered by fitting
        # jump ~ c s^alpha from its values at S0 and 10 S0
        j0, j1 = jump(np.array([JUMP_S0, 10 * JUMP_S0]))
        alpha = math.log(max(abs(j1), 1e-300) / max(abs(j0), 1e-300)) / math.log(10.0)
        head = JUMP_S0 * j0 / (alpha + 1)

        def h(x, jump=jump):
            s = JUMP_S0 + np.asarray(x, dtype=complex).real
            return np.exp(-np.outer(s, ks)) * jump(s)[:, None]

        v, e, n = exp_sinh(h, 1.0, JUMP_S0 * 1e3, x_max=min(X_MAX, 60.0 / ks.min() + 5.0), tol=tol,
                           check_origin=False)
        parts = [
            QuadratureResult(complex(vi) + head, float(ei) + 1e-3 * abs(head), n + 2).scaled(a ** (-kk) / (2j * math.pi))
            for vi, ei, kk in zip(np.atleast_1d(v), np.atleast_1d(e), ks)
        ]
        totals = parts if totals is None else [t + r for t, r in zip(totals, parts)]
    return totals if np.ndim(k) else totals[0]


def taylor_coeffs_numeric(f: Callable, n: int, r: float, nodes: int | None = None,
                          analyticity_radius: float | None = None) -> complex:
    """n-th Taylor coefficient of f from its values on the circle |z| = r."""
    return circle_coeff_integral(f, n, r, nodes, analyticity_radius)


def reconstruction_as_function(model: CoefficientModel) -> Callable:
    """The finite-radius reconstruction as an f(z, side) callable."""
    def f(z, side: Side = Side.OFF):
        return reconstruct_finite_radius(model, np.asarray(z, dtype=complex), side)
    return f
