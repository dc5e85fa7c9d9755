"""Special sums as contour integrals, and the summation oracles that check them.

The oracles are deliberately independent of the contour machinery: plain
partial sums with tail bounds, Abel limits extrapolated in the distance to the
boundary point, optimal truncation of divergent series, and an Euler-Maclaurin
tail for slowly convergent oscillating sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma, gammaln

from .complexfn import log_slit
from .quadrature import (
    LoopContour,
    NonIntegrableError,
    QuadratureError,
    QuadratureResult,
    contour_c1_integral,
    contour_c_integral,
    exp_sinh,
    loop_integral,
)

METHODS = ("none", "richardson", "euler")
_EPS = np.finfo(float).eps


class OracleError(RuntimeError):
    """No convergence evidence within the budget."""


@dataclass(frozen=True)
class AccelerationConfig:
    """How an oracle squeezes a limit out of finitely many terms.

    ``method``: none, richardson or euler.  ``levels``: number of points in the
    Richardson table, or terms grouped by the Euler transform.  ``base``: first
    exponent m of the approach points -1 + 2^-m used by the Abel oracle."""

    method: str = "none"
    levels: int = 6
    base: int = 1
    max_terms: int = 2_000_000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.levels < 1:
            raise ValueError("levels must be at least 1")


@dataclass(frozen=True)
class OracleResult:
    value: complex
    error: float
    terms_used: int


def direct_sum_oracle(term: Callable, config: AccelerationConfig = AccelerationConfig(),
                      kind: str = "monotone", tol: float = 1e-16, start: int = 1) -> OracleResult:
    """Sum term(k) for k >= start.

    ``kind`` declares the tail: ``monotone`` terms whose magnitude ratio
    settles below 1 (geometric tail bound |t_n| q / (1 - q)), or
    ``alternating`` terms summed with the Euler transform (method euler) or by
    averaging neighbouring partial sums, with the last correction as error."""
    if kind not in ("monotone", "alternating"):
        raise ValueError("kind must be monotone or alternating")
    if kind == "alternating":
        return _alternating_sum(term, config, start)
    total = 0j
    block = 64
    k = start
    prev_mag = None
    abs_sum = 0.0
    rounding = 0.0
    while k - start < config.max_terms:
        ks = np.arange(k, k + block)
        t = np.asarray(term(ks), dtype=complex)
        total += t.sum()
        mags = np.abs(t)
        abs_sum += mags.sum()
        # pairwise summation of the block, then one addition to the total
        rounding += _EPS * (math.log2(block) * mags.sum() + abs(total))
        k += block
        last = mags[-1]
        if last == 0 and np.all(mags[block // 2:] == 0):
            return OracleResult(complex(total), float(rounding), k - start)
        q = mags[-1] / mags[-2] if mags[-2] > 0 else 0.0
        shrinking = prev_mag is None or last <= prev_mag
        prev_mag = last
        if q < 1 and shrinking:
            bound = last * q / (1 - q)
            if bound <= tol * max(abs(total), 1e-300) or bound < 1e-300:
                return OracleResult(complex(total), float(bound + rounding + _EPS * abs_sum), k - start)
        block = min(2 * block, 65536)
    raise OracleError("terms did not decay fast enough within the term budget")


def _alternating_sum(term: Callable, config: AccelerationConfig, start: int) -> OracleResult:
    n = max(64, 8 * config.levels)
    ks = np.arange(start, start + n)
    t = np.asarray(term(ks), dtype=complex)
    partial = np.cumsum(t)
    if config.method == "euler":
        # repeated averaging of partial sums (Euler transform of the tail)
        s = partial[-config.levels - 1:].copy()
        history = [s[-1]]
        while len(s) > 1:
            s = 0.5 * (s[1:] + s[:-1])
            history.append(s[-1])
        rounding = 2 * _EPS * n * float(np.abs(t).sum())
        err = abs(history[-1] - history[-2]) + rounding
        return OracleResult(complex(history[-1]), float(err), n)
    avg = 0.5 * (partial[-1] + partial[-2])
    return OracleResult(complex(avg), float(abs(t[-1])), n)


def _neville_at_zero(x: list, y: list):
    """Values at 0 of the interpolating polynomials through the last 1..n points."""
    P = list(y)
    out = [P[-1]]
    n = len(x)
    for j in range(1, n):
        for i in range(n - j):
            P[i] = (x[i] * P[i + 1] - x[i + j] * P[i]) / (x[i] - x[i + j])
        out.append(P[0])
    return out


def power_series_value(coeff_log: Callable, sign: Callable, z: float) -> complex:
    """sum_{n>=1} c_n z^n for real z with |z| < 1, with c_n = sign(n) exp(coeff_log(n))."""
    r = abs(z)
    s = -1.0 if z < 0 else 1.0
    # terms exp(coeff_log(n) + n ln r) eventually decay; find where they are negligible
    n = 64
    while True:
        ns = np.arange(1, n + 1, dtype=float)
        logs = coeff_log(ns) + ns * math.log(r)
        if logs[-1] < logs.max() - 45 and logs[-1] < -45:
            break
        n *= 2
        if n > 1 << 24:
            raise OracleError("power series does not converge at this point")
    terms = sign(ns) * np.exp(logs) * s**ns
    return complex(np.sum(terms))


def abel_limit_oracle(coeff_log: Callable, sign: Callable | None = None,
                      config: AccelerationConfig = AccelerationConfig("richardson", 6, 1)) -> OracleResult:
    """lim z -> -1+ of sum_{n>=1} c_n z^n, from the points z = -1 + 2^-m.

    The coefficients are passed as n -> ln |c_n| (and an optional sign), so
    that growing coefficients do not overflow.  The value at delta = 0 is
    extrapolated by polynomial (Richardson) fits in delta; successive
    extrapolants give the error estimate."""
    if config.method != "richardson":
        raise ValueError("the Abel oracle uses Richardson extrapolation")
    sign = sign or (lambda n: np.ones_like(n))
    ms = range(config.base, config.base + config.levels)
    ds = [2.0 ** -m for m in ms]
    vals = [power_series_value(coeff_log, sign, -1 + d) for d in ds]
    ext = _neville_at_zero(ds, vals)
    err = abs(ext[-1] - ext[-2]) if len(ext) > 1 else abs(vals[-1])
    if len(ext) > 2 and abs(ext[-1] - ext[-2]) > abs(ext[-2] - ext[-3]) * 4:
        raise OracleError("Richardson table is not settling")
    return OracleResult(complex(ext[-1]), float(err), len(ds))


@dataclass(frozen=True)
class TruncationResult:
    value: float
    floor: float
    order: int
    low_accuracy: bool

    def __iter__(self):
        return iter((self.value, self.floor))


def optimal_truncation_oracle(coeff: Callable, z: float, k_max: int = 100_000) -> TruncationResult:
    """Sum of coeff(k) k! z^(k+1) up to, not including, its smallest term.

    The smallest term (ties go to the larger k) is the floor.  ``order`` is
    the index of that first omitted term."""
    z = float(z)
    if z <= 0:
        raise ValueError("optimal truncation needs z > 0")
    ks = np.arange(1, k_max + 1)
    c = np.asarray(coeff(ks), dtype=float)
    with np.errstate(divide="ignore"):
        logs = gammaln(ks + 1.0) + (ks + 1) * math.log(z) + np.log(np.abs(c))
    best = logs.min()
    K = int(np.nonzero(logs <= best + 1e-12)[0][-1])
    terms = np.sign(c[:K]) * np.exp(logs[:K])
    value = float(math.fsum(terms))
    floor = float(math.exp(logs[K]))
    return TruncationResult(value, floor, int(ks[K]), floor > 1e-3 * abs(value))


# ---------------------------------------------------------------------------
# Euler-Maclaurin oracle for sum_{k>=1} exp(i w sqrt k) k^-a

_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66)


def _phase_power_derivative(a: float, w: float, x: float, order: int) -> complex:
    """d^order/dx^order of exp(i w sqrt x) x^-a.

    Kept as a sum of terms c x^e exp(i w sqrt x): differentiating x^e gives
    e x^(e-1), differentiating the phase gives (i w / 2) x^(e-1/2)."""
    terms = {-a: 1.0 + 0j}
    for _ in range(order):
        nxt: dict = {}
        for e, c in terms.items():
            nxt[e - 1] = nxt.get(e - 1, 0) + c * e
            nxt[e - 0.5] = nxt.get(e - 0.5, 0) + c * 0.5j * w
        terms = nxt
    phase = complex(math.cos(w * math.sqrt(x)), math.sin(w * math.sqrt(x)))
    return phase * sum(c * x**e for e, c in terms.items())


def phase_power_sum(a: float, w: float = 1.0, N: int = 400_000) -> OracleResult:
    """sum_{k>=1} exp(i w sqrt k) k^-a for a > 1/2, w != 0.

    Partial sum below N, then Euler-Maclaurin from N: the tail integral is
    2 integral_{sqrt N}^inf u^(1-2a) exp(i w u) du, done as a Fourier
    integral (QUADPACK QAWF)."""
    if a <= 0.5:
        raise ValueError("the sum converges only for a > 1/2")
    if w == 0:
        raise ValueError("w must be nonzero")
    k = np.arange(1, N, dtype=float)
    head = np.sum(np.exp(1j * w * np.sqrt(k)) * k**-a)
    u0 = math.sqrt(N)
    aw = abs(w)
    f = lambda u: u ** (1 - 2 * a)
    re, e_re = quad(f, u0, np.inf, weight="cos", wvar=aw, limlst=200)
    im, e_im = quad(f, u0, np.inf, weight="sin", wvar=aw, limlst=200)
    tail = 2 * (re + 1j * math.copysign(1.0, w) * im)
    em = 0.5 * complex(np.exp(1j * w * math.sqrt(N)) * N**-a)
    last = 0.0
    for j, B in enumerate(_BERNOULLI, start=1):
        corr = -B / math.factorial(2 * j) * _phase_power_derivative(a, w, float(N), 2 * j - 1)
        em += corr
        last = abs(corr)
    value = complex(head + tail + em)
    err = 2 * (e_re + e_im) + last + 1e-15 * float(np.sum(k**-a))
    return OracleResult(value, float(err), N)


# ---------------------------------------------------------------------------
# parabolic cylinder function

def parabolic_u(b: float, x) -> tuple:
    """U(b, x) for b > -1/2 and complex x, with an error estimate, from

        U(b, x) = exp(-x^2/4) / Gamma(b + 1/2) integral_0^inf t^(b-1/2) exp(-t^2/2 - x t) dt.
    """
    I, err = _u_integral(b, x)
    x = np.asarray(x, dtype=complex)
    w = np.exp(-x * x / 4)
    return w * I, np.abs(w) * err


def _u_integral(b: float, x):
    """The integral of parabolic_u divided by Gamma(b + 1/2), without exp(-x^2/4)."""
    if b <= -0.5:
        raise ValueError("the integral representation needs b > -1/2")
    x = np.asarray(x, dtype=complex)
    flat = x.ravel()

    def h(t):
        t = t.real[:, None]
        return t ** (b - 0.5) * np.exp(-0.5 * t * t - t * flat[None, :])

    v, e, _ = exp_sinh(h, 1.0, 1.0, x_max=60.0, tol=1e-14, check_origin=b > -0.5 + 1e-3)
    g = float(_gamma(b + 0.5))
    return (np.asarray(v) / g).reshape(x.shape), (np.asarray(e) / g).reshape(x.shape)


# ---------------------------------------------------------------------------
# the special sums

READINGS = ("derived", "literal")


def limit1_integrand(p, reading: str = "derived", logp=None):
    """Integrand of the contour form of lim z -> -1 sum exp(sqrt n) z^n.

    derived: p^(-3/2) exp(-1/(4p)) / (2 sqrt(pi) (exp(p) + 1)) on C1.
    literal: -exp(1/p) p^(3/2) / (4 sqrt(pi) (exp(p) + 1)), the other reading
    of the placement of p^(-3/2); its essential singularity at 0 forces a loop
    that keeps away from the origin."""
    p = np.asarray(p, dtype=complex)
    if reading == "derived":
        lp = np.log(p) if logp is None else logp
        return np.exp(-1.5 * lp - 0.25 / p) / (2 * math.sqrt(math.pi) * (np.exp(p) + 1))
    if reading == "literal":
        lp = log_slit(p) if logp is None else logp
        return -np.exp(1 / p + 1.5 * lp) / (4 * math.sqrt(math.pi) * (np.exp(p) + 1))
    raise ValueError(f"reading must be one of {READINGS}")


def eval_limit1(reading: str = "derived", contour: LoopContour | None = None) -> QuadratureResult:
    """Contour value for lim z -> -1+ of sum_{n>=1} exp(sqrt n) z^n."""
    if reading == "derived":
        contour = contour or LoopContour(epsilon=0.5, tail_length=60.0)
        return contour_c1_integral(lambda p, lp: limit1_integrand(p, "derived", lp), contour)
    if reading == "literal":
        contour = contour or LoopContour(epsilon=0.5, tail_length=60.0)
        return loop_integral(lambda p: limit1_integrand(p, "literal"), contour)
    raise ValueError(f"reading must be one of {READINGS}")


def limit1_abel() -> OracleResult:
    """Abel-limit oracle for the left side of eval_limit1."""
    return abel_limit_oracle(lambda n: np.sqrt(n))


def eqsum_kernel(a: float, gamma: complex = 1j):
    """K(p) with integral over C of K(p) exp(-k p) dp = exp(-gamma sqrt k) k^-a:

        K(p) = 2^(a-1/2)/sqrt(pi) p^(a-1) exp(-gamma^2/(4p)) I(2a - 3/2, gamma/sqrt(2p)),

    I being the integral of parabolic_u without its Gaussian factor, which is
    folded into the exponential.  ``g(p, logp)`` form for contour_c_integral."""
    if a <= 0.5:
        raise ValueError("eqsum needs a > 1/2")
    b = 2 * a - 1.5
    c = 2 ** (a - 0.5) / math.sqrt(math.pi)

    def g(p, lp):
        x = gamma / np.exp(0.5 * (math.log(2.0) + lp))
        I, _ = _u_integral(b, x)
        return c * np.exp((a - 1) * lp - gamma * gamma / (4 * p)) * I

    return g


def eval_eqsum(a: float, reading: str = "derived", contour: LoopContour | None = None) -> QuadratureResult:
    """Contour value of sum_{k>=1} exp(i sqrt k) k^-a, a > 1/2.

    derived: the conjugate of integral_C K(p) / (exp(p) - 1) dp with the
    kernel of eqsum_kernel at gamma = i.
    literal: -(gamma 2^(a-1/2)/sqrt(pi)) integral_C exp(-1/(8p))
    U(2a + 1/2, 1/sqrt(2p)) p^(1-a) / (exp(p) + 1) dp with gamma = -i, taken
    as written; it is not integrable at the origin of C and raises."""
    if a <= 0.5:
        raise ValueError("eqsum needs a > 1/2")
    contour = contour or LoopContour(epsilon=0.5, tail_length=60.0)
    if reading == "derived":
        K = eqsum_kernel(a, 1j)
        r = contour_c_integral(lambda p, lp: K(p, lp) / np.expm1(p), contour)
        return QuadratureResult(r.value.conjugate(), r.error_estimate, r.nodes_used)
    if reading == "literal":
        gam = -1j
        c = -gam * 2 ** (a - 0.5) / math.sqrt(math.pi)

        def g(p, lp):
            x = 1 / np.exp(0.5 * (math.log(2.0) + lp))
            U, _ = parabolic_u(2 * a + 0.5, x)
            return c * np.exp(-1 / (8 * p) + (1 - a) * lp) * U / (np.exp(p) + 1)

        try:
            with np.errstate(over="ignore", invalid="ignore"):
                return contour_c_integral(g, contour)
        except QuadratureError as exc:
            raise NonIntegrableError(f"literal eqsum integrand is not integrable on C: {exc}") from None
    raise ValueError(f"reading must be one of {READINGS}")
