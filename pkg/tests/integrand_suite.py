"""Integrands with independently known values, shared by the quadrature tests
and the error-estimate honesty criterion.

Each case returns (QuadratureResult, truth).  Truths come from closed forms,
scipy special functions, or mpmath path quadrature."""
import math

import mpmath as mp
import numpy as np
from scipy.special import erfc, gamma, i0, k0

from resum import kernels
from resum.complexfn import BranchedFunction, pow_slit, sqrt_slit
from resum.quadrature import (
    contour_c1_integral,
    contour_c_integral,
    laplace_integral,
    loop_integral,
)


def loop_sqrt():
    g = BranchedFunction(lambda s: np.exp(-s) / (2 * np.sqrt(np.pi) * sqrt_slit(s)))
    return loop_integral(g), 1.0


def loop_sqrt_pole(c=0.7):
    g = BranchedFunction(lambda s: np.exp(-s) / (sqrt_slit(s) * (s + c)))
    truth = 2 * math.pi * math.exp(c) * erfc(math.sqrt(c)) / math.sqrt(c)
    return loop_integral(g), truth


def loop_analytic():
    return loop_integral(lambda s: np.exp(-s)), 0.0


def loop_power():
    # jump of s^(-0.3) e^-s is (1 - e^(-0.6 pi i)) s^-0.3 e^-s
    g = BranchedFunction(lambda s: pow_slit(s, -0.3) * np.exp(-s))
    return loop_integral(g), (1 - np.exp(-0.6j * np.pi)) * gamma(0.7)


def laplace_one():
    return laplace_integral(lambda p: np.ones_like(p), 3), 1 / 3


def laplace_sqrt():
    return laplace_integral(lambda p: 1 / np.sqrt(np.pi * p), 4), 0.5


def laplace_sqrt1p():
    k = 2
    truth = float(mp.e**k * k**-1.5 * mp.gammainc(1.5, k))
    return laplace_integral(lambda p: np.sqrt(1 + p), k), truth


def laplace_power_law():
    return kernels.power_law_kernel(0.25).laplace(7), 7**-0.25


def c1_exp_sqrt():
    return kernels.exp_sqrt_growth_coefficient(4), math.e**2


def c1_bessel():
    r = contour_c1_integral(lambda p, lp: np.exp(-1 / p - p) / p)
    return r, 2 * k0(2.0) - 2j * math.pi * i0(2.0)


def _c_path_oracle(f, R=0.5):
    mp.mp.dps = 30
    leg = mp.quad(lambda r: f(-r) * -1, [0, R])
    arc = mp.quad(lambda th: f(R * mp.expj(th)) * 1j * R * mp.expj(th), [mp.pi, 0])
    out = mp.quad(f, [R, mp.inf])
    return complex(leg + arc + out)


def c_exp():
    r = contour_c_integral(lambda p, lp: np.exp(1 / p - p) / p)
    return r, _c_path_oracle(lambda p: mp.exp(1 / p - p) / p)


def recip_gamma():
    return kernels.reciprocal_gamma(5.5), 1 / gamma(5.5)


def stirling_laplace():
    n = 7
    r = kernels.stirling_kernel().laplace(n)
    return r, math.factorial(n) / (n ** (n + 1) * math.exp(-n))


def f2_laplace():
    k = 5
    return kernels.f2_kernel_spec().laplace(k), 1 / (k**math.pi + math.log(k))


def exp_sqrt_decay():
    return kernels.exp_sqrt_decay_kernel(3.0).laplace(2), math.exp(-3 * math.sqrt(2))


CASES = {
    "loop_sqrt": loop_sqrt,
    "loop_sqrt_pole": loop_sqrt_pole,
    "loop_analytic": loop_analytic,
    "loop_power": loop_power,
    "laplace_one": laplace_one,
    "laplace_sqrt": laplace_sqrt,
    "laplace_sqrt1p": laplace_sqrt1p,
    "laplace_power_law": laplace_power_law,
    "c1_exp_sqrt": c1_exp_sqrt,
    "c1_bessel": c1_bessel,
    "c_exp": c_exp,
    "recip_gamma": recip_gamma,
    "stirling_laplace": stirling_laplace,
    "f2_laplace": f2_laplace,
    "exp_sqrt_decay": exp_sqrt_decay,
}
