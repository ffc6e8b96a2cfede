"""Adaptive quadrature helpers shared by the phase-space kernels.

All adaptive integrals request absolute error 1e-10 and fail hard when the
reported error estimate exceeds 1e-4 of the running value; callers treat
that as a numerical failure, not as a value.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate

__all__ = ["QuadratureError", "quad_real", "quad_complex", "gauss_exp_integral"]

DEFAULT_EPSABS = 1e-10
FAIL_RATIO = 1e-4


class QuadratureError(RuntimeError):
    """Raised when an integral's error estimate is out of proportion to its value."""


def _check(value: float, err: float, fail_ratio: float, what: str) -> None:
    scale = max(abs(value), 1e-30)
    if err > fail_ratio * scale and err > DEFAULT_EPSABS * 10:
        raise QuadratureError(
            f"{what}: error estimate {err:.3e} exceeds {fail_ratio:.0e} of value {value:.6e}"
        )


def quad_real(f, a, b, *, epsabs: float = DEFAULT_EPSABS, limit: int = 200,
              fail_ratio: float = FAIL_RATIO, what: str = "integral") -> float:
    value, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsabs, limit=limit)
    _check(value, err, fail_ratio, what)
    return value


def quad_complex(f, a, b, *, epsabs: float = DEFAULT_EPSABS, limit: int = 200,
                 fail_ratio: float = FAIL_RATIO, what: str = "integral") -> complex:
    re, re_err = integrate.quad(lambda x: f(x).real, a, b,
                                epsabs=epsabs, epsrel=epsabs, limit=limit)
    im, im_err = integrate.quad(lambda x: f(x).imag, a, b,
                                epsabs=epsabs, epsrel=epsabs, limit=limit)
    value = complex(re, im)
    _check(abs(value), re_err + im_err, fail_ratio, what)
    return value


def gauss_exp_integral(a2: complex, a1: complex, a0: complex = 0.0) -> complex:
    """Closed form of the line integral of exp(-a2*x^2 + a1*x + a0), Re(a2) > 0."""
    a2 = complex(a2)
    if a2.real <= 0.0:
        raise ValueError("Gaussian integral needs Re(a2) > 0")
    return cmath.sqrt(math.pi / a2) * cmath.exp(a1 * a1 / (4.0 * a2) + a0)
