# app/analysis/quadrature.py
"""
Adaptive quadrature against the Variance Gamma Lévy density, used to
cross-check the closed forms in app.models.levy.
"""
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from app.errors import DomainError, NumericalError

logger = logging.getLogger(__name__)

MOMENT = "moment"
TAIL_MASS = "tail"
EXPONENTIAL = "exp"

_TOL = 1e-10


def _quad(func: Callable[[float], float], a: float, b: float) -> float:
    out = integrate.quad(func, a, b, epsabs=_TOL, epsrel=_TOL, limit=500, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3:
        raise NumericalError(f"quadrature did not reach tolerance {_TOL:g} (error estimate {err:.2e})", estimate=value)
    return value


def _moment_side(C: float, rate: float, L: float, k: int) -> float:
    """int_0^L y^k C e^{-rate y}/y dy with y = e^{-u}"""
    u_lo = -math.log(L) if math.isfinite(L) else -np.inf
    return C * _quad(lambda u: 0.0 if u < -700 else math.exp(-k * u - rate * math.exp(-u)), u_lo, np.inf)


def _tail_side(C: float, rate: float, L: float) -> float:
    """int_L^inf C e^{-rate y}/y dy = C e^{-rate L} int_0^inf e^{-rate z}/(L + z) dz"""
    if math.isinf(L):
        return 0.0
    return C * math.exp(-rate * L) * _quad(lambda z: math.exp(-rate * z) / (L + z), 0.0, np.inf)


def _exp_integrand(z: float, rate: float, sign: float) -> float:
    if z <= 0:
        return sign
    if z < 1.0:
        return math.expm1(sign * z) / z * math.exp(-rate * z)
    return (math.exp((sign - rate) * z) - math.exp(-rate * z)) / z


def _exp_side(C: float, rate: float, L: float, sign: float) -> float:
    """int_0^L C (e^{sign z} - 1) e^{-rate z}/z dz"""
    return C * _quad(lambda z: _exp_integrand(z, rate, sign), 0.0, L)


def levy_quadrature(
    kind: str,
    C: float,
    G: float,
    M: float,
    L_minus: float = -math.inf,
    L_plus: float = math.inf,
    k: Optional[int] = None,
) -> float:
    """Integrals against the VG density restricted to [L_minus, L_plus].

    kind = "moment": c(k); "tail": mass outside [L_minus, L_plus];
    "exp": integral of (e^y - 1).
    """
    if not L_minus < 0 < L_plus:
        raise DomainError(f"need L_minus < 0 < L_plus, got [{L_minus}, {L_plus}]")
    if kind == MOMENT:
        if k is None or k < 1:
            raise DomainError("moment quadrature needs k >= 1")
        return _moment_side(C, M, L_plus, k) + (-1) ** k * _moment_side(C, G, abs(L_minus), k)
    if kind == TAIL_MASS:
        return _tail_side(C, M, L_plus) + _tail_side(C, G, abs(L_minus))
    if kind == EXPONENTIAL:
        if M <= 1 and math.isinf(L_plus):
            raise DomainError(f"e^y is not integrable against the VG density with M={M} <= 1")
        return _exp_side(C, M, L_plus, 1.0) + _exp_side(C, G, abs(L_minus), -1.0)
    raise DomainError(f"unknown integrand kind '{kind}'")
