# app/models/levy.py
"""
Lévy measure descriptions and the Variance Gamma closed forms.

eta(dy) = C/y e^{-My} dy (y > 0) + C/|y| e^{-G|y|} dy (y < 0)
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import special

from app.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VarianceGamma:
    C: float
    G: float
    M: float

    def __post_init__(self):
        if min(self.C, self.G, self.M) <= 0:
            raise ConfigurationError(f"VG parameters must be positive, got C={self.C}, G={self.G}, M={self.M}")

    def moment(self, k: int) -> float:
        return vg_truncated_moment(self.C, self.G, self.M, -math.inf, math.inf, k)


@dataclass(frozen=True)
class TruncatedVarianceGamma:
    C: float
    G: float
    M: float
    L_minus: float
    L_plus: float

    def __post_init__(self):
        if min(self.C, self.G, self.M) <= 0:
            raise ConfigurationError("VG parameters must be positive")
        if not (self.L_minus < 0 < self.L_plus):
            raise ConfigurationError(f"truncation box must straddle 0, got [{self.L_minus}, {self.L_plus}]")

    def moment(self, k: int) -> float:
        return vg_truncated_moment(self.C, self.G, self.M, self.L_minus, self.L_plus, k)

    @property
    def tail_mass(self) -> float:
        return vg_tail_mass(self.C, self.G, self.M, self.L_minus, self.L_plus)


@dataclass(frozen=True)
class MomentTable:
    """Jump moments c(1..K) of a bounded measure plus the removed mass lambda_star.

    ``L_minus``/``L_plus`` bound the jump sizes of the table. ``origin`` keeps
    the measure the table was computed from so that the Monte Carlo engine can
    still simulate it. ``in_discount`` marks tables whose lambda_star already
    sits in the model's discount rate.
    """

    c: Tuple[float, ...]
    lambda_star: float = 0.0
    L_minus: Optional[float] = None
    L_plus: Optional[float] = None
    origin: Optional[TruncatedVarianceGamma] = field(default=None, compare=False)
    in_discount: bool = False

    def __post_init__(self):
        if self.lambda_star < 0:
            raise ConfigurationError("lambda_star must be non-negative")
        if (self.L_minus is None) != (self.L_plus is None):
            raise ConfigurationError("give both jump-size bounds L_minus and L_plus, or neither")
        if self.L_minus is not None and not (self.L_minus < 0 < self.L_plus):
            raise ConfigurationError(f"jump-size bounds must straddle 0, got [{self.L_minus}, {self.L_plus}]")
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))

    @property
    def K(self) -> int:
        return len(self.c)

    def moment(self, k: int) -> float:
        if k < 1 or k > len(self.c):
            raise ConfigurationError(f"moment table has no entry for c({k}); available k = 1..{len(self.c)}")
        return self.c[k - 1]

    @property
    def support(self) -> Optional[Tuple[float, float]]:
        if self.L_minus is not None:
            return self.L_minus, self.L_plus
        if self.origin is None:
            return None
        return self.origin.L_minus, self.origin.L_plus


LevyMeasureSpec = Optional[Union[VarianceGamma, TruncatedVarianceGamma, MomentTable]]


# ──────────────────────────────────────────────────────────────────────────────
# Closed forms
# ──────────────────────────────────────────────────────────────────────────────
def _lower_gamma(k: int, z: float) -> float:
    if math.isinf(z):
        return math.gamma(k)
    return float(special.gammainc(k, z) * special.gamma(k))


def vg_truncated_moment(C: float, G: float, M: float, L_minus: float, L_plus: float, k: int) -> float:
    """c(k) = integral of y^k over [L_minus, L_plus] against the VG measure"""
    if k < 1:
        raise DomainError("c(0) diverges: infinite activity at origin")
    up = _lower_gamma(k, M * L_plus) / M ** k
    down = _lower_gamma(k, G * abs(L_minus)) / G ** k
    return C * (up + (-1) ** k * down)


def vg_tail_mass(C: float, G: float, M: float, L_minus: float, L_plus: float) -> float:
    """lambda_* = mass of the VG measure outside [L_minus, L_plus]"""
    if not (L_minus < 0 < L_plus):
        raise DomainError(f"need L_minus < 0 < L_plus, got [{L_minus}, {L_plus}]")
    up = 0.0 if math.isinf(L_plus) else float(special.exp1(M * L_plus))
    down = 0.0 if math.isinf(L_minus) else float(special.exp1(G * abs(L_minus)))
    return C * (up + down)


def vg_martingale_constant(C: float, G: float, M: float) -> float:
    """c = integral of (e^y - 1) against the VG measure; finite only for M > 1"""
    if M <= 1:
        raise DomainError(f"e^X is not integrable under VG with M={M} <= 1")
    return C * (math.log(M / (M - 1.0)) + math.log(G / (G + 1.0)))


def printed_martingale_constant(C: float, G: float, M: float) -> float:
    """The variant C(log(G/(1+G)) + log(M/(1-M))) read with |M/(1-M)|.

    For M > 1 the second argument is negative; the mismatch is logged and the
    modulus reading is compared against the integral.
    """
    arg = M / (1.0 - M)
    if arg < 0:
        logger.warning(
            f"⚠️ martingale constant formula takes log of a negative number (M/(1-M) = {arg:.6f}); "
            f"using |M/(1-M)| = M/(M-1)"
        )
    value = C * (math.log(G / (1.0 + G)) + math.log(abs(arg)))
    exact = vg_martingale_constant(C, G, M)
    if not np.isclose(value, exact, rtol=1e-10, atol=0.0):
        logger.warning(f"⚠️ printed martingale constant {value:.6f} differs from the integral {exact:.6f}")
    return value
