# app/models/jump_diffusion.py
"""
Polynomial jump-diffusions

    dX = b(t,X) dt + sigma(t,X) dW + lambda(t,X) dJ,   discount rate r(t,X)

and the action of (A - r) on polynomials.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from app.analysis.polynomials import BiPoly, binom, poly_diff, poly_sum
from app.analysis.quadrature import EXPONENTIAL, levy_quadrature
from app.config import N_MAX
from app.errors import ConfigurationError, DomainError, PreconditionError, UnsupportedError
from app.models.levy import (
    LevyMeasureSpec,
    MomentTable,
    TruncatedVarianceGamma,
    printed_martingale_constant,
    vg_martingale_constant,
    vg_truncated_moment,
)

logger = logging.getLogger(__name__)

_GRID = 201


@dataclass(frozen=True)
class PolynomialModel:
    drift: BiPoly
    sigma2: BiPoly
    jump_scale: BiPoly = field(default_factory=lambda: BiPoly.constant(0.0))
    discount: BiPoly = field(default_factory=lambda: BiPoly.constant(0.0))
    levy: LevyMeasureSpec = None
    x0: float = 0.0
    t0: float = 0.0
    # full-truncation floor for square-root type diffusions (CIR); None for unrestricted states
    state_floor: Optional[float] = None
    name: str = "custom"

    def __post_init__(self):
        if self.levy is not None and self.jump_scale.is_zero():
            raise ConfigurationError("a Lévy measure was given but the jump scale lambda is identically zero")

    @property
    def has_jumps(self) -> bool:
        return self.levy is not None and not self.jump_scale.is_zero()

    def check_domain(self, T: float, x_lo: float, x_hi: float) -> None:
        """sigma^2 >= 0 and (with jumps) lambda > 0 on [t0, T] x [x_lo, x_hi]"""
        lo, _ = poly_range(self.sigma2, (self.t0, T), (x_lo, x_hi))
        if lo < -1e-12:
            raise ConfigurationError(f"variance polynomial is negative on the state domain (min {lo:.3g})")
        if self.has_jumps and not self.jump_scale.is_constant():
            lam_lo, _ = poly_range(self.jump_scale, (self.t0, T), (x_lo, x_hi))
            if lam_lo <= 0:
                raise ConfigurationError("jump scale must be positive on the state domain")


@dataclass(frozen=True)
class GeneratorResult:
    """(A - r) t^i x^j expanded as sum c_kl t^k x^l"""

    poly: BiPoly
    i: int = 0
    j: int = 0


def poly_range(p: BiPoly, t_range: Tuple[float, float], x_range: Tuple[float, float]) -> Tuple[float, float]:
    """Min / max of p over a box, by dense grid evaluation (exact for constants)"""
    if p.is_constant():
        c = p.coeff(0, 0)
        return c, c
    tt = np.linspace(t_range[0], t_range[1], _GRID)
    xx = np.linspace(x_range[0], x_range[1], _GRID)
    vals = p(tt[:, None], xx[None, :])
    return float(np.min(vals)), float(np.max(vals))


# ──────────────────────────────────────────────────────────────────────────────
# Generator
# ──────────────────────────────────────────────────────────────────────────────
def _jump_term(model: PolynomialModel, i: int, j: int) -> BiPoly:
    """B t^i x^j = t^i sum_{k=1}^{j} C(j,k) x^{j-k} lambda^k c(k), uncompensated"""
    if not model.has_jumps or j == 0:
        return BiPoly()
    terms = []
    lam_power = BiPoly.constant(1.0)
    for k in range(1, j + 1):
        lam_power = lam_power * model.jump_scale
        try:
            ck = model.levy.moment(k)
        except ConfigurationError as e:
            raise ConfigurationError(f"generator of t^{i} x^{j} needs jump moment c({k}): {e}") from e
        terms.append(BiPoly.monomial(i, j - k, binom(j, k) * ck) * lam_power)
    return poly_sum(terms)


def apply_generator(model: PolynomialModel, i: int, j: int) -> GeneratorResult:
    if i < 0 or j < 0:
        raise DomainError("monomial exponents must be non-negative")
    return GeneratorResult(_generator_cached(model, i, j), i, j)


@lru_cache(maxsize=8192)
def _generator_cached(model: PolynomialModel, i: int, j: int) -> BiPoly:
    f = BiPoly.monomial(i, j)
    out = poly_diff(f, "t")
    if j >= 1:
        out = out + model.drift * poly_diff(f, "x")
    if j >= 2:
        out = out + (model.sigma2 * 0.5) * poly_diff(f, "x", 2)
    out = out + _jump_term(model, i, j)
    out = out - model.discount * f
    return out


def apply_generator_to(model: PolynomialModel, f: BiPoly) -> BiPoly:
    """(A - r) f by linearity over the monomials of f"""
    return poly_sum(_generator_cached(model, i, j) * c for (i, j), c in f.items())


# ──────────────────────────────────────────────────────────────────────────────
# Truncation of big jumps
# ──────────────────────────────────────────────────────────────────────────────
def truncate_for_barriers(
    model: PolynomialModel,
    b_minus: float,
    b_plus: float,
    T: float,
    n_max: int = N_MAX,
) -> PolynomialModel:
    """Kill the process at the first jump that alone must leave [b_minus, b_plus].

    The Lévy measure is restricted to [L_minus, L_plus] (returned as a moment
    table c(1..2 n_max)) and its removed mass lambda_* is added to the discount.
    A user moment table is taken as already truncated; only its lambda_* is
    moved into the discount.
    """
    if not (math.isfinite(b_minus) and math.isfinite(b_plus)):
        raise UnsupportedError("unbounded barrier interval needs the semidefinite formulation")
    if not model.has_jumps:
        return model
    levy = model.levy
    if isinstance(levy, MomentTable):
        if levy.in_discount:
            return model
        if levy.support is None:
            raise PreconditionError("a moment table needs jump-size bounds L_minus, L_plus to build overshoot pieces")
        logger.info(f"✂️ moment table on [{levy.support[0]:.4f}, {levy.support[1]:.4f}], lambda*={levy.lambda_star:.3e}")
        return replace(
            model, levy=replace(levy, in_discount=True), discount=model.discount + levy.lambda_star
        )

    lam_lo, _ = poly_range(model.jump_scale, (model.t0, T), (b_minus, b_plus))
    if lam_lo <= 0:
        raise PreconditionError(f"minimum of lambda over the barrier box is {lam_lo:.3g}; truncation needs > 0")

    L_plus = (b_plus - b_minus) / lam_lo
    L_minus = (b_minus - b_plus) / lam_lo
    if isinstance(levy, TruncatedVarianceGamma):
        L_plus, L_minus = min(L_plus, levy.L_plus), max(L_minus, levy.L_minus)
    truncated = TruncatedVarianceGamma(levy.C, levy.G, levy.M, L_minus, L_plus)
    lambda_star = truncated.tail_mass
    table = MomentTable(
        c=tuple(truncated.moment(k) for k in range(1, 2 * n_max + 1)),
        lambda_star=lambda_star,
        L_minus=L_minus,
        L_plus=L_plus,
        origin=truncated,
        in_discount=True,
    )
    logger.info(
        f"✂️ truncated jumps to [{L_minus:.4f}, {L_plus:.4f}], lambda*={lambda_star:.3e}, "
        f"p*=exp(-lambda* T)={math.exp(-lambda_star * T):.6f}"
    )
    return replace(model, levy=table, discount=model.discount + lambda_star)


def vg_martingale_drift(r_poly: BiPoly, C: float, G: float, M: float) -> BiPoly:
    """Drift b(t) = r(t) - c making e^{-alpha_t + X_t} a martingale under VG jumps.

    c is the quadrature of (e^y - 1) against the measure; the closed form and
    the printed variant are checked against it.
    """
    if r_poly.deg_x > 0:
        raise DomainError("martingale drift expects a rate depending on t only")
    c = levy_quadrature(EXPONENTIAL, C, G, M)
    closed = vg_martingale_constant(C, G, M)
    printed = printed_martingale_constant(C, G, M)
    if not math.isclose(closed, c, rel_tol=1e-8):
        logger.warning(f"⚠️ martingale constant: closed form {closed:.10f} vs quadrature {c:.10f}")
    logger.info(f"📐 martingale constant c={c:.10f} (closed form {closed:.10f}, printed variant {printed:.10f})")
    return r_poly - c


def vg_compensated_drift(b1: float, C: float, G: float, M: float) -> float:
    """Generator drift b = b1 - int_{-1}^{1} y eta(dy) for dX = b1 dt + dZ"""
    return b1 - vg_truncated_moment(C, G, M, -1.0, 1.0, 1)


def killing_rate(model: PolynomialModel) -> float:
    levy = model.levy
    return levy.lambda_star if isinstance(levy, MomentTable) else 0.0
