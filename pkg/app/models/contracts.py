# app/models/contracts.py
"""
Barrier contracts as moment problems, and the four case-study bundles.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

from app.analysis.polynomials import BiPoly
from app.config import N_MAX
from app.errors import ConfigurationError, PreconditionError
from app.models.jump_diffusion import (
    PolynomialModel,
    killing_rate,
    poly_range,
    truncate_for_barriers,
    vg_compensated_drift,
    vg_martingale_drift,
)
from app.models.levy import MomentTable, VarianceGamma
from app.services.moment_lp_service import (
    MeasurePiece,
    MomentObjective,
    SupportSet,
    raw_functional,
)

logger = logging.getLogger(__name__)

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class PayoffPiece:
    support: SupportSet
    poly: BiPoly


@dataclass(frozen=True)
class ContractSpec:
    name: str
    B_d: float
    B_u: float
    T: float
    terminal: Tuple[PayoffPiece, ...]
    running: Tuple[PayoffPiece, ...] = ()
    # applied to the LP optimum outside the program (p* or a deterministic discount)
    external_factor: float = 1.0
    t0: float = 0.0
    # killing factor exp(-lambda_* (T - t0)) folded into external_factor by the p* shortcut
    p_star: float = 1.0
    p_star_shortcut: bool = False

    def __post_init__(self):
        if not self.B_d < self.B_u:
            raise ConfigurationError(f"barriers out of order: B_d={self.B_d} >= B_u={self.B_u}")
        if not self.T > self.t0:
            raise ConfigurationError(f"maturity T={self.T} must exceed the start time {self.t0}")
        if not self.external_factor > 0:
            raise ConfigurationError("external discount factor must be positive")
        self.check_partition()

    def check_partition(self) -> None:
        """Terminal supports tile {T} x [B_d, B_u]; running supports tile [t0, T] x [B_d, B_u]"""
        if not self.terminal:
            raise ConfigurationError("a contract needs at least one terminal piece (possibly with zero payoff)")
        for p in self.terminal:
            if p.support.kind != "vsegment" or abs(p.support.t_lo - self.T) > _EDGE_TOL:
                raise ConfigurationError(f"terminal piece {p.support} does not lie on t = T = {self.T}")
        _check_tiling([(p.support.x_lo, p.support.x_hi) for p in self.terminal], self.B_d, self.B_u, "terminal")
        if self.running:
            for p in self.running:
                s = p.support
                if s.kind != "rectangle" or abs(s.t_lo - self.t0) > _EDGE_TOL or abs(s.t_hi - self.T) > _EDGE_TOL:
                    raise ConfigurationError(f"running piece {s} must span [t0, T] in time")
            _check_tiling([(p.support.x_lo, p.support.x_hi) for p in self.running], self.B_d, self.B_u, "running")

    @property
    def terminal_only(self) -> bool:
        return all(p.poly.is_zero() for p in self.running)


def _check_tiling(intervals: List[Tuple[float, float]], lo: float, hi: float, what: str) -> None:
    intervals = sorted(intervals)
    edge = lo
    for a, b in intervals:
        if abs(a - edge) > _EDGE_TOL:
            raise ConfigurationError(f"{what} pieces leave a gap or overlap at x={edge}")
        edge = b
    if abs(edge - hi) > _EDGE_TOL:
        raise ConfigurationError(f"{what} pieces end at x={edge}, expected {hi}")


class BarrierProblem(NamedTuple):
    model: PolynomialModel
    contract: ContractSpec
    pieces: List[MeasurePiece]


def payoff_to_objective(contract: ContractSpec, pieces: Sequence[MeasurePiece]) -> MomentObjective:
    """Polynomial payoffs on each piece -> linear functional on that piece's raw moments"""
    objective = MomentObjective()
    for payoff, role in [(p, "exit") for p in contract.terminal] + [(p, "occupation") for p in contract.running]:
        match = [m for m in pieces if m.support == payoff.support and m.role == role]
        if not match:
            raise ConfigurationError(f"no {role} piece with support {payoff.support} for a payoff")
        piece = match[0]
        terms = objective.terms.setdefault(piece.name, {})
        for k, c in raw_functional(payoff.poly, piece.support).items():
            terms[k] = terms.get(k, 0.0) + c
    objective.terms = {name: t for name, t in objective.terms.items() if any(c != 0 for c in t.values())}
    return objective


# ──────────────────────────────────────────────────────────────────────────────
# Generic constructor
# ──────────────────────────────────────────────────────────────────────────────
def _jump_support(model: PolynomialModel) -> Tuple[float, float]:
    levy = model.levy
    if isinstance(levy, MomentTable) and levy.support is not None:
        return levy.support
    raise PreconditionError("jump sizes must be bounded (truncate the Lévy measure or give L_minus, L_plus)")


def build_barrier_problem(
    model: PolynomialModel,
    B_d: float,
    B_u: float,
    T: float,
    breaks: Sequence[float] = (),
    terminal: Optional[Sequence[BiPoly]] = None,
    running: Optional[BiPoly] = None,
    name: str = "custom",
    external_factor: float = 1.0,
    p_star_shortcut: bool = False,
    n_max: int = N_MAX,
) -> BarrierProblem:
    """Pieces, payoffs and (for jump models) the killed model for a double-barrier contract.

    Continuous models exit on the barrier lines; jump models exit into
    overshoot rectangles [B_u, B_u + lam_max L+] and [B_d + lam_max L-, B_d].
    With ``p_star_shortcut`` the killing rate is taken out of the LP and
    applied as p* = exp(-lambda_* (T - t0)) to the optimum instead.
    """
    if not B_d < model.x0 < B_u:
        raise ConfigurationError(f"x0={model.x0} must lie strictly inside ({B_d}, {B_u})")
    edges = [B_d, *sorted(breaks), B_u]
    if any(b < B_d or b > B_u for b in breaks):
        raise ConfigurationError(f"payoff breakpoints {list(breaks)} must lie in [{B_d}, {B_u}]")
    terminal = list(terminal) if terminal is not None else [BiPoly() for _ in range(len(edges) - 1)]
    if len(terminal) != len(edges) - 1:
        raise ConfigurationError(f"{len(edges) - 1} terminal intervals but {len(terminal)} payoff polynomials")
    model.check_domain(T, B_d, B_u)

    if model.has_jumps:
        model = truncate_for_barriers(model, B_d, B_u, T, n_max=n_max)

    t0 = model.t0
    pieces: List[MeasurePiece] = []
    if model.has_jumps:
        L_minus, L_plus = _jump_support(model)
        _, lam_max = poly_range(model.jump_scale, (t0, T), (B_d, B_u))
        pieces.append(MeasurePiece("overshoot_up", SupportSet.rectangle(t0, T, B_u, B_u + lam_max * L_plus)))
        pieces.append(MeasurePiece("overshoot_down", SupportSet.rectangle(t0, T, B_d + lam_max * L_minus, B_d)))
    else:
        pieces.append(MeasurePiece("barrier_up", SupportSet.hsegment(t0, T, B_u)))
        pieces.append(MeasurePiece("barrier_down", SupportSet.hsegment(t0, T, B_d)))
    terminal_payoffs = []
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        support = SupportSet.vsegment(T, a, b)
        pieces.append(MeasurePiece(f"terminal_{k}", support))
        terminal_payoffs.append(PayoffPiece(support, terminal[k]))
    occupation = SupportSet.rectangle(t0, T, B_d, B_u)
    pieces.append(MeasurePiece("occupation", occupation, role="occupation"))
    running_payoffs = (PayoffPiece(occupation, running),) if running is not None and not running.is_zero() else ()

    p_star = math.exp(-killing_rate(model) * (T - t0))
    if p_star_shortcut:
        if running_payoffs:
            raise ConfigurationError("the p* shortcut is only valid for payoffs at maturity")
        model = replace(model, discount=model.discount - killing_rate(model))
        external_factor *= p_star

    contract = ContractSpec(
        name=name,
        B_d=B_d,
        B_u=B_u,
        T=T,
        terminal=tuple(terminal_payoffs),
        running=running_payoffs,
        external_factor=external_factor,
        t0=t0,
        p_star=p_star,
        p_star_shortcut=p_star_shortcut,
    )
    return BarrierProblem(model, contract, pieces)


# ──────────────────────────────────────────────────────────────────────────────
# Case studies
# ──────────────────────────────────────────────────────────────────────────────
def _check_strike(B_d, B_u, K):
    if not B_d < B_u:
        raise ConfigurationError(f"barriers out of order: B_d={B_d} >= B_u={B_u}")
    if not B_d <= K <= B_u:
        raise ConfigurationError(f"strike K={K} must lie in [{B_d}, {B_u}]")


def gbm_double_knockout(b, sigma, B_d, B_u, K, x0, T) -> BarrierProblem:
    """dS = b S dt + sigma S dW, undiscounted knockout call"""
    _check_strike(B_d, B_u, K)
    if B_d <= 0:
        raise ConfigurationError("GBM barriers must be positive")
    x = BiPoly.x()
    model = PolynomialModel(drift=x * b, sigma2=(x ** 2) * sigma ** 2, x0=x0, state_floor=0.0, name="gbm")
    return build_barrier_problem(
        model, B_d, B_u, T, breaks=(K,), terminal=[BiPoly(), x - K], name="gbm-dko"
    )


def vg_double_knockout(b, C, G, M, B_d, B_u, K, x0, T, p_star_shortcut: bool = False) -> BarrierProblem:
    """dX = b dt + dZ with Z a VG process; knockout call on X.

    b is the drift of the path, so the generator drift is b minus the mean of
    the jumps in [-1, 1].
    """
    _check_strike(B_d, B_u, K)
    x = BiPoly.x()
    drift = vg_compensated_drift(b, C, G, M)
    logger.info(f"📐 VG drift {b} -> generator drift {drift:.10f}")
    model = PolynomialModel(
        drift=BiPoly.constant(drift),
        sigma2=BiPoly(),
        jump_scale=BiPoly.constant(1.0),
        levy=VarianceGamma(C, G, M),
        x0=x0,
        name="vg",
    )
    return build_barrier_problem(
        model, B_d, B_u, T, breaks=(K,), terminal=[BiPoly(), x - K], name="vg-dko",
        p_star_shortcut=p_star_shortcut,
    )


def cir_american_corridor(a, b, sigma, r, B_d, B_u, x0, T) -> BarrierProblem:
    """Unit rate paid while the CIR state stays inside the corridor, discounted at r"""
    if a <= 0 or b <= 0:
        raise ConfigurationError(f"CIR needs a > 0 and b > 0, got a={a}, b={b}")
    if B_d < 0:
        raise ConfigurationError("CIR corridor must lie in the non-negative half-line")
    x = BiPoly.x()
    model = PolynomialModel(
        drift=BiPoly.constant(a * b) - x * a,
        sigma2=x * sigma ** 2,
        discount=BiPoly.constant(r),
        x0=x0,
        state_floor=0.0,
        name="cir",
    )
    return build_barrier_problem(
        model, B_d, B_u, T, running=BiPoly.constant(1.0), name="cir-corridor"
    )


def expvg_double_no_touch(C, G, M, r_b, r_s, B_d, B_u, S0, T) -> BarrierProblem:
    """S = exp(X), X pure-jump VG with martingale drift r(t) - c, r(t) = r_b + r_s t^2"""
    if M <= 1:
        raise ConfigurationError(f"exp-VG needs M > 1 for a finite martingale correction, got M={M}")
    if not 0 < B_d < S0 < B_u:
        raise ConfigurationError(f"need 0 < B_d < S0 < B_u, got {B_d}, {S0}, {B_u}")
    t = BiPoly.t()
    rate = BiPoly.constant(r_b) + (t ** 2) * r_s
    model = PolynomialModel(
        drift=vg_martingale_drift(rate, C, G, M),
        sigma2=BiPoly(),
        jump_scale=BiPoly.constant(1.0),
        discount=rate,
        levy=VarianceGamma(C, G, M),
        x0=math.log(S0),
        name="expvg",
    )
    return build_barrier_problem(
        model, math.log(B_d), math.log(B_u), T, terminal=[BiPoly.constant(1.0)], name="expvg-dnt"
    )
