# app/services/monte_carlo_service.py
"""
Euler Monte Carlo for barrier contracts on polynomial jump-diffusions.

Paths are simulated in batches; batch b draws from Philox keyed by
(seed, b), so estimates do not depend on how batches are scheduled.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from app.analysis.polynomials import BiPoly
from app.config import WORKERS
from app.errors import ConfigurationError, UnsupportedError
from app.models.contracts import ContractSpec
from app.models.jump_diffusion import PolynomialModel, killing_rate
from app.models.levy import MomentTable, TruncatedVarianceGamma, VarianceGamma
from app.models.schemas import MCConfig
from app.services.moment_lp_service import MeasurePiece

logger = logging.getLogger(__name__)

RunningFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class MCResult:
    estimate: float
    std_error: float
    paths: int


@dataclass
class PathBatch:
    exit_t: np.ndarray
    exit_x: np.ndarray
    exit_discount: np.ndarray
    survived: np.ndarray
    running: np.ndarray  # (paths, k) discounted running integrals


class _VGIncrements:
    """Difference of two gamma processes; optional rejection of big jumps"""

    def __init__(self, C, G, M, L_minus=-math.inf, L_plus=math.inf):
        self.C, self.G, self.M = C, G, M
        self.L_minus, self.L_plus = L_minus, L_plus

    def draw(self, rng: np.random.Generator, n: int, dt: float) -> np.ndarray:
        up = self._gamma(rng, n, dt, self.M, self.L_plus)
        down = self._gamma(rng, n, dt, self.G, abs(self.L_minus))
        return up - down

    def _gamma(self, rng, n, dt, rate, cap):
        out = rng.gamma(self.C * dt, 1.0 / rate, n)
        if math.isfinite(cap):
            for _ in range(50):
                big = out > cap
                if not big.any():
                    break
                out[big] = rng.gamma(self.C * dt, 1.0 / rate, int(big.sum()))
        return out


def _jump_sampler(model: PolynomialModel, truncated: bool) -> Optional[_VGIncrements]:
    if not model.has_jumps:
        return None
    levy = model.levy
    if isinstance(levy, MomentTable):
        if levy.origin is None:
            raise UnsupportedError("cannot simulate jumps known only through their moments")
        levy = levy.origin
    if isinstance(levy, TruncatedVarianceGamma):
        if truncated:
            return _VGIncrements(levy.C, levy.G, levy.M, levy.L_minus, levy.L_plus)
        return _VGIncrements(levy.C, levy.G, levy.M)
    if isinstance(levy, VarianceGamma):
        return _VGIncrements(levy.C, levy.G, levy.M)
    raise UnsupportedError(f"no simulation scheme for {type(levy).__name__}")


def _normals(rng: np.random.Generator, n: int, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal(n)
    z = rng.standard_normal(n // 2)
    return np.concatenate([z, -z])


def simulate_batch(
    model: PolynomialModel,
    contract: ContractSpec,
    n_paths: int,
    n_steps: int,
    rng: np.random.Generator,
    antithetic: bool = True,
    truncated: bool = False,
    running_fn: Optional[RunningFn] = None,
    discount: Optional[BiPoly] = None,
) -> PathBatch:
    """Euler paths with discrete barrier monitoring at the grid times.

    ``running_fn(t, x)`` returns an (n_paths, k) array integrated against the
    discount along each path by the trapezoid rule until exit or maturity.
    """
    t0, T = contract.t0, contract.T
    dt = (T - t0) / n_steps
    sqdt = math.sqrt(dt)
    discount = model.discount if discount is None else discount
    jumps = _jump_sampler(model, truncated)
    diffusive = not model.sigma2.is_zero()
    floor = model.state_floor

    x = np.full(n_paths, float(model.x0))
    alive = np.ones(n_paths, dtype=bool)
    alpha = np.zeros(n_paths)
    r_prev = np.broadcast_to(discount(t0, x), x.shape).astype(float)
    disc_prev = np.ones(n_paths)
    f_prev = running_fn(t0, x) if running_fn is not None else np.zeros((n_paths, 0))
    running = np.zeros_like(f_prev)
    exit_t = np.full(n_paths, T)
    exit_x = np.empty(n_paths)
    exit_discount = np.empty(n_paths)

    for step in range(n_steps):
        t = t0 + step * dt
        t_next = t0 + (step + 1) * dt
        xe = np.maximum(x, floor) if floor is not None else x
        dx = model.drift(t, xe) * dt
        if diffusive:
            dx = dx + np.sqrt(np.maximum(model.sigma2(t, xe), 0.0)) * sqdt * _normals(rng, n_paths, antithetic)
        if jumps is not None:
            # jumps have no sign symmetry; each path gets its own draw
            dJ = jumps.draw(rng, n_paths, dt)
            dx = dx + model.jump_scale(t, xe) * dJ
        x_new = np.where(alive, x + dx, x)

        r_new = np.broadcast_to(discount(t_next, x_new), x.shape).astype(float)
        alpha_new = alpha + 0.5 * dt * (r_prev + r_new)
        disc_new = np.exp(-alpha_new)
        outside = (x_new <= contract.B_d) | (x_new >= contract.B_u)
        exiting = alive & outside
        staying = alive & ~outside

        if running.shape[1]:
            f_new = running_fn(t_next, x_new)
            left = f_prev * disc_prev[:, None]
            running[staying] += 0.5 * dt * (left + f_new * disc_new[:, None])[staying]
            running[exiting] += dt * left[exiting]
            f_prev = f_new

        exit_t[exiting] = t_next
        exit_x[exiting] = x_new[exiting]
        exit_discount[exiting] = disc_new[exiting]

        alive = staying
        x, alpha, r_prev, disc_prev = x_new, alpha_new, r_new, disc_new
        if not alive.any():
            break

    exit_x[alive] = x[alive]
    exit_discount[alive] = disc_prev[alive]
    return PathBatch(exit_t, exit_x, exit_discount, alive.copy(), running)


# ──────────────────────────────────────────────────────────────────────────────
# Batching
# ──────────────────────────────────────────────────────────────────────────────
def _batch_sizes(config: MCConfig) -> List[int]:
    paths = config.paths + (config.paths % 2 if config.antithetic else 0)
    size = config.batch_size - (config.batch_size % 2 if config.antithetic else 0)
    sizes = [size] * (paths // size)
    if paths % size:
        sizes.append(paths % size)
    return sizes


def _rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def _n_steps(config: MCConfig, contract: ContractSpec) -> int:
    return max(1, math.ceil(config.steps_per_year * (contract.T - contract.t0) - 1e-9))


def _run_batches(func: Callable[[int, int], np.ndarray], config: MCConfig, workers: int) -> np.ndarray:
    sizes = _batch_sizes(config)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(func, range(len(sizes)), sizes))
    return np.concatenate(parts, axis=0)


def _pair_average(values: np.ndarray, antithetic: bool) -> np.ndarray:
    """Average antithetic partners (i, i + n/2) within a batch into iid rows"""
    if not antithetic:
        return values
    half = values.shape[0] // 2
    return 0.5 * (values[:half] + values[half:])


# ──────────────────────────────────────────────────────────────────────────────
# Pricing
# ──────────────────────────────────────────────────────────────────────────────
def _terminal_payoff(contract: ContractSpec, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    assigned = np.zeros(x.shape, dtype=bool)
    for piece in contract.terminal:
        mask = piece.support.contains(t, x) & ~assigned
        if mask.any() and not piece.poly.is_zero():
            out[mask] = piece.poly(t[mask], x[mask])
        assigned |= mask
    return out


def mc_price(
    model: PolynomialModel,
    contract: ContractSpec,
    config: MCConfig,
    truncated: bool = False,
    workers: int = WORKERS,
) -> MCResult:
    """E[e^{-alpha_T} h(T, X_T); T < tau] + E[int_0^{tau ^ T} e^{-alpha_s} g(s, X_s) ds]

    With ``truncated`` the killed process is simulated (big jumps rejected,
    killing rate kept in the discount), which is the process the LP sees.
    Otherwise the untruncated process is simulated and the killing rate is
    removed from the discount.
    """
    discount = model.discount
    factor = contract.external_factor
    if not truncated:
        if contract.p_star_shortcut:
            factor = factor / contract.p_star
        else:
            discount = discount - killing_rate(model)

    running_polys = [p.poly for p in contract.running]

    def running_fn(t, x):
        vals = np.zeros((x.shape[0], 1))
        for p, poly in zip(contract.running, running_polys):
            mask = p.support.contains(np.full(x.shape, t), x)
            vals[mask, 0] = np.broadcast_to(poly(t, x), x.shape)[mask]
        return vals

    n_steps = _n_steps(config, contract)

    def one_batch(b: int, size: int) -> np.ndarray:
        batch = simulate_batch(
            model, contract, size, n_steps, _rng(config.seed, b), config.antithetic, truncated,
            running_fn if running_polys else None, discount,
        )
        value = np.where(batch.survived, batch.exit_discount * _terminal_payoff(contract, batch.exit_t, batch.exit_x), 0.0)
        if batch.running.shape[1]:
            value = value + batch.running[:, 0]
        return _pair_average(value, config.antithetic)

    values = _run_batches(one_batch, config, workers) * factor
    n = values.shape[0]
    estimate = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    paths = n * 2 if config.antithetic else n
    logger.info(f"🎲 MC {contract.name}: {estimate:.6f} ± {std_error:.6f} ({paths} paths, {n_steps} steps)")
    return MCResult(estimate, std_error, paths)


# ──────────────────────────────────────────────────────────────────────────────
# Moments
# ──────────────────────────────────────────────────────────────────────────────
def _unit_monomials(piece: MeasurePiece, N: int, t, x) -> np.ndarray:
    s, y = piece.support.unit_coordinates(t, x)
    return np.stack([s ** a * y ** b for (a, b) in piece.indices(N)], axis=-1)


def _nearest_piece(pieces: Sequence[MeasurePiece], t: np.ndarray, x: np.ndarray) -> np.ndarray:
    dist = []
    for p in pieces:
        sup = p.support
        dt = np.maximum(np.maximum(sup.t_lo - t, t - sup.t_hi), 0.0)
        dx = np.maximum(np.maximum(sup.x_lo - x, x - sup.x_hi), 0.0)
        dist.append(np.hypot(dt, dx))
    return np.argmin(np.stack(dist, axis=0), axis=0)


def mc_moments(
    model: PolynomialModel,
    contract: ContractSpec,
    pieces: Sequence[MeasurePiece],
    N: int,
    config: MCConfig,
    workers: int = WORKERS,
) -> np.ndarray:
    """Per-path contributions to every scaled moment of the truncated problem.

    Columns follow the variable order of ``build_lp`` for the same pieces.
    """
    exits = [p for p in pieces if p.role == "exit"]
    occupation = [p for p in pieces if p.role == "occupation"]
    if len(occupation) != 1:
        raise ConfigurationError("expected exactly one occupation piece")
    occ = occupation[0]
    n_steps = _n_steps(config, contract)

    def running_fn(t, x):
        return _unit_monomials(occ, N, np.full(x.shape, t), x)

    def one_batch(b: int, size: int) -> np.ndarray:
        batch = simulate_batch(
            model, contract, size, n_steps, _rng(config.seed, b), config.antithetic, True, running_fn
        )
        owner = _nearest_piece(exits, batch.exit_t, batch.exit_x)
        columns = []
        for k, piece in enumerate(pieces):
            if piece.role == "occupation":
                columns.append(batch.running)
                continue
            weight = np.where(owner == exits.index(piece), batch.exit_discount, 0.0)
            columns.append(_unit_monomials(piece, N, batch.exit_t, batch.exit_x) * weight[:, None])
        return _pair_average(np.concatenate(columns, axis=1), config.antithetic)

    samples = _run_batches(one_batch, config, workers)
    logger.info(f"🎲 sampled {samples.shape[1]} scaled moments over {samples.shape[0]} paths (N={N})")
    return samples
