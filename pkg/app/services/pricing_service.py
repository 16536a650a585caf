# app/services/pricing_service.py
"""
Bound ladders over N, oracle references and report tables.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from app.analysis.barrier_exact import gbm_double_barrier_exact
from app.analysis.certificates import interval_certificate
from app.analysis.polynomials import BiPoly
from app.analysis.quadrature import MOMENT, levy_quadrature
from app.errors import ConfigurationError, MomentPricingError
from app.models.contracts import (
    BarrierProblem,
    build_barrier_problem,
    cir_american_corridor,
    expvg_double_no_touch,
    gbm_double_knockout,
    payoff_to_objective,
    vg_double_knockout,
)
from app.models.jump_diffusion import PolynomialModel, apply_generator
from app.models.levy import VarianceGamma, vg_truncated_moment
from app.models.schemas import BoundsReport, BoundsRow, RunConfig
from app.services.lp_solver import NUMERICAL_FAILURE, get_solver
from app.services.moment_lp_service import BoundsResult, build_lp, export_mps, rescale_maps, solve_bounds
from app.services.monte_carlo_service import mc_price

logger = logging.getLogger(__name__)

MONOTONE_TOL = 1e-7

_REQUIRED = {
    "gbm-dko": (("b", "sigma", "x0"), ("B_d", "B_u", "K", "T")),
    "vg-dko": (("b", "C", "G", "M", "x0"), ("B_d", "B_u", "K", "T")),
    "cir-corridor": (("a", "b", "sigma", "r", "x0"), ("B_d", "B_u", "T")),
    "expvg-dnt": (("C", "G", "M", "r_b", "r_s", "S0"), ("B_d", "B_u", "T")),
    "custom": (("drift", "sigma2", "x0"), ("B_d", "B_u", "T")),
}


# ──────────────────────────────────────────────────────────────────────────────
# Problem assembly
# ──────────────────────────────────────────────────────────────────────────────
def _number(params: Dict[str, Any], key: str, section: str) -> float:
    try:
        return float(params[key])
    except KeyError:
        raise ConfigurationError(f"[{section}] is missing '{key}'") from None
    except (TypeError, ValueError):
        raise ConfigurationError(f"[{section}] {key} = {params[key]!r} is not a number") from None


def _poly(params: Dict[str, Any], key: str, default: str = "0") -> BiPoly:
    return BiPoly.parse(str(params.get(key, default)))


def build_problem(config: RunConfig) -> BarrierProblem:
    model_keys, contract_keys = _REQUIRED[config.example]
    m = {k: _number(config.model, k, "model") for k in model_keys if config.example != "custom" or k == "x0"}
    c = {k: _number(config.contract, k, "contract") for k in contract_keys}
    if config.p_star_shortcut and config.example != "vg-dko":
        raise ConfigurationError("the p* shortcut applies to the vg-dko example only")

    if config.example == "gbm-dko":
        return gbm_double_knockout(m["b"], m["sigma"], c["B_d"], c["B_u"], c["K"], m["x0"], c["T"])
    if config.example == "vg-dko":
        return vg_double_knockout(
            m["b"], m["C"], m["G"], m["M"], c["B_d"], c["B_u"], c["K"], m["x0"], c["T"],
            p_star_shortcut=config.p_star_shortcut,
        )
    if config.example == "cir-corridor":
        return cir_american_corridor(m["a"], m["b"], m["sigma"], m["r"], c["B_d"], c["B_u"], m["x0"], c["T"])
    if config.example == "expvg-dnt":
        return expvg_double_no_touch(
            m["C"], m["G"], m["M"], m["r_b"], m["r_s"], c["B_d"], c["B_u"], m["S0"], c["T"]
        )
    return _custom_problem(config, m["x0"], c)


def _custom_problem(config: RunConfig, x0: float, c: Dict[str, float]) -> BarrierProblem:
    params = config.model
    levy = None
    if all(k in params for k in ("C", "G", "M")):
        levy = VarianceGamma(*(_number(params, k, "model") for k in ("C", "G", "M")))
    model = PolynomialModel(
        drift=_poly(params, "drift"),
        sigma2=_poly(params, "sigma2"),
        jump_scale=_poly(params, "jump_scale", "1" if levy is not None else "0"),
        discount=_poly(params, "discount"),
        levy=levy,
        x0=x0,
        state_floor=float(params["state_floor"]) if "state_floor" in params else None,
        name="custom",
    )
    contract = config.contract
    breaks_text = str(contract.get("breaks", "")).strip()
    breaks = [float(v) for v in breaks_text.split(",") if v.strip()] if breaks_text else []
    terminal_text = str(contract.get("terminal", "")).strip()
    terminal = [BiPoly.parse(v) for v in terminal_text.split(";")] if terminal_text else None
    running = _poly(contract, "running") if "running" in contract else None
    return build_barrier_problem(
        model, c["B_d"], c["B_u"], c["T"], breaks=breaks, terminal=terminal, running=running,
        name="custom", external_factor=float(contract.get("external_factor", 1.0)),
    )


# ──────────────────────────────────────────────────────────────────────────────
# Oracles
# ──────────────────────────────────────────────────────────────────────────────
def oracle_reference(config: RunConfig, problem: BarrierProblem) -> Tuple[Optional[float], Optional[float], str]:
    """(value, standard error, source)"""
    if config.reference is not None:
        return config.reference, None, "given"
    if config.oracle == "exact":
        m, c = config.model, config.contract
        value = gbm_double_barrier_exact(
            float(m["b"]), float(m["sigma"]), float(c["B_d"]), float(c["B_u"]), float(c["K"]),
            float(m["x0"]), float(c["T"]),
        )
        logger.info(f"📐 exact double-barrier value {value:.6f}")
        return value, None, "exact"
    if config.oracle == "mc":
        res = mc_price(problem.model, problem.contract, config.mc, workers=config.workers)
        return res.estimate, res.std_error, "mc"
    return None, None, "none"


# ──────────────────────────────────────────────────────────────────────────────
# Ladder
# ──────────────────────────────────────────────────────────────────────────────
def solve_at(problem: BarrierProblem, N: int, solver_name: Optional[str] = None, basis: str = "unit") -> BoundsResult:
    """Both bounds at moment degree N, multiplied by the contract's external factor"""
    objective = payoff_to_objective(problem.contract, problem.pieces)
    lp_min = build_lp(problem.model, problem.pieces, objective, N, "min", basis)
    lp_max = build_lp(problem.model, problem.pieces, objective, N, "max", basis)
    result = solve_bounds(lp_min, lp_max, get_solver(solver_name))
    return result.scaled(problem.contract.external_factor)


def solve_ladder(
    problem: BarrierProblem,
    n_values: List[int],
    solver_name: Optional[str] = None,
    basis: str = "unit",
    workers: int = 1,
) -> List[BoundsResult]:
    """One BoundsResult per N, in the order of n_values; failures become failed rows"""

    def one(N: int) -> BoundsResult:
        start = time.perf_counter()
        try:
            result = solve_at(problem, N, solver_name, basis)
        except ConfigurationError:
            raise
        except Exception as e:  # keep the ladder going
            logger.error(f"❌ N={N} failed: {e}")
            nan = float("nan")
            return BoundsResult(N, nan, nan, NUMERICAL_FAILURE, NUMERICAL_FAILURE, time.perf_counter() - start)
        logger.info(
            f"✅ N={N}: [{result.lower:.6f}, {result.upper:.6f}] in {result.seconds:.2f}s"
            if result.ok else f"⚠️ N={N}: statuses {result.lower_status}/{result.upper_status}"
        )
        return result

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, n_values))


def monotonicity(results: List[BoundsResult], tol: float = MONOTONE_TOL) -> str:
    """"yes", "no", or "unverified" when failed rows leave part of the ladder unchecked"""
    ok = sorted((r for r in results if r.ok), key=lambda r: r.N)
    for prev, cur in zip(ok, ok[1:]):
        if cur.lower < prev.lower - tol * max(1.0, abs(prev.lower)):
            return "no"
        if cur.upper > prev.upper + tol * max(1.0, abs(prev.upper)):
            return "no"
    return "yes" if len(ok) == len(results) else "unverified"


def is_monotone(results: List[BoundsResult], tol: float = MONOTONE_TOL) -> bool:
    return monotonicity(results, tol) == "yes"


def _rel(value: float, reference: Optional[float]) -> Optional[float]:
    if reference is None or not math.isfinite(value) or reference == 0:
        return None
    return abs(value - reference) / abs(reference)


def _finite(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def run(config: RunConfig) -> BoundsReport:
    problem = build_problem(config)
    logger.info(
        f"🚀 {config.example} {config.case or ''} N={config.N_min}..{config.N_max} "
        f"solver={config.solver} p*={problem.contract.p_star:.6f}"
    )
    reference, ref_se, source = oracle_reference(config, problem)
    results = solve_ladder(problem, config.n_values, config.solver, config.basis, config.workers)
    per_bound = source in ("exact", "given")
    rows = [
        BoundsRow(
            N=r.N,
            lower=_finite(r.lower),
            upper=_finite(r.upper),
            lower_status=r.lower_status,
            upper_status=r.upper_status,
            seconds=r.seconds,
            midpoint_rel_error=_rel(r.midpoint, reference) if r.ok else None,
            lower_rel_error=_rel(r.lower, reference) if r.ok and per_bound else None,
            upper_rel_error=_rel(r.upper, reference) if r.ok and per_bound else None,
        )
        for r in results
    ]
    verdict = monotonicity(results)
    if verdict != "yes":
        logger.warning(f"⚠️ monotonicity in N for {config.example}: {verdict}")
    return BoundsReport(
        example=config.example,
        case=config.case,
        reference=reference,
        reference_std_error=ref_se,
        reference_source=source,
        external_factor=problem.contract.external_factor,
        rows=rows,
        monotone=verdict == "yes",
        monotonicity=verdict,
        failed=sum(1 for r in results if not r.ok),
    )


# ──────────────────────────────────────────────────────────────────────────────
# Reports
# ──────────────────────────────────────────────────────────────────────────────
def report_frame(report: BoundsReport) -> pd.DataFrame:
    df = pd.DataFrame([row.model_dump() for row in report.rows])
    if report.reference_source not in ("exact", "given"):
        df = df.drop(columns=["lower_rel_error", "upper_rel_error"])
    return df.set_index("N")


def format_report(report: BoundsReport, fmt: str = "text") -> str:
    df = report_frame(report)
    if fmt == "csv":
        return df.to_csv(float_format="%.10g")
    header = [f"# {report.example} {report.case}".rstrip()]
    if report.reference is not None:
        se = f" ± {report.reference_std_error:.6f}" if report.reference_std_error is not None else ""
        header.append(f"# reference ({report.reference_source}): {report.reference:.6f}{se}")
    if report.external_factor != 1.0:
        header.append(f"# external factor: {report.external_factor:.6f}")
    verdict = {"yes": "yes", "no": "NO"}.get(report.monotonicity, report.monotonicity)
    footer = f"# monotone in N: {verdict}; failed rows: {report.failed}"
    return "\n".join(header + [df.to_string(float_format=lambda v: f"{v:.6f}"), footer]) + "\n"


def export_ladder(problem: BarrierProblem, n_values: List[int], out_dir, basis: str = "unit") -> List[Path]:
    """One MPS file per (N, sense)"""
    objective = payoff_to_objective(problem.contract, problem.pieces)
    paths = []
    for N in n_values:
        for sense in ("min", "max"):
            lp = build_lp(problem.model, problem.pieces, objective, N, sense, basis)
            paths.append(export_mps(lp, Path(out_dir) / f"{problem.contract.name}_N{N}_{sense}.mps"))
    return paths


# ──────────────────────────────────────────────────────────────────────────────
# Self test
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class SelfTestCheck:
    name: str
    passed: bool
    detail: str = ""


def _check(name: str, func) -> SelfTestCheck:
    try:
        passed, detail = func()
    except MomentPricingError as e:
        passed, detail = False, f"{type(e).__name__}: {e}"
    return SelfTestCheck(name, bool(passed), detail)


def run_selftest(solver_name: Optional[str] = None) -> List[SelfTestCheck]:
    def generator_identity():
        b, s2 = 0.1, 0.01
        x = BiPoly.x()
        model = PolynomialModel(drift=x * b, sigma2=(x ** 2) * s2, x0=1.0)
        got = apply_generator(model, 1, 2).poly
        want = BiPoly.monomial(0, 2) + BiPoly.monomial(1, 2, 2 * b + s2)
        return got.allclose(want), repr(got)

    def quadrature_vs_closed_form():
        errs = []
        for k in range(1, 9):
            exact = vg_truncated_moment(0.5, 8.0, 12.0, -2.0, 2.0, k)
            quad = levy_quadrature(MOMENT, 0.5, 8.0, 12.0, -2.0, 2.0, k=k)
            errs.append(abs(quad - exact) / abs(exact))
        return max(errs) < 1e-8, f"max relative error {max(errs):.2e}"

    def certificates():
        uniform = [1.0 / (k + 1) for k in range(9)]
        bad = [1.0, 2.0, 1.0]
        return interval_certificate(uniform, 4) and not interval_certificate(bad, 1), "uniform accepted, (1,2,1) rejected"

    def rescale_round_trip():
        problem = gbm_double_knockout(0.1, 0.1, 1.0, 5.0, 1.3, 2.0, 1.0)
        worst = 0.0
        for rmap in rescale_maps(problem.pieces, 6).values():
            worst = max(worst, float(np.abs(rmap.to_scaled @ rmap.to_raw - np.eye(len(rmap.index))).max()))
        return worst < 1e-10, f"max deviation {worst:.2e}"

    def small_ladder():
        problem = gbm_double_knockout(0.1, 0.1, 1.0, 5.0, 1.3, 2.0, 1.0)
        exact = gbm_double_barrier_exact(0.1, 0.1, 1.0, 5.0, 1.3, 2.0, 1.0)
        results = solve_ladder(problem, [4, 5, 6], solver_name)
        sandwich = all(r.lower - 1e-6 <= exact <= r.upper + 1e-6 for r in results if r.ok)
        ok = all(r.ok for r in results) and is_monotone(results) and sandwich
        last = results[-1]
        return ok, f"N=6: [{last.lower:.4f}, {last.upper:.4f}] vs exact {exact:.4f}"

    checks = [
        _check("generator of t x^2 under GBM", generator_identity),
        _check("VG moments: quadrature vs closed form", quadrature_vs_closed_form),
        _check("moment/localizing certificates", certificates),
        _check("raw/scaled moment maps invert", rescale_round_trip),
        _check("GBM ladder N=4..6 monotone and bracketing", small_ladder),
    ]
    for c in checks:
        logger.info(f"{'✅' if c.passed else '❌'} {c.name}: {c.detail}")
    return checks
