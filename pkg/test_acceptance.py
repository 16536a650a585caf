# test_acceptance.py
"""
Reproduction of the golden bound tables in data/golden. Slow; run with

    pytest -m acceptance
"""
import math
import os

import numpy as np
import pandas as pd
import pytest

from app.analysis.barrier_exact import gbm_double_barrier_exact
from app.analysis.polynomials import BiPoly
from app.models.contracts import gbm_double_knockout, payoff_to_objective, vg_double_knockout
from app.models.jump_diffusion import apply_generator_to
from app.models.schemas import MCConfig, RunConfig
from app.services import pricing_service
from app.services.moment_lp_service import build_lp, check_moment_feasibility
from app.services.monte_carlo_service import mc_moments, mc_price, simulate_batch

from conftest import CONFIG_DIR, GOLDEN_DIR

pytestmark = pytest.mark.acceptance

# (golden table, tolerance on each bound at the largest N)
TABLES = [
    ("table1_gbm.csv", 0.002),
    ("table2_vg.csv", 0.002),
    ("table3_cir.csv", 0.002),
    ("table4_dnt.csv", 0.005),
]


def golden_rows():
    for table, tol in TABLES:
        frame = pd.read_csv(os.path.join(GOLDEN_DIR, table))
        for config, group in frame.groupby("config"):
            last = group.sort_values("N").iloc[-1]
            yield pytest.param(config, int(last["N"]), float(last["lower"]), float(last["upper"]), tol, id=config)


@pytest.mark.parametrize("config,N,lower,upper,tol", list(golden_rows()))
def test_golden_bounds_at_largest_degree(config, N, lower, upper, tol):
    run = RunConfig.from_file(os.path.join(CONFIG_DIR, f"{config}.ini"))
    problem = pricing_service.build_problem(run)
    result = pricing_service.solve_at(problem, N)
    assert result.ok
    assert result.lower == pytest.approx(lower, abs=tol)
    assert result.upper == pytest.approx(upper, abs=tol)


@pytest.mark.parametrize("name", ["gbm_case1", "gbm_case2"])
def test_gbm_ladder_is_monotone_and_brackets_exact(name):
    run = RunConfig.from_file(os.path.join(CONFIG_DIR, f"{name}.ini"))
    run = run.model_copy(update={"N_min": 4, "N_max": 12})
    report = pricing_service.run(run)
    assert report.failed == 0
    assert report.monotone
    for row in report.rows:
        assert row.lower - 1e-6 <= report.reference <= row.upper + 1e-6


def test_killed_and_p_star_pricing_agree():
    killed = vg_double_knockout(0.2, 0.5, 8.0, 12.0, -1.0, 1.0, -0.3, 0.0, 1.0)
    shortcut = vg_double_knockout(0.2, 0.5, 8.0, 12.0, -1.0, 1.0, -0.3, 0.0, 1.0, p_star_shortcut=True)
    a = pricing_service.solve_at(killed, 8)
    b = pricing_service.solve_at(shortcut, 8)
    assert a.lower == pytest.approx(b.lower, abs=1e-6)
    assert a.upper == pytest.approx(b.upper, abs=1e-6)


def test_vg_reference_inside_bounds():
    problem = vg_double_knockout(0.2, 0.5, 8.0, 12.0, -1.0, 1.0, -0.3, 0.0, 1.0)
    mc = mc_price(problem.model, problem.contract, MCConfig(paths=200_000, steps_per_year=1000, seed=20240102))
    result = pricing_service.solve_at(problem, 10)
    assert result.lower - 3 * mc.std_error - 2e-3 <= mc.estimate <= result.upper + 3 * mc.std_error + 2e-3


def test_sampled_cir_moments_satisfy_the_lp():
    run = RunConfig.from_file(os.path.join(CONFIG_DIR, "cir_case1.ini"))
    problem = pricing_service.build_problem(run)
    objective = payoff_to_objective(problem.contract, problem.pieces)
    lp = build_lp(problem.model, problem.pieces, objective, 8, "min")
    samples = mc_moments(problem.model, problem.contract, problem.pieces, 8,
                         MCConfig(paths=100_000, steps_per_year=1000, seed=9))
    report = check_moment_feasibility(lp, samples, n_se=4.0, slack=2e-3)
    assert report.ok, (report.equality_failures[:5], report.inequality_failures[:5])


@pytest.mark.parametrize("name", ["vg_case1", "cir_case1", "dnt_case1"])
def test_ladders_are_monotone_through_degree_twelve(name):
    run = RunConfig.from_file(os.path.join(CONFIG_DIR, f"{name}.ini"))
    run = run.model_copy(update={"N_min": 4, "N_max": 12, "oracle": "none", "reference": None})
    report = pricing_service.run(run)
    assert report.failed == 0
    assert report.monotonicity == "yes"


@pytest.mark.parametrize("name", ["cir_case1", "dnt_case1"])
def test_mc_reference_inside_bounds(name):
    run = RunConfig.from_file(os.path.join(CONFIG_DIR, f"{name}.ini"))
    problem = pricing_service.build_problem(run)
    mc = mc_price(problem.model, problem.contract, MCConfig(paths=200_000, steps_per_year=1000, seed=20240104))
    result = pricing_service.solve_at(problem, 10)
    assert result.ok
    assert result.lower - 3 * mc.std_error - 2e-3 <= mc.estimate <= result.upper + 3 * mc.std_error + 2e-3


def test_discrete_monitoring_bias_shrinks_with_the_step():
    # barriers close to the spot, so discrete monitoring misses knockouts at coarse steps
    args = dict(b=0.1, sigma=0.3, B_d=1.5, B_u=3.0, K=2.0, x0=2.0, T=1.0)
    exact = gbm_double_barrier_exact(**args)
    problem = gbm_double_knockout(**args)
    runs = {
        steps: mc_price(problem.model, problem.contract, MCConfig(paths=100_000, steps_per_year=steps, seed=31))
        for steps in (250, 1000, 4000)
    }
    se = max(r.std_error for r in runs.values())
    assert runs[250].estimate > exact + 3 * se
    assert runs[1000].estimate <= runs[250].estimate + 3 * se
    assert runs[4000].estimate <= runs[1000].estimate + 3 * se
    assert runs[4000].estimate - exact < runs[250].estimate - exact
    assert runs[4000].estimate > exact - 4 * se


def test_generator_matches_the_short_time_difference_quotient():
    h = 0.01
    problem = vg_double_knockout(0.0, 0.5, 8.0, 12.0, -5.0, 5.0, 0.0, 0.0, h)
    f = BiPoly.x() ** 2
    expected = apply_generator_to(problem.model, f)(0.0, 0.0)
    batch = simulate_batch(problem.model, problem.contract, 1_000_000, 1, np.random.default_rng(8),
                           antithetic=False, discount=BiPoly())
    assert batch.survived.all()
    quotient = batch.exit_x ** 2 / h
    se = quotient.std(ddof=1) / math.sqrt(quotient.size)
    b = problem.model.drift.coeff(0, 0)
    assert abs(quotient.mean() - expected) < 4 * se + b * b * h + 1e-6
