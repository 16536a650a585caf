# test_moment_lp.py
import numpy as np
import pytest

from app.analysis.polynomials import BiPoly
from app.errors import ConfigurationError
from app.models.contracts import build_barrier_problem, payoff_to_objective, vg_double_knockout
from app.models.jump_diffusion import PolynomialModel
from app.services.lp_solver import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    HighsSolver,
    LPSolution,
    TextbookSimplexSolver,
    get_solver,
)
from app.services.moment_lp_service import (
    BoundsResult,
    MeasurePiece,
    MomentObjective,
    RowBlock,
    SupportSet,
    adjoint_rows,
    build_lp,
    condition_summary,
    exit_hull,
    export_mps,
    hausdorff_rows_1d,
    hausdorff_rows_2d,
    rescale_maps,
    solve_bounds,
)
from app.services.pricing_service import is_monotone, monotonicity, solve_at, solve_ladder


def row_value(row, values):
    return sum(c * values.get(k, 0.0) for k, c in row.items())


def segment(name="seg"):
    return MeasurePiece(name, SupportSet.vsegment(1.0, 0.0, 1.0))


# ─── supports ───
def test_support_validation():
    with pytest.raises(ConfigurationError):
        SupportSet.rectangle(0.0, 1.0, 2.0, 1.0)
    with pytest.raises(ConfigurationError):
        SupportSet("hsegment", 0.0, 1.0, 1.0, 2.0)
    box = SupportSet.rectangle(0.0, 2.0, 1.0, 5.0)
    assert box.dim == 2
    assert box.contains(1.0, 5.0)
    s, y = box.unit_coordinates(1.0, 2.0)
    assert (float(s), float(y)) == pytest.approx((0.5, 0.25))


def test_piece_indices_are_graded():
    rect = MeasurePiece("occupation", SupportSet.rectangle(0.0, 1.0, 0.0, 1.0), role="occupation")
    assert rect.indices(2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert rect.moment_count(4) == 15
    assert MeasurePiece("b", SupportSet.hsegment(0.0, 1.0, 5.0)).indices(2) == [(0, 0), (1, 0), (2, 0)]
    assert segment().moment_count(4) == 5


# ─── Hausdorff rows ───
def test_hausdorff_1d_accepts_measures_on_unit_interval():
    piece = segment()
    block = hausdorff_rows_1d(piece, 4)
    assert len(block) == 15
    for moments in ([0.5 ** k for k in range(5)], [1.0 / (k + 1) for k in range(5)]):
        values = {("seg", 0, k): m for k, m in enumerate(moments)}
        assert all(row_value(row, values) <= 1e-12 for row in block.rows)


def test_hausdorff_1d_rejects_mass_above_one():
    block = hausdorff_rows_1d(segment(), 2)
    values = {("seg", 0, 0): 1.0, ("seg", 0, 1): 1.1, ("seg", 0, 2): 1.21}
    assert any(row_value(row, values) > 0 for row in block.rows)


def test_hausdorff_2d_on_product_measures():
    piece = MeasurePiece("occ", SupportSet.rectangle(0.0, 1.0, 0.0, 1.0), role="occupation")
    block = hausdorff_rows_2d(piece, 3)
    assert len(block) == 35
    uniform = {("occ", i, j): 1.0 / ((i + 1) * (j + 1)) for i in range(4) for j in range(4)}
    dirac = {("occ", i, j): 0.5 ** (i + j) for i in range(4) for j in range(4)}
    for values in (uniform, dirac):
        assert all(row_value(row, values) <= 1e-12 for row in block.rows)
    bad = dict(uniform)
    bad[("occ", 1, 0)] = 1.1
    assert any(row_value(row, bad) > 0 for row in block.rows)


def test_hausdorff_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        hausdorff_rows_2d(segment(), 2)


# ─── rescaling ───
def test_rescale_to_unit_interval():
    piece = MeasurePiece("seg", SupportSet.vsegment(1.0, 1.0, 5.0))
    rmap = rescale_maps([piece], 1)["seg"]
    np.testing.assert_allclose(rmap.to_scaled @ np.array([1.0, 2.0]), [1.0, 0.25])


def test_rescale_round_trip(gbm_case1):
    for rmap in rescale_maps(gbm_case1.pieces, 6).values():
        np.testing.assert_allclose(rmap.to_scaled @ rmap.to_raw, np.eye(len(rmap.index)), atol=1e-10)


# ─── adjoint rows ───
def test_monomial_rows_match_the_gbm_adjoint_equation(gbm_case1):
    model, pieces = gbm_case1.model, gbm_case1.pieces
    b, s2, N = 0.1, 0.01, 4
    block = adjoint_rows(model, pieces, pieces[-1], N, basis="monomial", normalize=False)
    rng = np.random.default_rng(3)
    maps = rescale_maps(pieces, N)
    raw = {p.name: rng.uniform(0.1, 1.0, p.moment_count(N)) for p in pieces}
    scaled = {}
    for p in pieces:
        for k, v in zip(maps[p.name].index, maps[p.name].to_scaled @ raw[p.name]):
            scaled[(p.name, k[0], k[1])] = v
    moment = {p.name: dict(zip(maps[p.name].index, raw[p.name])) for p in pieces}
    for row, rhs, label in zip(block.rows, block.rhs, block.labels):
        n, m = (int(v) for v in label[len("adjoint("):-1].split(","))
        expected = (
            5.0 ** m * moment["barrier_up"][(n, 0)]
            + 1.0 ** m * moment["barrier_down"][(n, 0)]
            + moment["terminal_0"][(0, m)]
            + moment["terminal_1"][(0, m)]
            - (n * moment["occupation"][(n - 1, m)] if n else 0.0)
            - (b * m + 0.5 * s2 * m * (m - 1)) * moment["occupation"][(n, m)]
        )
        assert row_value(row, scaled) == pytest.approx(expected, rel=1e-9, abs=1e-9)
        assert rhs == pytest.approx(0.0 ** n * 2.0 ** m)


def test_rows_above_degree_are_dropped():
    x = BiPoly.x()
    # quadratic drift pushes every x^j row one degree up
    model = PolynomialModel(drift=x ** 2 * 0.1, sigma2=BiPoly(), x0=0.5)
    problem = build_barrier_problem(model, 0.0, 1.0, 1.0)
    block = adjoint_rows(model, problem.pieces, problem.pieces[-1], 3)
    assert block.dropped == 3
    assert len(block) == 7
    assert "adjoint(3,0)" in block.labels
    assert "adjoint(0,3)" not in block.labels


# ─── LP assembly and solving ───
def test_lp_shape_and_labels(gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    lp = build_lp(gbm_case1.model, gbm_case1.pieces, objective, 4, "min")
    n_vars = sum(p.moment_count(4) for p in gbm_case1.pieces)
    assert len(lp.variables) == n_vars
    assert lp.A_eq.shape == (15, n_vars)
    assert lp.A_ub.shape[0] == len(lp.ub_labels)
    assert lp.ub_labels[-1] == "mass[mu]"
    assert lp.b_ub[-1] == pytest.approx(1.0)


def test_bad_sense_and_unknown_piece(gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    with pytest.raises(ConfigurationError):
        build_lp(gbm_case1.model, gbm_case1.pieces, objective, 4, "sup")
    with pytest.raises(ConfigurationError):
        build_lp(gbm_case1.model, gbm_case1.pieces, MomentObjective({"nope": {(0, 0): 1.0}}), 4, "min")
    with pytest.raises(ConfigurationError):
        build_lp(gbm_case1.model, gbm_case1.pieces, MomentObjective({"terminal_1": {(0, 5): 1.0}}), 4, "min")


def test_bounds_bracket_the_exact_price(gbm_case1, gbm_case1_exact):
    results = solve_ladder(gbm_case1, [4, 5, 6])
    for r in results:
        assert r.ok
        assert r.lower - 1e-6 <= gbm_case1_exact <= r.upper + 1e-6
    assert is_monotone(results)


def test_scaled_moments_stay_below_piece_mass(gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    lp_min = build_lp(gbm_case1.model, gbm_case1.pieces, objective, 4, "min")
    lp_max = build_lp(gbm_case1.model, gbm_case1.pieces, objective, 4, "max")
    result = solve_bounds(lp_min, lp_max)
    index = lp_min.var_index
    for solution in (result.lower_solution, result.upper_solution):
        for name, a, b in lp_min.variables:
            assert solution[index[(name, a, b)]] <= solution[index[(name, 0, 0)]] + 1e-7


def test_zero_payoff_gives_zero_bounds():
    x = BiPoly.x()
    model = PolynomialModel(drift=x * 0.1, sigma2=(x ** 2) * 0.01, x0=2.0)
    problem = build_barrier_problem(model, 1.0, 5.0, 1.0)
    result = solve_at(problem, 4)
    assert result.ok
    assert result.lower == pytest.approx(0.0, abs=1e-9)
    assert result.upper == pytest.approx(0.0, abs=1e-9)


def test_strike_at_upper_barrier_gives_zero_bounds():
    from app.models.contracts import gbm_double_knockout

    problem = gbm_double_knockout(0.1, 0.1, 1.0, 5.0, 5.0, 2.0, 1.0)
    result = solve_at(problem, 4)
    assert result.lower == pytest.approx(0.0, abs=1e-8)
    assert result.upper == pytest.approx(0.0, abs=1e-8)


def test_degree_zero_corridor_bounds_are_mass_range():
    from app.models.contracts import cir_american_corridor

    problem = cir_american_corridor(0.5, 1.0, 0.2, 0.1, 0.5, 1.5, 1.0, 1.0)
    result = solve_at(problem, 0)
    assert result.lower == pytest.approx(0.0, abs=1e-8)
    assert result.upper == pytest.approx(1.0, abs=1e-8)


def test_large_discount_shrinks_corridor_value():
    from app.models.contracts import cir_american_corridor

    problem = cir_american_corridor(0.5, 1.0, 0.2, 50.0, 0.5, 1.5, 1.0, 1.0)
    result = solve_at(problem, 2)
    assert result.upper <= 1.0 / 50.0 + 1e-7


# ─── solvers ───
def test_solvers_agree_on_a_small_lp():
    c = np.array([-1.0, -1.0])
    A_ub = np.array([[1.0, 2.0], [3.0, 1.0]])
    b_ub = np.array([4.0, 6.0])
    for solver in (HighsSolver(), TextbookSimplexSolver()):
        sol = solver.solve(c, np.zeros((0, 2)), np.zeros(0), A_ub, b_ub)
        assert sol.status == OPTIMAL
        assert sol.value == pytest.approx(-2.8, abs=1e-9)
        np.testing.assert_allclose(sol.x, [1.6, 1.2], atol=1e-9)


def test_simplex_detects_infeasible_and_unbounded():
    solver = TextbookSimplexSolver()
    infeasible = solver.solve(np.array([1.0, 1.0]), np.array([[1.0, 1.0]]), np.array([-1.0]), None, None)
    assert infeasible.status == INFEASIBLE
    unbounded = solver.solve(np.array([-1.0, 0.0]), None, None, np.array([[1.0, -1.0]]), np.array([1.0]))
    assert unbounded.status == UNBOUNDED


def test_simplex_matches_highs_on_moment_lp(gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    lps = [build_lp(gbm_case1.model, gbm_case1.pieces, objective, 2, s) for s in ("min", "max")]
    highs = solve_bounds(*lps, get_solver("highs"))
    simplex = solve_bounds(*lps, get_solver("simplex"))
    assert simplex.ok
    assert simplex.lower == pytest.approx(highs.lower, abs=1e-6)
    assert simplex.upper == pytest.approx(highs.upper, abs=1e-6)


def test_unknown_solver_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        get_solver("cplex")


# ─── export ───
def test_mps_export(tmp_path, gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    lp = build_lp(gbm_case1.model, gbm_case1.pieces, objective, 3, "max")
    path = export_mps(lp, tmp_path / "lp" / "gbm.mps")
    lines = path.read_text().splitlines()
    assert lines[0] == "NAME moment_lp_N3_max"
    assert lines[2].strip() == "MAX"
    assert lines[-1] == "ENDATA"
    assert sum(1 for line in lines if line.startswith(" E ")) == lp.A_eq.shape[0]
    assert sum(1 for line in lines if line.startswith(" L ")) == lp.A_ub.shape[0]
    assert any(line.strip().startswith("occupation_0_0 ") for line in lines)


# ─── conditioning ───
def test_exit_hull_covers_the_overshoot_rectangles():
    problem = vg_double_knockout(0.2, 0.5, 8.0, 12.0, -1.0, 1.0, -0.3, 0.0, 1.0)
    hull = exit_hull(problem.pieces)
    assert (hull.t_lo, hull.t_hi) == pytest.approx((0.0, 1.0))
    assert (hull.x_lo, hull.x_hi) == pytest.approx((-3.0, 3.0))


def test_exit_hull_of_a_diffusion_is_the_occupation_box(gbm_case1):
    hull = exit_hull(gbm_case1.pieces)
    occupation = next(p for p in gbm_case1.pieces if p.role == "occupation").support
    assert (hull.t_lo, hull.t_hi, hull.x_lo, hull.x_hi) == (
        occupation.t_lo, occupation.t_hi, occupation.x_lo, occupation.x_hi
    )


def test_row_block_purges_cancellation_residue():
    block = RowBlock()
    block.add({("a", 0, 0): 4.0, ("a", 1, 0): 1e-16, ("a", 0, 1): -2.0}, 2.0, "r")
    assert block.rows[0] == {("a", 0, 0): 1.0, ("a", 0, 1): -0.5}
    assert block.rhs[0] == 0.5


def test_vg_rows_keep_the_right_hand_side_well_above_tolerance():
    problem = vg_double_knockout(0.2, 0.5, 8.0, 12.0, -1.0, 1.0, -0.3, 0.0, 1.0)
    objective = payoff_to_objective(problem.contract, problem.pieces)
    lp = build_lp(problem.model, problem.pieces, objective, 8, "min")
    rhs = np.abs(lp.b_eq[lp.b_eq != 0])
    assert rhs.max() > 1e-4
    assert condition_summary(lp).startswith("A_eq |a| in")


def test_highs_falls_back_to_interior_point(monkeypatch):
    calls = []

    def fake_solve(self, method, c, A_eq, b_eq, A_ub, b_ub):
        calls.append(method)
        if method == "highs-ds":
            return LPSolution(NUMERICAL_FAILURE, float("nan"), message="iteration limit")
        return LPSolution(OPTIMAL, 1.5, np.zeros(2))

    monkeypatch.setattr(HighsSolver, "_solve", fake_solve)
    sol = HighsSolver().solve(np.ones(2), None, None, None, None)
    assert calls == ["highs-ds", "highs-ipm"]
    assert sol.status == OPTIMAL
    assert sol.value == 1.5


def test_highs_reports_both_methods_when_the_fallback_fails(monkeypatch):
    monkeypatch.setattr(
        HighsSolver, "_solve",
        lambda self, method, *args: LPSolution(NUMERICAL_FAILURE, float("nan"), message=f"{method} stuck"),
    )
    sol = HighsSolver().solve(np.ones(2), None, None, None, None)
    assert sol.status == NUMERICAL_FAILURE
    assert "highs-ds stuck" in sol.message
    assert "highs-ipm" in sol.message


class StalledSolver:
    name = "stalled"

    def solve(self, c, A_eq, b_eq, A_ub, b_ub):
        return LPSolution(NUMERICAL_FAILURE, float("nan"), message="stalled")


def test_failed_solves_log_solver_message_and_conditioning(caplog, gbm_case1):
    objective = payoff_to_objective(gbm_case1.contract, gbm_case1.pieces)
    lps = [build_lp(gbm_case1.model, gbm_case1.pieces, objective, 2, s) for s in ("min", "max")]
    with caplog.at_level("ERROR"):
        result = solve_bounds(*lps, StalledSolver())
    assert not result.ok
    assert "stalled" in caplog.text
    assert "A_eq |a| in" in caplog.text


# ─── monotonicity verdict ───
def bounds(N, lower, upper, status=OPTIMAL):
    return BoundsResult(N, lower, upper, status, status, 0.0)


def test_monotone_ladder_is_yes():
    results = [bounds(4, 0.1, 0.9), bounds(5, 0.2, 0.8), bounds(6, 0.2, 0.7)]
    assert monotonicity(results) == "yes"
    assert is_monotone(results)


def test_widening_bounds_are_not_monotone():
    results = [bounds(4, 0.2, 0.8), bounds(5, 0.1, 0.8)]
    assert monotonicity(results) == "no"
    assert not is_monotone(results)


def test_failed_rows_leave_monotonicity_unverified():
    results = [bounds(4, 0.1, 0.9), bounds(5, float("nan"), float("nan"), NUMERICAL_FAILURE)]
    assert monotonicity(results) == "unverified"
    assert not is_monotone(results)
