# app/services/moment_lp_service.py
"""
Finite moment linear programs.

Every measure piece carries its moments in unit-box coordinates
(s, y) = ((t - t_lo)/(t_hi - t_lo), (x - x_lo)/(x_hi - x_lo)); these scaled
moments are the LP variables. Adjoint rows and objectives are written in the
original (t, x) and composed with the affine maps.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from app.analysis.polynomials import AffineMap1D, BiPoly, binom, poly_affine_sub, poly_partial_eval
from app.errors import ConfigurationError
from app.models.jump_diffusion import PolynomialModel, apply_generator_to, poly_range
from app.services.lp_solver import NUMERICAL_FAILURE, OPTIMAL, LPSolution, get_solver

logger = logging.getLogger(__name__)

RECTANGLE = "rectangle"
HSEGMENT = "hsegment"
VSEGMENT = "vsegment"

Var = Tuple[str, int, int]

_ROUNDOFF = 1e-15


# ──────────────────────────────────────────────────────────────────────────────
# Supports and pieces
# ──────────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class SupportSet:
    kind: str
    t_lo: float
    t_hi: float
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.kind not in (RECTANGLE, HSEGMENT, VSEGMENT):
            raise ConfigurationError(f"unknown support kind '{self.kind}'")
        bounds = (self.t_lo, self.t_hi, self.x_lo, self.x_hi)
        if not all(math.isfinite(v) for v in bounds):
            raise ConfigurationError(f"support bounds must be finite, got {bounds}")
        if self.t_lo > self.t_hi or self.x_lo > self.x_hi:
            raise ConfigurationError(f"support bounds out of order: {bounds}")
        if self.kind == HSEGMENT and self.x_lo != self.x_hi:
            raise ConfigurationError("a horizontal segment has a single x level")
        if self.kind == VSEGMENT and self.t_lo != self.t_hi:
            raise ConfigurationError("a vertical segment has a single time")

    @classmethod
    def rectangle(cls, t_lo, t_hi, x_lo, x_hi) -> "SupportSet":
        return cls(RECTANGLE, float(t_lo), float(t_hi), float(x_lo), float(x_hi))

    @classmethod
    def hsegment(cls, t_lo, t_hi, x) -> "SupportSet":
        return cls(HSEGMENT, float(t_lo), float(t_hi), float(x), float(x))

    @classmethod
    def vsegment(cls, t, x_lo, x_hi) -> "SupportSet":
        return cls(VSEGMENT, float(t), float(t), float(x_lo), float(x_hi))

    @property
    def dim(self) -> int:
        return 2 if self.kind == RECTANGLE else 1

    @property
    def varies_t(self) -> bool:
        return self.kind != VSEGMENT and self.t_hi > self.t_lo

    @property
    def varies_x(self) -> bool:
        return self.kind != HSEGMENT and self.x_hi > self.x_lo

    def contains(self, t, x, tol: float = 1e-12):
        t = np.asarray(t)
        x = np.asarray(x)
        return (
            (t >= self.t_lo - tol) & (t <= self.t_hi + tol) & (x >= self.x_lo - tol) & (x <= self.x_hi + tol)
        )

    def unit_coordinates(self, t, x):
        """(s, y) in [0, 1]^2, clipped; fixed coordinates map to 0"""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = np.clip((t - self.t_lo) / (self.t_hi - self.t_lo), 0.0, 1.0) if self.varies_t else np.zeros_like(t)
        y = np.clip((x - self.x_lo) / (self.x_hi - self.x_lo), 0.0, 1.0) if self.varies_x else np.zeros_like(x)
        return s, y


@dataclass(frozen=True)
class MeasurePiece:
    name: str
    support: SupportSet
    role: str = "exit"  # "exit" for pieces of nu, "occupation" for mu

    @property
    def dim(self) -> int:
        return self.support.dim

    def indices(self, N: int) -> List[Tuple[int, int]]:
        """Moment exponents (a, b) of total degree <= N, graded"""
        if self.support.kind == RECTANGLE:
            return [(d - b, b) for d in range(N + 1) for b in range(d + 1)]
        if self.support.kind == HSEGMENT:
            return [(a, 0) for a in range(N + 1)]
        return [(0, b) for b in range(N + 1)]

    def moment_count(self, N: int) -> int:
        return (N + 1) * (N + 2) // 2 if self.dim == 2 else N + 1


def scaled_functional(f: BiPoly, support: SupportSet) -> BiPoly:
    """f composed with the unit-box map of the support, as a polynomial in (s, y).

    Its coefficients are the weights of the scaled moments in the integral of f.
    """
    g = f
    map_t = map_x = AffineMap1D.identity()
    if support.varies_t:
        map_t = AffineMap1D.from_interval(support.t_lo, support.t_hi)
    else:
        g = poly_partial_eval(g, "t", support.t_lo)
    if support.varies_x:
        map_x = AffineMap1D.from_interval(support.x_lo, support.x_hi)
    else:
        g = poly_partial_eval(g, "x", support.x_lo)
    return poly_affine_sub(g, map_t, map_x)


def raw_functional(f: BiPoly, support: SupportSet) -> BiPoly:
    """f with the fixed coordinate of a segment substituted; weights of the raw moments"""
    g = f
    if support.kind == VSEGMENT:
        g = poly_partial_eval(g, "t", support.t_lo)
    elif support.kind == HSEGMENT:
        g = poly_partial_eval(g, "x", support.x_lo)
    return g


# ──────────────────────────────────────────────────────────────────────────────
# Raw <-> scaled moment maps
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class RescaleMap:
    piece: MeasurePiece
    index: List[Tuple[int, int]]
    to_raw: np.ndarray  # raw = to_raw @ scaled
    to_scaled: np.ndarray  # scaled = to_scaled @ raw


def rescale_maps(pieces: Sequence[MeasurePiece], N: int) -> Dict[str, RescaleMap]:
    maps = {}
    for piece in pieces:
        sup = piece.support
        index = piece.indices(N)
        pos = {k: n for n, k in enumerate(index)}
        to_raw = np.zeros((len(index), len(index)))
        for r, (i, j) in enumerate(index):
            for (a, b), c in scaled_functional(BiPoly.monomial(i, j), sup).items():
                if (a, b) in pos:
                    to_raw[r, pos[(a, b)]] += c
        to_scaled = np.zeros_like(to_raw)
        inv_t = AffineMap1D.from_interval(sup.t_lo, sup.t_hi).inverse() if sup.varies_t else AffineMap1D.identity()
        inv_x = AffineMap1D.from_interval(sup.x_lo, sup.x_hi).inverse() if sup.varies_x else AffineMap1D.identity()
        for r, (a, b) in enumerate(index):
            if (a > 0 and not sup.varies_t) or (b > 0 and not sup.varies_x):
                # zero-length direction: the scaled coordinate is identically 0
                continue
            for (i, j), c in poly_affine_sub(BiPoly.monomial(a, b), inv_t, inv_x).items():
                to_scaled[r, pos[(i, j)]] += c
        maps[piece.name] = RescaleMap(piece, index, to_raw, to_scaled)
    return maps


# ──────────────────────────────────────────────────────────────────────────────
# Row blocks
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class RowBlock:
    rows: List[Dict[Var, float]] = field(default_factory=list)
    rhs: List[float] = field(default_factory=list)
    labels: List[str] = field(default_factory=list)
    dropped: int = 0

    def add(self, row: Dict[Var, float], rhs: float, label: str, normalize: bool = True):
        row = {k: v for k, v in row.items() if v != 0.0}
        if row:
            # entries this far below the row maximum are cancellation residue
            cutoff = _ROUNDOFF * max(abs(v) for v in row.values())
            row = {k: v for k, v in row.items() if abs(v) > cutoff}
        if normalize and row:
            scale = max(abs(v) for v in row.values())
            row = {k: v / scale for k, v in row.items()}
            rhs = rhs / scale
        self.rows.append(row)
        self.rhs.append(float(rhs))
        self.labels.append(label)

    def extend(self, other: "RowBlock"):
        self.rows.extend(other.rows)
        self.rhs.extend(other.rhs)
        self.labels.extend(other.labels)
        self.dropped += other.dropped

    def __len__(self):
        return len(self.rows)


def _accumulate(row: Dict[Var, float], name: str, g: BiPoly, sign: float, N: int) -> bool:
    for (a, b), c in g.items():
        if a + b > N:
            return False
        key = (name, a, b)
        row[key] = row.get(key, 0.0) + sign * c
    return True


def _occupation(pieces: Sequence[MeasurePiece]) -> MeasurePiece:
    occ = [p for p in pieces if p.role == "occupation"]
    if len(occ) != 1:
        raise ConfigurationError(f"expected exactly one occupation piece, got {len(occ)}")
    return occ[0]


def adjoint_test_function(i: int, j: int, box: SupportSet, basis: str = "unit") -> BiPoly:
    """t^i x^j, or its unit-box counterpart ((t - t_lo)/dt)^i ((x - x_lo)/dx)^j"""
    if basis == "monomial":
        return BiPoly.monomial(i, j)
    if basis != "unit":
        raise ConfigurationError(f"unknown test-function basis '{basis}'")
    inv_t = AffineMap1D.from_interval(box.t_lo, box.t_hi).inverse()
    inv_x = AffineMap1D.from_interval(box.x_lo, box.x_hi).inverse()
    return poly_affine_sub(BiPoly.monomial(i, j), inv_t, inv_x)


def exit_hull(pieces: Sequence[MeasurePiece]) -> SupportSet:
    """Smallest rectangle holding every piece; unit-basis test functions live on it"""
    return SupportSet.rectangle(
        min(p.support.t_lo for p in pieces),
        max(p.support.t_hi for p in pieces),
        min(p.support.x_lo for p in pieces),
        max(p.support.x_hi for p in pieces),
    )


def adjoint_rows(
    model: PolynomialModel,
    pieces: Sequence[MeasurePiece],
    occupation: MeasurePiece,
    N: int,
    basis: str = "unit",
    normalize: bool = True,
) -> RowBlock:
    """sum_pieces int f dnu_piece - int (A - r) f dmu = f(t0, x0) for every test function f_ij, i + j <= N

    Unit-basis test functions are scaled to the hull of all pieces, so they stay
    in [0, 1] on overshoot pieces too.
    """
    block = RowBlock()
    exits = [p for p in pieces if p.role == "exit"]
    box = exit_hull(pieces)
    for d in range(N + 1):
        for j in range(d + 1):
            i = d - j
            f = adjoint_test_function(i, j, box, basis)
            gen = apply_generator_to(model, f)
            row: Dict[Var, float] = {}
            ok = _accumulate(row, occupation.name, scaled_functional(gen, occupation.support), -1.0, N)
            for piece in exits:
                ok = ok and _accumulate(row, piece.name, scaled_functional(f, piece.support), 1.0, N)
            if not ok:
                block.dropped += 1
                continue
            block.add(row, float(f(model.t0, model.x0)), f"adjoint({i},{j})", normalize=normalize)
    if block.dropped:
        logger.info(f"ℹ️ {block.dropped} adjoint rows dropped at N={N} (generator degree above N)")
    if not block.rows:
        raise ConfigurationError(f"every adjoint row exceeds degree N={N}; increase N")
    return block


def hausdorff_rows_1d(piece: MeasurePiece, N: int) -> RowBlock:
    """sum_j C(n,j) (-1)^j m_{j+k} >= 0, n + k <= N, written as <= 0"""
    if piece.dim != 1:
        raise ConfigurationError(f"piece '{piece.name}' is not one-dimensional")
    block = RowBlock()
    along_t = piece.support.kind == HSEGMENT
    for n in range(N + 1):
        for k in range(N + 1 - n):
            row = {}
            for j in range(n + 1):
                e = j + k
                key = (piece.name, e, 0) if along_t else (piece.name, 0, e)
                row[key] = -float(binom(n, j) * (-1) ** j)
            block.add(row, 0.0, f"hausdorff1d[{piece.name}]({n},{k})")
    return block


def hausdorff_rows_2d(piece: MeasurePiece, N: int) -> RowBlock:
    """sum_{i<=m, j<=n} C(m,i) C(n,j) (-1)^{i+j} m_{i+l, j+k} >= 0, m + n + k + l <= N"""
    if piece.dim != 2:
        raise ConfigurationError(f"piece '{piece.name}' is not two-dimensional")
    block = RowBlock()
    for total in range(N + 1):
        for m in range(total + 1):
            for n in range(total - m + 1):
                for l in range(total - m - n + 1):
                    k = total - m - n - l
                    row = {}
                    for i in range(m + 1):
                        for j in range(n + 1):
                            key = (piece.name, i + l, j + k)
                            row[key] = row.get(key, 0.0) - float(binom(m, i) * binom(n, j) * (-1) ** (i + j))
                    block.add(row, 0.0, f"hausdorff2d[{piece.name}]({m},{n},{k},{l})")
    return block


# ──────────────────────────────────────────────────────────────────────────────
# LP
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class MomentObjective:
    """Linear functional on raw moments: piece name -> {(i, j): coefficient}"""

    terms: Dict[str, Dict[Tuple[int, int], float]] = field(default_factory=dict)
    constant: float = 0.0

    def is_zero(self) -> bool:
        return all(all(c == 0 for c in t.values()) for t in self.terms.values()) and self.constant == 0

    def max_degree(self) -> int:
        return max((i + j for t in self.terms.values() for (i, j) in t), default=0)


@dataclass
class MomentLP:
    N: int
    sense: str
    variables: List[Var]
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    eq_labels: List[str]
    ub_labels: List[str]
    objective_constant: float = 0.0
    dropped_rows: int = 0

    @property
    def var_index(self) -> Dict[Var, int]:
        return {v: n for n, v in enumerate(self.variables)}


def _mass_bound(model: PolynomialModel, occupation: MeasurePiece) -> float:
    sup = occupation.support
    horizon = sup.t_hi - model.t0
    r_min, _ = poly_range(model.discount, (sup.t_lo, sup.t_hi), (sup.x_lo, sup.x_hi))
    if r_min >= 0:
        return horizon
    return horizon * math.exp(-r_min * horizon)


def _to_csr(rows: List[Dict[Var, float]], index: Dict[Var, int]) -> sp.csr_matrix:
    data, ri, ci = [], [], []
    for r, row in enumerate(rows):
        for key, v in row.items():
            data.append(v)
            ri.append(r)
            ci.append(index[key])
    return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), len(index)))


def build_lp(
    model: PolynomialModel,
    pieces: Sequence[MeasurePiece],
    objective: MomentObjective,
    N: int,
    sense: str,
    basis: str = "unit",
) -> MomentLP:
    if sense not in ("min", "max"):
        raise ConfigurationError(f"sense must be 'min' or 'max', got '{sense}'")
    names = [p.name for p in pieces]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"piece names must be unique: {names}")
    for name in objective.terms:
        if name not in names:
            raise ConfigurationError(f"objective references piece '{name}' which is not part of the problem")
    if objective.max_degree() > N:
        raise ConfigurationError(f"objective needs moments of degree {objective.max_degree()} > N={N}")

    occupation = _occupation(pieces)
    variables: List[Var] = [(p.name, a, b) for p in pieces for (a, b) in p.indices(N)]
    index = {v: n for n, v in enumerate(variables)}

    eq = adjoint_rows(model, pieces, occupation, N, basis)

    ub = RowBlock()
    for piece in pieces:
        ub.extend(hausdorff_rows_1d(piece, N) if piece.dim == 1 else hausdorff_rows_2d(piece, N))
        for (a, b) in piece.indices(N):
            if (a, b) != (0, 0):
                ub.add({(piece.name, a, b): 1.0, (piece.name, 0, 0): -1.0}, 0.0, f"box[{piece.name}]({a},{b})")
    ub.add({(occupation.name, 0, 0): 1.0}, _mass_bound(model, occupation), "mass[mu]")

    maps = rescale_maps(pieces, N)
    c = np.zeros(len(variables))
    for name, terms in objective.terms.items():
        rmap = maps[name]
        pos = {k: n for n, k in enumerate(rmap.index)}
        raw = np.zeros(len(rmap.index))
        for k, v in terms.items():
            if k not in pos:
                raise ConfigurationError(f"piece '{name}' has no raw moment {k}")
            raw[pos[k]] += v
        scaled = raw @ rmap.to_raw
        for n, k in enumerate(rmap.index):
            c[index[(name, k[0], k[1])]] += scaled[n]

    lp = MomentLP(
        N=N,
        sense=sense,
        variables=variables,
        c=c,
        A_eq=_to_csr(eq.rows, index),
        b_eq=np.asarray(eq.rhs),
        A_ub=_to_csr(ub.rows, index),
        b_ub=np.asarray(ub.rhs),
        eq_labels=eq.labels,
        ub_labels=ub.labels,
        objective_constant=objective.constant,
        dropped_rows=eq.dropped,
    )
    logger.debug(f"built LP N={N} {sense}: {len(variables)} vars, {len(eq)} eq rows, {len(ub)} ineq rows")
    return lp


# ──────────────────────────────────────────────────────────────────────────────
# Solving
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class BoundsResult:
    N: int
    lower: float
    upper: float
    lower_status: str
    upper_status: str
    seconds: float
    lower_solution: Optional[np.ndarray] = field(default=None, repr=False)
    upper_solution: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.lower_status == OPTIMAL and self.upper_status == OPTIMAL

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def scaled(self, factor: float) -> "BoundsResult":
        """Bounds multiplied by a positive external factor (e.g. p*)"""
        return BoundsResult(
            self.N, self.lower * factor, self.upper * factor, self.lower_status, self.upper_status,
            self.seconds, self.lower_solution, self.upper_solution,
        )


def solve_lp(lp: MomentLP, solver=None) -> LPSolution:
    solver = solver or get_solver()
    sign = 1.0 if lp.sense == "min" else -1.0
    try:
        sol = solver.solve(sign * lp.c, lp.A_eq, lp.b_eq, lp.A_ub, lp.b_ub)
    except Exception as e:  # solver internals are outside our control
        logger.error(f"❌ LP solve failed at N={lp.N} ({lp.sense}): {e}")
        return LPSolution(NUMERICAL_FAILURE, float("nan"), message=str(e))
    if sol.status == OPTIMAL:
        sol.value = sign * sol.value + lp.objective_constant
    return sol


def solve_bounds(lp_min: MomentLP, lp_max: MomentLP, solver=None) -> BoundsResult:
    if lp_min.sense != "min" or lp_max.sense != "max":
        raise ConfigurationError("solve_bounds expects the (min, max) pair in that order")
    start = time.perf_counter()
    solver = solver or get_solver()
    with ThreadPoolExecutor(max_workers=2) as pool:
        fut_lo = pool.submit(solve_lp, lp_min, solver)
        fut_hi = pool.submit(solve_lp, lp_max, solver)
        lo, hi = fut_lo.result(), fut_hi.result()
    elapsed = time.perf_counter() - start
    result = BoundsResult(lp_min.N, lo.value, hi.value, lo.status, hi.status, elapsed, lo.x, hi.x)
    if result.ok and result.lower > result.upper + 1e-9 * max(1.0, abs(result.upper)):
        logger.warning(f"⚠️ N={lp_min.N}: lower bound {result.lower:.8f} above upper bound {result.upper:.8f}")
    for sol, lp, label in ((lo, lp_min, "lower"), (hi, lp_max, "upper")):
        if sol.status != OPTIMAL:
            logger.error(f"❌ N={lp.N} {label} bound: {sol.status} ({_diagnose(sol, lp)})")
    return result


def condition_summary(lp: MomentLP) -> str:
    """Magnitude range of the equality matrix and of its right-hand side"""
    data = np.abs(lp.A_eq.data[lp.A_eq.data != 0])
    rhs = np.abs(lp.b_eq[lp.b_eq != 0])
    if not data.size:
        return "A_eq empty"
    text = f"A_eq |a| in [{data.min():.1e}, {data.max():.1e}] (ratio {data.max() / data.min():.1e})"
    if rhs.size:
        text += f", |b_eq| in [{rhs.min():.1e}, {rhs.max():.1e}]"
    return text


def _diagnose(sol: LPSolution, lp: MomentLP) -> str:
    hint = {
        "infeasible": "adjoint rows inconsistent with the supports or coefficients",
        "unbounded": "missing Hausdorff or box rows",
        NUMERICAL_FAILURE: "solver could not certify optimality",
    }.get(sol.status, "")
    parts = [hint, sol.message, condition_summary(lp)]
    return "; ".join(p for p in parts if p)


# ──────────────────────────────────────────────────────────────────────────────
# Moment feasibility of sampled measures
# ──────────────────────────────────────────────────────────────────────────────
@dataclass
class FeasibilityReport:
    worst_equality: float
    worst_inequality: float
    equality_failures: List[str]
    inequality_failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.equality_failures and not self.inequality_failures


def check_moment_feasibility(
    lp: MomentLP, samples: np.ndarray, n_se: float = 3.0, slack: float = 0.0
) -> FeasibilityReport:
    """samples: (paths, variables) per-path contributions to each scaled moment"""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]

    def stats(A):
        vals = (A @ samples.T).T if A.shape[0] else np.zeros((n, 0))
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
        return mean, se

    eq_mean, eq_se = stats(lp.A_eq)
    eq_excess = np.abs(eq_mean - lp.b_eq) - (n_se * eq_se + slack)
    ub_mean, ub_se = stats(lp.A_ub)
    ub_excess = (ub_mean - lp.b_ub) - (n_se * ub_se + slack)
    eq_fail = [lp.eq_labels[k] for k in np.nonzero(eq_excess > 0)[0]]
    ub_fail = [lp.ub_labels[k] for k in np.nonzero(ub_excess > 0)[0]]
    if eq_fail or ub_fail:
        logger.warning(f"⚠️ sampled moments violate {len(eq_fail)} adjoint and {len(ub_fail)} Hausdorff/box rows")
    return FeasibilityReport(
        float(np.max(eq_excess, initial=-np.inf)),
        float(np.max(ub_excess, initial=-np.inf)),
        eq_fail,
        ub_fail,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Export
# ──────────────────────────────────────────────────────────────────────────────
def export_mps(lp: MomentLP, path) -> Path:
    """Free-format MPS; variables are non-negative (the MPS default)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    col_names = [f"{name}_{a}_{b}" for name, a, b in lp.variables]
    eq_names = [f"E{k}" for k in range(lp.A_eq.shape[0])]
    ub_names = [f"L{k}" for k in range(lp.A_ub.shape[0])]
    A_eq = lp.A_eq.tocsc()
    A_ub = lp.A_ub.tocsc()
    lines = [f"NAME moment_lp_N{lp.N}_{lp.sense}", "OBJSENSE", "    MAX" if lp.sense == "max" else "    MIN", "ROWS", " N obj"]
    lines += [f" E {r}" for r in eq_names]
    lines += [f" L {r}" for r in ub_names]
    lines.append("COLUMNS")
    for n, col in enumerate(col_names):
        if lp.c[n] != 0.0:
            lines.append(f"    {col} obj {lp.c[n]:.17g}")
        for A, row_names in ((A_eq, eq_names), (A_ub, ub_names)):
            start, end = A.indptr[n], A.indptr[n + 1]
            for r, v in zip(A.indices[start:end], A.data[start:end]):
                lines.append(f"    {col} {row_names[r]} {v:.17g}")
    lines.append("RHS")
    for row_names, b in ((eq_names, lp.b_eq), (ub_names, lp.b_ub)):
        for r, v in zip(row_names, b):
            if v != 0.0:
                lines.append(f"    rhs {r} {v:.17g}")
    if lp.objective_constant:
        lines.append(f"    rhs obj {-lp.objective_constant:.17g}")
    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"💾 wrote {path}")
    return path
