# app/analysis/polynomials.py
"""
Sparse bivariate polynomials in (t, x).

BiPoly is the common currency of the library: model coefficients, payoffs,
generator output and the unit-box change of variables all go through it.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Tuple, Union

import numpy as np

from app.config import COEFF_CUTOFF
from app.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

Exponent = Tuple[int, int]
Number = Union[int, float]

# ──────────────────────────────────────────────────────────────────────────────
# Binomial coefficients (exact integers, grown on demand)
# ──────────────────────────────────────────────────────────────────────────────
_PASCAL: List[List[int]] = [[1]]


def _grow_pascal(n: int) -> None:
    while len(_PASCAL) <= n:
        prev = _PASCAL[-1]
        row = [1] + [prev[k - 1] + prev[k] for k in range(1, len(prev))] + [1]
        _PASCAL.append(row)


def binom(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    _grow_pascal(n)
    return _PASCAL[n][k]


def pascal_table(n: int) -> List[List[int]]:
    """Rows 0..n of Pascal's triangle"""
    _grow_pascal(n)
    return [list(row) for row in _PASCAL[: n + 1]]


# ──────────────────────────────────────────────────────────────────────────────
# Affine maps
# ──────────────────────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class AffineMap1D:
    """u -> offset + scale * u"""

    offset: float
    scale: float

    def __post_init__(self):
        if self.scale == 0:
            raise DomainError("AffineMap1D requires a non-zero scale")

    @classmethod
    def identity(cls) -> "AffineMap1D":
        return cls(0.0, 1.0)

    @classmethod
    def from_interval(cls, lo: float, hi: float) -> "AffineMap1D":
        """Map [0, 1] onto [lo, hi]"""
        return cls(float(lo), float(hi) - float(lo))

    def inverse(self) -> "AffineMap1D":
        return AffineMap1D(-self.offset / self.scale, 1.0 / self.scale)

    def __call__(self, u):
        return self.offset + self.scale * u


# ──────────────────────────────────────────────────────────────────────────────
# BiPoly
# ──────────────────────────────────────────────────────────────────────────────
def _normalize(coeffs: Mapping[Exponent, float]) -> Dict[Exponent, float]:
    items = {(int(i), int(j)): float(c) for (i, j), c in coeffs.items() if c != 0}
    if not items:
        return {}
    cutoff = COEFF_CUTOFF * max(abs(c) for c in items.values())
    return {k: c for k, c in items.items() if abs(c) >= cutoff}


class BiPoly:
    """Immutable sparse polynomial sum c_ij t^i x^j"""

    __slots__ = ("_coeffs", "_hash")

    def __init__(self, coeffs: Mapping[Exponent, Number] = None):
        coeffs = coeffs or {}
        for (i, j) in coeffs:
            if i < 0 or j < 0:
                raise DomainError(f"negative exponent ({i}, {j})")
        object.__setattr__(self, "_coeffs", _normalize(coeffs))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("BiPoly is immutable")

    # --- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, c: Number) -> "BiPoly":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c: Number = 1.0) -> "BiPoly":
        return cls({(i, j): c})

    @classmethod
    def t(cls) -> "BiPoly":
        return cls.monomial(1, 0)

    @classmethod
    def x(cls) -> "BiPoly":
        return cls.monomial(0, 1)

    @classmethod
    def parse(cls, text: str) -> "BiPoly":
        """Parse an expression such as ``0.1*x + 0.05*t**2`` (symbols t and x only)"""
        import sympy

        t, x = sympy.symbols("t x")
        try:
            expr = sympy.sympify(str(text).replace("^", "**"), locals={"t": t, "x": x})
            poly = sympy.Poly(sympy.expand(expr), t, x)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as e:
            raise ConfigurationError(f"cannot parse polynomial '{text}': {e}") from e
        return cls({monom: float(c) for monom, c in poly.terms()})

    # --- accessors ----------------------------------------------------------
    @property
    def coeffs(self) -> Dict[Exponent, float]:
        return dict(self._coeffs)

    def items(self) -> Iterator[Tuple[Exponent, float]]:
        return iter(sorted(self._coeffs.items()))

    def coeff(self, i: int, j: int) -> float:
        return self._coeffs.get((i, j), 0.0)

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_constant(self) -> bool:
        return all(k == (0, 0) for k in self._coeffs)

    @property
    def deg_t(self) -> int:
        return max((i for i, _ in self._coeffs), default=0)

    @property
    def deg_x(self) -> int:
        return max((j for _, j in self._coeffs), default=0)

    @property
    def total_degree(self) -> int:
        return max((i + j for i, j in self._coeffs), default=0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._coeffs.values()), default=0.0)

    # --- evaluation ---------------------------------------------------------
    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast(t, x).shape)
        for (i, j), c in self._coeffs.items():
            out = out + c * t ** i * x ** j
        return out if out.shape else float(out)

    # --- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._coeffs)
        for k, c in other._coeffs.items():
            out[k] = out.get(k, 0.0) + c
        return BiPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly({k: -c for k, c in self._coeffs.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return BiPoly({k: c * float(other) for k, c in self._coeffs.items()})
        return poly_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise DomainError("negative power of a polynomial")
        out = BiPoly.constant(1.0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, BiPoly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(tuple(sorted(self._coeffs.items()))))
        return self._hash

    def allclose(self, other: "BiPoly", tol: float = 1e-10) -> bool:
        keys = set(self._coeffs) | set(other._coeffs)
        scale = max(1.0, self.max_abs_coeff(), other.max_abs_coeff())
        return all(abs(self.coeff(*k) - other.coeff(*k)) <= tol * scale for k in keys)

    def __repr__(self):
        if not self._coeffs:
            return "BiPoly(0)"
        terms = []
        for (i, j), c in self.items():
            mono = "".join(
                s for s in (f"t^{i}" if i > 1 else "t" if i == 1 else "",
                            f"x^{j}" if j > 1 else "x" if j == 1 else "")
            )
            terms.append(f"{c:g}{'*' + mono if mono else ''}")
        return "BiPoly(" + " + ".join(terms) + ")"


def _coerce(value) -> BiPoly:
    if isinstance(value, BiPoly):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return BiPoly.constant(float(value))
    raise TypeError(f"cannot use {type(value).__name__} as a polynomial")


# ──────────────────────────────────────────────────────────────────────────────
# Operations
# ──────────────────────────────────────────────────────────────────────────────
def poly_mul(p: BiPoly, q: BiPoly) -> BiPoly:
    out: Dict[Exponent, float] = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0.0) + c1 * c2
    return BiPoly(out)


def poly_diff(p: BiPoly, var: str, order: int = 1) -> BiPoly:
    if var not in ("t", "x"):
        raise DomainError(f"unknown variable '{var}'")
    if order < 0:
        raise DomainError("derivative order must be non-negative")
    out: Dict[Exponent, float] = {}
    for (i, j), c in p.items():
        e = i if var == "t" else j
        if e < order:
            continue
        factor = 1
        for k in range(order):
            factor *= e - k
        key = (i - order, j) if var == "t" else (i, j - order)
        out[key] = out.get(key, 0.0) + c * factor
    return BiPoly(out)


def _affine_powers(m: AffineMap1D, n: int) -> List[np.ndarray]:
    """Coefficient vectors of (offset + scale*u)^k, k = 0..n"""
    rows = []
    for k in range(n + 1):
        row = np.zeros(k + 1)
        for a in range(k + 1):
            row[a] = binom(k, a) * m.offset ** (k - a) * m.scale ** a
        rows.append(row)
    return rows


def poly_affine_sub(p: BiPoly, map_t: AffineMap1D, map_x: AffineMap1D) -> BiPoly:
    """p(offset_t + scale_t*s, offset_x + scale_x*y), re-expanded in (s, y)"""
    if p.is_zero():
        return p
    pow_t = _affine_powers(map_t, p.deg_t)
    pow_x = _affine_powers(map_x, p.deg_x)
    out: Dict[Exponent, float] = {}
    for (i, j), c in p.items():
        block = c * np.outer(pow_t[i], pow_x[j])
        for a in range(i + 1):
            for b in range(j + 1):
                if block[a, b] != 0.0:
                    out[(a, b)] = out.get((a, b), 0.0) + block[a, b]
    return BiPoly(out)


def poly_partial_eval(p: BiPoly, var: str, value: float) -> BiPoly:
    """Fix one variable; the result carries exponent 0 in that variable"""
    if var not in ("t", "x"):
        raise DomainError(f"unknown variable '{var}'")
    out: Dict[Exponent, float] = {}
    for (i, j), c in p.items():
        if var == "t":
            out[(0, j)] = out.get((0, j), 0.0) + c * value ** i
        else:
            out[(i, 0)] = out.get((i, 0), 0.0) + c * value ** j
    return BiPoly(out)


def poly_sum(polys: Iterable[BiPoly]) -> BiPoly:
    out: Dict[Exponent, float] = {}
    for p in polys:
        for k, c in p.items():
            out[k] = out.get(k, 0.0) + c
    return BiPoly(out)
