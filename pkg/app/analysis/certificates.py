# app/analysis/certificates.py
"""
Moment and localizing matrices as positive-semidefiniteness certificates.

Univariate sequences are 1-D arrays (m_0, m_1, ...); bivariate sequences are
mappings {(i, j): m_ij}. The basis is graded: 1, t, x, t^2, t x, x^2, ...
"""
import logging
from typing import List, Mapping, Tuple, Union

import numpy as np

from app.analysis.polynomials import BiPoly
from app.config import PSD_TOL
from app.errors import DimensionError

logger = logging.getLogger(__name__)

MomentSequence = Union[np.ndarray, List[float], Mapping[Tuple[int, int], float]]


def graded_basis(r: int) -> List[Tuple[int, int]]:
    """Exponents (i, j) with i + j <= r in graded order"""
    return [(d - j, j) for d in range(r + 1) for j in range(d + 1)]


def _lookup(seq: MomentSequence, key: Tuple[int, int], univariate: bool) -> float:
    if univariate:
        i, j = key
        k = i + j
        if k >= len(seq):
            raise DimensionError(f"sequence of length {len(seq)} has no moment of order {k}")
        return float(seq[k])
    if key not in seq:
        raise DimensionError(f"sequence has no moment {key}")
    return float(seq[key])


def _is_univariate(seq: MomentSequence) -> bool:
    return not isinstance(seq, Mapping)


def moment_matrix(seq: MomentSequence, r: int) -> np.ndarray:
    univariate = _is_univariate(seq)
    if univariate:
        seq = np.asarray(seq, dtype=float)
        if len(seq) < 2 * r + 1:
            raise DimensionError(f"moment matrix of order {r} needs {2 * r + 1} moments, got {len(seq)}")
        idx = np.arange(r + 1)
        return seq[idx[:, None] + idx[None, :]]
    basis = graded_basis(r)
    out = np.empty((len(basis), len(basis)))
    for a, (i1, j1) in enumerate(basis):
        for b, (i2, j2) in enumerate(basis):
            out[a, b] = _lookup(seq, (i1 + i2, j1 + j2), False)
    return out


def localizing_matrix(seq: MomentSequence, q: BiPoly, r: int) -> np.ndarray:
    """M_r(q, m)(a, b) = sum_alpha q_alpha m_{beta(a,b) + alpha}.

    For univariate sequences q is a polynomial in x only.
    """
    univariate = _is_univariate(seq)
    if univariate:
        if q.deg_t > 0:
            raise DimensionError("univariate localizing polynomial must not depend on t")
        seq = np.asarray(seq, dtype=float)
        need = 2 * r + q.deg_x + 1
        if len(seq) < need:
            raise DimensionError(f"localizing matrix of order {r} needs {need} moments, got {len(seq)}")
        out = np.zeros((r + 1, r + 1))
        for (_, k), c in q.items():
            idx = np.arange(r + 1)
            out += c * seq[idx[:, None] + idx[None, :] + k]
        return out
    basis = graded_basis(r)
    out = np.zeros((len(basis), len(basis)))
    for a, (i1, j1) in enumerate(basis):
        for b, (i2, j2) in enumerate(basis):
            out[a, b] = sum(
                c * _lookup(seq, (i1 + i2 + i, j1 + j2 + j), False) for (i, j), c in q.items()
            )
    return out


def psd_certificate(matrix: np.ndarray, tol: float = PSD_TOL) -> bool:
    """True when the smallest eigenvalue is above -tol * trace"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {matrix.shape}")
    sym = 0.5 * (matrix + matrix.T)
    if np.any(np.diag(sym) < -tol * max(1.0, np.abs(np.diag(sym)).max())):
        return False
    trace = float(np.trace(sym))
    cutoff = -tol * max(abs(trace), np.finfo(float).tiny)
    return bool(np.linalg.eigvalsh(sym).min() >= cutoff)


def interval_certificate(seq: MomentSequence, r: int, lo: float = 0.0, hi: float = 1.0) -> bool:
    """Moment matrix of order r and localizing matrix with q = (hi - x)(x - lo) of order r-1"""
    q = (BiPoly.constant(hi) - BiPoly.x()) * (BiPoly.x() - BiPoly.constant(lo))
    if not psd_certificate(moment_matrix(seq, r)):
        return False
    if r >= 1 and not psd_certificate(localizing_matrix(seq, q, r - 1)):
        return False
    return True
