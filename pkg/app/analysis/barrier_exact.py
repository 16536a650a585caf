# app/analysis/barrier_exact.py
"""
Closed-form double knock-out call under geometric Brownian motion with flat
barriers, undiscounted: E[(S_T - K)^+ ; S stays in (B_d, B_u) up to T].

The image series is summed over n = 0, +-1, +-2, ... in log space.
"""
import logging
import math

import numpy as np
from scipy.stats import norm

from app.errors import ConfigurationError, NumericalError

logger = logging.getLogger(__name__)

SERIES_TOL = 1e-12
MAX_TERMS = 10_000


def _log_norm_diff(hi: float, lo: float) -> float:
    """log(N(hi) - N(lo)) for hi >= lo"""
    if hi <= lo:
        return -math.inf
    if lo > 0:
        a, b = float(norm.logsf(lo)), float(norm.logsf(hi))
    elif hi < 0:
        a, b = float(norm.logcdf(hi)), float(norm.logcdf(lo))
    else:
        return math.log(norm.cdf(hi) - norm.cdf(lo))
    if math.isinf(a):
        return -math.inf
    gap = -math.expm1(b - a)
    return a + math.log(gap) if gap > 0 else -math.inf


def _series_terms(n: int, S, K, B_d, B_u, b, sigma, T):
    """(asset term, strike term) of index n"""
    vol = sigma * math.sqrt(T)
    mu1 = 2.0 * b / sigma ** 2 + 1.0
    mu3 = mu1
    log_ratio = math.log(B_u / B_d)
    carry = (b + 0.5 * sigma ** 2) * T

    d1 = (math.log(S / K) + 2 * n * log_ratio + carry) / vol
    d2 = (math.log(S / B_u) + 2 * n * log_ratio + carry) / vol
    d3 = (math.log(B_d ** 2 / (K * S)) - 2 * n * log_ratio + carry) / vol
    d4 = (math.log(B_d ** 2 / (B_u * S)) - 2 * n * log_ratio + carry) / vol

    # (B_u/B_d)^{n mu} and (B_d^{n+1}/(B_u^n S))^{mu}
    log_up = n * log_ratio
    log_down = (n + 1) * math.log(B_d) - n * math.log(B_u) - math.log(S)

    asset = math.exp(mu1 * log_up + _log_norm_diff(d1, d2)) - math.exp(
        mu3 * log_down + _log_norm_diff(d3, d4)
    )
    strike = math.exp((mu1 - 2) * log_up + _log_norm_diff(d1 - vol, d2 - vol)) - math.exp(
        (mu3 - 2) * log_down + _log_norm_diff(d3 - vol, d4 - vol)
    )
    return asset, strike


def gbm_double_barrier_exact(b, sigma, B_d, B_u, K, x0, T) -> float:
    """Undiscounted double knock-out call with growth rate b; zero for K = B_u"""
    if not (0 < B_d < B_u):
        raise ConfigurationError(f"need 0 < B_d < B_u, got {B_d}, {B_u}")
    if not B_d <= K <= B_u:
        raise ConfigurationError(f"strike K={K} must lie in [{B_d}, {B_u}]")
    if not B_d < x0 < B_u:
        raise ConfigurationError(f"x0={x0} must lie strictly inside ({B_d}, {B_u})")
    if sigma <= 0 or T <= 0:
        raise ConfigurationError("sigma and T must be positive")

    asset_sum, strike_sum = [], []
    a, s = _series_terms(0, x0, K, B_d, B_u, b, sigma, T)
    asset_sum.append(a)
    strike_sum.append(s)
    growth = math.exp(b * T)
    for n in range(1, MAX_TERMS):
        size = 0.0
        for m in (n, -n):
            a, s = _series_terms(m, x0, K, B_d, B_u, b, sigma, T)
            asset_sum.append(a)
            strike_sum.append(s)
            size = max(size, abs(growth * x0 * a), abs(K * s))
        if size < SERIES_TOL:
            logger.debug(f"double-barrier series converged after n={n}")
            break
    else:
        partial = x0 * growth * math.fsum(asset_sum) - K * math.fsum(strike_sum)
        raise NumericalError(f"double-barrier series did not converge in {MAX_TERMS} terms", estimate=partial)
    return float(np.clip(x0 * growth * math.fsum(asset_sum) - K * math.fsum(strike_sum), 0.0, None))


def gbm_call_undiscounted(b, sigma, K, x0, T) -> float:
    """E[(S_T - K)^+] without barriers"""
    vol = sigma * math.sqrt(T)
    d1 = (math.log(x0 / K) + (b + 0.5 * sigma ** 2) * T) / vol
    return float(x0 * math.exp(b * T) * norm.cdf(d1) - K * norm.cdf(d1 - vol))
