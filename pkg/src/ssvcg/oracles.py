"""Closed forms for the power-law surrogate ``U(a) = a**(1 - alpha)``.

These never touch the allocation code and serve as an independent check
on it.
"""

from __future__ import annotations

import math

import numpy as np


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def lp_norm(theta, alpha: float) -> float:
    """``||theta||_{1/alpha}`` evaluated in log space (zeros dropped)."""
    _check_alpha(alpha)
    theta = np.asarray(theta, dtype=float)
    pos = theta[theta > 0]
    if pos.size == 0:
        return 0.0
    z = np.log(pos) / alpha
    m = z.max()
    return float(math.exp(alpha * (m + math.log(np.exp(z - m).sum()))))


def sigma_closed(theta, alpha: float) -> float:
    return lp_norm(theta, alpha)


def ps_closed(theta, alpha: float) -> float:
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    loo = sum(lp_norm(np.delete(theta, j), alpha) for j in range(n))
    return loo - (n - 1) * lp_norm(theta, alpha)


def ssvcg_worst_ratio_closed(n: int, alpha: float) -> float:
    """No-rebate worst case ``p_S(e_n) / sigma_S(e_n)``."""
    _check_alpha(alpha)
    if n < 2:
        raise ValueError("n must be at least 2")
    # n (1 - 1/n)^alpha - (n - 1), rearranged to avoid cancellation
    return 1.0 + n * math.expm1(alpha * math.log1p(-1.0 / n))


def mu_ne_closed(vprime_at_1_over_n: float, n: int, alpha: float) -> float:
    """Common Nash bid of ``n`` identical agents."""
    _check_alpha(alpha)
    if n < 2:
        raise ValueError("n must be at least 2")
    if vprime_at_1_over_n <= 0:
        raise ValueError("marginal valuation must be positive")
    return vprime_at_1_over_n / ((1.0 - alpha) * n**alpha)
