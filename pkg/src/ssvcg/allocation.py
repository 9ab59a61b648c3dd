"""Efficient allocation of one unit of a divisible good.

Bid profiles and allocations are plain 1-D float arrays; the ``*_rows``
variants take a 2-D array with one profile per row.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .surrogate import SurrogateSpec

SUM_TOL = 1e-12
CLEAR_TOL = 1e-9
MAX_ITER = 200
_INNER_ITER = 80
_A_MIN = 1e-300


class ConvergenceError(RuntimeError):
    """Water-filling could not bracket or converge (non-conforming marginal)."""


def as_profile(theta, min_agents: int = 2) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("a bid profile is a 1-D vector")
    if theta.size < min_agents:
        raise ValueError(f"need at least {min_agents} agents, got {theta.size}")
    if not np.all(np.isfinite(theta)) or np.any(theta < 0):
        raise ValueError("bids must be finite and nonnegative")
    return theta


def is_descending(theta: np.ndarray) -> bool:
    return bool(np.all(np.diff(theta, axis=-1) <= 0))


def ordered(theta) -> np.ndarray:
    """Descending view of a profile."""
    return -np.sort(-np.asarray(theta, dtype=float), axis=-1, kind="stable")


def invert_decreasing(fprime: Callable[[np.ndarray], np.ndarray], y: np.ndarray) -> np.ndarray:
    """Solve ``fprime(a) = y`` for ``a`` in [0, 1], ``fprime`` strictly decreasing.

    Returns 1 where ``fprime(1) >= y`` and 0 where the marginal at 0+ is
    already below ``y``. Bisection is geometric so tiny solutions keep
    relative precision.
    """
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    full = fprime(np.ones_like(y)) >= y
    none = fprime(np.full_like(y, _A_MIN)) <= y
    out[full] = 1.0
    out[none & ~full] = 0.0
    todo = ~(full | none)
    if np.any(todo):
        yt = y[todo]
        lo = np.full(yt.shape, _A_MIN)
        hi = np.ones(yt.shape)
        for _ in range(_INNER_ITER):
            mid = np.sqrt(lo) * np.sqrt(hi)  # lo * hi can underflow
            above = fprime(mid) > yt
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[todo] = 0.5 * (lo + hi)
    return out


def water_fill(demand: Callable[[np.ndarray], np.ndarray], lam_lo: np.ndarray) -> np.ndarray:
    """Find, per row, the price ``lam`` with ``sum(demand(lam)) == 1``.

    ``demand`` maps a length-B vector of prices to a (B, n) matrix of
    allocations, nonincreasing in price. ``lam_lo`` must satisfy
    ``sum(demand(lam_lo)) >= 1``.
    """
    lam_lo = np.asarray(lam_lo, dtype=float).copy()
    lo_sum = demand(lam_lo).sum(axis=1)
    if np.any(lo_sum < 1.0 - SUM_TOL):
        raise ConvergenceError("lower price bracket does not exhaust the good")
    lam_hi = 2.0 * lam_lo
    for _ in range(MAX_ITER):
        over = demand(lam_hi).sum(axis=1) >= 1.0
        if not np.any(over):
            break
        lam_lo = np.where(over, lam_hi, lam_lo)
        lam_hi = np.where(over, 2.0 * lam_hi, lam_hi)
    else:
        raise ConvergenceError("could not bracket the market-clearing price")

    done = np.abs(lo_sum - 1.0) <= SUM_TOL
    lam = np.where(done, lam_lo, np.sqrt(lam_lo) * np.sqrt(lam_hi))
    for _ in range(MAX_ITER):
        alloc = demand(lam)
        total = alloc.sum(axis=1)
        done = done | (np.abs(total - 1.0) <= SUM_TOL)
        if np.all(done):
            if np.any(np.abs(total - 1.0) > CLEAR_TOL):
                raise ConvergenceError("no price clears the market (marginal not strictly decreasing?)")
            return alloc
        high = total > 1.0
        lam_lo = np.where(~done & high, lam, lam_lo)
        lam_hi = np.where(~done & ~high, lam, lam_hi)
        nxt = np.sqrt(lam_lo) * np.sqrt(lam_hi)
        # bracket collapsed to adjacent floats: accept
        stuck = ~done & ((nxt == lam_lo) | (nxt == lam_hi))
        done = done | stuck
        lam = np.where(done, lam, nxt)
    raise ConvergenceError(f"price bisection did not converge in {MAX_ITER} iterations")


def _surrogate_rows_numeric(spec: SurrogateSpec, thetas: np.ndarray) -> np.ndarray:
    pos = thetas > 0
    safe = np.where(pos, thetas, 1.0)

    def demand(lam: np.ndarray) -> np.ndarray:
        a = invert_decreasing(spec.dU, (lam[:, None] / safe).ravel()).reshape(thetas.shape)
        return np.where(pos, a, 0.0)

    u1 = float(spec.dU(np.array([1.0]))[0])
    lam_lo = thetas.max(axis=1) * u1
    lam_lo = np.where(lam_lo > 0, lam_lo, thetas.max(axis=1) * 1e-300)
    return water_fill(demand, lam_lo)


def allocation_rows(spec: SurrogateSpec, thetas) -> np.ndarray:
    """Efficient surrogate allocation for each row of ``thetas``."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.zeros_like(thetas)
    live = thetas.max(axis=1) > 0
    if not np.any(live):
        return out
    th = thetas[live]
    if spec.is_power_law:
        # normalise by the row max so theta**(1/alpha) cannot overflow
        w = np.power(th / th.max(axis=1, keepdims=True), 1.0 / spec.alpha)
        out[live] = w / w.sum(axis=1, keepdims=True)
    else:
        out[live] = _surrogate_rows_numeric(spec, th)
    return out


def efficient_allocation(spec: SurrogateSpec, theta) -> np.ndarray:
    theta = as_profile(theta, min_agents=1)
    return allocation_rows(spec, theta[None, :])[0]


def allocation_without_agent(spec: SurrogateSpec, theta, i: int) -> np.ndarray:
    """Allocation over the n-1 agents left after removing agent ``i`` (0-based)."""
    theta = as_profile(theta)
    if not 0 <= i < theta.size:
        raise IndexError(f"agent index {i} out of range for {theta.size} agents")
    return efficient_allocation(spec, np.delete(theta, i))


def allocate_by_marginals(marginals: Sequence[Callable[[np.ndarray], np.ndarray]]) -> np.ndarray:
    """Maximise ``sum_i v_i(a_i)`` over the simplex given each ``v_i'``."""
    n = len(marginals)

    def demand(lam: np.ndarray) -> np.ndarray:
        return np.column_stack([invert_decreasing(m, lam) for m in marginals]).reshape(lam.size, n)

    lam_lo = max(float(np.asarray(m(np.array([1.0])))[0]) for m in marginals)
    if lam_lo <= 0:
        lam_lo = 1e-300
    return water_fill(demand, np.array([lam_lo]))[0]
