"""SSVCG outcomes: surrogate welfare, Clarke surplus, payments and linear rebates.

Agent indices are 0-based throughout. Rebate coefficients follow the
1-based order-statistic convention: ``c[0]`` multiplies the 2nd largest
remaining bid, ``c[k]`` the (k+2)-th.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .allocation import allocation_rows, as_profile, is_descending, ordered
from .surrogate import SurrogateSpec

log = logging.getLogger(__name__)

VP_TOL = 1e-12


@dataclass(frozen=True)
class RebateCoefficients:
    """Linear rebate weights ``(c_2, ..., c_{n-1})``; ``c_0 = c_1 = 0`` implicitly."""

    c: np.ndarray
    n: int

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "c", c)
        if self.n < 2:
            raise ValueError("need at least two agents")
        if c.size != max(self.n - 2, 0):
            raise ValueError(f"expected {max(self.n - 2, 0)} coefficients for n={self.n}, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("rebate coefficients must be finite")
        sums = self.partial_sums()
        if sums.size and sums.min() < -VP_TOL:
            raise ValueError(
                f"partial sums of c must be nonnegative (voluntary participation); min is {sums.min():.3g}"
            )

    @classmethod
    def zeros(cls, n: int) -> "RebateCoefficients":
        return cls(np.zeros(max(n - 2, 0)), n)

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.c)

    def full(self) -> np.ndarray:
        """Weights on the n-1 order statistics of the other agents' bids."""
        return np.concatenate([[0.0], self.c])


def welfare_rows(spec: SurrogateSpec, thetas: np.ndarray) -> np.ndarray:
    thetas = np.atleast_2d(thetas)
    a = allocation_rows(spec, thetas)
    return np.sum(thetas * spec.U(a), axis=1)


def leave_one_out_welfare_rows(spec: SurrogateSpec, thetas: np.ndarray) -> np.ndarray:
    """Column ``i`` holds the surrogate welfare with agent ``i`` withdrawn."""
    thetas = np.atleast_2d(thetas)
    out = np.empty_like(thetas)
    for i in range(thetas.shape[1]):
        # a zero bidder receives nothing, which is exactly withdrawal
        dropped = thetas.copy()
        dropped[:, i] = 0.0
        out[:, i] = welfare_rows(spec, dropped)
    return out


def surplus_rows(spec: SurrogateSpec, thetas: np.ndarray) -> np.ndarray:
    thetas = np.atleast_2d(thetas)
    n = thetas.shape[1]
    return leave_one_out_welfare_rows(spec, thetas).sum(axis=1) - (n - 1) * welfare_rows(spec, thetas)


def welfare_and_surplus_rows(spec: SurrogateSpec, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    thetas = np.atleast_2d(thetas)
    n = thetas.shape[1]
    sigma = welfare_rows(spec, thetas)
    return sigma, leave_one_out_welfare_rows(spec, thetas).sum(axis=1) - (n - 1) * sigma


def surrogate_welfare(spec: SurrogateSpec, theta) -> float:
    theta = as_profile(theta, min_agents=1)
    return float(welfare_rows(spec, theta[None, :])[0])


def clarke_surplus(spec: SurrogateSpec, theta) -> float:
    theta = as_profile(theta)
    return float(surplus_rows(spec, theta[None, :])[0])


def rebate(c: RebateCoefficients, b_ordered, i: int) -> float:
    """Rebate of the agent ranked ``i`` (0-based) in a descending profile."""
    b = np.asarray(b_ordered, dtype=float)
    if b.size != c.n:
        raise ValueError(f"profile has {b.size} agents, coefficients are for {c.n}")
    if not is_descending(b):
        raise ValueError("rebate expects a descending profile")
    if not 0 <= i < c.n:
        raise IndexError(f"agent index {i} out of range for {c.n} agents")
    return float(np.dot(c.full(), np.delete(b, i)))


def rebates_ordered_rows(c: RebateCoefficients, b_ordered: np.ndarray) -> np.ndarray:
    """Rebates for every rank of every descending row."""
    b = np.atleast_2d(b_ordered)
    w = c.full()
    out = np.empty_like(b)
    for i in range(b.shape[1]):
        out[:, i] = np.delete(b, i, axis=1) @ w
    return out


def rebates(c: RebateCoefficients, theta) -> np.ndarray:
    """Rebates for an arbitrary profile, returned in the original agent order."""
    theta = as_profile(theta)
    order = np.argsort(-theta, kind="stable")
    by_rank = rebates_ordered_rows(c, theta[order][None, :])[0]
    out = np.empty_like(by_rank)
    out[order] = by_rank
    return out


def rebate_sum_rows(c: RebateCoefficients, b_ordered: np.ndarray) -> np.ndarray:
    """``sum_i r_i`` via ``sum_k c_k (k b_{k+1} + (n-k) b_k)`` on descending rows."""
    b = np.atleast_2d(b_ordered)
    n = b.shape[1]
    if n < 3:
        return np.zeros(b.shape[0])
    k = np.arange(2, n)
    weights = k * b[:, k] + (n - k) * b[:, k - 1]
    return weights @ c.c


@dataclass
class MechanismOutcome:
    theta: np.ndarray
    allocation: np.ndarray
    payments: np.ndarray
    rebates: np.ndarray
    surplus_pS: float
    welfare_sigmaS: float

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "allocation": self.allocation.tolist(),
            "payments": self.payments.tolist(),
            "rebates": self.rebates.tolist(),
            "p_S": self.surplus_pS,
            "sigma_S": self.welfare_sigmaS,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _clarke_terms(spec: SurrogateSpec, theta: np.ndarray):
    a = allocation_rows(spec, theta[None, :])[0]
    own = theta * spec.U(a)
    sigma = float(own.sum())
    loo = leave_one_out_welfare_rows(spec, theta[None, :])[0]
    # others' welfare with i present, minus with i absent
    externality = loo - (sigma - own)
    return a, sigma, loo, externality


def payments(spec: SurrogateSpec, theta, c: RebateCoefficients | None = None) -> MechanismOutcome:
    theta = as_profile(theta)
    if c is None:
        c = RebateCoefficients.zeros(theta.size)
    a, sigma, loo, externality = _clarke_terms(spec, theta)
    r = rebates(c, theta)
    n = theta.size
    p_s = float(loo.sum() - (n - 1) * sigma)
    return MechanismOutcome(
        theta=theta,
        allocation=a,
        payments=externality - r,
        rebates=r,
        surplus_pS=p_s,
        welfare_sigmaS=sigma,
    )


def vp_deficit(spec: SurrogateSpec, theta, i: int, v_i: Callable[[float], float]) -> float:
    """Negative Clarke utility of agent ``i``; VP holds iff ``r_i >= q_i``."""
    theta = as_profile(theta)
    if not 0 <= i < theta.size:
        raise IndexError(f"agent index {i} out of range")
    a, _, _, externality = _clarke_terms(spec, theta)
    return float(-v_i(float(a[i])) + externality[i])


@dataclass
class WorstCase:
    value: float
    argmax: np.ndarray
    skipped: int


def worst_case_ratio(spec: SurrogateSpec, c: RebateCoefficients, samples) -> WorstCase:
    """Largest ``(p_S - sum r_i) / sigma_S`` over descending sample profiles."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != c.n:
        raise ValueError("sample width does not match the number of agents")
    if not is_descending(samples):
        raise ValueError("samples must be descending profiles")
    sigma, p_s = welfare_and_surplus_rows(spec, samples)
    keep = sigma > 0
    skipped = int((~keep).sum())
    if skipped:
        log.info("skipped %d zero-welfare profiles", skipped)
    if not np.any(keep):
        raise ValueError("no sample with positive surrogate welfare")
    ratio = (p_s[keep] - rebate_sum_rows(c, samples[keep])) / sigma[keep]
    k = int(np.argmax(ratio))
    return WorstCase(value=float(ratio[k]), argmax=samples[keep][k].copy(), skipped=skipped)


__all__ = [
    "MechanismOutcome",
    "RebateCoefficients",
    "WorstCase",
    "clarke_surplus",
    "ordered",
    "payments",
    "rebate",
    "rebates",
    "surrogate_welfare",
    "vp_deficit",
    "worst_case_ratio",
]
