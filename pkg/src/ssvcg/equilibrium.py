"""Nash-equilibrium bids for given true valuations, with independent checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .allocation import allocate_by_marginals, as_profile
from .mechanism import RebateCoefficients, payments, vp_deficit
from .surrogate import SurrogateSpec

BR_TOL = 1e-6
VP_TOL = 1e-9
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ValuationSpec:
    """One agent's true valuation: ``w * a**(1 - beta)`` or a custom pair."""

    kind: str
    w: float | None = None
    beta: float | None = None
    v: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)
    v_prime: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "power":
            if self.w is None or self.w <= 0:
                raise ValueError("power valuation needs w > 0")
            if self.beta is None or not 0 < self.beta < 1:
                raise ValueError("power valuation needs beta in (0, 1)")
        elif self.kind == "custom":
            if self.v is None or self.v_prime is None:
                raise ValueError("custom valuation needs v and v_prime")
        else:
            raise ValueError(f"unknown valuation kind {self.kind!r}")

    @classmethod
    def power(cls, w: float, beta: float) -> "ValuationSpec":
        return cls(kind="power", w=float(w), beta=float(beta))

    @classmethod
    def custom(cls, v, v_prime) -> "ValuationSpec":
        return cls(kind="custom", v=v, v_prime=v_prime)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ValuationSpec":
        if d.get("kind") != "power":
            raise ValueError(f"only power valuations can be read from JSON, got {d.get('kind')!r}")
        return cls.power(d["w"], d["beta"])

    def value(self, a):
        a = np.asarray(a, dtype=float)
        if self.kind == "power":
            return self.w * np.power(a, 1.0 - self.beta)
        return np.asarray(self.v(a), dtype=float)

    def marginal(self, a):
        a = np.asarray(a, dtype=float)
        if self.kind == "power":
            return self.w * (1.0 - self.beta) * np.power(a, -self.beta)
        return np.asarray(self.v_prime(a), dtype=float)

    def __call__(self, a: float) -> float:
        return float(self.value(a))


def load_valuations(items: Sequence[Mapping[str, Any]]) -> list[ValuationSpec]:
    if not items:
        raise ValueError("valuation profile is empty")
    return [ValuationSpec.from_dict(d) for d in items]


def true_efficient_allocation(valuations: Sequence[ValuationSpec]) -> np.ndarray:
    if len(valuations) < 2:
        raise ValueError("need at least two agents")
    return allocate_by_marginals([v.marginal for v in valuations])


def nash_bids(valuations: Sequence[ValuationSpec], spec: SurrogateSpec) -> np.ndarray:
    """Bids equating each surrogate marginal to the true marginal at the efficient allocation."""
    a = true_efficient_allocation(valuations)
    theta = np.zeros(len(valuations))
    for i, (v, ai) in enumerate(zip(valuations, a)):
        if ai > 0:
            theta[i] = float(v.marginal(ai)) / float(spec.dU(np.array([ai]))[0])
    return theta


def utility(valuations, spec, theta, i, c: RebateCoefficients | None = None) -> float:
    out = payments(spec, theta, c)
    return float(valuations[i].value(out.allocation[i])) - float(out.payments[i])


@dataclass
class BestResponseReport:
    is_br: bool
    best_gain: float
    best_bid: float
    base_utility: float


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 60) -> tuple[float, float]:
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def verify_best_response(
    valuations: Sequence[ValuationSpec],
    spec: SurrogateSpec,
    theta,
    i: int,
    grid: int = 200,
    c: RebateCoefficients | None = None,
    tol: float = BR_TOL,
) -> BestResponseReport:
    """Scan agent ``i``'s unilateral deviations and report the best gain."""
    theta = as_profile(theta)
    base = theta[i] if theta[i] > 0 else max(float(theta.max()), 1.0)

    def u_at(b: float) -> float:
        dev = theta.copy()
        dev[i] = b
        return utility(valuations, spec, dev, i, c)

    u0 = u_at(float(theta[i]))
    bids = np.concatenate([[0.0], np.geomspace(base / 50.0, base * 50.0, grid)])
    vals = np.array([u_at(float(b)) for b in bids])
    k = int(np.argmax(vals))
    best_bid, best_val = float(bids[k]), float(vals[k])
    lo = float(bids[max(k - 1, 1)]) if k > 0 else 0.0
    hi = float(bids[min(k + 1, bids.size - 1)])
    if hi > lo:
        b, v = _golden_max(u_at, lo, hi)
        if v > best_val:
            best_bid, best_val = b, v
    gain = best_val - u0
    return BestResponseReport(is_br=gain <= tol, best_gain=gain, best_bid=best_bid, base_utility=u0)


@dataclass
class AgentVP:
    agent: int
    utility: float
    q: float
    rebate: float
    vp_ok: bool


def verify_equilibrium_vp(
    valuations: Sequence[ValuationSpec],
    spec: SurrogateSpec,
    c: RebateCoefficients | None = None,
    theta=None,
) -> list[AgentVP]:
    """Voluntary participation at the Nash profile (or at ``theta`` if given)."""
    theta = nash_bids(valuations, spec) if theta is None else as_profile(theta)
    out = payments(spec, theta, c)
    report = []
    for i, v in enumerate(valuations):
        u = float(v.value(out.allocation[i])) - float(out.payments[i])
        q = vp_deficit(spec, theta, i, v)
        report.append(AgentVP(agent=i, utility=u, q=q, rebate=float(out.rebates[i]), vp_ok=u >= -VP_TOL))
    return report


__all__ = [
    "AgentVP",
    "BestResponseReport",
    "ValuationSpec",
    "load_valuations",
    "nash_bids",
    "true_efficient_allocation",
    "utility",
    "verify_best_response",
    "verify_equilibrium_vp",
]
