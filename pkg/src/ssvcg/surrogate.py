"""Surrogate valuation family ``vbar(a, theta) = theta * U(a)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


class _UnboundedSlope:
    """Marker for ``U'(0) = +inf``.

    Deliberately supports no arithmetic so it cannot leak into sums.
    """

    _instance: "_UnboundedSlope | None" = None

    def __new__(cls) -> "_UnboundedSlope":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED_SLOPE"

    def __bool__(self) -> bool:
        return True


UNBOUNDED_SLOPE = _UnboundedSlope()


@dataclass(frozen=True)
class SurrogateSpec:
    """Announced surrogate family.

    ``kind`` is ``"power_law"`` (``U(a) = a**(1 - alpha)``) or ``"custom"``.
    Custom ``u`` and ``u_prime`` must accept numpy arrays elementwise.
    """

    kind: str
    alpha: float | None = None
    u: ArrayFn | None = field(default=None, repr=False, compare=False)
    u_prime: ArrayFn | None = field(default=None, repr=False, compare=False)
    u_at_one: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "power_law":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"power-law alpha must lie in (0, 1), got {self.alpha}")
        elif self.kind == "custom":
            if self.u is None or self.u_prime is None:
                raise ValueError("custom surrogate needs both u and u_prime")
        else:
            raise ValueError(f"unknown surrogate kind {self.kind!r}")

    @classmethod
    def power_law(cls, alpha: float) -> "SurrogateSpec":
        return cls(kind="power_law", alpha=float(alpha), u_at_one=1.0)

    @classmethod
    def custom(cls, u: ArrayFn, u_prime: ArrayFn) -> "SurrogateSpec":
        u1 = float(np.asarray(u(np.array([1.0])))[0])
        return cls(kind="custom", u=u, u_prime=u_prime, u_at_one=u1)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "SurrogateSpec":
        """Build from ``{"surrogate": {"kind": "power_law", "alpha": 0.5}}`` or the inner dict."""
        inner = cfg.get("surrogate", cfg)
        kind = inner.get("kind")
        if kind != "power_law":
            raise ValueError(f"only power_law surrogates can be read from config, got {kind!r}")
        if "alpha" not in inner:
            raise ValueError("power_law surrogate config needs 'alpha'")
        return cls.power_law(inner["alpha"])

    def to_config(self) -> dict:
        if self.kind != "power_law":
            raise ValueError("custom surrogates are not serialisable")
        return {"surrogate": {"kind": "power_law", "alpha": self.alpha}}

    @property
    def is_power_law(self) -> bool:
        return self.kind == "power_law"

    def as_custom(self) -> "SurrogateSpec":
        """Same U wrapped as a custom spec, forcing the numeric allocation path."""
        if self.kind == "custom":
            return self
        alpha = self.alpha
        return SurrogateSpec.custom(
            lambda a: np.power(a, 1.0 - alpha),
            lambda a: (1.0 - alpha) * np.power(a, -alpha),
        )

    # vectorised evaluation, no domain checks
    def U(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if self.kind == "power_law":
            return np.power(a, 1.0 - self.alpha)
        return np.asarray(self.u(a), dtype=float)

    def dU(self, a: np.ndarray) -> np.ndarray:
        """U' for strictly positive ``a``."""
        a = np.asarray(a, dtype=float)
        if self.kind == "power_law":
            return (1.0 - self.alpha) * np.power(a, -self.alpha)
        return np.asarray(self.u_prime(a), dtype=float)


def _check_unit(a: float) -> float:
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"allocation {a} outside [0, 1]")
    return a


def u_value(spec: SurrogateSpec, a: float) -> float:
    a = _check_unit(a)
    if a == 0.0:
        return 0.0
    return float(spec.U(np.array([a]))[0])


def u_derivative(spec: SurrogateSpec, a: float) -> float | _UnboundedSlope:
    """U'(a); at ``a == 0`` returns :data:`UNBOUNDED_SLOPE`."""
    a = _check_unit(a)
    if a == 0.0:
        return UNBOUNDED_SLOPE
    return float(spec.dU(np.array([a]))[0])


@dataclass
class AssumptionReport:
    passed: bool
    violations: list[dict] = field(default_factory=list)


def check_assumptions(spec: SurrogateSpec, grid_size: int = 101) -> AssumptionReport:
    """Audit U(0) = 0, strict monotonicity and strict concavity on a uniform grid."""
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    grid = np.linspace(0.0, 1.0, grid_size)
    vals = spec.U(grid)
    violations: list[dict] = []
    if vals[0] != 0.0:
        violations.append({"kind": "U(0) != 0", "a": 0.0, "value": float(vals[0])})
    d1 = np.diff(vals)
    for k in np.flatnonzero(~(d1 > 0)):
        violations.append({"kind": "not increasing", "a": float(grid[k]), "value": float(d1[k])})
    d2 = np.diff(vals, 2)
    for k in np.flatnonzero(~(d2 < 0)):
        violations.append({"kind": "not concave", "a": float(grid[k + 1]), "value": float(d2[k])})
    return AssumptionReport(passed=not violations, violations=violations)
