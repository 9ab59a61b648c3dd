"""Constraint-parameter samples for the rebate-design program and the
constants certifying how close a cover-based relaxation is to the full
program.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .mechanism import clarke_surplus
from .surrogate import SurrogateSpec, u_value

if TYPE_CHECKING:
    from .rebate_design import XVariables

MAX_COVER_POINTS = 2_000_000
BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class CoverConfig:
    n: int
    epsilon: float
    mode: str = "w_face"  # "w_face": theta_1 = 1; "f_face": theta_1 = theta_2 = 1
    max_points: int = MAX_COVER_POINTS

    def __post_init__(self) -> None:
        if self.mode not in ("w_face", "f_face"):
            raise ValueError(f"unknown cover mode {self.mode!r}")
        if self.n < 2 or (self.mode == "f_face" and self.n < 2):
            raise ValueError("need at least two agents")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def free_dims(self) -> int:
        return self.n - 1 if self.mode == "w_face" else self.n - 2

    def grid_step(self) -> float:
        """Largest step ``1/m`` not exceeding ``2 eps / sqrt(d)``.

        Rounding each free coordinate moves it by at most step/2, so the
        Euclidean error is at most ``sqrt(d) * step / 2 <= eps``.
        """
        d = self.free_dims
        if d == 0:
            return 1.0
        raw = 2.0 * self.epsilon / math.sqrt(d)
        return 1.0 / math.ceil(1.0 / raw - 1e-12)


def cover_size(n_levels: int, d: int) -> int:
    """Descending d-tuples over ``n_levels`` values (multiset count)."""
    return math.comb(n_levels + d - 1, d)


def epsilon_cover(config: CoverConfig) -> np.ndarray:
    d = config.free_dims
    fixed = [1.0] * (config.n - d)
    if d == 0:
        return np.array([fixed])
    step = config.grid_step()
    m = round(1.0 / step)
    size = cover_size(m + 1, d)
    if size > config.max_points:
        raise ValueError(f"cover would have {size} points (cap {config.max_points})")
    levels = np.arange(m, -1, -1) / m
    idx = np.array(list(itertools.combinations_with_replacement(range(m + 1), d)), dtype=int)
    pts = np.hstack([np.ones((idx.shape[0], len(fixed))), levels[idx]])
    return pts


def round_to_cover(theta: np.ndarray, config: CoverConfig) -> np.ndarray:
    """Nearest grid point of a face profile (coordinate rounding keeps the order)."""
    step = config.grid_step()
    out = np.array(theta, dtype=float)
    lead = config.n - config.free_dims
    out[..., lead:] = np.round(out[..., lead:] / step) * step
    return out


def random_ordered_samples(n: int, count: int, seed: int | None) -> np.ndarray:
    """``theta_1 = 1``; the rest iid Uniform[0, 1] sorted descending."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    tail = -np.sort(-rng.random((count, n - 1)), axis=1)
    return np.hstack([np.ones((count, 1)), tail])


def f_face_projection(samples: np.ndarray) -> np.ndarray:
    """Rescale descending profiles by their second bid so theta_1 = theta_2 = 1.

    The F row at the rescaled point implies it at the original one; profiles
    with ``theta_2 == 0`` are dropped (their F rows are vacuous).
    """
    samples = np.atleast_2d(samples)
    keep = samples[:, 1] > 0
    scaled = samples[keep] / samples[keep, 1:2]
    scaled[:, 0] = 1.0
    return scaled


def ek_profiles(n: int) -> np.ndarray:
    """Rows ``e_1 .. e_n``: k leading ones then zeros."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.tril(np.ones((n, n)))


def calafiore_campi_count(epsilon: float, delta: float, d: int) -> int:
    """Sample count for violation probability <= epsilon w.p. >= 1 - delta (natural log)."""
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return math.ceil((2.0 / epsilon) * (d * math.log(2.0 / epsilon) + math.log(1.0 / delta)) + 2 * d)


@dataclass(frozen=True)
class TheoryConstants:
    n: int
    K1: float
    K2: float
    K3_inv: float
    B2: float
    Bn: float
    gamma: float
    u_at_one: float

    def bound_for(self, epsilon: float) -> float:
        """Deterministic gap bound between cover relaxation and full program."""
        return self.K1 * self.K2 * epsilon / self.K3_inv


def theory_constants(spec: SurrogateSpec, n: int) -> TheoryConstants:
    if n < 2:
        raise ValueError("n must be at least 2")
    u1 = spec.u_at_one
    B2 = 2.0 * u1 - 2.0 * u_value(spec, 0.5)
    Bn = clarke_surplus(spec, np.ones(n))
    K2 = 2.0 * n**2 * Bn + 2.0 * u1 * n * math.sqrt(n) + u1 * math.sqrt(n)
    gamma = (n + B2 / Bn) / u1
    K3_inv = min(u1, B2 / (Bn * math.sqrt(n - 2 + gamma**2)))
    return TheoryConstants(n=n, K1=1.0, K2=K2, K3_inv=K3_inv, B2=B2, Bn=Bn, gamma=gamma, u_at_one=u1)


def estimate_violation(xv: "XVariables", spec: SurrogateSpec, fresh_samples: np.ndarray) -> float:
    """Fraction of profiles where ``max(g1, g2) > 0`` at ``xv``."""
    from .rebate_design import g_rows

    vals = g_rows(xv, np.atleast_2d(fresh_samples), spec)
    return float(np.mean(vals > BOUNDARY_TOL))


def write_samples_csv(path: str | Path, samples: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"theta_{k + 1}" for k in range(samples.shape[1])])
        for row in samples:
            w.writerow([repr(float(v)) for v in row])


def read_samples_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:]])
