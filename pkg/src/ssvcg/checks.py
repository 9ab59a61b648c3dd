"""Randomised property audit behind ``ssvcg check``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracles
from .lp import LinearProgram
from .mechanism import (
    RebateCoefficients,
    rebate_sum_rows,
    rebates_ordered_rows,
    surplus_rows,
    welfare_and_surplus_rows,
    welfare_rows,
)
from .rebate_design import build_scp
from .sampling import CoverConfig, ek_profiles, epsilon_cover, random_ordered_samples, round_to_cover
from .surrogate import SurrogateSpec

ALPHAS = (0.01, 0.25, 0.5, 0.75, 0.99)


@dataclass
class CheckResult:
    name: str
    trials: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _random_profiles(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    th = rng.random((count, n)) * rng.choice([1.0, 10.0], size=(count, 1))
    # sprinkle exact zeros so degenerate rows are exercised
    th[rng.random((count, n)) < 0.1] = 0.0
    return th


def check_oracle_agreement(rng, trials: int = 200) -> CheckResult:
    bad = total = 0
    for alpha in ALPHAS:
        spec = SurrogateSpec.power_law(alpha)
        for n in range(2, 11):
            th = _random_profiles(rng, n, trials)
            sigma, p_s = welfare_and_surplus_rows(spec, th)
            ref_s = np.array([oracles.sigma_closed(r, alpha) for r in th])
            ref_p = np.array([oracles.ps_closed(r, alpha) for r in th])
            bad += int(np.sum(np.abs(sigma - ref_s) > 1e-8) + np.sum(np.abs(p_s - ref_p) > 1e-8))
            total += trials
    return CheckResult("oracle_agreement", total, bad)


def check_monotonicity(rng, trials: int = 1000) -> CheckResult:
    spec = SurrogateSpec.power_law(0.5)
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        th = rng.random(n)
        bumped = th.copy()
        bumped[rng.integers(n)] += rng.random() * 2.0
        p = surplus_rows(spec, np.vstack([th, bumped]))
        bad += int(p[1] < p[0] - 1e-9)
    return CheckResult("ps_monotone", trials, bad)


def check_scaling(rng, trials: int = 1000) -> CheckResult:
    spec = SurrogateSpec.power_law(0.5)
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        th = rng.random(n)
        l1, l2 = np.sort(rng.random(2) * 5.0 + 1e-3)
        p = surplus_rows(spec, np.vstack([l1 * th, l2 * th]))
        bad += int(p[0] / l1 < p[1] / l2 - 1e-9)
    return CheckResult("ps_scaling", trials, bad)


def check_lipschitz(rng, trials: int = 1000) -> CheckResult:
    spec = SurrogateSpec.power_law(0.5)
    u1 = spec.u_at_one
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        b = rng.random(n)
        b2 = np.clip(b + rng.normal(scale=rng.choice([1e-3, 0.1, 1.0]), size=n), 0.0, None)
        s, p = welfare_and_surplus_rows(spec, np.vstack([b, b2]))
        dist = float(np.linalg.norm(b - b2))
        bad += int(abs(s[0] - s[1]) > u1 * math.sqrt(n) * dist + 1e-12)
        bad += int(abs(p[0] - p[1]) > 2.0 * u1 * n * math.sqrt(n) * dist + 1e-12)
    return CheckResult("lipschitz", trials, bad)


def check_cover(rng, trials: int = 1000) -> CheckResult:
    bad = 0
    for n, eps, mode in ((3, 0.1, "w_face"), (4, 0.2, "w_face"), (4, 0.15, "f_face"), (5, 0.3, "w_face")):
        cfg = CoverConfig(n, eps, mode)
        pts = epsilon_cover(cfg)
        keyset = {tuple(np.round(p, 12)) for p in pts}
        th = random_ordered_samples(n, trials, int(rng.integers(1 << 31)))
        if mode == "f_face":
            th[:, 1] = 1.0
        snapped = round_to_cover(th, cfg)
        far = np.linalg.norm(snapped - th, axis=1) > eps + 1e-12
        missing = sum(tuple(np.round(p, 12)) not in keyset for p in snapped)
        bad += int(far.sum()) + missing
    return CheckResult("cover", 4 * trials, bad)


def check_rebate_identity(rng, trials: int = 1000, alpha_fn: Callable | None = None) -> CheckResult:
    from .rebate_design import alpha_rows

    alpha_fn = alpha_fn or alpha_rows
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(3, 9))
        c = RebateCoefficients(np.abs(rng.normal(size=n - 2)), n)
        th = -np.sort(-rng.random((1, n)), axis=1)
        direct = rebates_ordered_rows(c, th).sum()
        via_alpha = float(alpha_fn(th)[0, :-1] @ c.c + alpha_fn(th)[0, -1])
        bad += int(abs(direct - via_alpha) > 1e-12 or abs(direct - rebate_sum_rows(c, th)[0]) > 1e-12)
    return CheckResult("rebate_sum_identity", trials, bad)


def check_lp_witness(rng, trials: int = 20) -> CheckResult:
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 8))
        spec = SurrogateSpec.power_law(float(rng.choice(ALPHAS)))
        w = np.vstack([ek_profiles(n), random_ordered_samples(n, 50, int(rng.integers(1 << 31)))])
        f = w[w[:, 1] == 1.0] if n >= 3 else None
        lp: LinearProgram = build_scp(spec, n, f, w)
        witness = np.zeros(lp.num_vars)
        witness[-1] = 1.0
        bad += int(not lp.is_feasible(witness))
    return CheckResult("lp_witness", trials, bad)


def check_worst_case_location(rng, trials: int = 5) -> CheckResult:
    bad = 0
    for n in (2, 3, 4):
        for alpha in ALPHAS:
            spec = SurrogateSpec.power_law(alpha)
            pts = epsilon_cover(CoverConfig(n, 0.05 if n < 4 else 0.1, "w_face"))
            sigma, p_s = welfare_and_surplus_rows(spec, pts)
            ratio = p_s / sigma
            bad += int(ratio.max() > oracles.ssvcg_worst_ratio_closed(n, alpha) + 1e-9)
    return CheckResult("worst_case_at_en", 15, bad)


def faulty_alpha_rows(thetas):
    from .rebate_design import alpha_rows

    a = alpha_rows(thetas)
    a[:, -1] = 1.0
    return a


def run_all(seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    alpha_fn = faulty_alpha_rows if fault == "alpha_n" else None
    return [
        check_oracle_agreement(rng),
        check_monotonicity(rng),
        check_scaling(rng),
        check_lipschitz(rng),
        check_cover(rng),
        check_rebate_identity(rng, alpha_fn=alpha_fn),
        check_lp_witness(rng),
        check_worst_case_location(rng),
    ]


__all__ = ["CheckResult", "run_all", "welfare_rows"]
