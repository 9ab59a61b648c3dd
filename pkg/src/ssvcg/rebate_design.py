"""Worst-case-optimal linear rebates via a sampled linear program.

Decision variables are the cumulative coefficients
``x_i = c_2 + ... + c_i`` (i = 2..n-1) plus the worst-case ratio ``t``.
Voluntary participation is then just ``x >= 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .allocation import is_descending
from .lp import LinearProgram, LPStatus, solve_lp
from .mechanism import RebateCoefficients, welfare_and_surplus_rows
from .sampling import CoverConfig, ek_profiles, epsilon_cover, f_face_projection, random_ordered_samples
from .surrogate import SurrogateSpec

log = logging.getLogger(__name__)

X_BOUND_SLACK = 1e-6


@dataclass
class XVariables:
    x: np.ndarray
    t: float | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float).reshape(-1)


def _require_descending(theta: np.ndarray) -> None:
    if not is_descending(theta):
        raise ValueError("profile must be sorted in descending order")


def alpha_rows(thetas: np.ndarray) -> np.ndarray:
    """``alpha_i = i theta_{i+1} + (n-i) theta_i`` for i = 2..n-1, then ``alpha_n = 0``."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    _require_descending(thetas)
    n = thetas.shape[1]
    i = np.arange(2, n)
    body = i * thetas[:, i] + (n - i) * thetas[:, i - 1]
    return np.hstack([body, np.zeros((thetas.shape[0], 1))])


def alpha_coefficients(theta) -> np.ndarray:
    return alpha_rows(np.asarray(theta, dtype=float)[None, :])[0]


def coefficient_rows(thetas: np.ndarray) -> np.ndarray:
    """Coefficients ``alpha_i - alpha_{i+1}`` of ``x_i`` in the rebate sum."""
    a = alpha_rows(thetas)
    return a[:, :-1] - a[:, 1:]


def c_to_x(c: RebateCoefficients) -> XVariables:
    return XVariables(np.cumsum(c.c))


def x_to_c(x: XVariables | np.ndarray, n: int | None = None) -> RebateCoefficients:
    xs = x.x if isinstance(x, XVariables) else np.asarray(x, dtype=float)
    c = np.diff(xs, prepend=0.0) if xs.size else xs
    return RebateCoefficients(c, xs.size + 2 if n is None else n)


def _pieces(xv: XVariables, thetas: np.ndarray, spec: SurrogateSpec):
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    sigma, p_s = welfare_and_surplus_rows(spec, thetas)
    reb = coefficient_rows(thetas) @ xv.x
    return reb, p_s, sigma


def g1_rows(xv: XVariables, thetas: np.ndarray, spec: SurrogateSpec) -> np.ndarray:
    reb, p_s, _ = _pieces(xv, thetas, spec)
    return reb - p_s


def g2_rows(xv: XVariables, thetas: np.ndarray, spec: SurrogateSpec) -> np.ndarray:
    if xv.t is None:
        raise ValueError("g2 needs the worst-case variable t")
    reb, p_s, sigma = _pieces(xv, thetas, spec)
    return -reb + p_s - xv.t * sigma


def g_rows(xv: XVariables, thetas: np.ndarray, spec: SurrogateSpec) -> np.ndarray:
    reb, p_s, sigma = _pieces(xv, thetas, spec)
    return np.maximum(reb - p_s, -reb + p_s - xv.t * sigma)


def g1(xv: XVariables, theta, spec: SurrogateSpec) -> float:
    return float(g1_rows(xv, np.asarray(theta)[None, :], spec)[0])


def g2(xv: XVariables, theta, spec: SurrogateSpec) -> float:
    return float(g2_rows(xv, np.asarray(theta)[None, :], spec)[0])


def g(xv: XVariables, theta, spec: SurrogateSpec) -> float:
    return float(g_rows(xv, np.asarray(theta)[None, :], spec)[0])


def build_scp(
    spec: SurrogateSpec,
    n: int,
    f_samples: np.ndarray | None,
    w_samples: np.ndarray,
) -> LinearProgram:
    """Sampled program over ``(x_2, ..., x_{n-1}, t)``: minimise ``t``.

    One ``<=`` row per F sample and one ``>=`` row per W sample.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    w = np.atleast_2d(np.asarray(w_samples, dtype=float))
    if w.size == 0:
        raise ValueError("need at least one W sample")
    if w.shape[1] != n:
        raise ValueError("W samples have the wrong width")
    nx = n - 2
    f = np.zeros((0, n)) if f_samples is None else np.atleast_2d(np.asarray(f_samples, dtype=float))
    if nx > 0 and f.shape[0] == 0:
        # without F rows x grows freely and the program is meaningless
        raise ValueError("need at least one F sample when rebate coefficients exist")

    blocks, senses, rhs = [], [], []
    if nx > 0:
        if f.shape[1] != n:
            raise ValueError("F samples have the wrong width")
        _, p_f = welfare_and_surplus_rows(spec, f)
        blocks.append(np.hstack([coefficient_rows(f), np.zeros((f.shape[0], 1))]))
        senses += ["<="] * f.shape[0]
        rhs.append(p_f)
    sig_w, p_w = welfare_and_surplus_rows(spec, w)
    blocks.append(np.hstack([coefficient_rows(w), sig_w[:, None]]))
    senses += [">="] * w.shape[0]
    rhs.append(p_w)

    objective = np.zeros(nx + 1)
    objective[-1] = 1.0
    upper = np.full(nx + 1, np.inf)
    upper[-1] = 1.0
    return LinearProgram(
        objective=objective,
        A=np.vstack(blocks),
        senses=senses,
        rhs=np.concatenate(rhs),
        lower_bounds=np.zeros(nx + 1),
        upper_bounds=upper,
    )


@dataclass
class SamplingConfig:
    """Which constraint parameters enter the sampled program.

    ``train_samples=None`` means the default of ``5000 * n``.
    """

    train_samples: int | None = None
    seed: int | None = 0
    include_ek: bool = True
    cover_epsilon: float | None = None
    combined: bool = False
    extra_w: np.ndarray | None = field(default=None, repr=False)
    extra_f: np.ndarray | None = field(default=None, repr=False)


@dataclass
class RebateDesign:
    c: RebateCoefficients
    t: float
    x: np.ndarray
    lp_stats: dict
    f_samples: np.ndarray = field(repr=False)
    w_samples: np.ndarray = field(repr=False)


def assemble_samples(n: int, cfg: SamplingConfig) -> tuple[np.ndarray, np.ndarray]:
    count = 5000 * n if cfg.train_samples is None else cfg.train_samples
    w_parts, f_parts = [], []
    if cfg.include_ek:
        ek = ek_profiles(n)
        w_parts.append(ek)
        f_parts.append(ek[1:])
    if count > 0:
        rnd = random_ordered_samples(n, count, cfg.seed)
        w_parts.append(rnd)
        f_parts.append(rnd if cfg.combined else f_face_projection(rnd))
    if cfg.cover_epsilon is not None:
        w_parts.append(epsilon_cover(CoverConfig(n, cfg.cover_epsilon, "w_face")))
        if n >= 3:
            f_parts.append(epsilon_cover(CoverConfig(n, cfg.cover_epsilon, "f_face")))
    if cfg.extra_w is not None:
        w_parts.append(np.atleast_2d(cfg.extra_w))
    if cfg.extra_f is not None:
        f_parts.append(np.atleast_2d(cfg.extra_f))
    if not w_parts:
        raise ValueError("sampling configuration yields no constraint samples")
    f = np.vstack(f_parts) if f_parts else np.zeros((0, n))
    return f, np.vstack(w_parts)


def optimize_rebates(spec: SurrogateSpec, n: int, cfg: SamplingConfig | None = None) -> RebateDesign:
    cfg = cfg or SamplingConfig()
    f, w = assemble_samples(n, cfg)
    lp = build_scp(spec, n, f if n >= 3 else None, w)
    res = solve_lp(lp)
    if res.status is not LPStatus.OPTIMAL:
        raise RuntimeError(f"sampled program not solved: {res.status.value}")
    x = np.maximum(res.x[:-1], 0.0)
    t = float(res.x[-1])
    stats = {
        "num_vars": lp.num_vars,
        "num_rows": lp.num_rows,
        "f_rows": int(f.shape[0]) if n >= 3 else 0,
        "w_rows": int(w.shape[0]),
        "pivots": res.pivots,
        "route": res.route,
        "status": res.status.value,
    }
    if cfg.include_ek and x.size:
        from .mechanism import clarke_surplus

        bn = clarke_surplus(spec, np.ones(n))
        if x.max() > bn + X_BOUND_SLACK:
            log.warning("x exceeds the B_n bound: max x = %.6g > %.6g", x.max(), bn)
        stats["x_bound_ok"] = bool(x.max() <= bn + X_BOUND_SLACK)
    return RebateDesign(c=x_to_c(x, n), t=t, x=x, lp_stats=stats, f_samples=f, w_samples=w)
