"""Dense two-phase simplex with Bland's rule.

Sized for the rebate-design programs: a handful of variables and up to
~1e5 rows. When rows greatly outnumber variables the LP dual is solved
instead and the primal solution is read off its reduced costs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, NamedTuple, Sequence

import numpy as np

PIVOT_MIN = 1e-11
ENTRY_TOL = 1e-12
COST_TOL = 1e-10
FEAS_TOL = 1e-9
DUAL_RATIO = 50
MAX_PIVOTS = 200_000

_SENSES = ("<=", ">=", "=")


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class NumericalInstabilityError(ArithmeticError):
    """A pivot element fell below the stability threshold."""


class Row(NamedTuple):
    coeffs: np.ndarray
    sense: str
    rhs: float


@dataclass
class LinearProgram:
    """``min objective @ x`` subject to ``A x (sense) rhs`` and box bounds."""

    objective: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    rhs: np.ndarray
    lower_bounds: np.ndarray | None = None
    upper_bounds: np.ndarray | None = None
    labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        d = self.objective.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, d)
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        self.senses = list(self.senses)
        if self.lower_bounds is None:
            self.lower_bounds = np.zeros(d)
        if self.upper_bounds is None:
            self.upper_bounds = np.full(d, np.inf)
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=float).reshape(-1)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=float).reshape(-1)
        if not (self.A.shape[0] == self.rhs.size == len(self.senses)):
            raise ValueError("row count mismatch between A, rhs and senses")
        if self.lower_bounds.size != d or self.upper_bounds.size != d:
            raise ValueError("bound vectors must have one entry per variable")
        if bad := set(self.senses) - set(_SENSES):
            raise ValueError(f"unknown row senses {sorted(bad)}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.rhs)) and np.all(np.isfinite(self.objective))):
            raise ValueError("LP coefficients must be finite")
        if np.any(self.lower_bounds > self.upper_bounds) or np.any(self.lower_bounds == np.inf) or np.any(self.upper_bounds == -np.inf):
            raise ValueError("inconsistent variable bounds")

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.rhs.size

    @property
    def rows(self) -> Iterator[Row]:
        for k in range(self.num_rows):
            yield Row(self.A[k], self.senses[k], float(self.rhs[k]))

    def slack(self, x) -> np.ndarray:
        """Per-row slack, nonnegative where the row is satisfied."""
        ax = self.A @ np.asarray(x, dtype=float)
        out = np.empty_like(ax)
        for sense, mask in ((s, np.array([t == s for t in self.senses], dtype=bool)) for s in _SENSES):
            if sense == "<=":
                out[mask] = self.rhs[mask] - ax[mask]
            elif sense == ">=":
                out[mask] = ax[mask] - self.rhs[mask]
            else:
                out[mask] = -np.abs(ax[mask] - self.rhs[mask])
        return out

    def is_feasible(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower_bounds - tol) or np.any(x > self.upper_bounds + tol):
            return False
        return bool(self.num_rows == 0 or self.slack(x).min() >= -tol)

    def dumps(self) -> str:
        buf = io.StringIO()
        fmt = lambda v: " ".join(repr(float(t)) for t in v)  # noqa: E731
        buf.write(f"num_vars {self.num_vars}\n")
        buf.write(f"objective {fmt(self.objective)}\n")
        buf.write(f"lower {fmt(self.lower_bounds)}\n")
        buf.write(f"upper {fmt(self.upper_bounds)}\n")
        for row in self.rows:
            buf.write(f"{fmt(row.coeffs)} | {row.sense} | {float(row.rhs)!r}\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "LinearProgram":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = {}
        for ln in lines[:4]:
            key, _, rest = ln.partition(" ")
            head[key] = rest
        d = int(head["num_vars"])
        vec = lambda s: np.array([float(t) for t in s.split()]) if s.strip() else np.zeros(0)  # noqa: E731
        A, senses, rhs = [], [], []
        for ln in lines[4:]:
            coeffs, sense, b = (p.strip() for p in ln.split("|"))
            A.append(vec(coeffs))
            senses.append(sense)
            rhs.append(float(b))
        return cls(
            objective=vec(head["objective"]),
            A=np.array(A).reshape(-1, d),
            senses=senses,
            rhs=np.array(rhs),
            lower_bounds=vec(head["lower"]),
            upper_bounds=vec(head["upper"]),
        )


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None
    value: float | None
    basis: tuple[int, ...] = ()
    pivots: int = 0
    route: str = "primal"


# ---------------------------------------------------------------- engine


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    piv = T[r, j]
    if abs(piv) < PIVOT_MIN:
        raise NumericalInstabilityError(f"pivot magnitude {abs(piv):.3g} below {PIVOT_MIN}")
    T[r] /= piv
    f = T[:, j].copy()
    f[r] = 0.0
    T -= np.outer(f, T[r])
    T[:, j] = 0.0
    T[r, j] = 1.0


def _bland(T: np.ndarray, basis: np.ndarray, ncols: int, budget: int) -> tuple[str, int]:
    """Iterate to optimality on the first ``ncols`` columns of tableau ``T``."""
    m = T.shape[0] - 1
    for it in range(budget):
        neg = np.flatnonzero(T[-1, :ncols] < -COST_TOL)
        if neg.size == 0:
            return "optimal", it
        j = int(neg[0])
        col = T[:m, j]
        pos = col > ENTRY_TOL
        if not np.any(pos):
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + ENTRY_TOL * (1.0 + abs(rmin)))
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, r, j)
        basis[r] = j
    raise RuntimeError(f"simplex exceeded {budget} pivots")


@dataclass
class _StdSolution:
    status: str
    z: np.ndarray | None
    reduced: np.ndarray | None
    basis: tuple[int, ...]
    pivots: int


def _two_phase(A: np.ndarray, b: np.ndarray, c: np.ndarray, unit_cols: np.ndarray) -> _StdSolution:
    """``min c z`` s.t. ``A z = b``, ``z >= 0`` with ``b >= 0``.

    ``unit_cols[i]`` names a column equal to ``e_i`` (or -1); those seed the
    basis and the remaining rows get artificials.
    """
    m, N = A.shape
    need = np.flatnonzero(unit_cols < 0)
    k = need.size
    T = np.zeros((m + 1, N + k + 1))
    T[:m, :N] = A
    T[:m, -1] = b
    basis = unit_cols.astype(int).copy()
    for a, row in enumerate(need):
        T[row, N + a] = 1.0
        basis[row] = N + a
    pivots = 0

    if k:
        T[-1, :N] = -A[need].sum(axis=0)
        T[-1, -1] = -b[need].sum()
        status, it = _bland(T, basis, N + k, MAX_PIVOTS)
        pivots += it
        if -T[-1, -1] > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
            return _StdSolution("infeasible", None, None, (), pivots)
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] < N:
                continue
            cand = np.flatnonzero(np.abs(T[r, :N]) > PIVOT_MIN)
            if cand.size:
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
                pivots += 1
            else:
                keep[r] = False  # redundant equality
        T = np.vstack([T[:m][keep], T[-1:]])
        basis = basis[keep]
        T = np.hstack([T[:, :N], T[:, -1:]])
        m = basis.size

    cb = c[basis]
    T[-1, :N] = c - cb @ T[:m, :N]
    T[-1, -1] = -cb @ T[:m, -1]
    status, it = _bland(T, basis, N, MAX_PIVOTS - pivots)
    pivots += it
    if status == "unbounded":
        return _StdSolution("unbounded", None, None, tuple(int(v) for v in basis), pivots)
    z = np.zeros(N)
    z[basis] = T[:m, -1]
    return _StdSolution("optimal", z, T[-1, :N].copy(), tuple(int(v) for v in basis), pivots)


# ---------------------------------------------------------- reductions


@dataclass
class _Standard:
    """``x = offset + M y`` with ``y >= 0``; rows ``G y (sense) h``."""

    M: np.ndarray
    offset: np.ndarray
    cost: np.ndarray
    const: float
    G: np.ndarray
    senses: list[str]
    h: np.ndarray


def _standardize(lp: LinearProgram) -> _Standard:
    d = lp.num_vars
    cols, offset, extra = [], np.zeros(d), []
    for j in range(d):
        lo, hi = lp.lower_bounds[j], lp.upper_bounds[j]
        e = np.zeros(d)
        e[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                extra.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    M = np.column_stack(cols) if cols else np.zeros((d, 0))
    D = M.shape[1]
    G = lp.A @ M
    h = lp.rhs - lp.A @ offset
    senses = list(lp.senses)
    if extra:
        B = np.zeros((len(extra), D))
        for r, (col, width) in enumerate(extra):
            B[r, col] = 1.0
        G = np.vstack([G, B])
        h = np.concatenate([h, [w for _, w in extra]])
        senses += ["<="] * len(extra)
    return _Standard(M, offset, M.T @ lp.objective, float(lp.objective @ offset), G, senses, h)


def _solve_primal(std: _Standard) -> _StdSolution:
    m, D = std.G.shape
    sign = np.array([{"<=": 1.0, ">=": -1.0, "=": 0.0}[s] for s in std.senses])
    has_slack = sign != 0
    slack_rows = np.flatnonzero(has_slack)
    S = np.zeros((m, slack_rows.size))
    S[slack_rows, np.arange(slack_rows.size)] = sign[slack_rows]
    A = np.hstack([std.G, S])
    b = std.h.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    unit = np.full(m, -1)
    for a, r in enumerate(slack_rows):
        if A[r, D + a] == 1.0:
            unit[r] = D + a
    c = np.concatenate([std.cost, np.zeros(slack_rows.size)])
    sol = _two_phase(A, b, c, unit)
    if sol.z is not None:
        sol.z = sol.z[:D]
    return sol


def _solve_dual(std: _Standard) -> _StdSolution:
    # every row as >=, then dual: max h w s.t. G^T w <= cost, w >= 0
    G, h = [], []
    for k, s in enumerate(std.senses):
        if s in (">=", "="):
            G.append(std.G[k])
            h.append(std.h[k])
        if s in ("<=", "="):
            G.append(-std.G[k])
            h.append(-std.h[k])
    Gm = np.array(G).reshape(-1, std.G.shape[1])
    hv = np.array(h)
    M, D = Gm.shape
    A = np.hstack([Gm.T, np.eye(D)])
    b = std.cost.copy()
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    unit = np.where(flip, -1, M + np.arange(D))
    sol = _two_phase(A, b, np.concatenate([-hv, np.zeros(D)]), unit)
    if sol.status == "optimal":
        # primal values are the reduced costs of the dual slacks
        return _StdSolution("optimal", sol.reduced[M:].copy(), None, sol.basis, sol.pivots)
    if sol.status == "unbounded":
        return _StdSolution("infeasible", None, None, (), sol.pivots)
    return _StdSolution("dual_infeasible", None, None, (), sol.pivots)


def solve_lp(lp: LinearProgram, route: str = "auto") -> LPResult:
    """Solve ``lp``; ``route`` is ``"auto"``, ``"primal"`` or ``"dual"``."""
    std = _standardize(lp)
    m, D = std.G.shape
    if route == "auto":
        route = "dual" if m > DUAL_RATIO * max(D, 1) else "primal"
    if route not in ("primal", "dual"):
        raise ValueError(f"unknown route {route!r}")
    sol = _solve_dual(std) if route == "dual" else None
    if sol is None or sol.status == "dual_infeasible":
        route = "primal"
        sol = _solve_primal(std)
    status = LPStatus(sol.status)
    if status is not LPStatus.OPTIMAL:
        return LPResult(status, None, None, sol.basis, sol.pivots, route)
    y = np.maximum(sol.z, 0.0)
    x = std.offset + std.M @ y
    return LPResult(status, x, float(lp.objective @ x), sol.basis, sol.pivots, route)
