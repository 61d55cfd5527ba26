"""Joint feature/structure denoising by framelet-regularized ADMM.

Recovers a clean signal ``U`` and a sparse self-expressive structure ``Z``
from noisy features ``X`` on a graph by minimizing

    sum_{k,l} nu_{k,l} ||W_{k,l} U||_{1,G} + ||Z||_1
        + lambda1 ||E||_{2,1,G} + lambda2/2 ||U - X||_{2,G}^2

subject to ``U = Y U + E``, ``Y 1 = 1`` and ``Y = Z - diag(Z)``, with the
framelet coefficients split off as ``Q = W U``.  One sweep updates
``U -> E -> Y -> Z -> Q`` (or ``U -> Z -> E -> Y -> Q``, see
:class:`UpdateOrder`) and then the multipliers and penalties.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse.linalg as spla
from scipy import linalg

from .framelet import Channel, Coefficients, FrameletSystem, framelet_decompose, framelet_reconstruct
from .graph import Graph, NormKind, graph_norm
from .prox import batch_threshold, soft_threshold, soft_threshold_rows

DENSE_CAP = 5000
CHOLESKY_CAP = 2000


class SolverError(RuntimeError):
    """A subproblem solve failed; carries the sweep index when known."""

    def __init__(self, message: str, iteration: int | None = None, residual: float | None = None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration
        self.residual = residual


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


class USolve(str, Enum):
    AUTO = "auto"
    CHOLESKY = "cholesky"
    CG = "cg"
    TAYLOR = "taylor"


class UpdateOrder(str, Enum):
    # Z after Y: Z is thresholded against the Y its multiplier update uses,
    # which keeps every Lam4 entry inside [-1, 1]
    BOUNDED = "u-e-y-z-q"
    # Z before E and Y; Y then sees the fresh Z
    Z_FIRST = "u-z-e-y-q"


class EThreshold(str, Enum):
    # 1/mu1 for every row
    UNIT = "unit"
    # lambda1 * d_i / mu1, the exact prox of lambda1 ||E||_{2,1,G}
    DEGREE = "degree"


def _channel_key(c: Channel) -> str:
    return f"{c[0]},{c[1]}"


def _parse_channel(key: str) -> Channel:
    k, l = key.split(",")
    return int(k), int(l)


@dataclass
class SolverConfig:
    """Hyperparameters of the joint solver and its ablations.

    ``mu_init``/``mu_max`` hold the four penalties in constraint order:
    self-expression, framelet split, row sums, and the ``Y``/``Z`` split.
    ``nu`` optionally overrides the default channel weights
    ``nu_{0,L} = 0``, ``nu_{k,l} = 4^{-l-1} nu0``.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    nu0: float = 10.0
    nu: dict[Channel, float] | None = None
    rho: float = 1.1
    mu_init: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    mu_max: tuple[float, float, float, float] = (1e6, 1e6, 1e6, 1e6)
    max_iter: int = 10
    u_solve: USolve = USolve.AUTO
    e_threshold_mode: EThreshold = EThreshold.UNIT
    order: UpdateOrder = UpdateOrder.BOUNDED
    y_zero_diagonal: bool = True
    tol_residual: float = 1e-2

    def __post_init__(self):
        self.u_solve = USolve(self.u_solve)
        self.e_threshold_mode = EThreshold(self.e_threshold_mode)
        self.order = UpdateOrder(self.order)
        self.y_zero_diagonal = bool(self.y_zero_diagonal)
        self.mu_init = tuple(float(v) for v in self.mu_init)
        self.mu_max = tuple(float(v) for v in self.mu_max)
        if self.nu is not None:
            self.nu = {tuple(c): float(v) for c, v in self.nu.items()}
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        out = []
        if not self.lambda1 > 0:
            out.append(f"lambda1 must be positive, got {self.lambda1}")
        if not self.lambda2 > 0:
            out.append(f"lambda2 must be positive, got {self.lambda2}")
        if not self.nu0 >= 0:
            out.append(f"nu0 must be nonnegative, got {self.nu0}")
        if self.nu is not None and any(v < 0 for v in self.nu.values()):
            out.append("nu weights must be nonnegative")
        if not self.rho >= 1:
            out.append(f"rho must be >= 1, got {self.rho}")
        if len(self.mu_init) != 4 or len(self.mu_max) != 4:
            out.append("mu_init and mu_max need four entries")
        else:
            if any(not m > 0 for m in self.mu_init):
                out.append(f"mu_init entries must be positive, got {self.mu_init}")
            if any(a > b for a, b in zip(self.mu_init, self.mu_max)):
                out.append("mu_init must not exceed mu_max componentwise")
        if self.max_iter < 0:
            out.append(f"max_iter must be nonnegative, got {self.max_iter}")
        if not self.tol_residual > 0:
            out.append(f"tol_residual must be positive, got {self.tol_residual}")
        return out

    def nu_map(self, channels: list[Channel]) -> dict[Channel, float]:
        low = channels[0]
        out = {c: (0.0 if c == low else 4.0 ** (-c[1] - 1) * self.nu0) for c in channels}
        if self.nu is not None:
            unknown = set(self.nu) - set(channels)
            if unknown:
                raise ConfigError([f"nu given for unknown channels {sorted(unknown)}"])
            out.update(self.nu)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["u_solve"] = self.u_solve.value
        d["e_threshold_mode"] = self.e_threshold_mode.value
        d["order"] = self.order.value
        d["mu_init"] = list(self.mu_init)
        d["mu_max"] = list(self.mu_max)
        d["nu"] = None if self.nu is None else {_channel_key(c): v for c, v in self.nu.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        d = dict(d)
        if d.get("nu") is not None:
            d["nu"] = {_parse_channel(k): v for k, v in d["nu"].items()}
        for key in ("mu_init", "mu_max"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError([str(exc)]) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SolverConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class DotState:
    U: np.ndarray
    Z: np.ndarray
    E: np.ndarray
    Y: np.ndarray
    Q: Coefficients
    lam1: np.ndarray
    lam2: Coefficients
    lam3: np.ndarray
    lam4: np.ndarray
    mu: np.ndarray
    iter: int = 0

    def copy(self) -> "DotState":
        return DotState(
            U=self.U.copy(),
            Z=self.Z.copy(),
            E=self.E.copy(),
            Y=self.Y.copy(),
            Q={c: v.copy() for c, v in self.Q.items()},
            lam1=self.lam1.copy(),
            lam2={c: v.copy() for c, v in self.lam2.items()},
            lam3=self.lam3.copy(),
            lam4=self.lam4.copy(),
            mu=self.mu.copy(),
            iter=self.iter,
        )


TRACE_COLUMNS = (
    "iter",
    "objective",
    "lagrangian",
    "r1",
    "r2",
    "r3",
    "r4",
    "kkt_dual_max",
    "kkt_stationarity",
    "mu1",
    "mu2",
    "mu3",
    "mu4",
)


@dataclass
class IterationRecord:
    iter: int
    objective: float
    lagrangian: float | None = None
    r1: float | None = None
    r2: float | None = None
    r3: float | None = None
    r4: float | None = None
    kkt_dual_max: float | None = None
    kkt_stationarity: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    mu3: float | None = None
    mu4: float | None = None
    extra: dict = field(default_factory=dict, repr=False)


@dataclass
class DiagnosticsTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i) -> IterationRecord:
        return self.records[i]

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self) -> str:
        """One row per iteration; absent values are left empty."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.records:
            writer.writerow(["" if getattr(r, c) is None else _fmt(getattr(r, c)) for c in TRACE_COLUMNS])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path: str | Path) -> "DiagnosticsTrace":
        rows = list(csv.DictReader(Path(path).read_text().splitlines()))
        records = []
        for row in rows:
            if tuple(row) != TRACE_COLUMNS:
                raise ValueError(f"unexpected trace columns {tuple(row)}")
            values = {k: (None if v == "" else float(v)) for k, v in row.items()}
            values["iter"] = int(values["iter"])
            records.append(IterationRecord(**values))
        return cls(records)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class KKTReport:
    """Feasibility and dual-feasibility surrogates at one state.

    ``lam4_excess``: ``max(||Lam4||_inf - 1, 0)``.
    ``lam2_excess``: per channel, ``max_ij max(|Lam2[i,j]| - nu d_i, 0)``.
    ``lam1_excess``: ``max_i max(||Lam1[i,:]|| - t_i, 0)`` with ``t_i`` the
    row threshold scale of the E-update mode (1 or ``lambda1 d_i``).
    ``stationarity``: ``||Lam1 U^T - Lam3 1^T - Lam4||_F``, the Y-gradient of
    the Lagrangian. It vanishes exactly under the Z-first order; under the
    bounded order it equals the dual residual ``mu4 (Z_new - Z_old)``. With a
    zero-diagonal Y-update the diagonal is excluded, since the diagonal
    constraint is then carried by the row corrections instead of ``Lam4``.
    """

    r1: float
    r2: float
    r3: float
    r4: float
    lam1_excess: float
    lam2_excess: dict[Channel, float]
    lam4_excess: float
    stationarity: float

    @property
    def primal_max(self) -> float:
        return max(self.r1, self.r2, self.r3, self.r4)

    @property
    def dual_max(self) -> float:
        return max(self.lam1_excess, self.lam4_excess, *self.lam2_excess.values(), 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lam2_excess"] = {_channel_key(c): v for c, v in self.lam2_excess.items()}
        d["primal_max"] = self.primal_max
        d["dual_max"] = self.dual_max
        return d


class DotResult(NamedTuple):
    U: np.ndarray
    Z: np.ndarray
    trace: DiagnosticsTrace
    state: DotState


# -- helpers -----------------------------------------------------------------


def _as_signal(X, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n:
        raise ValueError(f"signal must have {n} rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("signal contains non-finite entries")
    return X


def row_normalized_adjacency(g: Graph) -> np.ndarray:
    """``D^{-1} A`` densely; isolated rows spread uniformly over the other nodes."""
    A = g.dense_adjacency()
    d = g.degrees
    Y = np.zeros_like(A)
    pos = d > 0
    Y[pos] = A[pos] / d[pos, None]
    if g.n > 1:
        for i in np.flatnonzero(~pos):
            Y[i] = 1.0 / (g.n - 1)
            Y[i, i] = 0.0
    return Y


def residuals(state: DotState, WU: Coefficients | None = None, sys: FrameletSystem | None = None):
    """The four constraint residual matrices ``(R1, R2 map, R3, R4)``."""
    if WU is None:
        WU = framelet_decompose(sys, state.U) if sys is not None else None
    R1 = state.U - state.Y @ state.U - state.E
    R2 = None if WU is None else {c: state.Q[c] - WU[c] for c in state.Q}
    R3 = state.Y.sum(axis=1) - 1.0
    R4 = state.Y - state.Z + np.diag(np.diag(state.Z))
    return R1, R2, R3, R4


def residual_norms(state: DotState, WU: Coefficients | None = None, sys=None) -> tuple[float, float, float, float]:
    R1, R2, R3, R4 = residuals(state, WU, sys)
    r2 = max((np.linalg.norm(v) for v in R2.values()), default=0.0) if R2 else 0.0
    return (
        float(np.linalg.norm(R1)),
        float(r2),
        float(np.linalg.norm(R3)),
        float(np.linalg.norm(R4)),
    )


# -- initialization ------------------------------------------------------------


def init_state(g: Graph, sys: FrameletSystem | None, X, cfg: SolverConfig) -> DotState:
    """``U = X``, ``Y = Z = D^{-1} A``, ``E = U - Y U``, ``Q = W X``, zero multipliers."""
    if g.n > DENSE_CAP:
        raise ValueError(f"dense structure variables limited to n <= {DENSE_CAP}, got {g.n}")
    X = _as_signal(X, g.n)
    if sys is not None and sys.n != g.n:
        raise ValueError("framelet system and graph sizes differ")
    Y = row_normalized_adjacency(g)
    U = X.copy()
    channels = sys.index_set if sys is not None else []
    Q = framelet_decompose(sys, U) if sys is not None else {}
    return DotState(
        U=U,
        Z=Y.copy(),
        E=U - Y @ U,
        Y=Y,
        Q=Q,
        lam1=np.zeros_like(U),
        lam2={c: np.zeros_like(U) for c in channels},
        lam3=np.zeros(g.n),
        lam4=np.zeros((g.n, g.n)),
        mu=np.array(cfg.mu_init, dtype=float),
    )


# -- primal updates ----------------------------------------------------------


def _u_matrix(state: DotState, g: Graph, lambda2: float, mu2: float | None) -> np.ndarray:
    L0 = np.eye(g.n) - state.Y
    M = state.mu[0] * (L0.T @ L0)
    M[np.diag_indices_from(M)] += lambda2 * g.degrees + (mu2 if mu2 is not None else 0.0)
    return M


def dot_u_system(state: DotState, g: Graph, sys: FrameletSystem | None, X, cfg: SolverConfig, with_framelet: bool = True):
    """Assemble the U-subproblem ``(M, rhs)`` densely.

    ``M = lambda2 D + mu1 L0^T L0 + mu2 I`` and
    ``rhs = mu1 L0^T E + lambda2 D X - L0^T Lam1 + sum W^T (mu2 Q + Lam2)``;
    the framelet terms are dropped when ``with_framelet`` is false.
    """
    X = _as_signal(X, g.n)
    mu1, mu2 = state.mu[0], state.mu[1]
    L0 = np.eye(g.n) - state.Y
    rhs = mu1 * (L0.T @ state.E) + cfg.lambda2 * g.degrees[:, None] * X - L0.T @ state.lam1
    if with_framelet:
        rhs = rhs + framelet_reconstruct(sys, {c: mu2 * state.Q[c] + state.lam2[c] for c in state.Q})
    M = _u_matrix(state, g, cfg.lambda2, mu2 if with_framelet else None)
    return M, rhs


def _solve_u(M: np.ndarray, rhs: np.ndarray, state: DotState, g: Graph, cfg: SolverConfig, diag_part: np.ndarray) -> np.ndarray:
    method = cfg.u_solve
    if method is USolve.AUTO:
        method = USolve.CHOLESKY if g.n <= CHOLESKY_CAP else USolve.CG
    if method is USolve.CHOLESKY:
        try:
            c = linalg.cho_factor(M, check_finite=False)
        except linalg.LinAlgError as exc:
            raise SolverError(f"U-system is not positive definite: {exc}") from exc
        U = linalg.cho_solve(c, rhs, check_finite=False)
        res = np.linalg.norm(M @ U - rhs)
        scale = np.linalg.norm(rhs)
        if res > 1e-8 * max(scale, 1e-300) and res > 1e-12:
            raise SolverError("U-system residual too large", residual=float(res / scale))
        return U
    if method is USolve.CG:
        n = g.n
        op = spla.LinearOperator((n, n), matvec=lambda v: M @ v, dtype=float)
        cols = []
        for j in range(rhs.shape[1]):
            x, info = spla.cg(op, rhs[:, j], x0=state.U[:, j], rtol=1e-8, atol=0.0, maxiter=10 * n)
            if info != 0:
                res = np.linalg.norm(M @ x - rhs[:, j])
                raise SolverError(f"CG did not converge (info={info})", residual=float(res))
            cols.append(x)
        return np.column_stack(cols)
    # first-order Neumann expansion around the diagonal part:
    # (A + B)^-1 ~ (I - A^-1 B) A^-1 with A diagonal, B = mu1 L0^T L0
    Ainv = 1.0 / diag_part
    V = Ainv[:, None] * rhs
    B = M - np.diag(diag_part)
    return V - Ainv[:, None] * (B @ V)


def update_u(state: DotState, g: Graph, sys: FrameletSystem, X, cfg: SolverConfig) -> np.ndarray:
    M, rhs = dot_u_system(state, g, sys, X, cfg)
    diag_part = cfg.lambda2 * g.degrees + state.mu[1]
    return _solve_u(M, rhs, state, g, cfg, diag_part)


def update_z(state: DotState, cfg: SolverConfig | None = None) -> np.ndarray:
    mu4 = state.mu[3]
    R = soft_threshold(state.Y + state.lam4 / mu4, 1.0 / mu4)
    np.fill_diagonal(R, 0.0)
    return R


def e_thresholds(g: Graph, cfg: SolverConfig, mu1: float) -> np.ndarray:
    if cfg.e_threshold_mode is EThreshold.UNIT:
        return np.full(g.n, 1.0 / mu1)
    return cfg.lambda1 * g.degrees / mu1


def update_e(state: DotState, g: Graph, cfg: SolverConfig) -> np.ndarray:
    mu1 = state.mu[0]
    V = state.U - state.Y @ state.U + state.lam1 / mu1
    return soft_threshold_rows(V, e_thresholds(g, cfg, mu1))


def y_rhs(state: DotState) -> np.ndarray:
    mu1, _, mu3, mu4 = state.mu
    B = mu1 * (state.U - state.E) @ state.U.T + state.lam1 @ state.U.T
    B += mu3 - state.lam3[:, None]
    B += mu4 * state.Z - state.lam4
    return B


def woodbury_factor(U: np.ndarray, mu1: float, mu3: float, mu4: float):
    """``(Ut, S)`` with ``Ut = [sqrt(mu1) U, sqrt(mu3) 1]`` and ``S = mu4 I + Ut^T Ut``."""
    n = U.shape[0]
    Ut = np.hstack([math.sqrt(mu1) * U, math.sqrt(mu3) * np.ones((n, 1))])
    S = mu4 * np.eye(Ut.shape[1]) + Ut.T @ Ut
    return Ut, S


def y_inverse(U: np.ndarray, mu1: float, mu3: float, mu4: float) -> np.ndarray:
    """Dense ``(mu1 U U^T + mu3 1 1^T + mu4 I)^-1`` through the Woodbury identity."""
    Ut, S = woodbury_factor(U, mu1, mu3, mu4)
    n = U.shape[0]
    return (np.eye(n) - Ut @ linalg.solve(S, Ut.T, assume_a="pos")) / mu4


def update_y(state: DotState, cfg: SolverConfig | None = None) -> np.ndarray:
    """Minimize the augmented Lagrangian over ``Y``.

    Unconstrained, ``Y = B M^-1`` with ``M = mu1 U U^T + mu3 1 1^T + mu4 I``,
    applied through the Woodbury identity so only a (d+1)x(d+1) system is
    solved. With ``cfg.y_zero_diagonal`` the minimizer is taken over
    matrices with zero diagonal instead: each row gets the correction
    ``-c_i e_i^T M^-1`` with ``c_i = (B M^-1)_ii / (M^-1)_ii``.
    """
    mu1, _, mu3, mu4 = state.mu
    B = y_rhs(state)
    Ut, S = woodbury_factor(state.U, mu1, mu3, mu4)
    try:
        cho = linalg.cho_factor(S, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SolverError(f"Woodbury inner solve failed: {exc}") from exc
    Y = (B - (Ut @ linalg.cho_solve(cho, (B @ Ut).T)).T) / mu4
    if cfg is None or cfg.y_zero_diagonal:
        # rows of M^-1 restricted to e_i: (e_i - Ut S^-1 Ut^T e_i) / mu4
        W = linalg.cho_solve(cho, Ut.T)
        Minv_rows = (np.eye(Ut.shape[0]) - Ut @ W) / mu4
        c = np.diag(Y) / np.diag(Minv_rows)
        Y = Y - c[:, None] * Minv_rows
        np.fill_diagonal(Y, 0.0)
    return Y


def q_thresholds(g: Graph, nu: float, mu2: float, d: int) -> np.ndarray:
    """Per-entry thresholds ``nu d_i / mu2`` with the degree column replicated ``d`` times."""
    return np.repeat((nu * g.degrees / mu2)[:, None], d, axis=1)


def update_q(
    state: DotState,
    sys: FrameletSystem,
    cfg: SolverConfig,
    g: Graph,
    WU: Coefficients | None = None,
) -> Coefficients:
    if WU is None:
        WU = framelet_decompose(sys, state.U)
    mu2 = state.mu[1]
    nu = cfg.nu_map(sys.index_set)
    d = state.U.shape[1]
    return {
        c: batch_threshold(WU[c] - state.lam2[c] / mu2, q_thresholds(g, nu[c], mu2, d))
        for c in sys.index_set
    }


def update_multipliers_penalties(
    state: DotState,
    cfg: SolverConfig,
    WU: Coefficients | None = None,
    active: tuple[bool, bool, bool, bool] = (True, True, True, True),
) -> None:
    """Dual ascent on every active constraint, then ``mu <- min(rho mu, mu_max)``.

    Updates ``state`` in place.
    """
    mu1, mu2, mu3, mu4 = state.mu
    R1, R2, R3, R4 = residuals(state, WU)
    if active[0]:
        state.lam1 = state.lam1 + mu1 * R1
    if active[1] and R2 is not None:
        state.lam2 = {c: state.lam2[c] + mu2 * R2[c] for c in state.lam2}
    if active[2]:
        state.lam3 = state.lam3 + mu3 * R3
    if active[3]:
        state.lam4 = state.lam4 + mu4 * R4
    state.mu = np.minimum(cfg.rho * state.mu, np.asarray(cfg.mu_max))


# -- diagnostics ---------------------------------------------------------------


def objective_value(state: DotState, X, g: Graph, sys: FrameletSystem | None, cfg: SolverConfig, WU=None) -> float:
    """Value of the constrained objective at ``(U, Z, E)``; uses ``W U``, not ``Q``."""
    X = _as_signal(X, g.n)
    total = 0.0
    if sys is not None:
        if WU is None:
            WU = framelet_decompose(sys, state.U)
        nu = cfg.nu_map(sys.index_set)
        total += sum(nu[c] * graph_norm(WU[c], g.degrees, NormKind.L1G) for c in sys.index_set if nu[c])
    total += float(np.abs(state.Z).sum())
    total += cfg.lambda1 * graph_norm(state.E, g.degrees, NormKind.L21G)
    total += 0.5 * cfg.lambda2 * graph_norm(state.U - X, g.degrees, NormKind.L2G_SQ)
    return float(total)


def lagrangian_value(state: DotState, X, g: Graph, sys: FrameletSystem | None, cfg: SolverConfig, WU=None) -> float:
    X = _as_signal(X, g.n)
    if sys is not None and WU is None:
        WU = framelet_decompose(sys, state.U)
    mu1, mu2, mu3, mu4 = state.mu
    R1, R2, R3, R4 = residuals(state, WU)
    total = float(np.abs(state.Z).sum())
    total += cfg.lambda1 * graph_norm(state.E, g.degrees, NormKind.L21G)
    total += 0.5 * cfg.lambda2 * graph_norm(state.U - X, g.degrees, NormKind.L2G_SQ)
    total += 0.5 * mu1 * np.sum(R1 * R1) + np.sum(state.lam1 * R1)
    total += 0.5 * mu3 * np.sum(R3 * R3) + state.lam3 @ R3
    total += 0.5 * mu4 * np.sum(R4 * R4) + np.sum(state.lam4 * R4)
    if sys is not None:
        nu = cfg.nu_map(sys.index_set)
        for c in sys.index_set:
            total += nu[c] * graph_norm(state.Q[c], g.degrees, NormKind.L1G)
            total += 0.5 * mu2 * np.sum(R2[c] * R2[c]) + np.sum(state.lam2[c] * R2[c])
    return float(total)


def kkt_residuals(state: DotState, g: Graph, sys: FrameletSystem | None, cfg: SolverConfig, WU=None) -> KKTReport:
    if sys is not None and WU is None:
        WU = framelet_decompose(sys, state.U)
    r1, r2, r3, r4 = residual_norms(state, WU)
    lam4_excess = max(float(np.max(np.abs(state.lam4), initial=0.0)) - 1.0, 0.0)
    lam2_excess = {}
    if sys is not None:
        nu = cfg.nu_map(sys.index_set)
        for c in sys.index_set:
            bound = nu[c] * g.degrees[:, None]
            lam2_excess[c] = float(np.max(np.maximum(np.abs(state.lam2[c]) - bound, 0.0), initial=0.0))
    scale = np.ones(g.n) if cfg.e_threshold_mode is EThreshold.UNIT else cfg.lambda1 * g.degrees
    lam1_excess = float(np.max(np.maximum(np.linalg.norm(state.lam1, axis=1) - scale, 0.0), initial=0.0))
    G = state.lam1 @ state.U.T - state.lam3[:, None] - state.lam4
    if cfg.y_zero_diagonal:
        np.fill_diagonal(G, 0.0)
    stationarity = float(np.linalg.norm(G))
    return KKTReport(r1, r2, r3, r4, lam1_excess, lam2_excess, lam4_excess, stationarity)


def _record(state, X, g, sys, cfg, WU) -> IterationRecord:
    kkt = kkt_residuals(state, g, sys, cfg, WU)
    return IterationRecord(
        iter=state.iter,
        objective=objective_value(state, X, g, sys, cfg, WU),
        lagrangian=lagrangian_value(state, X, g, sys, cfg, WU),
        r1=kkt.r1,
        r2=kkt.r2,
        r3=kkt.r3,
        r4=kkt.r4,
        kkt_dual_max=kkt.dual_max,
        kkt_stationarity=kkt.stationarity,
        mu1=float(state.mu[0]),
        mu2=float(state.mu[1]),
        mu3=float(state.mu[2]),
        mu4=float(state.mu[3]),
        extra={"kkt": kkt},
    )


def sweep(state: DotState, g: Graph, sys: FrameletSystem, X, cfg: SolverConfig) -> Coefficients:
    """One ADMM iteration in place; returns ``W U`` at the new ``U``."""
    state.U = update_u(state, g, sys, X, cfg)
    if cfg.order is UpdateOrder.Z_FIRST:
        state.Z = update_z(state, cfg)
    state.E = update_e(state, g, cfg)
    state.Y = update_y(state, cfg)
    if cfg.order is UpdateOrder.BOUNDED:
        state.Z = update_z(state, cfg)
    WU = framelet_decompose(sys, state.U)
    state.Q = update_q(state, sys, cfg, g, WU)
    update_multipliers_penalties(state, cfg, WU)
    state.iter += 1
    return WU


def solve(
    g: Graph,
    sys: FrameletSystem,
    X,
    cfg: SolverConfig | None = None,
    callback: Callable[[DotState, IterationRecord], None] | None = None,
) -> DotResult:
    """Run ``cfg.max_iter`` sweeps from :func:`init_state`.

    Every sweep appends one :class:`IterationRecord`, evaluated after the
    multiplier and penalty update.
    """
    cfg = cfg or SolverConfig()
    X = _as_signal(X, g.n)
    state = init_state(g, sys, X, cfg)
    trace = DiagnosticsTrace()
    for t in range(cfg.max_iter):
        try:
            WU = sweep(state, g, sys, X, cfg)
        except SolverError as exc:
            raise SolverError(str(exc), iteration=t + 1, residual=exc.residual) from exc
        record = _record(state, X, g, sys, cfg, WU)
        trace.append(record)
        if callback is not None:
            callback(state, record)
    return DotResult(state.U, state.Z, trace, state)
