"""Solver dispatch, run configuration documents and seeded benchmark scenarios."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

from .ablations import NodeState, TVMode, edge_admm_solve, node_admm_solve, tv_smooth, tv_trace
from .dot import ConfigError, DiagnosticsTrace, DotState, SolverConfig, solve
from .framelet import FrameletSystem, Schedule, build_framelet_system
from .graph import Graph, LaplacianKind, SmootherMode, l2_smoother
from .perturb import (
    FeatureNoise,
    NoiseSpec,
    make_rng,
    perturb_edges,
    perturb_features,
    piecewise_signal,
    recovery_metrics,
    sbm_generate,
)

SOLVERS = ("dot", "node-admm", "edge-admm", "tv")


@dataclass
class FrameletSettings:
    levels: int = 2
    cheb_order: int = 10
    laplacian: LaplacianKind = LaplacianKind.NORMALIZED
    schedule: Schedule = Schedule.TIGHT

    def __post_init__(self):
        self.laplacian = LaplacianKind(self.laplacian)
        self.schedule = Schedule(self.schedule)
        if self.levels < 1 or self.cheb_order < 1:
            raise ConfigError(["framelet levels and cheb_order must be >= 1"])

    def build(self, g: Graph) -> FrameletSystem:
        return build_framelet_system(g, self.laplacian, self.levels, self.cheb_order, schedule=self.schedule)

    def to_dict(self) -> dict:
        return {"levels": self.levels, "cheb_order": self.cheb_order,
                "laplacian": self.laplacian.value, "schedule": self.schedule.value}


@dataclass
class RunConfig:
    """Everything a run needs besides its inputs; serialized as one JSON document."""

    solver: SolverConfig = field(default_factory=SolverConfig)
    framelet: FrameletSettings = field(default_factory=FrameletSettings)
    tv_alpha: float = 1.0
    tv_mode: TVMode = TVMode.EXACT
    noise: NoiseSpec | None = None

    def __post_init__(self):
        self.tv_mode = TVMode(self.tv_mode)
        if not self.tv_alpha >= 0:
            raise ConfigError([f"tv_alpha must be nonnegative, got {self.tv_alpha}"])

    def to_dict(self) -> dict:
        return {
            "solver": self.solver.to_dict(),
            "framelet": self.framelet.to_dict(),
            "tv_alpha": self.tv_alpha,
            "tv_mode": self.tv_mode.value,
            "noise": None if self.noise is None else self.noise.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError([f"unknown config keys: {sorted(unknown)}"])
        try:
            return cls(
                solver=SolverConfig.from_dict(d.get("solver") or {}),
                framelet=FrameletSettings(**(d.get("framelet") or {})),
                tv_alpha=float(d.get("tv_alpha", 1.0)),
                tv_mode=d.get("tv_mode", TVMode.EXACT),
                noise=None if d.get("noise") is None else NoiseSpec.from_dict(d["noise"]),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError([str(exc)]) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class SolverOutput:
    U: np.ndarray
    Z: np.ndarray | None
    trace: DiagnosticsTrace
    state: DotState | NodeState | None = None
    system: FrameletSystem | None = None
    extra: dict[str, Any] = field(default_factory=dict)


def run_solver(name: str, g: Graph, X, rc: RunConfig) -> SolverOutput:
    if name not in SOLVERS:
        raise ConfigError([f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}"])
    X = np.asarray(X, dtype=float)
    if name == "tv":
        U = tv_smooth(g, X, rc.tv_alpha, rc.tv_mode)
        return SolverOutput(U, None, tv_trace(g, X, U, rc.tv_alpha))
    if name == "edge-admm":
        U, Z, trace, state = edge_admm_solve(g, X, rc.solver, full=True)
        return SolverOutput(U, Z, trace, state=state)
    sys = rc.framelet.build(g)
    if name == "node-admm":
        U, trace, state = node_admm_solve(g, sys, X, rc.solver, full=True)
        return SolverOutput(U, None, trace, state=state, system=sys)
    res = solve(g, sys, X, rc.solver)
    return SolverOutput(res.U, res.Z, res.trace, state=res.state, system=sys)


# -- scenarios ---------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A seeded synthetic instance: SBM graph, block-constant signal, contamination.

    With ``propagate`` the observed features are the signal averaged over
    one hop of the (possibly perturbed) graph, and the reference is the same
    average over the unperturbed graph; structure noise then reaches the
    features without any feature noise.
    """

    name: str = "hybrid"
    sizes: tuple[int, ...] = (50, 50)
    p_in: float = 0.2
    p_out: float = 0.02
    values: tuple[float, ...] = (1.0, -1.0)
    d: int = 3
    noise: NoiseSpec = NoiseSpec(FeatureNoise.GAUSSIAN, 0.5, 0.25, 0)
    propagate: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "sizes": list(self.sizes), "p_in": self.p_in, "p_out": self.p_out,
                "values": list(self.values), "d": self.d, "noise": self.noise.to_dict(),
                "propagate": self.propagate}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "noise" in d:
            d["noise"] = NoiseSpec.from_dict(d["noise"])
        for key in ("sizes", "values"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError([str(exc)]) from exc


@dataclass
class Instance:
    graph_clean: Graph
    graph: Graph
    clean: np.ndarray
    X: np.ndarray


def make_instance(sc: Scenario) -> Instance:
    """Draw graph, edge noise and feature noise from one generator seeded by ``sc.noise.seed``."""
    rng = make_rng(sc.noise.seed)
    g0 = sbm_generate(sc.sizes, sc.p_in, sc.p_out, rng)
    g = perturb_edges(g0, sc.noise.structure_ratio, rng) if sc.noise.structure_ratio > 0 else g0
    signal = piecewise_signal(sc.sizes, sc.values, sc.d)
    if sc.propagate:
        clean = l2_smoother(signal, g0, SmootherMode.FIRST_ORDER)
        base = l2_smoother(signal, g, SmootherMode.FIRST_ORDER)
    else:
        clean = base = signal
    return Instance(g0, g, clean, perturb_features(base, sc.noise, rng))


# hybrid Gaussian features + rewired edges, and the two single-source cases
HYBRID = Scenario("hybrid")
FEATURE_ONLY = Scenario("feature-only", noise=NoiseSpec(FeatureNoise.GAUSSIAN, 0.5, 0.0, 0))
STRUCTURE_ONLY = Scenario("structure-only", noise=NoiseSpec(FeatureNoise.NONE, 0.0, 0.25, 0), propagate=True)
# 25% binary flips on a 0/1 signal plus 25% edge rewiring
HYBRID_BINARY = Scenario(
    "hybrid-binary", values=(1.0, 0.0), noise=NoiseSpec(FeatureNoise.BINARY_FLIP, 0.25, 0.25, 0)
)
NOISE_FREE = Scenario("noise-free", noise=NoiseSpec(FeatureNoise.NONE, 0.0, 0.0, 0))
SCENARIOS = {sc.name: sc for sc in (HYBRID, FEATURE_ONLY, STRUCTURE_ONLY, HYBRID_BINARY, NOISE_FREE)}

BENCH_COLUMNS = ("scenario", "solver", "noise_free_mse", "noisy_mse", "denoised_mse")


def bench(scenarios: list[Scenario], solvers=SOLVERS, rc: RunConfig | None = None) -> list[dict]:
    """One row per (scenario, solver) with MSE against the reference signal.

    ``noise_free_mse`` runs the solver on the uncontaminated graph and
    features, ``noisy_mse`` is the error of the contaminated input and
    ``denoised_mse`` the error after denoising it.
    """
    rc = rc or RunConfig()
    rows = []
    for sc in scenarios:
        inst = make_instance(sc)
        for name in solvers:
            U_free = run_solver(name, inst.graph_clean, inst.clean, rc).U
            U = run_solver(name, inst.graph, inst.X, rc).U
            report = recovery_metrics(U, inst.clean, inst.X)
            rows.append({
                "scenario": sc.name,
                "solver": name,
                "noise_free_mse": float(np.mean((U_free - inst.clean) ** 2)),
                "noisy_mse": report.mse_noisy,
                "denoised_mse": report.mse_u,
            })
    return rows


def format_bench(rows: list[dict]) -> str:
    lines = [",".join(BENCH_COLUMNS)]
    for r in rows:
        lines.append(",".join(r[c] if isinstance(r[c], str) else "%.17g" % r[c] for c in BENCH_COLUMNS))
    return "\n".join(lines) + "\n"
