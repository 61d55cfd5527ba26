"""Command-line entry point: ``perturb``, ``denoise``, ``check`` and ``bench``.

Exit codes: 0 success, 1 failed check or invalid configuration, 2 I/O error.
Output directories default to ``$GRAPH_DENOISE_OUT`` or the working directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .ablations import NodeState, TVMode, node_objective, tv_objective
from .dot import (
    ConfigError,
    DiagnosticsTrace,
    DotState,
    EThreshold,
    USolve,
    UpdateOrder,
    kkt_residuals,
    objective_value,
)
from .framelet import framelet_decompose, framelet_reconstruct
from .graph import GraphError, LaplacianKind, laplacian
from .perturb import NoiseSpec, perturb_edges, perturb_features
from .runner import (
    SCENARIOS,
    SOLVERS,
    RunConfig,
    Scenario,
    bench,
    format_bench,
    run_solver,
)

OUT_ENV = "GRAPH_DENOISE_OUT"
EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2


class InputError(Exception):
    """Unreadable or malformed input file."""


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


def _read_graph(path) -> "io.Graph":
    try:
        return io.read_edge_list(path)
    except OSError as exc:
        raise InputError(f"cannot read edge list {path}: {exc.strerror or exc}") from exc
    except GraphError as exc:
        raise InputError(f"bad edge list {path}: {exc}") from exc


def _read_features(path, header: bool) -> tuple[np.ndarray, list[str] | None]:
    try:
        names = None
        if header:
            with open(path) as fh:
                names = fh.readline().strip().split(",")
        return io.read_matrix(path, header=header), names
    except OSError as exc:
        raise InputError(f"cannot read features {path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise InputError(f"bad feature file {path}: {exc}") from exc


def _input_record(path) -> dict:
    return {"path": str(Path(path).resolve()), "sha256": io.sha256_file(path)}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _finite(x):
    """JSON has no inf/nan; encode them as strings."""
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


# -- perturb ----------------------------------------------------------------------


def cmd_perturb(args) -> int:
    try:
        kind, level = NoiseSpec.parse_feature(args.feature_noise)
        spec = NoiseSpec(kind, level, args.edge_ratio, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    g = _read_graph(args.edges)
    X, names = _read_features(args.features, args.header)
    if X.shape[0] != g.n:
        print(f"error: features have {X.shape[0]} rows but the graph has {g.n} nodes", file=sys.stderr)
        return EXIT_FAIL
    rng = spec.rng()
    try:
        g_out = perturb_edges(g, spec.structure_ratio, rng) if spec.structure_ratio > 0 else g
        X_out = perturb_features(X, spec, rng)
    except (ValueError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out or default_out())
    out.mkdir(parents=True, exist_ok=True)
    io.write_edge_list(out / "edges.txt", g_out)
    io.write_matrix(out / "features.csv", X_out, header=names)
    _write_json(out / "provenance.json", {
        "rng": "numpy PCG64",
        "noise": spec.to_dict(),
        "inputs": {"edges": _input_record(args.edges), "features": _input_record(args.features)},
        "outputs": {name: io.sha256_file(out / name) for name in ("edges.txt", "features.csv")},
        "edges_before": g.num_edges,
        "edges_after": g_out.num_edges,
    })
    print(f"wrote {out / 'edges.txt'}, {out / 'features.csv'}, {out / 'provenance.json'}")
    return EXIT_OK


# -- denoise ------------------------------------------------------------------------

SOLVER_FLAGS = {
    "max_iter": "max_iter",
    "lambda1": "lambda1",
    "lambda2": "lambda2",
    "nu0": "nu0",
    "rho": "rho",
    "u_solve": "u_solve",
    "e_threshold_mode": "e_threshold_mode",
    "order": "order",
    "tol_residual": "tol_residual",
}


def effective_config(args) -> RunConfig:
    """Config file values, overridden by any flag given on the command line."""
    doc = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config {args.config} is not valid JSON: {exc}"]) from exc
        if not isinstance(doc, dict):
            raise ConfigError(["config document must be a JSON object"])
    solver = dict(doc.get("solver") or {})
    for flag, key in SOLVER_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            solver[key] = value
    if args.mu is not None:
        solver["mu_init"] = args.mu * 4 if len(args.mu) == 1 else args.mu
    framelet = dict(doc.get("framelet") or {})
    for flag in ("levels", "cheb_order", "laplacian"):
        value = getattr(args, flag, None)
        if value is not None:
            framelet[flag] = value
    doc = {**doc, "solver": solver, "framelet": framelet}
    if args.alpha is not None:
        doc["tv_alpha"] = args.alpha
    if args.tv_mode is not None:
        doc["tv_mode"] = args.tv_mode
    return RunConfig.from_dict(doc)


def _final_report(out) -> dict:
    report = {}
    if out.trace.records:
        last = out.trace.records[-1]
        report = {k: _finite(getattr(last, k)) for k in ("objective", "lagrangian", "r1", "r2", "r3", "r4",
                                                         "kkt_dual_max", "kkt_stationarity")}
        kkt = last.extra.get("kkt")
        if kkt is not None:
            report["kkt"] = kkt.to_dict()
    return report


def cmd_denoise(args) -> int:
    try:
        rc = effective_config(args)
    except ConfigError as exc:
        print("invalid configuration:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_FAIL
    g = _read_graph(args.edges)
    X, _ = _read_features(args.features, args.header)
    if X.shape[0] != g.n:
        print(f"error: features have {X.shape[0]} rows but the graph has {g.n} nodes", file=sys.stderr)
        return EXIT_FAIL
    start = time.perf_counter()
    out = run_solver(args.solver, g, X, rc)
    wall = time.perf_counter() - start
    outdir = Path(args.out or default_out())
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_matrix(outdir / "U.csv", out.U)
    if out.Z is not None:
        io.write_matrix(outdir / "Z.csv", out.Z)
    out.trace.write_csv(outdir / "trace.csv")
    if out.state is not None:
        io.save_state(outdir / io.STATE_NAME, out.state)
    _write_json(outdir / "summary.json", {
        "solver": args.solver,
        "config": rc.to_dict(),
        "inputs": {"edges": _input_record(args.edges), "features": _input_record(args.features),
                   "header": bool(args.header)},
        "n": g.n,
        "d": int(X.shape[1]),
        "iterations": len(out.trace),
        "final": _final_report(out),
        "wall_time_s": wall,
    })
    print(f"{args.solver}: {len(out.trace)} iterations in {wall:.3f}s, artifacts in {outdir}")
    return EXIT_OK


# -- check ----------------------------------------------------------------------------


class CheckTable:
    def __init__(self):
        self.rows: list[tuple[str, bool, str]] = []

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.rows.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.rows)

    def render(self) -> str:
        width = max((len(n) for n, _, _ in self.rows), default=5)
        return "\n".join(f"{n:<{width}}  {'PASS' if ok else 'FAIL'}  {d}" for n, ok, d in self.rows)


def _close(a, b, rtol=1e-9, atol=1e-12) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= atol + rtol * abs(b)


def _load_run(run: Path):
    try:
        summary = json.loads((run / "summary.json").read_text())
        trace = DiagnosticsTrace.read_csv(run / "trace.csv")
        U = io.read_matrix(run / "U.csv")
        Z = io.read_matrix(run / "Z.csv") if (run / "Z.csv").exists() else None
        state = io.load_state(run / io.STATE_NAME) if (run / io.STATE_NAME).exists() else None
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"corrupted run directory {run}: {exc}") from exc
    return summary, trace, U, Z, state


def check_run(run: Path, tight_tol: float = 1e-8, bound_tol: float = 1e-6) -> CheckTable:
    summary, trace, U, Z, state = _load_run(run)
    table = CheckTable()
    solver = summary.get("solver")
    try:
        rc = RunConfig.from_dict(summary["config"])
    except (KeyError, ConfigError) as exc:
        raise InputError(f"summary.json has no usable config: {exc}") from exc
    inputs = summary.get("inputs", {})
    for key in ("edges", "features"):
        rec = inputs.get(key, {})
        path = Path(rec.get("path", ""))
        if not path.is_file():
            raise InputError(f"input {key} file {path} is missing")
        same = io.sha256_file(path) == rec.get("sha256")
        table.add(f"input_{key}", same, "hash matches" if same else f"{path} changed since the run")
    g = _read_graph(inputs["edges"]["path"])
    X, _ = _read_features(inputs["features"]["path"], inputs.get("header", False))

    for col in ("mu1", "mu2", "mu3", "mu4"):
        values = trace.column(col) if trace.records else np.array([])
        if values.size == 0 or np.all(np.isnan(values)):
            continue
        increasing = bool(np.all(np.diff(values) >= 0))
        table.add(f"{col}_nondecreasing", increasing,
                  "ok" if increasing else f"{col} decreases at iter {int(np.argmax(np.diff(values) < 0)) + 2}")

    if solver in ("dot", "node-admm"):
        sys_ = rc.framelet.build(g)
        x = np.random.default_rng(0).standard_normal((g.n, 1))
        err = np.linalg.norm(framelet_reconstruct(sys_, framelet_decompose(sys_, x)) - x) / np.linalg.norm(x)
        table.add("frame_tightness", err <= tight_tol, f"relative error {err:.3e} (m={sys_.cheb_order})")
    else:
        sys_ = None

    if solver == "tv":
        _check_tv(table, g, X, U, rc, trace)
    elif state is None:
        raise InputError(f"{run} has no {io.STATE_NAME}")
    elif not trace.records:
        same = np.array_equal(U, X)
        table.add("no_iterations", same, "U equals the input" if same else "U differs from the input")
    elif isinstance(state, NodeState):
        _check_node(table, g, X, U, state, sys_, rc, trace, bound_tol)
    else:
        _check_dot(table, g, X, U, Z, state, sys_, rc, trace, bound_tol, solver)
    return table


def _check_dot(table, g, X, U, Z, state: DotState, sys_, rc, trace, bound_tol, solver):
    state.U = U
    if Z is not None:
        state.Z = Z
    last = trace.records[-1]
    kkt = kkt_residuals(state, g, sys_, rc.solver)
    names = ("r1", "r2", "r3", "r4") if solver == "dot" else ("r1", "r3", "r4")
    mismatched = [n for n in names if not _close(getattr(kkt, n), getattr(last, n))]
    if not _close(kkt.stationarity, last.kkt_stationarity):
        mismatched.append("kkt_stationarity")
    table.add("kkt_recomputed", not mismatched,
              "residuals reproduce the trace" if not mismatched else f"mismatch in {', '.join(mismatched)}")
    obj = objective_value(state, X, g, sys_, rc.solver)
    table.add("objective_recomputed", _close(obj, last.objective), f"{obj!r} vs trace {last.objective!r}")
    if rc.solver.order is UpdateOrder.BOUNDED:
        table.add("lam4_bound", kkt.lam4_excess <= bound_tol, f"excess {kkt.lam4_excess:.3e}")
    if kkt.lam2_excess:
        worst = max(kkt.lam2_excess.values())
        table.add("lam2_bound", worst <= bound_tol, f"excess {worst:.3e}")
    diag = float(np.max(np.abs(np.diag(state.Z))))
    table.add("z_zero_diagonal", diag == 0.0, f"max |diag Z| {diag:.3e}")


def _check_node(table, g, X, U, state: NodeState, sys_, rc, trace, bound_tol):
    last = trace.records[-1]
    WU = framelet_decompose(sys_, U)
    r2 = max(float(np.linalg.norm(state.Q[c] - WU[c])) for c in state.Q)
    table.add("kkt_recomputed", _close(r2, last.r2), f"r2 {r2!r} vs trace {last.r2!r}")
    nu = rc.solver.nu_map(sys_.index_set)
    obj = node_objective(g, X, U, WU, nu)
    table.add("objective_recomputed", _close(obj, last.objective), f"{obj!r} vs trace {last.objective!r}")
    worst = max(
        float(np.max(np.maximum(np.abs(state.lam2[c]) - nu[c] * g.degrees[:, None], 0.0))) for c in state.lam2
    )
    table.add("lam2_bound", worst <= bound_tol, f"excess {worst:.3e}")


def _check_tv(table, g, X, U, rc, trace):
    L = laplacian(g, LaplacianKind.UNNORMALIZED)
    DX = g.degrees[:, None] * X
    if rc.tv_mode is TVMode.EXACT:
        res = np.linalg.norm(g.degrees[:, None] * U + rc.tv_alpha * (L @ U) - DX)
        scale = max(np.linalg.norm(DX), 1e-300)
        table.add("kkt_first_order", res <= 1e-8 * scale, f"relative residual {res / scale:.3e}")
    else:
        inv_d = np.where(g.degrees > 0, 1.0 / np.where(g.degrees > 0, g.degrees, 1.0), 0.0)
        expected = X - rc.tv_alpha * inv_d[:, None] * (L @ X)
        gap = float(np.max(np.abs(U - expected), initial=0.0))
        table.add("first_order_formula", gap <= 1e-12, f"max deviation {gap:.3e}")
    obj = tv_objective(g, X, U, rc.tv_alpha)
    table.add("objective_recomputed", _close(obj, trace.records[-1].objective), f"{obj!r}")


def cmd_check(args) -> int:
    table = check_run(Path(args.run), args.tight_tol, args.bound_tol)
    print(table.render())
    return EXIT_OK if table.ok else EXIT_FAIL


# -- bench ----------------------------------------------------------------------------


def _bench_cell(cell):
    sc, solver, rc = cell
    return bench([sc], (solver,), rc)[0]


def cmd_bench(args) -> int:
    try:
        scenarios = [SCENARIOS[name] for name in (args.scenario or ["hybrid-binary"])]
        if args.scenario_file:
            try:
                docs = json.loads(Path(args.scenario_file).read_text())
            except OSError as exc:
                raise InputError(f"cannot read scenario file: {exc.strerror or exc}") from exc
            scenarios += [Scenario.from_dict(d) for d in (docs if isinstance(docs, list) else [docs])]
        solvers = tuple(s.strip() for s in args.solvers.split(",")) if args.solvers else SOLVERS
        unknown = [s for s in solvers if s not in SOLVERS]
        if unknown:
            raise ConfigError([f"unknown solvers: {', '.join(unknown)}"])
        rc = RunConfig.from_json(Path(args.config).read_text()) if args.config else RunConfig()
    except KeyError as exc:
        print(f"error: unknown scenario {exc}; choose from {', '.join(SCENARIOS)}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, ValueError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_FAIL
    cells = [(sc, s, rc) for sc in scenarios for s in solvers]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]
    text = format_bench(rows)
    outdir = Path(args.out or default_out())
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "bench.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graph-denoise", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("perturb", help="contaminate a graph and its features")
    pp.add_argument("--edges", required=True)
    pp.add_argument("--features", required=True)
    pp.add_argument("--header", action="store_true", help="feature file has a header row")
    pp.add_argument("--feature-noise", default="none", help="gaussian:SIGMA, flip:P or none")
    pp.add_argument("--edge-ratio", type=float, default=0.0)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--out")
    pp.set_defaults(func=cmd_perturb)

    pd = sub.add_parser("denoise", help="run one solver and write its artifacts")
    pd.add_argument("--solver", choices=SOLVERS, default="dot")
    pd.add_argument("--edges", required=True)
    pd.add_argument("--features", required=True)
    pd.add_argument("--header", action="store_true")
    pd.add_argument("--config")
    pd.add_argument("--out")
    pd.add_argument("--max-iter", dest="max_iter", type=int)
    pd.add_argument("--lambda1", type=float)
    pd.add_argument("--lambda2", type=float)
    pd.add_argument("--nu0", type=float)
    pd.add_argument("--rho", type=float)
    pd.add_argument("--mu", type=float, nargs="+", help="one value for all four penalties, or four")
    pd.add_argument("--u-solve", dest="u_solve", choices=[m.value for m in USolve])
    pd.add_argument("--e-threshold-mode", dest="e_threshold_mode", choices=[m.value for m in EThreshold])
    pd.add_argument("--order", choices=[o.value for o in UpdateOrder])
    pd.add_argument("--tol-residual", dest="tol_residual", type=float)
    pd.add_argument("--levels", type=int)
    pd.add_argument("--cheb-order", dest="cheb_order", type=int)
    pd.add_argument("--laplacian", choices=[k.value for k in LaplacianKind])
    pd.add_argument("--alpha", type=float, help="TV smoothing weight")
    pd.add_argument("--tv-mode", dest="tv_mode", choices=[m.value for m in TVMode])
    pd.set_defaults(func=cmd_denoise)

    pc = sub.add_parser("check", help="re-validate a run directory offline")
    pc.add_argument("run")
    pc.add_argument("--tight-tol", type=float, default=1e-8)
    pc.add_argument("--bound-tol", type=float, default=1e-6)
    pc.set_defaults(func=cmd_check)

    pb = sub.add_parser("bench", help="seeded scenario matrix as CSV")
    pb.add_argument("--scenario", action="append", choices=sorted(SCENARIOS))
    pb.add_argument("--scenario-file")
    pb.add_argument("--solvers", help="comma-separated subset of " + ",".join(SOLVERS))
    pb.add_argument("--config")
    pb.add_argument("--jobs", type=int, default=1)
    pb.add_argument("--out")
    pb.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
