import numpy as np
import pytest

from graph_denoise.ablations import (
    TVMode,
    edge_admm_solve,
    edge_u_system,
    edge_update_u,
    node_admm_solve,
    node_objective,
    node_u_update,
    tv_objective,
    tv_smooth,
    tv_trace,
)
from graph_denoise.dot import SolverConfig, SolverError, USolve, init_state, solve
from graph_denoise.framelet import build_framelet_system, framelet_decompose
from graph_denoise.graph import LaplacianKind, build_graph, laplacian

from conftest import random_graph


def _signal(g, d=2, seed=0):
    return np.random.default_rng(seed).standard_normal((g.n, d))


class TestNodeADMM:
    def test_nu_zero_fixed_point(self, p3):
        X = _signal(p3)
        U, trace = node_admm_solve(p3, build_framelet_system(p3), X, SolverConfig(nu0=0.0))
        assert np.max(np.abs(U - X)) <= 1e-6
        assert len(trace) == 10

    def test_zero_signal(self, p3):
        U, trace, state = node_admm_solve(p3, build_framelet_system(p3), np.zeros((3, 2)), full=True)
        assert np.all(U == 0) and np.all(trace.column("r2") == 0)
        assert state.iter == 10

    def test_diagonal_solve_exact(self):
        g = random_graph(3)
        sys = build_framelet_system(g)
        X = _signal(g)
        rng = np.random.default_rng(1)
        Q = {c: rng.standard_normal(X.shape) for c in sys.index_set}
        lam2 = {c: rng.standard_normal(X.shape) for c in sys.index_set}
        U, rhs = node_u_update(g, sys, X, Q, lam2, 1.7)
        assert np.max(np.abs((g.degrees + 1.7)[:, None] * U - rhs)) <= 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_objective_non_increasing(self, seed):
        g = random_graph(seed)
        X = _signal(g, seed=seed)
        _, trace = node_admm_solve(g, build_framelet_system(g), X, SolverConfig(max_iter=20))
        obj = trace.column("objective")
        assert np.all(np.diff(obj[1:]) <= 1e-9 * np.maximum(1.0, np.abs(obj[1:-1])))

    def test_lam2_bounded(self):
        g = random_graph(4)
        sys = build_framelet_system(g)
        cfg = SolverConfig(rho=1.5)
        _, _, state = node_admm_solve(g, sys, _signal(g), cfg, full=True)
        nu = cfg.nu_map(sys.index_set)
        for c in sys.index_set:
            assert np.all(np.abs(state.lam2[c]) <= nu[c] * g.degrees[:, None] + 1e-6)

    def test_objective_formula(self, p3):
        sys = build_framelet_system(p3)
        X = _signal(p3)
        U = X + 0.1
        Q = framelet_decompose(sys, U)
        nu = SolverConfig().nu_map(sys.index_set)
        expected = sum(nu[c] * np.sum(p3.degrees[:, None] * np.abs(Q[c])) for c in Q)
        expected += 0.5 * np.sum(p3.degrees[:, None] * 0.01 * np.ones_like(X))
        assert node_objective(p3, X, U, Q, nu) == pytest.approx(expected, rel=1e-12)


class TestEdgeADMM:
    def test_large_lambda2(self, p3):
        X = _signal(p3)
        U, Z, _ = edge_admm_solve(p3, X, SolverConfig(lambda2=1e6))
        assert np.linalg.norm(U - X) <= 1e-4

    def test_closed_form(self, p3):
        cfg = SolverConfig(lambda2=2.0, mu_init=(3, 1, 1, 1))
        X = _signal(p3)
        s = init_state(p3, None, X, cfg)
        s.Y = np.zeros((3, 3))
        s.E = np.zeros_like(X)
        D = p3.degrees[:, None]
        np.testing.assert_allclose(edge_update_u(s, p3, X, cfg), 2 * D * X / (2 * D + 3), atol=1e-12)

    def test_system_residual(self):
        g = random_graph(2)
        cfg = SolverConfig()
        X = _signal(g)
        s = init_state(g, None, X, cfg)
        s.lam1 = _signal(g, seed=5)
        M, rhs = edge_u_system(s, g, X, cfg)
        assert np.linalg.norm(M @ edge_update_u(s, g, X, cfg) - rhs) <= 1e-8 * np.linalg.norm(rhs)

    def test_taylor_needs_degrees(self):
        g = build_graph([(0, 1)], 3)
        with pytest.raises(SolverError, match="edge"):
            edge_admm_solve(g, np.ones((3, 1)), SolverConfig(u_solve=USolve.TAYLOR))

    @pytest.mark.parametrize("seed", range(4))
    def test_invariants(self, seed):
        g = random_graph(seed)
        cfg = SolverConfig(rho=1.5)
        U, Z, trace, state = edge_admm_solve(g, _signal(g, seed=seed), cfg, full=True)
        assert np.all(np.diag(Z) == 0.0)
        assert np.abs(state.lam4).max() <= 1 + 1e-6
        assert state.Q == {} and state.lam2 == {}
        assert np.all(np.isnan(trace.column("r2")))

    @pytest.mark.parametrize("seed", range(3))
    def test_consistent_with_full_solver(self, seed):
        # nu0 = 0 makes every channel pass-through; a vanishing mu2 removes the framelet coupling
        g = random_graph(seed)
        X = _signal(g, seed=seed)
        cfg = SolverConfig(nu0=0.0, mu_init=(1.0, 1e-10, 1.0, 1.0))
        full = solve(g, build_framelet_system(g), X, cfg)
        U, Z, trace = edge_admm_solve(g, X, cfg)
        assert np.max(np.abs(full.U - U)) <= 1e-6
        assert np.max(np.abs(full.Z - Z)) <= 1e-6
        for name in ("r1", "r3", "r4"):
            np.testing.assert_allclose(trace.column(name), full.trace.column(name), atol=1e-6)


class TestTV:
    def test_alpha_zero(self, p3):
        X = _signal(p3)
        for mode in TVMode:
            np.testing.assert_array_equal(tv_smooth(p3, X, 0.0, mode), X)

    def test_constant(self, p3):
        X = np.ones((3, 1))
        for mode in TVMode:
            np.testing.assert_allclose(tv_smooth(p3, X, 0.7, mode), X, atol=1e-14)

    def test_exact_vs_dense(self, p3):
        X = np.array([[1.0], [0.0], [0.0]])
        D = np.diag(p3.degrees)
        L = laplacian(p3, LaplacianKind.UNNORMALIZED).toarray()
        expected = np.linalg.solve(D + 0.1 * L, D @ X)
        assert np.max(np.abs(tv_smooth(p3, X, 0.1) - expected)) <= 1e-10

    def test_first_order_gap_quadratic(self, p3):
        X = np.array([[1.0], [0.0], [0.0]])
        gaps = [np.linalg.norm(tv_smooth(p3, X, a) - tv_smooth(p3, X, a, "first_order")) for a in (0.1, 0.05, 0.025)]
        for big, small in zip(gaps, gaps[1:]):
            assert big / small == pytest.approx(4.0, rel=0.15)

    @pytest.mark.parametrize("seed", range(5))
    def test_first_order_condition(self, seed):
        g = random_graph(seed)
        X = _signal(g, seed=seed)
        U = tv_smooth(g, X, 0.8)
        D = g.degrees[:, None]
        L = laplacian(g, LaplacianKind.UNNORMALIZED)
        assert np.linalg.norm(D * U + 0.8 * (L @ U) - D * X) <= 1e-8 * np.linalg.norm(D * X)

    def test_isolated_pass_through(self):
        g = build_graph([(0, 1)], 3)
        X = np.array([[1.0], [-1.0], [5.0]])
        for mode in TVMode:
            assert tv_smooth(g, X, 0.5, mode)[2, 0] == 5.0
        np.testing.assert_array_equal(tv_smooth(build_graph([], 2), X[:2], 1.0), X[:2])

    def test_exact_minimizes(self):
        g = random_graph(7)
        X = _signal(g, seed=7)
        U = tv_smooth(g, X, 0.5)
        base = tv_objective(g, X, U, 0.5)
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert tv_objective(g, X, U + 1e-3 * rng.standard_normal(U.shape), 0.5) >= base

    def test_negative_alpha(self, p3):
        with pytest.raises(ValueError):
            tv_smooth(p3, np.ones((3, 1)), -1.0)

    def test_trace(self, p3):
        X = _signal(p3)
        t = tv_trace(p3, X, tv_smooth(p3, X, 0.3), 0.3)
        assert len(t) == 1 and t[0].iter == 1 and t[0].r1 is None
