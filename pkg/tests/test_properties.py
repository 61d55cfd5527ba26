"""Randomized properties over generated graphs, signals and thresholds."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graph_denoise.dot import SolverConfig, init_state, residual_norms, update_y, y_inverse, y_rhs
from graph_denoise.framelet import (
    build_framelet_system,
    exact_framelet_decompose,
    exact_framelet_reconstruct,
    framelet_decompose,
    framelet_reconstruct,
)
from graph_denoise.graph import NormKind, graph_norm
from graph_denoise.perturb import make_rng, perturb_edges
from graph_denoise.prox import batch_threshold, soft_threshold, soft_threshold_rows

from conftest import random_graph

floats = st.floats(-1e3, 1e3, allow_nan=False)
etas = st.floats(0, 10, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


@given(x=floats, y=floats, eta=etas)
def test_soft_threshold_nonexpansive(x, y, eta):
    assert abs(soft_threshold(x, eta) - soft_threshold(y, eta)) <= abs(x - y) * (1 + 1e-15) + 1e-12


@given(x=floats, eta=etas)
def test_soft_threshold_subgradient(x, eta):
    # x - u must lie in eta * d|u|
    u = soft_threshold(x, eta)
    r = x - u
    if u != 0:
        assert abs(r - eta * np.sign(u)) <= 1e-9 * max(1.0, abs(x))
    else:
        assert abs(r) <= eta + 1e-12


@given(M=arrays(float, (4, 3), elements=floats), eta=arrays(float, 4, elements=etas))
def test_group_prox_kkt(M, eta):
    V = soft_threshold_rows(M, eta)
    for i in range(4):
        n = np.linalg.norm(V[i])
        r = M[i] - V[i]
        if n > 0:
            assert np.linalg.norm(r - eta[i] * V[i] / n) <= 1e-10 * max(1.0, np.linalg.norm(M[i]))
        else:
            assert np.linalg.norm(r) <= eta[i] * (1 + 1e-12) + 1e-12


@given(M=arrays(float, (3, 3), elements=floats), D=arrays(float, (3, 3), elements=etas))
def test_batch_matches_scalar(M, D):
    out = batch_threshold(M, D)
    for idx in np.ndindex(3, 3):
        assert out[idx] == soft_threshold(M[idx], D[idx])


@settings(max_examples=30, deadline=None)
@given(seed=seeds, levels=st.integers(1, 3), d=st.integers(1, 3))
def test_exact_frame_tight(seed, levels, d):
    g = random_graph(seed)
    x = make_rng(seed).standard_normal((g.n, d))
    rec = exact_framelet_reconstruct(g, levels=levels, Q=exact_framelet_decompose(g, levels=levels, X=x))
    assert np.linalg.norm(rec - x) <= 1e-10 * np.linalg.norm(x)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_chebyshev_adjoint(seed):
    # <W x, q> summed over channels equals <x, W^T q>
    g = random_graph(seed)
    sys = build_framelet_system(g)
    rng = make_rng(seed)
    x = rng.standard_normal((g.n, 2))
    q = {c: rng.standard_normal((g.n, 2)) for c in sys.index_set}
    Wx = framelet_decompose(sys, x)
    lhs = sum(np.sum(Wx[c] * q[c]) for c in q)
    rhs = np.sum(x * framelet_reconstruct(sys, q))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=30, deadline=None)
@given(seed=seeds, ratio=st.floats(0.05, 0.9))
def test_perturb_edges_preserves_count(seed, ratio):
    g = random_graph(seed)
    if g.num_edges == 0 or g.num_edges + g.num_edges // 2 > g.n * (g.n - 1) // 2:
        return
    out = perturb_edges(g, ratio, make_rng(seed + 1))
    assert out.num_edges == g.num_edges
    assert out.n == g.n


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_init_feasible(seed):
    g = random_graph(seed)
    sys = build_framelet_system(g)
    X = make_rng(seed).standard_normal((g.n, 2))
    r = residual_norms(init_state(g, sys, X, SolverConfig()), sys=sys)
    assert max(r) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=seeds, mus=st.tuples(*[st.floats(0.1, 100)] * 3))
def test_woodbury_inverse(seed, mus):
    rng = make_rng(seed)
    n, d = int(rng.integers(3, 25)), int(rng.integers(1, 6))
    U = rng.standard_normal((n, d))
    mu1, mu3, mu4 = mus
    M = mu1 * U @ U.T + mu3 * np.ones((n, n)) + mu4 * np.eye(n)
    assert np.max(np.abs(y_inverse(U, mu1, mu3, mu4) @ M - np.eye(n))) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_zero_diagonal_y_is_optimal(seed):
    # the zero-diagonal Y update minimizes 1/2 tr(Y M Y^T) - tr(B Y^T) among zero-diagonal matrices
    g = random_graph(seed, n_range=(4, 12))
    rng = make_rng(seed)
    cfg = SolverConfig()
    s = init_state(g, None, rng.standard_normal((g.n, 2)), cfg)
    s.mu = rng.uniform(0.5, 5.0, 4)
    s.lam4 = rng.uniform(-1, 1, (g.n, g.n))
    Y = update_y(s, cfg)
    mu1, _, mu3, mu4 = s.mu
    M = mu1 * s.U @ s.U.T + mu3 * np.ones((g.n, g.n)) + mu4 * np.eye(g.n)
    B = y_rhs(s)
    f = lambda V: 0.5 * np.sum((V @ M) * V) - np.sum(B * V)
    base = f(Y)
    for _ in range(5):
        P = 1e-3 * rng.standard_normal(Y.shape)
        np.fill_diagonal(P, 0.0)
        assert f(Y + P) >= base - 1e-10


@given(M=arrays(float, (5, 2), elements=floats), d=arrays(float, 5, elements=st.floats(0, 5)))
def test_graph_norm_relations(M, d):
    l2 = graph_norm(M, d, NormKind.L2G_SQ)
    l21 = graph_norm(M, d, NormKind.L21G)
    l1 = graph_norm(M, d, NormKind.L1G)
    assert l2 >= 0 and l21 <= l1 * (1 + 1e-12) + 1e-12
    assert abs(l2 - np.sum(d[:, None] * M**2)) <= 1e-9 * max(1.0, l2)
