import numpy as np
import pytest

from graph_denoise.ablations import node_admm_solve
from graph_denoise.dot import SolverConfig, solve
from graph_denoise.framelet import build_framelet_system, framelet_decompose
from graph_denoise.graph import GraphError, build_graph
from graph_denoise.io import (
    format_edge_list,
    format_matrix,
    load_state,
    parse_edge_list,
    read_coefficients,
    read_edge_list,
    read_matrix,
    save_state,
    sha256_file,
    write_coefficients,
    write_edge_list,
    write_matrix,
)

from conftest import random_graph


class TestEdgeList:
    def test_parse(self):
        g = parse_edge_list("# a comment\n0 1\n1 2  # trailing\n\n")
        assert g.n == 3 and g.num_edges == 2

    def test_nodes_header_keeps_isolated(self):
        g = parse_edge_list("# nodes 5\n0 1\n")
        assert g.n == 5 and g.degrees[4] == 0

    def test_weighted(self):
        g = parse_edge_list("0 1 2.5\n")
        assert g.adjacency[0, 1] == 2.5

    @pytest.mark.parametrize("text", ["0\n", "0 1 2 3\n", "a b\n", "0 0\n"])
    def test_bad_lines(self, text):
        with pytest.raises(GraphError):
            parse_edge_list(text)

    @pytest.mark.parametrize("seed", range(4))
    def test_round_trip(self, seed, tmp_path):
        g = random_graph(seed)
        write_edge_list(tmp_path / "g.txt", g)
        back = read_edge_list(tmp_path / "g.txt")
        assert back.n == g.n and back.edges() == g.edges()
        assert format_edge_list(back) == format_edge_list(g)

    def test_weighted_round_trip(self, tmp_path):
        g = build_graph([(0, 1, 0.1), (1, 2, 1 / 3)], 4)
        write_edge_list(tmp_path / "g.txt", g)
        assert read_edge_list(tmp_path / "g.txt").edges() == g.edges()

    def test_canonical_order(self):
        g = parse_edge_list("2 1\n1 0\n")
        assert format_edge_list(g) == "# nodes 3\n0 1\n1 2\n"


class TestMatrix:
    def test_round_trip_exact(self, tmp_path, rng):
        M = rng.standard_normal((7, 3)) * 10.0 ** rng.integers(-20, 20, (7, 3))
        write_matrix(tmp_path / "m.csv", M)
        np.testing.assert_array_equal(read_matrix(tmp_path / "m.csv"), M)

    def test_single_column(self, tmp_path):
        write_matrix(tmp_path / "v.csv", np.array([1.0, 2.0]))
        assert read_matrix(tmp_path / "v.csv").shape == (2, 1)

    def test_header(self, tmp_path):
        write_matrix(tmp_path / "h.csv", np.eye(2), header=["a", "b"])
        assert (tmp_path / "h.csv").read_text().startswith("a,b\n")
        np.testing.assert_array_equal(read_matrix(tmp_path / "h.csv", header=True), np.eye(2))

    def test_format(self):
        assert format_matrix([[0.1, 2.0]]) == "0.10000000000000001,2\n"


def test_sha256(tmp_path):
    p = tmp_path / "f"
    p.write_bytes(b"abc")
    assert sha256_file(p) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def test_coefficients_round_trip(tmp_path, rng):
    g = random_graph(2)
    sys = build_framelet_system(g, levels=3, m=12)
    Q = framelet_decompose(sys, rng.standard_normal((g.n, 2)))
    write_coefficients(tmp_path / "coef", sys, Q)
    meta, back = read_coefficients(tmp_path / "coef")
    assert list(back) == sys.index_set
    for c in Q:
        np.testing.assert_array_equal(back[c], Q[c])
    assert meta["m"] == "12" and meta["L"] == "3"


class TestState:
    def test_dot_state(self, tmp_path):
        g = random_graph(1)
        sys = build_framelet_system(g)
        state = solve(g, sys, np.random.default_rng(1).standard_normal((g.n, 2)), SolverConfig(max_iter=3)).state
        save_state(tmp_path / "s.npz", state)
        back = load_state(tmp_path / "s.npz")
        assert back.iter == 3
        for name in ("U", "Z", "E", "Y", "lam1", "lam3", "lam4", "mu"):
            np.testing.assert_array_equal(getattr(back, name), getattr(state, name))
        for c in state.Q:
            np.testing.assert_array_equal(back.Q[c], state.Q[c])
            np.testing.assert_array_equal(back.lam2[c], state.lam2[c])

    def test_node_state(self, tmp_path):
        g = random_graph(1)
        _, _, state = node_admm_solve(g, build_framelet_system(g), np.ones((g.n, 1)), full=True)
        save_state(tmp_path / "s.npz", state)
        back = load_state(tmp_path / "s.npz")
        assert back.mu2 == state.mu2 and back.iter == state.iter
        np.testing.assert_array_equal(back.U, state.U)
        assert set(back.Q) == set(state.Q)
