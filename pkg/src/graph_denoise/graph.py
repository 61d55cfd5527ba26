"""Graph container, Laplacians, degree-weighted norms and L2 smoothers.

All matrices handed out here are ``scipy.sparse`` CSR with sorted indices.
Isolated nodes (zero degree) get a unit diagonal and zero off-diagonal in
the normalized Laplacian and carry zero weight in the graph norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy import linalg


class GraphError(ValueError):
    """Invalid graph input."""


class PowerIterationError(RuntimeError):
    """Power iteration hit its iteration cap.

    The best Rayleigh-quotient estimate reached is kept on ``estimate``.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class LaplacianKind(str, Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"


class NormKind(str, Enum):
    L1G = "l1g"
    L2G_SQ = "l2g_sq"
    L21G = "l21g"


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph without self-loops.

    Attributes
    ----------
    n : int
        Number of nodes.
    adjacency : scipy.sparse.csr_matrix, shape (n, n)
        Symmetric nonnegative weights with an all-zero diagonal.
    degrees : ndarray, shape (n,)
        Row sums of ``adjacency``.
    """

    n: int
    adjacency: sp.csr_matrix
    degrees: np.ndarray

    @classmethod
    def from_adjacency(cls, A) -> "Graph":
        A = sp.csr_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got {A.shape}")
        n = A.shape[0]
        if n <= 0:
            raise GraphError("graph needs at least one node")
        A.eliminate_zeros()
        A.sort_indices()
        if A.nnz and A.data.min() < 0:
            raise GraphError("negative edge weight")
        if np.any(A.diagonal() != 0):
            raise GraphError("self-loop present")
        if (A - A.T).count_nonzero():
            raise GraphError("adjacency is not symmetric")
        degrees = np.asarray(A.sum(axis=1)).ravel()
        return cls(n=n, adjacency=A, degrees=degrees)

    @property
    def num_edges(self) -> int:
        return sp.triu(self.adjacency, k=1).nnz

    def edges(self) -> list[tuple[int, int, float]]:
        """Undirected edges as ``(i, j, w)`` with ``i < j``, in row-major order."""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return [
            (int(upper.row[t]), int(upper.col[t]), float(upper.data[t])) for t in order
        ]

    def dense_adjacency(self) -> np.ndarray:
        return self.adjacency.toarray()


def build_graph(edge_list: Iterable[Sequence], n: int) -> Graph:
    """Build a :class:`Graph` from ``(i, j)`` or ``(i, j, w)`` tuples.

    Repeated undirected edges collapse into one. Without explicit weights the
    result is a binary graph; if any weight is given, repeated edges sum
    their weights (unweighted entries count as 1).
    """
    if n <= 0:
        raise GraphError(f"n must be positive, got {n}")
    weights: dict[tuple[int, int], float] = {}
    weighted = False
    for edge in edge_list:
        if len(edge) not in (2, 3):
            raise GraphError(f"edge must be (i, j) or (i, j, w): {edge!r}")
        i, j = int(edge[0]), int(edge[1])
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if len(edge) == 3:
            w = float(edge[2])
            if not w > 0:
                raise GraphError(f"edge weight must be positive, got {w}")
            weighted = True
        else:
            w = 1.0
        key = (min(i, j), max(i, j))
        weights[key] = weights.get(key, 0.0) + w
    if not weighted:
        weights = {key: 1.0 for key in weights}
    if weights:
        rows, cols = np.array(list(weights)).T
        vals = np.fromiter(weights.values(), dtype=float)
        A = sp.coo_matrix(
            (np.r_[vals, vals], (np.r_[rows, cols], np.r_[cols, rows])), shape=(n, n)
        )
    else:
        A = sp.csr_matrix((n, n))
    return Graph.from_adjacency(A)


def _inv_sqrt_degrees(degrees: np.ndarray) -> np.ndarray:
    out = np.zeros_like(degrees, dtype=float)
    pos = degrees > 0
    out[pos] = 1.0 / np.sqrt(degrees[pos])
    return out


def normalized_adjacency(g: Graph) -> sp.csr_matrix:
    """``D^{-1/2} A D^{-1/2}`` with isolated rows left at zero."""
    s = sp.diags(_inv_sqrt_degrees(g.degrees))
    return sp.csr_matrix(s @ g.adjacency @ s)


def laplacian(g: Graph, kind: LaplacianKind | str = LaplacianKind.NORMALIZED) -> sp.csr_matrix:
    kind = LaplacianKind(kind)
    if kind is LaplacianKind.UNNORMALIZED:
        L = sp.diags(g.degrees) - g.adjacency
    else:
        L = sp.identity(g.n, format="csr") - normalized_adjacency(g)
    L = sp.csr_matrix(L)
    L.sort_indices()
    return L


def graph_norm(M, degrees, kind: NormKind | str) -> float:
    """Degree-weighted norms of a node signal.

    ``L1G``: sum_i d_i sum_j |M_ij|; ``L2G_SQ``: sum_i d_i sum_j M_ij^2
    (equal to ``tr(M^T D M)``); ``L21G``: sum_i d_i ||M_i,:||_2.
    """
    kind = NormKind(kind)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    d = np.asarray(degrees, dtype=float)
    if M.shape[0] != d.shape[0]:
        raise ValueError(f"signal has {M.shape[0]} rows but {d.shape[0]} degrees")
    if kind is NormKind.L1G:
        return float(d @ np.abs(M).sum(axis=1))
    if kind is NormKind.L2G_SQ:
        return float(d @ (M * M).sum(axis=1))
    return float(d @ np.linalg.norm(M, axis=1))


def estimate_lambda_max(L, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Upper estimate of the largest eigenvalue of a symmetric PSD matrix.

    Power iteration from a fixed pseudo-random start vector, stopped once the
    eigen-residual ``||L v - theta v||`` falls below ``tol * theta``. Since an
    eigenvalue lies within the residual of the Rayleigh quotient ``theta``,
    ``(theta + ||r||) * (1 + tol)`` is returned.
    """
    n = L.shape[0]
    if n == 1:
        return float(L[0, 0]) * (1 + tol)
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = L @ v
        theta = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        resid = float(np.linalg.norm(w - theta * v))
        estimate = theta + resid
        if resid <= tol * abs(theta):
            return estimate * (1 + tol)
        v = w / norm
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations", estimate
    )


def dirichlet_energy(U, Ltilde) -> float:
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != Ltilde.shape[0]:
        raise ValueError("signal and Laplacian dimensions disagree")
    return float(np.sum(U * (Ltilde @ U)))


class SmootherMode(str, Enum):
    EXACT = "exact"
    FIRST_ORDER = "first_order"


def l2_smoother(X, g: Graph, mode: SmootherMode | str = SmootherMode.EXACT) -> np.ndarray:
    """Minimizer of ``tr(U^T L~ U) + ||U - X||^2`` or its one-hop approximation.

    ``EXACT`` solves ``(I + L~) U = X``; ``FIRST_ORDER`` returns ``A~ X``.
    """
    mode = SmootherMode(mode)
    X = np.asarray(X, dtype=float)
    if X.shape[0] != g.n:
        raise ValueError(f"signal has {X.shape[0]} rows, graph has {g.n} nodes")
    if mode is SmootherMode.FIRST_ORDER:
        return np.asarray(normalized_adjacency(g) @ X)
    system = (sp.identity(g.n) + laplacian(g, LaplacianKind.NORMALIZED)).toarray()
    c = linalg.cho_factor(system)
    return linalg.cho_solve(c, X)
