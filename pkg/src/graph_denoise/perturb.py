"""Feature and structure contamination, synthetic instances and recovery metrics.

Randomness always comes from an explicit ``numpy.random.Generator``; the
helpers :func:`make_rng` and ``NoiseSpec.rng`` build one on the PCG64 bit
generator so that a seed pins every draw across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class FeatureNoise(str, Enum):
    NONE = "none"
    BINARY_FLIP = "binary_flip"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class NoiseSpec:
    """What to corrupt and how strongly.

    Attributes
    ----------
    feature_kind : FeatureNoise
    feature_level : float
        Flip ratio ``p`` in ``[0, 1]`` for binary flips, standard deviation for Gaussian noise.
    structure_ratio : float
        Edge ratio ``r`` in ``[0, 1)``; ``floor(r/2 E)`` edges are rewired.
    seed : int
    """

    feature_kind: FeatureNoise = FeatureNoise.NONE
    feature_level: float = 0.0
    structure_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feature_kind", FeatureNoise(self.feature_kind))
        if self.feature_kind is FeatureNoise.BINARY_FLIP and not 0 <= self.feature_level <= 1:
            raise ValueError(f"flip ratio must lie in [0, 1], got {self.feature_level}")
        if self.feature_kind is FeatureNoise.GAUSSIAN and not self.feature_level >= 0:
            raise ValueError(f"sigma must be nonnegative, got {self.feature_level}")
        if not 0 <= self.structure_ratio < 1:
            raise ValueError(f"structure ratio must lie in [0, 1), got {self.structure_ratio}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def parse_feature(cls, text: str) -> tuple[FeatureNoise, float]:
        """Parse ``"gaussian:0.25"``, ``"flip:0.25"`` or ``"none"``."""
        if text.strip().lower() == "none":
            return FeatureNoise.NONE, 0.0
        kind, _, level = text.partition(":")
        kind = kind.strip().lower()
        aliases = {"gaussian": FeatureNoise.GAUSSIAN, "flip": FeatureNoise.BINARY_FLIP,
                   "binary_flip": FeatureNoise.BINARY_FLIP}
        if kind not in aliases or not level:
            raise ValueError(f"feature noise must look like gaussian:SIGMA or flip:P, got {text!r}")
        return aliases[kind], float(level)

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed)

    def to_dict(self) -> dict:
        return {
            "feature_kind": self.feature_kind.value,
            "feature_level": self.feature_level,
            "structure_ratio": self.structure_ratio,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(**d)


def perturb_features(X, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if spec.feature_kind is FeatureNoise.GAUSSIAN:
        return X + spec.feature_level * rng.standard_normal(X.shape)
    if spec.feature_kind is FeatureNoise.BINARY_FLIP:
        if not np.all((X == 0) | (X == 1)):
            raise ValueError("binary flips need a 0/1 feature matrix")
        count = math.floor(spec.feature_level * X.size)
        idx = rng.choice(X.size, size=count, replace=False)
        out = X.copy().ravel()
        out[idx] = 1.0 - out[idx]
        return out.reshape(X.shape)
    return X.copy()


def _sample_non_edges(adjacency: sp.csr_matrix, n: int, count: int, rng) -> list[tuple[int, int]]:
    """``count`` distinct node pairs ``i < j`` that are not edges of ``adjacency``."""
    total_pairs = n * (n - 1) // 2
    available = total_pairs - sp.triu(adjacency, k=1).nnz
    if count > available:
        raise GraphError(f"need {count} non-edges but only {available} exist")
    if count == 0:
        return []
    existing = set(zip(*sp.triu(adjacency, k=1).nonzero()))
    chosen: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    if 2 * count <= available:
        # rejection sampling is cheap while non-edges are plentiful
        while len(chosen) < count:
            i, j = rng.integers(0, n, size=2)
            if i == j:
                continue
            key = (int(min(i, j)), int(max(i, j)))
            if key in existing or key in seen:
                continue
            seen.add(key)
            chosen.append(key)
        return chosen
    iu, ju = np.triu_indices(n, k=1)
    candidates = [(int(i), int(j)) for i, j in zip(iu, ju) if (i, j) not in existing]
    pick = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[p] for p in pick]


def perturb_edges(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    """Rewire ``floor(ratio/2 E)`` edges: delete that many, add as many non-edges.

    Added edges are sampled among pairs that were not edges of ``g``, so a
    deleted edge is never re-added. Added edges get unit weight.
    """
    if not 0 <= ratio < 1:
        raise ValueError(f"ratio must lie in [0, 1), got {ratio}")
    edges = g.edges()
    if not edges:
        raise GraphError("graph has no edges to perturb")
    count = math.floor(ratio / 2 * len(edges))
    if count == 0:
        return g
    new_edges = _sample_non_edges(g.adjacency, g.n, count, rng)
    drop = set(int(t) for t in rng.choice(len(edges), size=count, replace=False))
    kept = [e for t, e in enumerate(edges) if t not in drop]
    rows = [i for i, _, _ in kept] + [i for i, _ in new_edges]
    cols = [j for _, j, _ in kept] + [j for _, j in new_edges]
    vals = [w for _, _, w in kept] + [1.0] * len(new_edges)
    upper = sp.coo_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return Graph.from_adjacency(upper + upper.T)


def sbm_generate(sizes, p_in: float, p_out: float, rng: np.random.Generator) -> Graph:
    """Binary stochastic block model; one uniform draw per unordered pair, row-major."""
    if not (0 <= p_in <= 1 and 0 <= p_out <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    sizes = [int(s) for s in sizes]
    if not sizes or any(s <= 0 for s in sizes):
        raise ValueError("block sizes must be positive")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    upper = sp.coo_matrix((np.ones(keep.sum()), (iu[keep], ju[keep])), shape=(n, n))
    return Graph.from_adjacency(upper + upper.T)


def piecewise_signal(sizes, values, d: int = 1) -> np.ndarray:
    if len(sizes) != len(values):
        raise ValueError(f"{len(sizes)} blocks but {len(values)} values")
    if d < 1:
        raise ValueError("d must be positive")
    col = np.repeat(np.asarray(values, dtype=float), [int(s) for s in sizes])
    return np.tile(col[:, None], (1, d))


@dataclass(frozen=True)
class RecoveryReport:
    mse_u: float
    mse_noisy: float
    ratio: float
    snr_gain_db: float

    def to_dict(self) -> dict:
        return {"mse_u": self.mse_u, "mse_noisy": self.mse_noisy,
                "ratio": self.ratio, "snr_gain_db": self.snr_gain_db}


def recovery_metrics(U, clean, X_noisy) -> RecoveryReport:
    """Mean squared errors against ``clean`` and the improvement they imply.

    ``ratio`` is ``mse_u / mse_noisy`` (0 when both vanish, ``inf`` when only
    the noisy error does); ``snr_gain_db`` is ``-10 log10(ratio)``.
    """
    U, clean, X_noisy = (np.asarray(a, dtype=float) for a in (U, clean, X_noisy))
    if not U.shape == clean.shape == X_noisy.shape:
        raise ValueError(f"shape mismatch {U.shape}, {clean.shape}, {X_noisy.shape}")
    mse_u = float(np.mean((U - clean) ** 2))
    mse_noisy = float(np.mean((X_noisy - clean) ** 2))
    if mse_noisy == 0.0:
        ratio = 0.0 if mse_u == 0.0 else math.inf
    else:
        ratio = mse_u / mse_noisy
    if ratio == 0.0:
        gain = math.inf
    elif math.isinf(ratio):
        gain = -math.inf
    else:
        gain = -10.0 * math.log10(ratio)
    return RecoveryReport(mse_u, mse_noisy, ratio, gain)
