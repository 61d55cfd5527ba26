"""Undecimated tight framelet transform on graphs.

Each channel operator is a product of filter polynomials in a dilated
Laplacian, ``W_{k,l} = p_k(2^-s_l L) p_0(2^-s_{l-1} L) ... p_0(2^-s_1 L)``.
The Chebyshev path applies these products matrix-free through the
three-term recurrence; the exact path evaluates the same products on the
dense eigendecomposition and is intended as a reference for small graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import chebyshev as npcheb

from .graph import Graph, LaplacianKind, PowerIterationError, estimate_lambda_max, laplacian

DOMAIN = (0.0, np.pi)
TIGHTNESS_GRID = 1001
TIGHTNESS_TOL = 1e-12
EXACT_CAP = 200

Channel = tuple[int, int]
Coefficients = dict[Channel, np.ndarray]
# (filter index, dilation exponent): the factor p_f(2^-exponent * L)
Factor = tuple[int, int]


class Schedule(str, Enum):
    """Dilation exponents used by the level-``l`` channels.

    ``TIGHT``: high-pass at level ``l`` uses ``2^-(H+l-1)`` after low-passes
    at ``2^-H .. 2^-(H+l-2)``; the channels form a tight frame.
    ``SHIFTED``: level 1 uses ``2^-H``, level ``l >= 2`` uses ``2^-(H+l)``
    after low-passes at ``2^-H .. 2^-(H+l-1)``. Not tight for ``L >= 2``.
    """

    TIGHT = "tight"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class FilterBank:
    """Scaling functions on ``[0, pi]``: one low-pass and ``K`` high-passes.

    Construction fails unless ``|alpha|^2 + sum_k |beta_k|^2 = 1`` holds on a
    1001-point grid to 1e-12.
    """

    alpha_hat: Callable[[np.ndarray], np.ndarray]
    beta_hats: tuple[Callable[[np.ndarray], np.ndarray], ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.beta_hats:
            raise ValueError("filter bank needs at least one high-pass filter")
        xi = np.linspace(*DOMAIN, TIGHTNESS_GRID)
        total = np.abs(self.alpha_hat(xi)) ** 2
        for beta in self.beta_hats:
            total = total + np.abs(beta(xi)) ** 2
        err = float(np.max(np.abs(total - 1.0)))
        if err > TIGHTNESS_TOL:
            raise ValueError(f"filter bank is not tight (max deviation {err:.3e})")

    @property
    def K(self) -> int:
        return len(self.beta_hats)

    def filters(self) -> tuple[Callable, ...]:
        return (self.alpha_hat, *self.beta_hats)


def haar_filter_bank() -> FilterBank:
    """Haar-type bank: ``alpha(xi) = cos(xi/2)``, ``beta(xi) = sin(xi/2)``."""
    return FilterBank(
        alpha_hat=lambda xi: np.cos(np.asarray(xi) / 2.0),
        beta_hats=(lambda xi: np.sin(np.asarray(xi) / 2.0),),
        name="haar",
    )


def dilation_scale(lambda_max: float) -> int:
    """Smallest integer ``H >= 0`` with ``lambda_max <= 2^H * pi``."""
    if lambda_max < 0:
        raise ValueError(f"lambda_max must be nonnegative, got {lambda_max}")
    H = 0
    while lambda_max > 2.0**H * np.pi:
        H += 1
    return H


def index_set(K: int, levels: int) -> list[Channel]:
    """``(0, L)`` followed by ``(k, l)`` ordered by level then filter."""
    return [(0, levels)] + [(k, l) for l in range(1, levels + 1) for k in range(1, K + 1)]


def channel_factors(
    k: int, l: int, H: int, schedule: Schedule | str = Schedule.TIGHT
) -> tuple[Factor, ...]:
    """Factors of ``W_{k,l}`` in application order (first factor hits ``X`` first)."""
    schedule = Schedule(schedule)
    if schedule is Schedule.TIGHT or l == 1:
        return tuple((0, H + j) for j in range(l - 1)) + ((k, H + l - 1),)
    return tuple((0, H + j) for j in range(l)) + ((k, H + l),)


def chebyshev_fit(g: Callable, m: int, domain: tuple[float, float] = DOMAIN) -> np.ndarray:
    """Chebyshev interpolation coefficients (length ``m + 1``) of ``g`` on ``domain``.

    Interpolates at the first-kind Chebyshev points of the affinely mapped
    interval, so the fitted polynomial reproduces ``g`` at those nodes.
    """
    if m < 0:
        raise ValueError(f"order must be nonnegative, got {m}")
    a, b = domain
    return npcheb.chebinterpolate(lambda t: g((t + 1.0) * (b - a) / 2.0 + a), m)


def chebyshev_eval(coeffs: np.ndarray, xi, domain: tuple[float, float] = DOMAIN) -> np.ndarray:
    a, b = domain
    t = (2.0 * np.asarray(xi, dtype=float) - (a + b)) / (b - a)
    return npcheb.chebval(t, coeffs)


def _cheb_recurrence(coeffs, matvec: Callable[[np.ndarray], np.ndarray], X: np.ndarray):
    # matvec applies the operator already mapped to [-1, 1]
    T_prev = X
    out = coeffs[0] * X
    if len(coeffs) == 1:
        return out
    T_cur = matvec(X)
    out = out + coeffs[1] * T_cur
    for c in coeffs[2:]:
        T_prev, T_cur = T_cur, 2.0 * matvec(T_cur) - T_prev
        out = out + c * T_cur
    return out


def chebyshev_apply(
    coeffs: np.ndarray, Lscaled, X, domain: tuple[float, float] = DOMAIN
) -> np.ndarray:
    """``p(Lscaled) @ X`` for the fitted polynomial ``p``; cost O(m nnz d)."""
    X = np.asarray(X, dtype=float)
    if Lscaled.shape[0] != Lscaled.shape[1] or Lscaled.shape[1] != X.shape[0]:
        raise ValueError(f"operator {Lscaled.shape} incompatible with signal {X.shape}")
    a, b = domain
    alpha, shift = 2.0 / (b - a), (a + b) / (b - a)
    return _cheb_recurrence(coeffs, lambda V: alpha * (Lscaled @ V) - shift * V, X)


@dataclass(frozen=True)
class FrameletSystem:
    """Precomputed Chebyshev framelet operators on one graph."""

    bank: FilterBank
    levels: int
    cheb_order: int
    dilation_scale: int
    laplacian: sp.csr_matrix
    kind: LaplacianKind
    lambda_max: float
    schedule: Schedule = Schedule.TIGHT
    cheb_coeffs: tuple[np.ndarray, ...] = field(default=(), repr=False)

    @property
    def K(self) -> int:
        return self.bank.K

    @property
    def n(self) -> int:
        return self.laplacian.shape[0]

    @property
    def index_set(self) -> list[Channel]:
        return index_set(self.K, self.levels)

    def factors(self, channel: Channel) -> tuple[Factor, ...]:
        return channel_factors(*channel, self.dilation_scale, self.schedule)

    def apply_factor(self, factor: Factor, X: np.ndarray) -> np.ndarray:
        f, s = factor
        a, b = DOMAIN
        alpha = 2.0 ** (-s) * 2.0 / (b - a)
        shift = (a + b) / (b - a)
        L = self.laplacian
        return _cheb_recurrence(self.cheb_coeffs[f], lambda V: alpha * (L @ V) - shift * V, X)

    def metadata(self) -> dict[str, object]:
        return {
            "K": self.K,
            "L": self.levels,
            "m": self.cheb_order,
            "H": self.dilation_scale,
            "laplacian": self.kind.value,
            "schedule": self.schedule.value,
            "filter_bank": self.bank.name,
        }


def _lambda_upper_bound(L: sp.csr_matrix, kind: LaplacianKind) -> float:
    try:
        return estimate_lambda_max(L)
    except PowerIterationError:
        # Gershgorin disc bound is always safe for choosing H
        if kind is LaplacianKind.NORMALIZED:
            return 2.0
        return float(np.max(np.asarray(abs(L).sum(axis=1)).ravel()))


def build_framelet_system(
    g: Graph,
    kind: LaplacianKind | str = LaplacianKind.NORMALIZED,
    levels: int = 2,
    m: int = 10,
    bank: FilterBank | None = None,
    schedule: Schedule | str = Schedule.TIGHT,
) -> FrameletSystem:
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if m < 1:
        raise ValueError(f"Chebyshev order must be >= 1, got {m}")
    kind = LaplacianKind(kind)
    bank = bank or haar_filter_bank()
    L = laplacian(g, kind)
    lam = _lambda_upper_bound(L, kind)
    return FrameletSystem(
        bank=bank,
        levels=levels,
        cheb_order=m,
        dilation_scale=dilation_scale(lam),
        laplacian=L,
        kind=kind,
        lambda_max=lam,
        schedule=Schedule(schedule),
        cheb_coeffs=tuple(chebyshev_fit(f, m) for f in bank.filters()),
    )


def _check_signal(n: int, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[0] != n:
        raise ValueError(f"signal has {X.shape[0]} rows, graph has {n} nodes")
    return X


def _tree_decompose(channels, factors_of, apply_factor, X) -> Coefficients:
    # channels sharing a factor prefix share its computation
    cache: dict[tuple[Factor, ...], np.ndarray] = {(): X}
    out = {}
    for c in channels:
        chain = factors_of(c)
        for depth in range(1, len(chain) + 1):
            prefix = chain[:depth]
            if prefix not in cache:
                cache[prefix] = apply_factor(prefix[-1], cache[chain[: depth - 1]])
        out[c] = cache[chain]
    return out


def _tree_reconstruct(channels, factors_of, apply_factor, Q: Coefficients) -> np.ndarray:
    # sum_c W_c^T Q_c: adjoint chains run in reverse, so accumulate from the
    # deepest prefixes upward and apply each shared factor once
    acc: dict[tuple[Factor, ...], np.ndarray] = {}

    def add(key, val):
        acc[key] = np.array(val, dtype=float) if key not in acc else acc[key] + val

    nodes = set()
    for c in channels:
        chain = factors_of(c)
        add(chain, Q[c])
        nodes.update(chain[:depth] for depth in range(1, len(chain) + 1))
    for prefix in sorted(nodes, key=lambda p: (-len(p), p)):
        if prefix in acc:
            add(prefix[:-1], apply_factor(prefix[-1], acc[prefix]))
    return acc[()]


def _check_keys(Q: Coefficients, channels) -> None:
    if set(Q) != set(channels):
        raise ValueError(f"coefficient keys {sorted(Q)} do not match index set {channels}")


def framelet_decompose(sys: FrameletSystem, X) -> Coefficients:
    """``Q_{k,l} = W_{k,l} X`` for every channel, never forming ``W`` densely."""
    X = _check_signal(sys.n, X)
    return _tree_decompose(sys.index_set, sys.factors, sys.apply_factor, X)


def framelet_reconstruct(sys: FrameletSystem, Q: Coefficients) -> np.ndarray:
    """``sum_{(k,l)} W_{k,l}^T Q_{k,l}``."""
    channels = sys.index_set
    _check_keys(Q, channels)
    return _tree_reconstruct(channels, sys.factors, sys.apply_factor, Q)


@dataclass(frozen=True)
class _Spectral:
    evals: np.ndarray
    evecs: np.ndarray
    H: int
    filters: tuple[Callable, ...]
    channels: list[Channel]
    schedule: Schedule

    def multiplier(self, channel: Channel) -> np.ndarray:
        out = np.ones_like(self.evals)
        for f, s in channel_factors(*channel, self.H, self.schedule):
            out = out * self.filters[f](self.evals * 2.0 ** (-s))
        return out

    def apply(self, channel: Channel, X: np.ndarray) -> np.ndarray:
        V = self.evecs
        return V @ (self.multiplier(channel)[:, None] * (V.T @ X))


def _spectral(g, kind, levels, bank, schedule, H, cap) -> _Spectral:
    if g.n > cap:
        raise ValueError(f"exact framelet limited to n <= {cap}, got {g.n}")
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    bank = bank or haar_filter_bank()
    evals, evecs = np.linalg.eigh(laplacian(g, kind).toarray())
    evals = np.clip(evals, 0.0, None)
    if H is None:
        H = dilation_scale(float(evals[-1]))
    return _Spectral(evals, evecs, H, bank.filters(), index_set(bank.K, levels), Schedule(schedule))


def exact_framelet_decompose(
    g: Graph,
    kind: LaplacianKind | str = LaplacianKind.NORMALIZED,
    levels: int = 2,
    X=None,
    *,
    bank: FilterBank | None = None,
    schedule: Schedule | str = Schedule.TIGHT,
    H: int | None = None,
    cap: int = EXACT_CAP,
) -> Coefficients:
    """Reference decomposition from the dense eigendecomposition of the Laplacian.

    ``H`` defaults to the dilation scale of the exact largest eigenvalue.
    """
    spec = _spectral(g, LaplacianKind(kind), levels, bank, schedule, H, cap)
    X = _check_signal(g.n, X)
    return {c: spec.apply(c, X) for c in spec.channels}


def exact_framelet_reconstruct(
    g: Graph,
    kind: LaplacianKind | str = LaplacianKind.NORMALIZED,
    levels: int = 2,
    Q: Coefficients | None = None,
    *,
    bank: FilterBank | None = None,
    schedule: Schedule | str = Schedule.TIGHT,
    H: int | None = None,
    cap: int = EXACT_CAP,
) -> np.ndarray:
    spec = _spectral(g, LaplacianKind(kind), levels, bank, schedule, H, cap)
    _check_keys(Q, spec.channels)
    return sum(spec.apply(c, np.asarray(Q[c], dtype=float)) for c in spec.channels)


def zero_coefficients(channels: Sequence[Channel], shape: tuple[int, int]) -> Coefficients:
    return {c: np.zeros(shape) for c in channels}
