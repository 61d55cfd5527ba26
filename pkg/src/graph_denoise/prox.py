"""Shrinkage operators shared by all solvers."""

from __future__ import annotations

import numpy as np


def soft_threshold(x, eta):
    """Elementwise ``sign(x) * max(|x| - eta, 0)``, the prox of ``eta * |.|``."""
    if np.any(np.asarray(eta) < 0):
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - eta, 0.0)


def soft_threshold_rows(M, eta):
    """Group shrinkage of each row of ``M`` by its own threshold ``eta[i]``.

    Row ``i`` becomes ``M_i / ||M_i|| * max(||M_i|| - eta_i, 0)``; zero rows
    stay zero.
    """
    M = np.asarray(M, dtype=float)
    eta = np.broadcast_to(np.asarray(eta, dtype=float), (M.shape[0],))
    if np.any(eta < 0):
        raise ValueError("threshold must be nonnegative")
    norms = np.linalg.norm(M, axis=1)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(norms[nz] - eta[nz], 0.0) / norms[nz]
    return M * scale[:, None]


def batch_threshold(M, Delta):
    """Soft threshold with a separate nonnegative threshold per entry."""
    M = np.asarray(M, dtype=float)
    Delta = np.asarray(Delta, dtype=float)
    if M.shape != Delta.shape:
        raise ValueError(f"shape mismatch {M.shape} vs {Delta.shape}")
    return soft_threshold(M, Delta)
