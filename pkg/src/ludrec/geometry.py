"""Small 3-space primitives shared by every other module.

Location sets are plain float arrays of shape (n, 3); directions are unit
rows. Everything here is pure and cheap, so callers use these helpers
instead of re-deriving projections and alignments inline.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "COINCIDENT_TOL",
    "as_locations",
    "pairwise_direction",
    "project_perp",
    "center",
    "optimal_scale",
    "nrmse",
]

# Gaussian ground-truth samples are separated by far more than this.
COINCIDENT_TOL = 1e-14


def as_locations(points, min_points: int = 2) -> np.ndarray:
    """Coerce to a float64 (n, 3) array and validate shape and finiteness."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) location array, got shape {arr.shape}")
    if arr.shape[0] < min_points:
        raise ValueError(f"need at least {min_points} locations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("locations must be finite")
    return arr


def pairwise_direction(a, b) -> np.ndarray:
    """Unit vector pointing from ``b`` toward ``a``: (a - b) / ||a - b||."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a - b
    norm = float(np.linalg.norm(d))
    if norm < COINCIDENT_TOL:
        raise ValueError("coincident points: direction undefined")
    return d / norm


def project_perp(gamma, v) -> np.ndarray:
    """Component of ``v`` orthogonal to the unit direction ``gamma``.

    Broadcasts across leading axes, so a batch of edge differences can be
    projected against a batch of directions in one call.
    """
    gamma = np.asarray(gamma, dtype=float)
    v = np.asarray(v, dtype=float)
    dots = np.sum(gamma * v, axis=-1, keepdims=True)
    return v - dots * gamma


def center(points) -> np.ndarray:
    """Shift locations so their mean is the zero vector."""
    arr = as_locations(points, min_points=1)
    return arr - arr.mean(axis=0)


def optimal_scale(estimate, ground_truth) -> float:
    """Least-squares scale: argmin over kappa of sum ||kappa*est_i - gt_i||^2.

    Both inputs are centered first. Closed form: the ratio of the summed
    inner products to the summed squared estimate norms. Returns 0.0 for an
    all-zero estimate (the degenerate convention used by :func:`nrmse`).
    """
    est = center(as_locations(estimate))
    gt = center(as_locations(ground_truth))
    if est.shape != gt.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {gt.shape}")
    denom = float(np.sum(est * est))
    if denom == 0.0:
        return 0.0
    return float(np.sum(est * gt) / denom)


def nrmse(estimate, ground_truth) -> float:
    """Scale-aligned normalized RMS location error.

    Returns sqrt(sum_i ||k*est_i - gt_i||^2 / sum_i ||gt_i||^2) minimized
    over the scalar k, after centering both inputs. Zero exactly when the
    estimate is a scalar multiple of the truth; an all-zero estimate is
    degenerate and reports 1.0 with a warning.
    """
    est = center(as_locations(estimate))
    gt = center(as_locations(ground_truth))
    if est.shape != gt.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {gt.shape}")
    gt_sq = float(np.sum(gt * gt))
    if gt_sq == 0.0:
        raise ValueError("ground truth is all zero after centering")
    est_sq = float(np.sum(est * est))
    if est_sq == 0.0:
        warnings.warn("all-zero estimate: NRMSE = 1 by convention", RuntimeWarning)
        return 1.0
    kappa = float(np.sum(est * gt) / est_sq)
    return float(np.sqrt(np.sum((kappa * est - gt) ** 2) / gt_sq))
