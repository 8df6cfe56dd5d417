"""Pointwise and per-site proximal maps used by the splitting solver.

Scalar soft thresholding acts elementwise; its vector version thresholds the
Euclidean length of each site's layer-vector.  Projection onto the l1-ball of
per-site radius mu is the exact complement: at every site the projection and
the vector shrinkage add back to the input.  The implementation computes the
shrinkage as input minus projection with one shared scale factor, so that
complementarity holds to a single ulp (and exactly on sites inside the ball,
where the factor is mu/mu == 1).
"""

from __future__ import annotations

import numpy as np

__all__ = ["shrink", "vector_shrink", "l1_ball_project"]


def shrink(f: np.ndarray, alpha) -> np.ndarray:
    """Soft threshold: sign(f) * max(|f| - alpha, 0).

    ``alpha`` may be a scalar or an array broadcastable to ``f``; it must be
    nonnegative everywhere.  The 0/0 site convention is 0.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0):
        raise ValueError("shrink threshold must be nonnegative")
    f = np.asarray(f, dtype=float)
    return np.sign(f) * np.maximum(np.abs(f) - alpha, 0.0)


def _site_magnitude(field: np.ndarray) -> np.ndarray:
    arr = np.asarray(field, dtype=float)
    if arr.ndim != 3:
        raise ValueError(f"expected a (layers, d1, d2) field, got shape {arr.shape}")
    return np.sqrt((arr * arr).sum(axis=0))


def _ball_scale(mag: np.ndarray, mu) -> np.ndarray:
    """Per-site factor mu / max(mu, |y|); exactly 1 inside the ball."""
    denom = np.maximum(mu, mag)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, np.asarray(mu, dtype=float) / safe, 1.0)


def vector_shrink(field: np.ndarray, mu) -> np.ndarray:
    """Per-site soft threshold of the layer-vector length.

    Each site's vector keeps its direction and its length drops to
    max(|y| - mu, 0); zero sites stay zero.  ``mu`` is a nonnegative scalar
    or image of shape (d1, d2); mu = 0 is the identity.
    """
    arr = np.asarray(field, dtype=float)
    mag = _site_magnitude(arr)
    if np.any(np.asarray(mu) < 0):
        raise ValueError("vector_shrink threshold must be nonnegative")
    return arr - arr * _ball_scale(mag, mu)


def l1_ball_project(field: np.ndarray, mu: float) -> np.ndarray:
    """Project each site's layer-vector onto the Euclidean ball of radius mu.

    ``mu`` must be a positive scalar.  Sites already inside the ball are
    returned bit-for-bit unchanged; outside ones are rescaled to length mu.
    """
    if np.ndim(mu) != 0:
        raise ValueError("ball radius must be a scalar")
    if not mu > 0:
        raise ValueError(f"ball radius must be positive, got {mu}")
    arr = np.asarray(field, dtype=float)
    mag = _site_magnitude(arr)
    return arr * _ball_scale(mag, float(mu))
