"""Quality metrics for demixing runs and their export helpers.

Covers reconstruction error (mean squared error), block-covariance
spread (largest eigenvalue over vectorized non-overlapping blocks),
texture sparsity, and normal quantile pairs for residual diagnostics.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MetricsReport",
    "mse",
    "mec",
    "sparsity",
    "qq_pairs",
    "qq_export",
    "qq_r_squared",
]

_POWER_TOL = 1e-10
_POWER_MAX_ITERS = 10_000


def _as_image(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


# =====================================================================
# Scalar metrics
# =====================================================================


def mse(f0: np.ndarray, f_re: np.ndarray) -> float:
    """Mean squared difference between a reference and a reconstruction."""
    f0 = _as_image(f0, "f0")
    f_re = _as_image(f_re, "f_re")
    if f0.shape != f_re.shape:
        raise ValueError(f"shape mismatch: {f0.shape} vs {f_re.shape}")
    diff = f0 - f_re
    return float(np.mean(diff * diff))


def _max_eigenvalue(cov: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric PSD matrix.

    Power iteration with a deterministic start and a Rayleigh-quotient
    stopping rule; falls back to a dense eigensolver if the iteration
    fails to settle.
    """
    n = cov.shape[0]
    z = np.full(n, 1.0 / math.sqrt(n))
    for _ in range(_POWER_MAX_ITERS):
        w = cov @ z
        lam = float(z @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        # Residual certificate: some eigenvalue lies within ||w - lam z||
        # of the Rayleigh quotient, so this bounds the error directly even
        # when closely spaced top eigenvalues slow the iteration down.
        if float(np.linalg.norm(w - lam * z)) <= _POWER_TOL * max(1.0, abs(lam)):
            return lam
        z = w / norm
    return float(np.linalg.eigvalsh(cov)[-1])


def mec(error: np.ndarray, block: int = 10) -> float:
    """Largest eigenvalue of the covariance of vectorized error blocks.

    The image is partitioned into non-overlapping ``block`` x ``block``
    tiles (trailing partial tiles are dropped), each tile is flattened
    row-major, and the covariance over tiles uses 1/N normalization.
    """
    error = _as_image(error, "error")
    if block < 1:
        raise ValueError(f"block must be >= 1, got {block}")
    d1, d2 = error.shape
    n1, n2 = d1 // block, d2 // block
    if n1 == 0 or n2 == 0:
        raise ValueError(
            f"image {error.shape} is smaller than one {block}x{block} block"
        )
    tiles = (
        error[: n1 * block, : n2 * block]
        .reshape(n1, block, n2, block)
        .swapaxes(1, 2)
        .reshape(n1 * n2, block * block)
    )
    centered = tiles - tiles.mean(axis=0)
    cov = centered.T @ centered / tiles.shape[0]
    return _max_eigenvalue(cov)


def sparsity(v: np.ndarray, tol: float = 1e-12) -> float:
    """Percentage of sites whose magnitude exceeds ``tol``.

    The default tolerance only absorbs round-off from spectral code
    paths; the shrink operator itself produces exact zeros.
    """
    v = _as_image(v, "v")
    if tol < 0:
        raise ValueError(f"tol must be nonnegative, got {tol}")
    return float(100.0 * np.count_nonzero(np.abs(v) > tol) / v.size)


# =====================================================================
# Normal quantile pairs
# =====================================================================


def qq_pairs(eps: np.ndarray) -> np.ndarray:
    """Standard-normal quantiles paired with standardized sample values.

    Returns an (n, 2) array whose first column holds the inverse normal
    CDF at (i - 0.5)/n and whose second column holds the sorted,
    standardized (population std) sample. A constant input is centered
    only, leaving a degenerate flat sample column.
    """
    eps = _as_image(eps, "eps")
    flat = np.sort(eps.ravel())
    n = flat.size
    mean = float(flat.mean())
    std = float(np.sqrt(np.mean((flat - mean) ** 2)))
    sample = (flat - mean) / std if std > 0 else flat - mean
    dist = statistics.NormalDist()
    theo = np.array([dist.inv_cdf((i + 0.5) / n) for i in range(n)])
    return np.column_stack([theo, sample])


def qq_export(eps: np.ndarray, path: str) -> str:
    """Write quantile pairs as a two-column CSV; returns the path."""
    pairs = qq_pairs(eps)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theoretical", "sample"])
        for theo, sample in pairs:
            writer.writerow([repr(float(theo)), repr(float(sample))])
    return path


def qq_r_squared(pairs: np.ndarray) -> float:
    """Squared correlation between the two quantile columns.

    Zero when either column is constant (no linear trend to score).
    """
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) array, got shape {pairs.shape}")
    x = pairs[:, 0] - pairs[:, 0].mean()
    y = pairs[:, 1] - pairs[:, 1].mean()
    denom = float(np.linalg.norm(x) * np.linalg.norm(y))
    if denom == 0.0:
        return 0.0
    return float((x @ y) / denom) ** 2


# =====================================================================
# Report container
# =====================================================================


@dataclass(frozen=True)
class MetricsReport:
    """Bundle of run-level quality numbers with export helpers.

    The scalar fields must be finite (sparsity additionally within
    [0, 100]); history entries may carry +/-inf sentinels from runs
    where the texture block never moved or froze exactly.
    """

    mse: float
    mec: float
    sparsity_percent: float
    err_v_history: np.ndarray
    constraint_residual: float

    def __post_init__(self) -> None:
        for name in ("mse", "mec", "sparsity_percent", "constraint_residual"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.mse < 0 or self.mec < 0:
            raise ValueError("mse and mec must be nonnegative")
        if not 0.0 <= self.sparsity_percent <= 100.0:
            raise ValueError(
                f"sparsity_percent must lie in [0, 100], got "
                f"{self.sparsity_percent}"
            )
        history = np.atleast_1d(np.asarray(self.err_v_history, dtype=float))
        object.__setattr__(self, "err_v_history", history)

    def to_dict(self) -> dict:
        """Plain-types view; non-finite history entries become None."""
        history = [
            float(e) if math.isfinite(e) else None for e in self.err_v_history
        ]
        return {
            "mse": float(self.mse),
            "mec": float(self.mec),
            "sparsity_percent": float(self.sparsity_percent),
            "constraint_residual": float(self.constraint_residual),
            "err_v_history": history,
        }

    def write_json(self, path: str) -> str:
        """Dump the report as deterministic, sorted-key JSON."""
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return path

    def write_history_csv(self, path: str) -> str:
        """Write (iteration, err_v) rows; sentinels appear as inf/-inf."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "err_v"])
            for tau, err in enumerate(self.err_v_history, start=1):
                writer.writerow([tau, repr(float(err))])
        return path
