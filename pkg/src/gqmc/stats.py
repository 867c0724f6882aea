"""Weighted estimators and batch-based uncertainty for trajectory ensembles.

Weights live in log space throughout; every reduction first subtracts the
ensemble maximum so exp never overflows however long a run gets.  Errors come
from contiguous batch means (trajectories are exchangeable at fixed seed
policy), and ratio observables are batched as full ratios rather than
linearized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "weighted_mean",
    "batch_error",
    "batch_ratio_error",
    "normalized_weights",
    "ObservableSeries",
]

DEFAULT_BATCHES = 20


def normalized_weights(log_weights: np.ndarray) -> np.ndarray:
    """exp(log_weights - max), safe against overflow; not normalized to sum 1."""
    log_weights = np.asarray(log_weights, dtype=float)
    if log_weights.size == 0:
        raise ValueError("empty weight array")
    return np.exp(log_weights - log_weights.max())


def weighted_mean(values: np.ndarray, log_weights: np.ndarray):
    """Weighted ensemble average sum(w v) / sum(w) with shifted log weights."""
    values = np.asarray(values)
    w = normalized_weights(log_weights)
    if values.shape[0] != w.shape[0]:
        raise ValueError("values and log_weights length mismatch")
    total = w.sum()
    return np.tensordot(w, values, axes=(0, 0)) / total


def _batch_slices(count: int, batches: int):
    if batches < 2:
        raise ValueError("at least 2 batches are required for an error estimate")
    if count < batches:
        raise ValueError("fewer samples than batches")
    edges = np.linspace(0, count, batches + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def batch_error(values, log_weights, batches: int = DEFAULT_BATCHES) -> float:
    """Standard error of a weighted mean from contiguous batch means."""
    values = np.asarray(values)
    log_weights = np.asarray(log_weights, dtype=float)
    means = [
        weighted_mean(values[s], log_weights[s])
        for s in _batch_slices(values.shape[0], batches)
    ]
    return float(np.std(np.asarray(means), ddof=1) / np.sqrt(batches))


def batch_ratio_error(ratio_fn, log_weights, batches: int = DEFAULT_BATCHES):
    """Point estimate and batch error for a ratio-type observable.

    `ratio_fn(sl)` must return the observable evaluated on the trajectory
    slice `sl` (full ratio, numerator and denominator from the same slice).
    Returns (ratio_fn(everything), standard error over batches).
    """
    log_weights = np.asarray(log_weights, dtype=float)
    count = log_weights.shape[0]
    center = ratio_fn(slice(None))
    vals = np.asarray([ratio_fn(s) for s in _batch_slices(count, batches)])
    return center, float(np.std(vals, ddof=1) / np.sqrt(batches))


@dataclass
class ObservableSeries:
    """Per-grid-point named estimates, column-oriented for CSV emission."""

    columns: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("ragged observable columns")

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    def truncated(self, rows: int) -> "ObservableSeries":
        cols = {k: np.asarray(v)[:rows] for k, v in self.columns.items()}
        return ObservableSeries(columns=cols, meta=dict(self.meta))
