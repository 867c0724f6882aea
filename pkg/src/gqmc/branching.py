"""Weight-spread control by stochastic cloning and killing of trajectories.

Stochastic-rounding residual resampling: trajectory i with relative weight
v_i = w_i * target / sum(w) survives floor(v_i + u_i) times, u_i uniform in
[0, 1), and every surviving copy carries the common weight sum(w) / target.
The expected post-branch weighted sum of any observable equals its pre-branch
value, so estimates are unbiased; the proof needs nothing beyond E[copies] =
v_i.  Non-finite trajectories are killed (weight zero), never repaired.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

__all__ = ["Ensemble", "BranchConfig", "EnsembleExtinctionError", "branch"]

logger = logging.getLogger("gqmc.branching")


class EnsembleExtinctionError(RuntimeError):
    """All trajectories received zero copies; the run cannot continue."""


@dataclass
class Ensemble:
    """Ordered stack of Hubbard trajectories with population-control metadata.

    Struct-of-arrays layout: n_up and n_dn are (population, M, M), log_weight
    is (population,).  Ordering is deterministic given the run history, which
    the noise addressing relies on.
    """

    n_up: np.ndarray
    n_dn: np.ndarray
    log_weight: np.ndarray
    generation: int = 0
    killed_total: int = 0

    def __post_init__(self):
        if len(self.n_up) != len(self.n_dn) or len(self.n_up) != len(self.log_weight):
            raise ValueError("ragged ensemble arrays")
        if len(self.log_weight) < 1:
            raise ValueError("ensemble population must be at least 1")

    @classmethod
    def infinite_temperature(cls, m_sites: int, population: int) -> "Ensemble":
        half = np.eye(m_sites) / 2.0
        return cls(
            n_up=np.broadcast_to(half, (population, m_sites, m_sites)).copy(),
            n_dn=np.broadcast_to(half, (population, m_sites, m_sites)).copy(),
            log_weight=np.zeros(population),
        )

    @property
    def population(self) -> int:
        return len(self.log_weight)

    def valid_mask(self) -> np.ndarray:
        """Finite-everything mask; False rows are due to be killed."""
        return (
            np.isfinite(self.n_up).all(axis=(1, 2))
            & np.isfinite(self.n_dn).all(axis=(1, 2))
            & np.isfinite(self.log_weight)
        )


@dataclass(frozen=True)
class BranchConfig:
    """Branch cadence and target population; interval >= 1, target >= 2."""

    interval: int
    target_population: int

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError("branch interval must be at least 1")
        if self.target_population < 2:
            raise ValueError("target population must be at least 2")


def branch(ensemble: Ensemble, config: BranchConfig, uniforms: np.ndarray) -> Ensemble:
    """One population-control event.

    `uniforms` supplies one u_i per trajectory in ensemble order (drawn from
    the run's dedicated counter-based stream, so copy counts are
    schedule-independent).  Raises EnsembleExtinctionError if nothing
    survives.
    """
    uniforms = np.asarray(uniforms, dtype=float)
    if uniforms.shape != (ensemble.population,):
        raise ValueError("need exactly one uniform per trajectory")

    valid = ensemble.valid_mask()
    killed = int((~valid).sum())
    log_w = np.where(valid, ensemble.log_weight, -np.inf)
    shift = log_w.max()
    if not np.isfinite(shift):
        raise EnsembleExtinctionError("no finite trajectory weights remain")
    weights = np.exp(log_w - shift)
    total = weights.sum()

    relative = weights * (config.target_population / total)
    copies = np.floor(relative + uniforms).astype(int)
    survivors = int(copies.sum())
    if survivors == 0:
        raise EnsembleExtinctionError("branching produced zero survivors")

    probs = weights / total
    nonzero = probs > 0
    entropy = float(-(probs[nonzero] * np.log(probs[nonzero])).sum())
    logger.debug(
        "branch gen=%d population=%d->%d killed=%d weight_entropy=%.4f",
        ensemble.generation,
        ensemble.population,
        survivors,
        killed,
        entropy,
    )

    new_log_weight = np.log(total / config.target_population) + shift
    return Ensemble(
        n_up=np.repeat(ensemble.n_up, copies, axis=0),
        n_dn=np.repeat(ensemble.n_dn, copies, axis=0),
        log_weight=np.full(survivors, new_log_weight),
        generation=ensemble.generation + 1,
        killed_total=ensemble.killed_total + killed,
    )
