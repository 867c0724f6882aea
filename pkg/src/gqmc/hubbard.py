"""Imaginary-time evolution of weighted Hubbard trajectories.

The dynamics evolve two real number matrices per trajectory,

    dn_s/dtau = (1/2) { (I - n_s) D1_s n_s + n_s D2_s (I - n_s) },

with D^(r) built from the hopping matrix, a diagonal mean-field bracket, and
one pair of real per-site noises shared by both spins (the down spin couples
with the opposite sign through f = -s).  Because everything stays real, the
weights exp(log_weight) remain strictly positive: there is no sign problem to
manage, only weight spread, which branching controls.

Log-weights integrate -H along the same midpoint path as the matrices, with H
the grand-canonical Hamiltonian evaluated literally on the phase-space
variables.  Reported energies exclude the -mu N term (see lattice module).
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import sde
from .branching import BranchConfig, Ensemble, branch
from .lattice import HubbardParams, Lattice, hamiltonian_value, hubbard_energy
from .states import HubbardTrajectory, ObservablePoint
from .stats import ObservableSeries, batch_ratio_error, weighted_mean

__all__ = [
    "HubbardRunConfig",
    "delta_matrix",
    "drift",
    "log_weight_derivative",
    "estimate_observables",
    "run_imaginary_time",
]

logger = logging.getLogger("gqmc.hubbard")

# Trajectories are advanced in fixed-size slot chunks; the worker count only
# decides how many chunks run concurrently, never the chunk boundaries, so
# results are bitwise independent of it.
CHUNK = 4096

SPIN_UP = "up"
SPIN_DN = "dn"

HUBBARD_COLUMNS = (
    "tau",
    "energy_per_site",
    "energy_err",
    "filling",
    "filling_err",
    "g2",
    "g2_err",
    "population",
    "mean_log_weight",
)


@dataclass(frozen=True)
class HubbardRunConfig:
    """Knobs of one imaginary-time run."""

    trajectories: int
    dtau: float
    tau_max: float
    seed: int
    branch_interval: int = 10
    branch_target: int | None = None
    batches: int = 20
    midpoint_iterations: int = 6
    scheme: str = sde.STRATONOVICH_MIDPOINT
    workers: int = 1

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.dtau <= 0 or self.tau_max < 0:
            raise ValueError("dtau must be positive and tau_max non-negative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


def _brackets(n_up, n_dn, params: HubbardParams, xi):
    """Diagonal parts of D^(r) for both spins; xi has shape (..., 2, M).

    Returns (bracket_up, bracket_dn), each (..., 2, M).  The same noise pair
    enters both spins; the down spin carries f = -s.
    """
    diag_up = np.diagonal(n_up, axis1=-2, axis2=-1)
    diag_dn = np.diagonal(n_dn, axis1=-2, axis2=-1)
    abs_u, s, mu = abs(params.u), params.s, params.mu
    base_up = abs_u * (s * diag_dn - diag_up + 0.5) - mu
    base_dn = abs_u * (s * diag_up - diag_dn + 0.5) - mu
    bracket_up = base_up[..., None, :] + xi
    bracket_dn = base_dn[..., None, :] - s * xi
    return bracket_up, bracket_dn


def _embed_deltas(bracket, hop):
    """t*adjacency minus diagonal bracket, per noise index r."""
    m = bracket.shape[-1]
    out = np.zeros(bracket.shape + (m,))
    idx = np.arange(m)
    out[..., idx, idx] = -bracket
    out += hop
    return out


def _drift_core(n_up, n_dn, params: HubbardParams, lattice: Lattice, xi):
    """Right side of the number-matrix equations for both spins (batched)."""
    hop = params.t * lattice.adjacency.astype(float)
    bracket_up, bracket_dn = _brackets(n_up, n_dn, params, xi)
    eye = np.eye(lattice.m)

    def one_spin(n, bracket):
        deltas = _embed_deltas(bracket, hop)
        d1 = deltas[..., 0, :, :]
        d2 = deltas[..., 1, :, :]
        hole = eye - n
        return 0.5 * (hole @ d1 @ n + n @ d2 @ hole)

    return one_spin(n_up, bracket_up), one_spin(n_dn, bracket_dn)


def delta_matrix(
    traj: HubbardTrajectory,
    params: HubbardParams,
    lattice: Lattice,
    xi: np.ndarray,
    r: int,
    spin: str,
) -> np.ndarray:
    """The matrix D^(r) for one trajectory, noise realization and spin.

    `xi` holds the per-site noises for r in {1, 2} as a (2, M) array, drawn
    with per-step variance 2|U|/dtau; both spins see the same fields, the
    down spin through f = -s.
    """
    if r not in (1, 2):
        raise ValueError("r must be 1 or 2")
    if spin not in (SPIN_UP, SPIN_DN):
        raise ValueError("spin must be 'up' or 'dn'")
    xi = np.asarray(xi, dtype=float)
    bracket_up, bracket_dn = _brackets(traj.n_up, traj.n_dn, params, xi)
    bracket = bracket_up if spin == SPIN_UP else bracket_dn
    return params.t * lattice.adjacency.astype(float) - np.diag(bracket[r - 1])


def drift(
    traj: HubbardTrajectory,
    params: HubbardParams,
    lattice: Lattice,
    xi: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """(dn_up/dtau, dn_dn/dtau) for one trajectory at fixed noises."""
    return _drift_core(traj.n_up, traj.n_dn, params, lattice, np.asarray(xi, dtype=float))


def log_weight_derivative(
    traj: HubbardTrajectory, params: HubbardParams, lattice: Lattice
) -> float:
    """d(log weight)/dtau = -H(n_up, n_dn), integrated along the same path."""
    return float(-hamiltonian_value(traj.n_up, traj.n_dn, params, lattice))


def _ensemble_derivative(state, xi, params: HubbardParams, lattice: Lattice):
    n_up, n_dn, _ = state
    d_up, d_dn = _drift_core(n_up, n_dn, params, lattice, xi)
    d_logw = -hamiltonian_value(n_up, n_dn, params, lattice)
    return d_up, d_dn, d_logw


def _advance(ensemble: Ensemble, xi, params, lattice, icfg, pool, workers):
    state = (ensemble.n_up, ensemble.n_dn, ensemble.log_weight)
    deriv = lambda st, noises: _ensemble_derivative(st, noises, params, lattice)
    count = ensemble.population
    if workers <= 1 or count <= CHUNK or pool is None:
        return sde.step(state, deriv, xi, icfg)
    slices = [slice(a, min(a + CHUNK, count)) for a in range(0, count, CHUNK)]

    def run_chunk(sl):
        chunk_state = tuple(part[sl] for part in state)
        return sde.step(chunk_state, deriv, xi[sl], icfg)

    parts = list(pool.map(run_chunk, slices))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def estimate_observables(
    ensemble: Ensemble,
    params: HubbardParams,
    lattice: Lattice,
    batches: int = 20,
) -> ObservablePoint:
    """Weighted estimates with batch errors from the current ensemble.

    Ratio observables (everything here is a ratio against the weight sum) are
    batched as full ratios.  With fewer than two batches, or fewer
    trajectories than batches, errors are reported as NaN, never as zero.
    """
    m = lattice.m
    log_w = ensemble.log_weight
    diag_up = np.diagonal(ensemble.n_up, axis1=-2, axis2=-1)
    diag_dn = np.diagonal(ensemble.n_dn, axis1=-2, axis2=-1)
    energy = hubbard_energy(ensemble.n_up, ensemble.n_dn, params, lattice) / m
    filling = (diag_up.sum(axis=1) + diag_dn.sum(axis=1)) / (2 * m)
    double = (diag_up * diag_dn).mean(axis=1)
    up = diag_up.mean(axis=1)
    dn = diag_dn.mean(axis=1)

    def g2_ratio(sl):
        return weighted_mean(double[sl], log_w[sl]) / (
            weighted_mean(up[sl], log_w[sl]) * weighted_mean(dn[sl], log_w[sl])
        )

    estimators = {
        "energy_per_site": lambda sl: weighted_mean(energy[sl], log_w[sl]),
        "filling": lambda sl: weighted_mean(filling[sl], log_w[sl]),
        "g2": g2_ratio,
    }
    values, errors = {}, {}
    can_batch = batches >= 2 and ensemble.population >= batches
    for name, fn in estimators.items():
        if can_batch:
            center, err = batch_ratio_error(fn, log_w, batches)
        else:
            center, err = fn(slice(None)), float("nan")
        values[name] = float(center)
        errors[name] = err
    values["population"] = float(ensemble.population)
    values["mean_log_weight"] = float(log_w.mean())
    return ObservablePoint(tau=float("nan"), values=values, errors=errors)


def run_imaginary_time(
    params: HubbardParams, lattice: Lattice, config: HubbardRunConfig
) -> ObservableSeries:
    """Full imaginary-time run: initialize, evolve, branch, estimate.

    Observables are recorded at tau = 0 and after every branch event, so
    estimates always describe the post-control ensemble.  The returned series
    meta carries the killed-trajectory count and the number of per-step
    non-finite events (both must be zero for a healthy run, and the weights
    stay positive by construction: log-weights are real throughout).
    """
    ensemble = Ensemble.infinite_temperature(lattice.m, config.trajectories)
    target = config.branch_target or config.trajectories
    branch_cfg = BranchConfig(config.branch_interval, target)
    integrator = sde.IntegratorConfig(
        dstep=config.dtau,
        midpoint_iterations=config.midpoint_iterations,
        scheme=config.scheme,
    )
    n_steps = int(round(config.tau_max / config.dtau))
    xi_variance = 2.0 * abs(params.u) / config.dtau

    rows = {name: [] for name in HUBBARD_COLUMNS}

    error_column = {"energy_per_site": "energy_err", "filling": "filling_err", "g2": "g2_err"}

    def record(tau: float):
        point = estimate_observables(ensemble, params, lattice, config.batches)
        rows["tau"].append(tau)
        for key, err_key in error_column.items():
            rows[key].append(point.values[key])
            rows[err_key].append(point.errors[key])
        rows["population"].append(point.values["population"])
        rows["mean_log_weight"].append(point.values["mean_log_weight"])

    nonfinite_events = 0
    record(0.0)
    pool = (
        ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    )
    try:
        for step_index in range(1, n_steps + 1):
            xi = sde.gaussian_field(
                config.seed,
                sde.DOMAIN_HUBBARD_XI,
                step_index,
                (ensemble.population, 2, lattice.m),
                xi_variance,
            )
            n_up, n_dn, log_w = _advance(
                ensemble, xi, params, lattice, integrator, pool, config.workers
            )
            ensemble = Ensemble(
                n_up=n_up,
                n_dn=n_dn,
                log_weight=log_w,
                generation=ensemble.generation,
                killed_total=ensemble.killed_total,
            )
            invalid = int((~ensemble.valid_mask()).sum())
            nonfinite_events += invalid
            if invalid:
                logger.warning(
                    "step %d: %d non-finite trajectories pending removal",
                    step_index,
                    invalid,
                )
            if step_index % config.branch_interval == 0:
                uniforms = sde.uniform_field(
                    config.seed, sde.DOMAIN_BRANCH, step_index, ensemble.population
                )
                ensemble = branch(ensemble, branch_cfg, uniforms)
                record(step_index * config.dtau)
    finally:
        if pool is not None:
            pool.shutdown()

    return ObservableSeries(
        columns={name: np.asarray(vals) for name, vals in rows.items()},
        meta={
            "killed_total": ensemble.killed_total,
            "nonfinite_events": nonfinite_events,
            "final_population": ensemble.population,
        },
    )
