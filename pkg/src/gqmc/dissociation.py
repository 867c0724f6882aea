"""Real-time Bose/Fermi molecular dissociation dynamics.

Three modes: one bosonic molecular amplitude pair (alpha, alpha_plus, doubled
phase space, only the initial condition ties them to conjugates) and two
atomic modes whose statistics toggle between bosonic (+) and fermionic (-).
The atomic sector carries occupations n1, n2 and pair correlations m, m_plus;
normal spin-spin correlations stay zero and are not carried.

The complex noises obey <z_k z_k'> = 0 and <z_k z*_k'> = delta_kk' delta(t-t'),
realized per step as (eta1 + i eta2)/sqrt(2) with each eta of variance 1/dt.
Weights are constant, so there is no branching; sampling error instead grows
with time, and the reported series is truncated once it crosses a ceiling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import sde
from .stats import ObservableSeries

__all__ = [
    "DissociationState",
    "DissociationRunConfig",
    "statistics_sign",
    "dissociation_derivative",
    "run_realtime",
]

logger = logging.getLogger("gqmc.dissociation")

SQRT_I = np.exp(0.25j * np.pi)
CHUNK = 4096

DISSOCIATION_COLUMNS = (
    "t",
    "n1",
    "n1_err",
    "n2",
    "n2_err",
    "molecules",
    "molecules_err",
    "im_n1",
    "im_n1_err",
)


@dataclass
class DissociationState:
    """Phase-space point (alpha, alpha_plus, n1, n2, m, m_plus), all complex.

    At a physical initial condition alpha_plus = conj(alpha), the occupations
    are real and the pair correlations vanish; evolution leaves the physical
    manifold trajectory-by-trajectory while ensemble means stay physical.
    """

    alpha: complex
    alpha_plus: complex
    n1: complex
    n2: complex
    m: complex
    m_plus: complex


def statistics_sign(kind: str) -> float:
    """+1 for bosonic atoms, -1 for fermionic atoms."""
    if kind == "bose":
        return 1.0
    if kind == "fermi":
        return -1.0
    raise ValueError(f"unknown statistics kind {kind!r}")


def _derivative_arrays(state, zeta1, zeta2, pm):
    """Time derivatives of (alpha, alpha_plus, n1, n2, m, m_plus), batched.

    Overflow is deliberately tolerated: the quadratic noise coefficients give
    individual trajectories a finite blowup time, after which their entries
    are inf/nan and the series truncation discards the affected grid rows.
    """
    alpha, alpha_plus, n1, n2, m, m_plus = state
    with np.errstate(over="ignore", invalid="ignore"):
        c1 = np.conj(zeta1)
        c2 = np.conj(zeta2)
        blocked = 1.0 + pm * n1 + pm * n2
        kick = m * c1 + m_plus * c2
        d_alpha = -1j * m - SQRT_I * zeta1
        d_alpha_plus = 1j * m_plus + SQRT_I * zeta2
        d_n1 = 1j * (alpha_plus * m - alpha * m_plus) + pm * SQRT_I * n1 * kick
        d_n2 = 1j * (alpha_plus * m - alpha * m_plus) + pm * SQRT_I * n2 * kick
        d_m = -1j * alpha * blocked + SQRT_I * (pm * m**2 * c1 + n1 * n2 * c2)
        d_m_plus = 1j * alpha_plus * blocked + SQRT_I * (
            n1 * n2 * c1 + pm * m_plus**2 * c2
        )
    return d_alpha, d_alpha_plus, d_n1, d_n2, d_m, d_m_plus


def dissociation_derivative(
    state: DissociationState, zeta1: complex, zeta2: complex, kind: str
) -> DissociationState:
    """State derivative for one trajectory at fixed complex noises.

    With both noises zero this reduces to the deterministic pairing
    mean-field equations; the vacuum is a fixed point.
    """
    pm = statistics_sign(kind)
    parts = _derivative_arrays(
        (state.alpha, state.alpha_plus, state.n1, state.n2, state.m, state.m_plus),
        zeta1,
        zeta2,
        pm,
    )
    return DissociationState(*(complex(p) for p in parts))


@dataclass(frozen=True)
class DissociationRunConfig:
    """Knobs of one real-time run."""

    trajectories: int
    dt: float
    t_max: float
    seed: int
    batches: int = 20
    obs_interval: int = 10
    midpoint_iterations: int = 6
    scheme: str = sde.STRATONOVICH_MIDPOINT
    error_ceiling: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.dt <= 0 or self.t_max < 0:
            raise ValueError("dt must be positive and t_max non-negative")
        if self.obs_interval < 1:
            raise ValueError("obs_interval must be at least 1")


def _record(rows, t, state, batches):
    alpha, alpha_plus, n1, n2, _, _ = state
    with np.errstate(over="ignore", invalid="ignore"):
        molecules = alpha_plus * alpha
    count = n1.shape[0]

    def mean_err(values):
        with np.errstate(over="ignore", invalid="ignore"):
            center = float(values.mean())
            if batches < 2 or count < batches:
                return center, float("nan")
            edges = np.linspace(0, count, batches + 1).astype(int)
            means = np.asarray(
                [values[a:b].mean() for a, b in zip(edges[:-1], edges[1:])]
            )
            return center, float(means.std(ddof=1) / np.sqrt(batches))

    rows["t"].append(t)
    for name, data in (("n1", n1.real), ("n2", n2.real), ("molecules", molecules.real)):
        center, err = mean_err(data)
        rows[name].append(center)
        rows[f"{name}_err"].append(err)
    center, err = mean_err(n1.imag)
    rows["im_n1"].append(center)
    rows["im_n1_err"].append(err)


def run_realtime(kind: str, n_mean: float, config: DissociationRunConfig) -> ObservableSeries:
    """Dissociation of a molecular coherent state into atom pairs.

    Starts from alpha = alpha_plus = sqrt(n_mean) with empty atomic modes,
    integrates the phase-space equations, and reports Re<n_j> (atoms) and
    Re<alpha_plus alpha> (molecules) with batch errors; Im<n_1> is kept as a
    consistency diagnostic.  Once the batch error of n1 exceeds the configured
    ceiling the remaining rows are dropped and the series is flagged
    (`truncated` in meta): growing sampling error is generic for these
    real-time runs, not an exception.
    """
    pm = statistics_sign(kind)
    if n_mean < 0:
        raise ValueError("mean molecule number must be non-negative")
    count = config.trajectories
    amp = np.sqrt(n_mean)
    state = tuple(
        np.full(count, fill, dtype=complex)
        for fill in (amp, amp, 0.0, 0.0, 0.0, 0.0)
    )
    integrator = sde.IntegratorConfig(
        dstep=config.dt,
        midpoint_iterations=config.midpoint_iterations,
        scheme=config.scheme,
    )
    deriv = lambda st, noises: _derivative_arrays(st, noises[0], noises[1], pm)
    n_steps = int(round(config.t_max / config.dt))
    eta_variance = 1.0 / config.dt

    rows = {name: [] for name in DISSOCIATION_COLUMNS}
    _record(rows, 0.0, state, config.batches)

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for step_index in range(1, n_steps + 1):
            eta = sde.gaussian_field(
                config.seed,
                sde.DOMAIN_DISSOCIATION,
                step_index,
                (count, 4),
                eta_variance,
            )
            zeta1 = (eta[:, 0] + 1j * eta[:, 1]) / np.sqrt(2.0)
            zeta2 = (eta[:, 2] + 1j * eta[:, 3]) / np.sqrt(2.0)

            def step_slice(sl):
                with np.errstate(over="ignore", invalid="ignore"):
                    return sde.step(
                        tuple(p[sl] for p in state),
                        deriv,
                        (zeta1[sl], zeta2[sl]),
                        integrator,
                    )

            if pool is None or count <= CHUNK:
                state = step_slice(slice(None))
            else:
                slices = [
                    slice(a, min(a + CHUNK, count)) for a in range(0, count, CHUNK)
                ]
                parts = list(pool.map(step_slice, slices))
                state = tuple(
                    np.concatenate([p[i] for p in parts]) for i in range(6)
                )
            if step_index % config.obs_interval == 0:
                _record(rows, step_index * config.dt, state, config.batches)
    finally:
        if pool is not None:
            pool.shutdown()

    series = ObservableSeries(
        columns={name: np.asarray(vals) for name, vals in rows.items()},
        meta={"statistics": kind, "n_mean": n_mean, "truncated": False},
    )
    errs = series.column("n1_err")
    values = series.column("n1")
    blown = (errs > config.error_ceiling) | ~np.isfinite(values)
    blown[1:] |= ~np.isfinite(errs[1:])  # t=0 errors may be NaN by the B<2 contract
    bad = np.where(blown)[0]
    if bad.size:
        keep = int(bad[0])
        logger.warning(
            "sampling error exceeded %.3g at t=%.4g; truncating series",
            config.error_ceiling,
            series.column("t")[min(keep, len(series) - 1)],
        )
        series = series.truncated(keep)
        series.meta["truncated"] = True
    return series
