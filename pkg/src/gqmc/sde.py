"""Stochastic integration and reproducible counter-based noise streams.

Noise is keyed, never sequential: every draw is addressed by (master seed,
domain, step) through Philox, so the value a trajectory slot receives depends
only on that address.  Results are therefore bit-identical regardless of
worker scheduling, ensemble size changes under branching, or call order.

The Stratonovich stepper is the standard semi-implicit midpoint rule used for
multiplicative-noise phase-space equations: iterate the midpoint a fixed
number of times with the step's noises frozen, then reflect through it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntegratorConfig",
    "NoiseStream",
    "gaussian_draws",
    "gaussian_field",
    "uniform_field",
    "step_stratonovich",
    "step_euler_maruyama",
    "step",
]

# Noise domains: independent families of draws within one master seed.
DOMAIN_HUBBARD_XI = 0
DOMAIN_BRANCH = 1
DOMAIN_DISSOCIATION = 2

STRATONOVICH_MIDPOINT = "stratonovich_midpoint"
EULER_MARUYAMA = "euler_maruyama"


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and scheme for one run; dstep > 0, midpoint_iterations >= 1."""

    dstep: float
    midpoint_iterations: int = 6
    scheme: str = STRATONOVICH_MIDPOINT

    def __post_init__(self):
        if self.dstep <= 0:
            raise ValueError("dstep must be positive")
        if self.midpoint_iterations < 1:
            raise ValueError("midpoint_iterations must be at least 1")
        if self.scheme not in (STRATONOVICH_MIDPOINT, EULER_MARUYAMA):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class NoiseStream:
    """Address of one deterministic Gaussian stream.

    Identical (master_seed, stream_id, counter) always produce identical
    draws, independent of execution order or how many other streams exist.
    """

    master_seed: int
    stream_id: int
    counter: int


def _generator(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))


def gaussian_draws(stream: NoiseStream, count: int, variance: float) -> np.ndarray:
    """Independent zero-mean Gaussians of the given variance.

    Delta-correlated continuum noise becomes per-step variance
    (continuum coefficient) / dstep; that scaling is the caller's job.
    """
    if variance < 0:
        raise ValueError("variance must be non-negative")
    gen = _generator(stream.master_seed, stream.stream_id, stream.counter)
    if variance == 0.0:
        return np.zeros(count)
    return gen.standard_normal(count) * np.sqrt(variance)


def gaussian_field(master_seed: int, domain: int, step_index: int, shape, variance: float) -> np.ndarray:
    """Batched per-step Gaussian block, leading axis = trajectory slot.

    Philox draws are prefix-stable, so slot k's values depend only on
    (master_seed, domain, step_index, k) and not on the ensemble size.
    """
    if variance < 0:
        raise ValueError("variance must be non-negative")
    if variance == 0.0:
        return np.zeros(shape)
    gen = _generator(master_seed, domain, step_index)
    return gen.standard_normal(shape) * np.sqrt(variance)


def uniform_field(master_seed: int, domain: int, step_index: int, count: int) -> np.ndarray:
    """Batched per-step uniforms in [0, 1), same addressing as gaussian_field."""
    gen = _generator(master_seed, domain, step_index)
    return gen.random(count)


def _axpy(state, coeff, deriv):
    if isinstance(state, tuple):
        return tuple(s + coeff * d for s, d in zip(state, deriv))
    return state + coeff * deriv


def _reflect(mid, state):
    if isinstance(state, tuple):
        return tuple(2.0 * m - s for m, s in zip(mid, state))
    return 2.0 * mid - state


def step_stratonovich(state, derivative_fn, noises, config: IntegratorConfig):
    """One semi-implicit midpoint step.

    Iterates mid <- state + (dstep/2) * derivative_fn(mid, noises) for the
    configured count starting from mid = state, then returns 2*mid - state.
    Noises are held fixed across iterations.  `state` may be an ndarray or a
    tuple of ndarrays (the derivative must return the matching structure).
    """
    mid = state
    half = 0.5 * config.dstep
    for _ in range(config.midpoint_iterations):
        mid = _axpy(state, half, derivative_fn(mid, noises))
    return _reflect(mid, state)


def step_euler_maruyama(state, derivative_fn, noises, config: IntegratorConfig):
    """One explicit step: state + dstep * derivative_fn(state, noises)."""
    return _axpy(state, config.dstep, derivative_fn(state, noises))


def step(state, derivative_fn, noises, config: IntegratorConfig):
    """Dispatch on the configured scheme."""
    if config.scheme == STRATONOVICH_MIDPOINT:
        return step_stratonovich(state, derivative_fn, noises, config)
    return step_euler_maruyama(state, derivative_fn, noises, config)
