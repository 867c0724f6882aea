"""Truncated number-state references for molecular dissociation.

A molecular coherent state is a Poisson mixture over molecule-number sectors.
With two atomic modes coupled as a†b1b2 + h.c., each sector evolves in a tiny
closed subspace: two states for fermionic atoms (Rabi), a tridiagonal ladder
(n-k, k, k) for bosonic atoms.  Poisson-averaging the per-sector solutions
gives the exact curves the stochastic runs are compared against.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.stats import poisson

__all__ = ["dissociation_oracle"]

_TAIL_BOUND = 1e-10


def _poisson_weights(n_mean: float, cutoff: int) -> np.ndarray:
    if n_mean < 0:
        raise ValueError("mean molecule number must be non-negative")
    if n_mean > 0 and poisson.sf(cutoff, n_mean) >= _TAIL_BOUND:
        raise ValueError(
            f"molecule cutoff {cutoff} too small for mean {n_mean}: "
            f"Poisson tail {poisson.sf(cutoff, n_mean):.2e} >= {_TAIL_BOUND}"
        )
    return poisson.pmf(np.arange(cutoff + 1), n_mean)


def dissociation_oracle(kind: str, n_mean: float, cutoff: int, t_grid):
    """Exact <n_1>(t) and <N_mol>(t) for the three-mode dissociation problem.

    kind: "fermi" or "bose".  Returns (atoms, molecules) arrays on `t_grid`.
    The initial state is a molecular coherent state of mean `n_mean` with the
    atomic modes empty; the coupling constant is 1.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    weights = _poisson_weights(n_mean, cutoff)
    atoms = np.zeros_like(t_grid)
    molecules = np.full_like(t_grid, weights @ np.arange(cutoff + 1))

    if kind == "fermi":
        for n in range(1, cutoff + 1):
            transfer = np.sin(np.sqrt(n) * t_grid) ** 2
            atoms += weights[n] * transfer
            molecules -= weights[n] * transfer
        return atoms, molecules
    if kind != "bose":
        raise ValueError(f"unknown statistics kind {kind!r}")

    for n in range(1, cutoff + 1):
        k = np.arange(n)
        coupling = np.sqrt(n - k) * (k + 1)
        energies, vectors = eigh_tridiagonal(np.zeros(n + 1), coupling)
        start = vectors[0, :]  # overlap of |k=0> with each eigenvector
        phases = np.exp(-1j * np.outer(t_grid, energies))
        amps = (phases * start[None, :]) @ vectors.T  # (t, k)
        probs = np.abs(amps) ** 2
        ks = np.arange(n + 1)
        atoms += weights[n] * (probs @ ks)
        molecules -= weights[n] * (probs @ ks)
    return atoms, molecules
