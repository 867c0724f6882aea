"""Dense Fock-space ladder operators for small fermionic mode counts.

Basis convention: occupation bitstrings indexed by integers, mode 0 in the
least significant bit.  Annihilating mode p picks up the Jordan-Wigner sign
(-1)**(number of occupied modes below p).  These matrices are the ground truth
for every exact check in the package; they satisfy the canonical
anticommutation relations to machine precision by construction.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "annihilator",
    "creator",
    "ladder_operators",
    "number_operator",
]


def annihilator(mode: int, n_modes: int) -> np.ndarray:
    """Dense matrix of a_mode on the 2**n_modes occupation basis."""
    if not 0 <= mode < n_modes:
        raise ValueError(f"mode {mode} out of range for {n_modes} modes")
    dim = 1 << n_modes
    mat = np.zeros((dim, dim), dtype=complex)
    bit = 1 << mode
    lower_mask = bit - 1
    for state in range(dim):
        if state & bit:
            sign = -1.0 if bin(state & lower_mask).count("1") % 2 else 1.0
            mat[state ^ bit, state] = sign
    return mat


def creator(mode: int, n_modes: int) -> np.ndarray:
    """Dense matrix of a†_mode; conjugate transpose of `annihilator`."""
    return annihilator(mode, n_modes).conj().T


def ladder_operators(n_modes: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """All (annihilators, creators) for `n_modes` modes."""
    ann = [annihilator(p, n_modes) for p in range(n_modes)]
    cre = [a.conj().T for a in ann]
    return ann, cre


def number_operator(mode: int, n_modes: int) -> np.ndarray:
    """Diagonal occupation-number matrix a†_mode a_mode."""
    dim = 1 << n_modes
    occ = (np.arange(dim) >> mode) & 1
    return np.diag(occ.astype(complex))
