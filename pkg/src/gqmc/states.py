"""Phase-space state types, initial conditions, and moment extraction.

The Gaussian kernel of a fermionic state is coordinatized by a complex number
matrix n and two independent antisymmetric squeezing matrices m, m_plus, plus
a scalar weight.  Weighted ensemble averages of these variables (and of Wick
combinations of them) estimate operator expectation values; the exact index
and sign conventions used here are pinned by tests against the Fock-space
kernel oracle, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeneralFermiState",
    "HubbardTrajectory",
    "ObservablePoint",
    "init_infinite_temperature",
    "quadratic_moment",
    "quartic_moment",
]

_ANTISYMMETRY_TOL = 1e-12


@dataclass
class GeneralFermiState:
    """Phase-space point (n, m, m_plus, omega) of one Gaussian kernel.

    m and m_plus must be exactly antisymmetric; this is validated at
    construction because every downstream formula silently assumes it.  The
    independent complex parameter count of (n, m, m_plus) is M(2M - 1).
    """

    n: np.ndarray
    m: np.ndarray
    m_plus: np.ndarray
    omega: complex = 1.0 + 0.0j

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=complex)
        self.m = np.asarray(self.m, dtype=complex)
        self.m_plus = np.asarray(self.m_plus, dtype=complex)
        m_modes = self.n.shape[0]
        for name, mat in (("n", self.n), ("m", self.m), ("m_plus", self.m_plus)):
            if mat.shape != (m_modes, m_modes):
                raise ValueError(f"{name} must be {m_modes} x {m_modes}")
        scale = max(np.abs(self.m).max(), np.abs(self.m_plus).max(), 1.0)
        for name, mat in (("m", self.m), ("m_plus", self.m_plus)):
            if np.abs(mat + mat.T).max() > _ANTISYMMETRY_TOL * scale:
                raise ValueError(f"{name} is not antisymmetric")

    @property
    def modes(self) -> int:
        return self.n.shape[0]

    @property
    def parameter_count(self) -> int:
        m = self.modes
        return m * (2 * m - 1)


@dataclass
class HubbardTrajectory:
    """One Monte Carlo sample: two real number matrices and a log-weight.

    The squeezing correlations are identically zero for the Hubbard dynamics
    (the real gauge evolves only the spin-diagonal number matrices), so they
    are structural facts here rather than stored fields.  The weight is kept
    in log space; exp(log_weight) stays strictly positive by construction.
    """

    n_up: np.ndarray
    n_dn: np.ndarray
    log_weight: float = 0.0

    def __post_init__(self):
        self.n_up = np.asarray(self.n_up, dtype=float)
        self.n_dn = np.asarray(self.n_dn, dtype=float)


@dataclass
class ObservablePoint:
    """Named scalar estimates with standard errors at one grid value."""

    tau: float
    values: dict[str, float] = field(default_factory=dict)
    errors: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, err in self.errors.items():
            if np.isfinite(err) and err < 0:
                raise ValueError(f"negative error for {name}")


def init_infinite_temperature(m_modes: int) -> HubbardTrajectory:
    """Initial condition representing the unnormalized identity operator.

    The maximally mixed M-mode Gaussian has n = I/2 per spin and unit weight;
    every imaginary-time run starts here.
    """
    if m_modes < 1:
        raise ValueError("mode count must be positive")
    half = np.eye(m_modes) / 2.0
    return HubbardTrajectory(n_up=half.copy(), n_dn=half.copy(), log_weight=0.0)


def quadratic_moment(state: GeneralFermiState, kind: str, i: int, j: int) -> complex:
    """Phase-space variable whose weighted average estimates a quadratic moment.

    kind "n" estimates <a†_i a_j>, "m" estimates <a_i a_j>, "m_plus" estimates
    <a†_i a†_j>.  The index order is literal (entry [i, j] of the named
    matrix); tests pin this against Tr(op * kernel) on random states, which is
    how the transpose ambiguity of the covariance definition was resolved.
    """
    m_modes = state.modes
    if not (0 <= i < m_modes and 0 <= j < m_modes):
        raise IndexError("mode index out of range")
    if kind == "n":
        return complex(state.n[i, j])
    if kind == "m":
        return complex(state.m[i, j])
    if kind == "m_plus":
        return complex(state.m_plus[i, j])
    raise ValueError(f"unknown moment kind {kind!r}")


def quartic_moment(state: GeneralFermiState, i: int, j: int, k: int, l: int) -> complex:
    """Wick combination estimating <a†_i a†_j a_k a_l>.

    Pairings: the squeezing pair (m_plus_ij * m_kl) plus the two alternating
    number pairings (-n_ik n_jl + n_il n_jk).  Sign and pairing conventions
    are pinned by the kernel-oracle tests on random states with nonzero
    squeezing.
    """
    m_modes = state.modes
    for idx in (i, j, k, l):
        if not 0 <= idx < m_modes:
            raise IndexError("mode index out of range")
    n, m, mp = state.n, state.m, state.m_plus
    return complex(mp[i, j] * m[k, l] - n[i, k] * n[j, l] + n[i, l] * n[j, k])
