"""Lattice geometry and Hubbard couplings evaluated on phase-space variables.

Neighbour sums run over ordered pairs: each undirected bond is counted once
per direction, matching the Hermiticity of the hopping term.  A periodic
dimension of extent 2 therefore contributes doubled bonds (adjacency entry 2)
rather than being deduplicated; the exact-diagonalization oracle uses the same
rule so comparisons are convention-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HubbardParams",
    "Lattice",
    "build_lattice",
    "hamiltonian_value",
    "hubbard_energy",
]


@dataclass(frozen=True)
class HubbardParams:
    """Couplings and geometry of one Hubbard run.

    s = sign(u) enters the interaction noise; u = 0 gives s = +1 and disables
    the noise entirely.
    """

    t: float
    u: float
    mu: float
    lx: int
    ly: int
    periodic: bool = True

    def __post_init__(self):
        if self.lx < 1 or self.ly < 1:
            raise ValueError("lattice extents must be at least 1")
        for name in ("t", "u", "mu"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"coupling {name} must be finite")

    @property
    def s(self) -> float:
        return -1.0 if self.u < 0 else 1.0

    @property
    def sites(self) -> int:
        return self.lx * self.ly


@dataclass(frozen=True)
class Lattice:
    """Site count and symmetric bond-count adjacency (entries 0, 1 or 2)."""

    m: int
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.shape != (self.m, self.m):
            raise ValueError("adjacency shape mismatch")
        if (adj != adj.T).any() or adj.diagonal().any():
            raise ValueError("adjacency must be symmetric with zero diagonal")


def build_lattice(lx: int, ly: int, periodic: bool) -> Lattice:
    """Rectangular lattice with nearest-neighbour bond counts.

    A dimension of extent 1 contributes no bonds.  Site order is row-major:
    site = x + lx * y.
    """
    if lx < 1 or ly < 1:
        raise ValueError("lattice extents must be at least 1")
    m = lx * ly
    adjacency = np.zeros((m, m), dtype=int)

    def connect(a: int, b: int):
        adjacency[a, b] += 1
        adjacency[b, a] += 1

    for y in range(ly):
        for x in range(lx):
            site = x + lx * y
            if lx > 1:
                if x + 1 < lx:
                    connect(site, (x + 1) + lx * y)
                elif periodic:
                    connect(site, 0 + lx * y)
            if ly > 1:
                if y + 1 < ly:
                    connect(site, x + lx * (y + 1))
                elif periodic:
                    connect(site, x)
    return Lattice(m=m, adjacency=adjacency)


def _check_dims(n_up: np.ndarray, n_dn: np.ndarray, lattice: Lattice):
    m = lattice.m
    if n_up.shape[-2:] != (m, m) or n_dn.shape[-2:] != (m, m):
        raise ValueError("number matrices do not match the lattice size")


def hubbard_energy(n_up, n_dn, params: HubbardParams, lattice: Lattice):
    """Hopping plus interaction energy -t sum A_ij n_ij,sigma + U sum n_jj,up n_jj,dn.

    This is the energy the runs report: the chemical-potential term is a
    particle-number control and is excluded here (it stays in the weight
    dynamics via `hamiltonian_value`).  Accepts leading batch axes.
    """
    n_up = np.asarray(n_up, dtype=float)
    n_dn = np.asarray(n_dn, dtype=float)
    _check_dims(n_up, n_dn, lattice)
    adj = lattice.adjacency
    hop = -params.t * np.einsum("ij,...ij->...", adj, n_up + n_dn)
    diag_up = np.diagonal(n_up, axis1=-2, axis2=-1)
    diag_dn = np.diagonal(n_dn, axis1=-2, axis2=-1)
    inter = params.u * np.einsum("...j,...j->...", diag_up, diag_dn)
    return hop + inter


def hamiltonian_value(n_up, n_dn, params: HubbardParams, lattice: Lattice):
    """Full grand-canonical Hamiltonian value on phase-space variables.

    hubbard_energy minus mu * (total number); this is the H whose negative
    drives the trajectory log-weights.  Accepts leading batch axes.
    """
    n_up = np.asarray(n_up, dtype=float)
    n_dn = np.asarray(n_dn, dtype=float)
    _check_dims(n_up, n_dn, lattice)
    number = np.trace(n_up, axis1=-2, axis2=-1) + np.trace(n_dn, axis1=-2, axis2=-1)
    return hubbard_energy(n_up, n_dn, params, lattice) - params.mu * number
