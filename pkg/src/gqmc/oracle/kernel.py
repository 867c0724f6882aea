"""Exact Fock-space materialization of fermionic Gaussian kernels.

This is the independent reference for the whole phase-space layer.  A kernel is
specified by a generalized 2M x 2M covariance matrix sigma; its normally
ordered Gaussian form is expanded symbolically into a finite sum of normally
ordered monomials (fermionic operators square to zero, so the exponential
series terminates), mapped to dense matrices, and normalized to unit trace.

Everything here is deliberately brute force: no identity used by the samplers
is assumed, each one is *checked* against these matrices.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .fock import ladder_operators

__all__ = [
    "pfaffian",
    "sigma_from_state",
    "extended_identity",
    "kernel_from_sigma",
    "materialize_kernel",
    "kernel_trace_raw",
    "check_identities",
]


def pfaffian(a: np.ndarray, *, atol: float = 1e-12) -> complex:
    """Pfaffian of an even-dimensional antisymmetric matrix.

    Computed by recursive expansion along the first row, which is exact and
    cheap at the small sizes the oracles use.  Satisfies pfaffian(a)**2 ==
    det(a).

    Raises
    ------
    ValueError
        If `a` is not square and even-dimensional, or deviates from
        antisymmetry by more than `atol` (relative to its largest entry).
    """
    a = np.asarray(a)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n or n % 2:
        raise ValueError("pfaffian requires an even-dimensional square matrix")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a + a.T).max() > atol * scale:
        raise ValueError("matrix is not antisymmetric within tolerance")
    return _pf(a)


def _pf(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n == 2:
        return complex(a[0, 1])
    total = 0.0 + 0.0j
    rest = list(range(1, n))
    for idx, j in enumerate(rest):
        keep = [k for k in rest if k != j]
        minor = a[np.ix_(keep, keep)]
        total += (-1.0) ** idx * a[0, j] * _pf(minor)
    return total


def extended_identity(m_modes: int) -> np.ndarray:
    """The constant block matrix diag(I, -I) on the doubled mode space."""
    return np.diag(np.concatenate([np.ones(m_modes), -np.ones(m_modes)])).astype(
        complex
    )


def sigma_from_state(state) -> np.ndarray:
    """Generalized covariance [[I - n^T, -m], [-m_plus, n - I]] of a state."""
    n = np.asarray(state.n, dtype=complex)
    m = np.asarray(state.m, dtype=complex)
    mp = np.asarray(state.m_plus, dtype=complex)
    eye = np.eye(n.shape[0], dtype=complex)
    return np.block([[eye - n.T, -m], [-mp, n - eye]])


def _perm_sign(keys: list[tuple[int, int]]) -> float:
    """Parity of the stable sort bringing `keys` to ascending order."""
    inversions = 0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            if keys[i] > keys[j]:
                inversions += 1
    return -1.0 if inversions % 2 else 1.0


def _normal_order(word):
    """Normally order a product of distinct ladder operators.

    `word` is a sequence of (is_creation, mode).  Returns (sign, creations,
    annihilations) with both index tuples ascending, or None if any operator
    repeats (the monomial vanishes).  Reordering drops anticommutator terms by
    convention; only the transposition sign survives.
    """
    if len(set(word)) != len(word):
        return None
    keys = [(0 if is_cre else 1, mode) for is_cre, mode in word]
    sign = _perm_sign(keys)
    cre = tuple(sorted(m for c, m in word if c))
    ann = tuple(sorted(m for c, m in word if not c))
    return sign, cre, ann


def _normally_ordered_exponential(q: np.ndarray, m_modes: int) -> dict:
    """Expand :exp(-a_ext† q a_ext): into canonical normally ordered monomials.

    a_ext = (a_1..a_M, a†_1..a†_M); its adjoint row vector supplies the left
    factor.  Each quadratic-form term contributes a two-operator word; the
    series terminates at order M because longer monomials repeat an operator.
    Returns {(creation modes, annihilation modes): coefficient}.
    """
    pairs = []
    for mu in range(2 * m_modes):
        left = (True, mu) if mu < m_modes else (False, mu - m_modes)
        for nu in range(2 * m_modes):
            right = (False, nu) if nu < m_modes else (True, nu - m_modes)
            coeff = -q[mu, nu]
            if coeff == 0 or left == right:
                continue
            pairs.append((left, right, coeff))

    terms: dict = {((), ()): 1.0 + 0.0j}
    for order in range(1, m_modes + 1):
        for subset in combinations(pairs, order):
            word = []
            coeff = 1.0 + 0.0j
            for left, right, c in subset:
                word.append(left)
                word.append(right)
                coeff *= c
            ordered = _normal_order(tuple(word))
            if ordered is None:
                continue
            sign, cre, ann = ordered
            key = (cre, ann)
            terms[key] = terms.get(key, 0.0) + sign * coeff
    return terms


def _monomial_matrix(cre, ann, creators, annihilators, dim) -> np.ndarray:
    mat = np.eye(dim, dtype=complex)
    for i in cre:
        mat = mat @ creators[i]
    for j in ann:
        mat = mat @ annihilators[j]
    return mat


def kernel_from_sigma(sigma: np.ndarray) -> np.ndarray:
    """Unit-trace Fock matrix of the Gaussian kernel with covariance `sigma`.

    `sigma` may be any invertible 2M x 2M complex matrix; no block structure
    is assumed (the identity checker perturbs single entries).  Normalization
    is enforced by dividing by the explicit trace rather than trusting any
    closed-form normalization factor.
    """
    kernel, trace = _kernel_and_trace(sigma)
    return kernel / trace


def kernel_trace_raw(sigma: np.ndarray) -> complex:
    """Trace of the *unnormalized* expansion of :exp(-a_ext† Q a_ext):.

    The reciprocal of this is the normalization the kernel actually needs;
    tests compare it against claimed closed forms (det(I - n) when the
    squeezing blocks vanish).
    """
    _, trace = _kernel_and_trace(sigma)
    return trace


def _kernel_and_trace(sigma: np.ndarray):
    sigma = np.asarray(sigma, dtype=complex)
    two_m = sigma.shape[0]
    if sigma.ndim != 2 or sigma.shape[1] != two_m or two_m % 2:
        raise ValueError("sigma must be a square 2M x 2M matrix")
    m_modes = two_m // 2
    q = extended_identity(m_modes) - np.linalg.inv(sigma) / 2.0
    terms = _normally_ordered_exponential(q, m_modes)
    ann, cre = ladder_operators(m_modes)
    dim = 1 << m_modes
    mat = np.zeros((dim, dim), dtype=complex)
    for (cre_modes, ann_modes), coeff in terms.items():
        mat += coeff * _monomial_matrix(cre_modes, ann_modes, cre, ann, dim)
    trace = np.trace(mat)
    if abs(trace) < 1e-300:
        raise np.linalg.LinAlgError("kernel trace vanished; sigma is singular")
    return mat, trace


def materialize_kernel(state) -> np.ndarray:
    """Unit-trace Fock matrix of a GeneralFermiState's kernel (weight excluded).

    Capped at M <= 3 modes; beyond that the dense expansion stops being an
    oracle and starts being a liability.
    """
    m_modes = np.asarray(state.n).shape[0]
    if m_modes > 3:
        raise ValueError("kernel materialization is capped at 3 modes")
    return kernel_from_sigma(sigma_from_state(state))


def _operator_derivative(state, step: float) -> np.ndarray:
    """Central finite differences D[rho, tau] = dLambda/dsigma_{tau, rho}.

    Index order follows the matrix-derivative convention in which the (rho,
    tau) component differentiates with respect to the transposed entry.

    A perturbed sigma entry is mapped back onto the state parameters before
    rematerializing ("re-derive n, m, m_plus from the perturbed sigma"): a
    number-block bump moves the corresponding n entry with full weight, and a
    squeezing-block bump moves the antisymmetric pair (m_ij, m_ji) with full
    opposite weights.  Unconstrained single-entry perturbations provably
    cannot satisfy the identities for any scalar normalization; this
    structured derivative makes all lines hold to rounding.
    """
    if step <= 0 or 1.0 + step == 1.0:
        raise ValueError("finite-difference step underflow")
    n0 = np.asarray(state.n, dtype=complex)
    m0 = np.asarray(state.m, dtype=complex)
    mp0 = np.asarray(state.m_plus, dtype=complex)
    m_modes = n0.shape[0]
    two_m = 2 * m_modes
    dim = 1 << m_modes
    eye = np.eye(m_modes, dtype=complex)

    def sigma_of(n, m, mp):
        return np.block([[eye - n.T, -m], [-mp, n - eye]])

    deriv = np.zeros((two_m, two_m, dim, dim), dtype=complex)
    for rho in range(two_m):
        for tau in range(two_m):
            dn = np.zeros((m_modes, m_modes), dtype=complex)
            dm = np.zeros_like(dn)
            dmp = np.zeros_like(dn)
            if tau < m_modes and rho < m_modes:
                dn[rho, tau] = -1.0  # sigma_11 = I - n^T
            elif tau >= m_modes and rho >= m_modes:
                dn[tau - m_modes, rho - m_modes] = 1.0  # sigma_22 = n - I
            elif tau < m_modes:
                i, j = tau, rho - m_modes  # sigma_12 = -m
                if i != j:
                    dm[i, j] = -1.0
                    dm[j, i] = 1.0
            else:
                i, j = tau - m_modes, rho  # sigma_21 = -m_plus
                if i != j:
                    dmp[i, j] = -1.0
                    dmp[j, i] = 1.0
            plus = kernel_from_sigma(
                sigma_of(n0 + step * dn, m0 + step * dm, mp0 + step * dmp)
            )
            minus = kernel_from_sigma(
                sigma_of(n0 - step * dn, m0 - step * dm, mp0 - step * dmp)
            )
            deriv[rho, tau] = (plus - minus) / (2.0 * step)
    return deriv


def check_identities(state, *, fd_step: float = 1e-5) -> dict[str, float]:
    """Verify the differential operator identities of the Gaussian basis.

    Left sides place ladder operators around the materialized kernel with the
    nested-ordering sign rules (creations left of the kernel under normal
    ordering, annihilations left under antinormal ordering; one sign per
    pairwise operator transposition, the even kernel crossing free).  Right
    sides use central finite differences of the kernel with respect to single
    sigma entries.  Returns the elementwise maximum deviation per identity.

    Capped at M <= 2: the derivative tensor is 2M x 2M kernels.
    """
    m_modes = np.asarray(state.n).shape[0]
    if m_modes > 2:
        raise ValueError("identity checks are capped at 2 modes")
    sigma = sigma_from_state(state)
    lam = kernel_from_sigma(sigma)
    ann, cre = ladder_operators(m_modes)
    dim = 1 << m_modes
    two_m = 2 * m_modes

    omega = complex(getattr(state, "omega", 1.0) or 1.0)
    h = fd_step * max(abs(omega), 1.0)
    fd_weight = omega * (((omega + h) * lam - (omega - h) * lam) / (2.0 * h))
    dev_weight = float(np.abs(fd_weight - omega * lam).max())

    deriv = _operator_derivative(state, fd_step)
    i_ext = extended_identity(m_modes)
    shifted = sigma - i_ext

    def lower(mu):
        return ("a", mu) if mu < m_modes else ("c", mu - m_modes)

    def upper(nu):
        return ("c", nu) if nu < m_modes else ("a", nu - m_modes)

    normal_lhs = np.zeros((two_m, two_m, dim, dim), dtype=complex)
    mixed_lhs = np.zeros_like(normal_lhs)
    anti_lhs = np.zeros_like(normal_lhs)
    for mu in range(two_m):
        kind_x, i = lower(mu)
        for nu in range(two_m):
            kind_y, j = upper(nu)
            if kind_x == "a" and kind_y == "c":
                normal_lhs[mu, nu] = -(cre[j] @ lam @ ann[i])
                anti_lhs[mu, nu] = ann[i] @ lam @ cre[j]
            elif kind_x == "a" and kind_y == "a":
                normal_lhs[mu, nu] = lam @ ann[i] @ ann[j]
                anti_lhs[mu, nu] = ann[i] @ ann[j] @ lam
            elif kind_x == "c" and kind_y == "c":
                normal_lhs[mu, nu] = cre[i] @ cre[j] @ lam
                anti_lhs[mu, nu] = lam @ cre[i] @ cre[j]
            else:
                normal_lhs[mu, nu] = cre[i] @ lam @ ann[j]
                anti_lhs[mu, nu] = -(ann[j] @ lam @ cre[i])
            inner = cre[j] @ lam if kind_y == "c" else lam @ ann[j]
            mixed_lhs[mu, nu] = ann[i] @ inner if kind_x == "a" else -(inner @ cre[i])

    sandwich = lambda a, b: np.einsum("mr,rtij,tn->mnij", a, deriv, b)
    normal_rhs = -np.einsum("mn,ij->mnij", sigma, lam) + sandwich(sigma, sigma)
    mixed_rhs = np.einsum("mn,ij->mnij", sigma, lam) - sandwich(shifted, sigma)
    anti_rhs = -np.einsum("mn,ij->mnij", shifted, lam) + sandwich(shifted, shifted)

    return {
        "weight_linearity": dev_weight,
        "normal_pair_product": float(np.abs(normal_lhs - normal_rhs).max()),
        "mixed_pair_product": float(np.abs(mixed_lhs - mixed_rhs).max()),
        "antinormal_pair_product": float(np.abs(anti_lhs - anti_rhs).max()),
    }
