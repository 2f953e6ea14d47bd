"""Dense brute-force reference for short chains.

Everything here works with full ``2^n x 2^n`` matrices and is meant as an
independent check of the free-fermion and MPO engines.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import List

import numpy as np

from .models import I2, PAULIS, SX, SY, SZ, TermList

MAX_SITES = 10


class CapacityError(ValueError):
    """Requested system is too large for dense treatment."""


@dataclass
class DenseOperator:
    n: int
    matrix: np.ndarray


def _check_size(n: int, limit: int = MAX_SITES) -> None:
    if n > limit:
        raise CapacityError(f"dense oracle is limited to n <= {limit}, got n = {n}")


def embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Place a 1- or 2-site operator acting from ``site`` into the ``n``-site space."""
    k = int(round(np.log2(op.shape[0])))
    left = np.eye(2**site)
    right = np.eye(2 ** (n - site - k))
    return np.kron(np.kron(left, op), right)


def dense_hamiltonian(terms: TermList) -> np.ndarray:
    n = terms.n
    _check_size(n)
    H = np.zeros((2**n, 2**n), dtype=complex)
    for l, op in terms.bond_terms:
        H += embed(op, l, n)
    for l, op in terms.site_terms:
        H += embed(op, l, n)
    return H


def _check_cut(n: int, n_a: int) -> None:
    if not 1 <= n_a < n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {n}, got {n_a}")


def dense_thermal(terms: TermList, beta: float) -> DenseOperator:
    """Normalized Gibbs state ``exp(-beta H) / tr exp(-beta H)``."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    H = dense_hamiltonian(terms)
    E, U = np.linalg.eigh(H)
    w = np.exp(-beta * (E - E[0]))
    w /= w.sum()
    rho = (U * w) @ U.conj().T
    return DenseOperator(terms.n, 0.5 * (rho + rho.conj().T))


def ground_state(terms: TermList) -> np.ndarray:
    E, U = np.linalg.eigh(dense_hamiltonian(terms))
    return U[:, 0]


def schmidt_weights(mat: np.ndarray) -> np.ndarray:
    s = np.linalg.svd(mat, compute_uv=False)
    p = s**2
    total = p.sum()
    if total <= 0:
        raise ValueError("zero operator has no Schmidt spectrum")
    return p / total


def _entropy_of_weights(p: np.ndarray) -> float:
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log2(p)) + 0.0)


def von_neumann_entropy(rho: np.ndarray) -> float:
    ev = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return _entropy_of_weights(np.clip(ev, 0.0, None))


def state_entropy(psi: np.ndarray, n: int, n_a: int) -> float:
    """Entanglement entropy (bits) of a pure state across the cut after ``n_a`` sites."""
    _check_cut(n, n_a)
    return _entropy_of_weights(schmidt_weights(psi.reshape(2**n_a, 2 ** (n - n_a))))


def regroup(rho: DenseOperator, n_a: int) -> np.ndarray:
    """``rho`` as a ``4^n_A x 4^n_B`` matrix with rows ``(i_A j_A)``."""
    n = rho.n
    da, db = 2**n_a, 2 ** (n - n_a)
    t = rho.matrix.reshape(da, db, da, db).transpose(0, 2, 1, 3)
    return t.reshape(da * da, db * db)


def dense_osee(rho: DenseOperator, n_a: int) -> float:
    """Operator-space entanglement entropy in bits.

    The computational-basis units ``|i><j|`` are orthonormal in operator
    space, so the singular values of the regrouped matrix are the Schmidt
    coefficients of the super-ket.
    """
    _check_cut(rho.n, n_a)
    return _entropy_of_weights(schmidt_weights(regroup(rho, n_a)))


def partial_traces(rho: DenseOperator, n_a: int):
    n = rho.n
    da, db = 2**n_a, 2 ** (n - n_a)
    t = rho.matrix.reshape(da, db, da, db)
    return np.einsum("ajbj->ab", t), np.einsum("iaib->ab", t)


def dense_qmi(rho: DenseOperator, n_a: int) -> float:
    """Mutual information ``S(rho_A) + S(rho_B) - S(rho)`` in bits."""
    _check_cut(rho.n, n_a)
    ra, rb = partial_traces(rho, n_a)
    return von_neumann_entropy(ra) + von_neumann_entropy(rb) - von_neumann_entropy(rho.matrix)


def purity(mat: np.ndarray) -> float:
    return float(np.real(np.vdot(mat, mat)))


def dense_mutual_purity(rho: DenseOperator, n_a: int) -> float:
    """``log2[P(rho) / (P(rho_A) P(rho_B))]`` with ``P(s) = tr s^2``."""
    _check_cut(rho.n, n_a)
    ra, rb = partial_traces(rho, n_a)
    return float(np.log2(purity(rho.matrix)) - np.log2(purity(ra)) - np.log2(purity(rb)))


def pauli_coefficients(rho: DenseOperator) -> np.ndarray:
    """Coefficients ``c_s = 2^-n tr(sigma^s rho)`` as an array of shape ``(4,) * n``."""
    n = rho.n
    # row (i, j) of `local` picks (sigma^s)_{ji} / 2, so local @ vec(rho_site) = tr(sigma^s rho) / 2
    local = np.array([p.T.reshape(-1) for p in PAULIS]) / 2.0
    perm = [ax for site in range(n) for ax in (site, site + n)]
    t = rho.matrix.reshape((2,) * (2 * n)).transpose(perm).reshape((4,) * n)
    for site in range(n):
        t = np.moveaxis(np.tensordot(local, t, axes=([1], [site])), 0, site)
    return t.real if np.allclose(t.imag, 0, atol=1e-13) else t


def dense_from_pauli(coeffs: np.ndarray) -> DenseOperator:
    """Inverse of :func:`pauli_coefficients`."""
    n = coeffs.ndim
    mat = np.zeros((2**n, 2**n), dtype=complex)
    for idx in zip(*np.nonzero(coeffs)):
        mat += coeffs[idx] * reduce(np.kron, [PAULIS[s] for s in idx])
    return DenseOperator(n, mat)


# --- operator-space Fock construction -------------------------------------------------

def majorana_operators(n: int) -> List[np.ndarray]:
    """Dense ``w_{2m-1} = X_m prod_{l<m} Z_l`` and ``w_{2m} = Y_m prod_{l<m} Z_l``."""
    _check_size(n)
    out = []
    for m in range(n):
        string = [SZ] * m
        rest = [I2] * (n - m - 1)
        out.append(reduce(np.kron, string + [SX] + rest))
        out.append(reduce(np.kron, string + [SY] + rest))
    return out


def _fock_annihilators(modes: int) -> List[np.ndarray]:
    # local basis (empty, occupied); sign string over earlier modes
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    parity = np.diag([1.0, -1.0])
    ident = np.eye(2)
    return [
        reduce(np.kron, [parity] * j + [lower] + [ident] * (modes - j - 1)) for j in range(modes)
    ]


def monomial_superket(op: np.ndarray, n: int) -> np.ndarray:
    """Coefficients ``<P_alpha|op> = 2^-n tr(P_alpha^dag op)`` over Majorana monomials.

    ``P_alpha = w_1^{alpha_1} ... w_{2n}^{alpha_{2n}}``; the index of
    ``alpha`` reads ``alpha_1`` as the most significant bit.
    """
    _check_size(n, 5)
    ws = majorana_operators(n)
    modes = 2 * n
    psi = np.zeros(2**modes, dtype=complex)
    dim = 2**n
    for idx in range(2**modes):
        mono = np.eye(dim, dtype=complex)
        for j in range(modes):
            if (idx >> (modes - 1 - j)) & 1:
                mono = mono @ ws[j]
        psi[idx] = np.trace(mono.conj().T @ op) / dim
    return psi


def dense_operator_space_gamma(terms: TermList, beta: float) -> np.ndarray:
    """Operator-space Majorana correlations of the super-ket ``exp(-beta H)``.

    Builds the Fock space spanned by Majorana monomials, where ``c_j`` strips
    ``w_j`` from a monomial, and evaluates
    ``<a_p a_q> = delta_pq + i Gamma_pq`` with ``a_{2j-1} = c_j + c_j^dag``
    and ``a_{2j} = i (c_j - c_j^dag)``. Returns the real ``4n x 4n`` Gamma.
    """
    n = terms.n
    _check_size(n, 4)
    H = dense_hamiltonian(terms)
    E, U = np.linalg.eigh(H)
    op = (U * np.exp(-beta * (E - E[0]))) @ U.conj().T
    psi = monomial_superket(op, n)
    psi /= np.linalg.norm(psi)
    a = []
    for c in _fock_annihilators(2 * n):
        a.append(c + c.T)
        a.append(1j * (c - c.T))
    av = [x @ psi for x in a]
    m = len(a)
    corr = np.array([[np.vdot(av[p], av[q]) for q in range(m)] for p in range(m)])
    # a_p Hermitian: <a_p a_q> = <a_p psi, a_q psi>
    gamma = ((corr - np.eye(m)) / 1j).real
    return gamma


def dense_majorana_gamma(rho: DenseOperator) -> np.ndarray:
    """Thermal two-point matrix from ``tr(w_j w_l rho) = delta_jl + i Gamma'_jl``."""
    ws = majorana_operators(rho.n)
    m = len(ws)
    corr = np.array([[np.trace(ws[j] @ ws[l] @ rho.matrix) for l in range(m)] for j in range(m)])
    return ((corr - np.eye(m)) / 1j).real
