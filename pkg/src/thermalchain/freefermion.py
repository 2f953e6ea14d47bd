"""Quasi-exact thermal entropies of XY chains from Majorana correlations.

The Hamiltonian ``H = sum_jl H_jl w_j w_l`` is diagonalized once; thermal
quantities then follow from two correlation matrices:

``gamma_thermal``
    ``tr(w_j w_l rho) = delta_jl + i Gamma'_jl`` (``2n x 2n``), giving block
    entropies and the mutual information.
``gamma_operator_space``
    Majorana correlations of the super-ket ``|exp(-beta H)>`` in the Fock
    space of operators (``4n x 4n``), giving the operator-space entanglement.

Index convention for the operator-space matrix (0-based): Majorana ``w_j``
owns the two operator-space modes ``2j`` and ``2j + 1``, so the first
``n_A`` sites own the leading ``4 n_A`` rows. At ``beta = 0`` the matrix is
the vacuum pattern ``Gamma[2j+1, 2j] = 1`` (identity super-ket), which has
vanishing entanglement; this was fixed against
:func:`thermalchain.oracle.dense_operator_space_gamma`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

import numpy as np

from .models import ChainSpec, MajoranaForm, build_majorana_form
from .numerics import (
    binary_entropy,
    correlation_spectrum,
    fit_line,
    stable_sech,
    stable_tanh,
)

#: gaps below this are roundoff and excluded from decay-length fits
GAP_FLOOR = 1e-13


@dataclass
class FermionSpectrum:
    """Nonnegative half of the spectrum of a Majorana form.

    ``vectors[:, k]`` is the eigenvector of ``lambdas[k]``; the partner
    ``(-lambda_k, conj(v_k))`` is implied.
    """

    n: int
    lambdas: np.ndarray
    vectors: np.ndarray


@dataclass
class EntropyReport:
    beta: float
    n: int
    n_A: int
    s_sharp: float
    s_A: float
    s_B: float
    s_total: float
    qmi: float


def fermion_spectrum(form: MajoranaForm) -> FermionSpectrum:
    H = np.asarray(form.H)
    n = form.n
    try:
        ev, vec = np.linalg.eigh(0.5 * (H + H.conj().T))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"Majorana form diagonalization failed: {exc}") from exc
    lambdas = np.clip(ev[n:], 0.0, None)
    return FermionSpectrum(n, lambdas, vec[:, n:])


def spectrum_of(spec: ChainSpec) -> FermionSpectrum:
    return fermion_spectrum(build_majorana_form(spec))


def _pair_sum(spec: FermionSpectrum, weights: np.ndarray) -> np.ndarray:
    """``M_jl = sum_k weights_k conj(v_kj) v_kl``."""
    v = spec.vectors
    return (v.conj() * weights) @ v.T


def _scaled_beta(beta: float, factor: float, lambdas: np.ndarray) -> np.ndarray:
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    with np.errstate(invalid="ignore"):
        x = factor * beta * lambdas
    return np.where(lambdas > 0, x, 0.0)


def gamma_operator_space(spec: FermionSpectrum, beta: float) -> np.ndarray:
    """``4n x 4n`` operator-space correlation matrix of ``exp(-beta H)``.

    ::

        Gamma[2j, 2l]     = -Gamma[2j+1, 2l+1] = -2 sum_k tanh(4 beta lambda_k) Im(conj(v_kj) v_kl)
        Gamma[2j+1, 2l]   = delta_jl - 2 sum_k (1 - sech(4 beta lambda_k)) Re(conj(v_kj) v_kl)
        Gamma[2j, 2l+1]   = -Gamma[2l+1, 2j]

    ``beta = inf`` gives the ground-state limit.
    """
    x = _scaled_beta(beta, 4.0, spec.lambdas)
    odd = -2.0 * _pair_sum(spec, stable_tanh(x)).imag
    mixed = np.eye(2 * spec.n) - 2.0 * _pair_sum(spec, 1.0 - stable_sech(x)).real
    m = 2 * spec.n
    gamma = np.zeros((2 * m, 2 * m))
    gamma[0::2, 0::2] = odd
    gamma[1::2, 1::2] = -odd
    gamma[1::2, 0::2] = mixed
    gamma[0::2, 1::2] = -mixed.T
    return gamma


def gamma_thermal(spec: FermionSpectrum, beta: float) -> np.ndarray:
    """``2n x 2n`` matrix with ``tr(w_j w_l rho) = delta_jl + i Gamma'_jl``."""
    x = _scaled_beta(beta, 2.0, spec.lambdas)
    return -2.0 * _pair_sum(spec, stable_tanh(x)).imag


def _entropy_from_block(block: np.ndarray) -> float:
    nu = correlation_spectrum(block)
    return float(np.sum(binary_entropy((1.0 + nu) / 2.0)))


def osee(gamma: np.ndarray, n_a: int) -> float:
    """Operator-space entanglement entropy (bits) of the first ``n_a`` sites."""
    n = gamma.shape[0] // 4
    if not 1 <= n_a < n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {n}, got {n_a}")
    k = 4 * n_a
    return _entropy_from_block(gamma[:k, :k])


def _site_range(sites: Union[range, Sequence[int]], n: int) -> range:
    if isinstance(sites, range):
        if sites.step != 1:
            raise ValueError("block must be a contiguous range of sites")
        r = sites
    else:
        s = list(sites)
        if not s or any(b - a != 1 for a, b in zip(s, s[1:])):
            raise ValueError(f"block must be a contiguous, ascending range of sites, got {s}")
        r = range(s[0], s[-1] + 1)
    if len(r) == 0 or r.start < 0 or r.stop > n:
        raise ValueError(f"block {r} is not a nonempty sub-range of 0..{n - 1}")
    return r


def _majorana_block(gamma_prime: np.ndarray, sites) -> np.ndarray:
    n = gamma_prime.shape[0] // 2
    r = _site_range(sites, n)
    sl = slice(2 * r.start, 2 * r.stop)
    return gamma_prime[sl, sl]


def block_entropy(gamma_prime: np.ndarray, sites) -> float:
    """Von Neumann entropy (bits) of the reduced thermal state on ``sites``.

    ``sites`` is a contiguous 0-based ``range`` (or ascending sequence).
    """
    return _entropy_from_block(_majorana_block(gamma_prime, sites))


def block_purity_log2(gamma_prime: np.ndarray, sites) -> float:
    """``log2 tr rho_block^2`` of the Gaussian reduced state on ``sites``."""
    nu = correlation_spectrum(_majorana_block(gamma_prime, sites))
    return float(np.sum(np.log2((1.0 + nu**2) / 2.0)))


def mutual_purity(spec: FermionSpectrum, beta: float, n_a: int) -> float:
    n = spec.n
    if not 1 <= n_a < n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {n}, got {n_a}")
    gp = gamma_thermal(spec, beta)
    return (
        block_purity_log2(gp, range(n))
        - block_purity_log2(gp, range(n_a))
        - block_purity_log2(gp, range(n_a, n))
    )


def qmi(spec: FermionSpectrum, beta: float, n_a: int) -> EntropyReport:
    """Block entropies, mutual information and OSEE across the cut after ``n_a`` sites."""
    n = spec.n
    if not 1 <= n_a < n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {n}, got {n_a}")
    gp = gamma_thermal(spec, beta)
    s_a = block_entropy(gp, range(n_a))
    s_b = block_entropy(gp, range(n_a, n))
    s_tot = block_entropy(gp, range(n))
    s_sharp = osee(gamma_operator_space(spec, beta), n_a)
    return EntropyReport(beta, n, n_a, s_sharp, s_a, s_b, s_tot, s_a + s_b - s_tot)


def spectral_gap(form: MajoranaForm) -> float:
    """Energy of the first excitation, ``4 lambda_1``."""
    return float(4.0 * fermion_spectrum(form).lambdas[0])


def gap_decay_length(gamma: float, h: float, n_values: Iterable[int]) -> Tuple[float, float]:
    """Fit ``gap ~ exp(-n / xi)`` over XY chains of the given lengths.

    Returns ``(xi, residual)`` where ``residual`` is the RMS deviation of
    ``ln gap`` from the fitted line (a relative error of the gap).
    """
    ns = sorted(set(int(v) for v in n_values))
    gaps = [spectral_gap(build_majorana_form(ChainSpec.xy(n, gamma, h))) for n in ns]
    keep = [(n, g) for n, g in zip(ns, gaps) if g > GAP_FLOOR]
    if len(keep) < 3:
        raise ValueError(
            f"only {len(keep)} sizes with gap above {GAP_FLOOR:g}; need at least 3 for a fit"
        )
    return fit_gap_law(*zip(*keep))


def fit_gap_law(ns: Sequence[int], gaps: Sequence[float]) -> Tuple[float, float]:
    ns = np.asarray(ns, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if len(ns) < 3:
        raise ValueError("gap decay fit needs at least 3 sizes")
    if np.any(gaps <= 0):
        bad = ns[gaps <= 0].astype(int).tolist()
        raise ValueError(f"non-positive gap for n = {bad}; cannot fit a logarithm")
    fit = fit_line(ns, np.log(gaps))
    if fit.slope >= 0:
        raise ValueError("gaps do not decay with n")
    return -1.0 / fit.slope, fit.residual
