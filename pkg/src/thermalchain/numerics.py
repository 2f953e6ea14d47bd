"""Shared numerical kernels.

Binary entropy, spectra of real antisymmetric matrices, overflow-safe
hyperbolic functions and least-squares fits on logarithmic axes.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence, Tuple

import numpy as np

#: roundoff allowance for arguments of :func:`binary_entropy`
ENTROPY_CLAMP = 1e-12
#: roundoff allowance for eigenvalues of correlation matrices above 1
NU_CLAMP = 1e-9
#: antisymmetry tolerance accepted by :func:`antisymmetric_spectrum`
ANTISYMMETRY_TOL = 1e-10


def binary_entropy(x, tol: float = ENTROPY_CLAMP):
    """Binary entropy ``-x log2 x - (1-x) log2 (1-x)`` in bits.

    Works elementwise on arrays. Arguments within ``tol`` outside of
    ``[0, 1]`` are clamped, anything further out raises ``ValueError``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -tol) or np.any(arr > 1.0 + tol) or np.any(np.isnan(arr)):
        raise ValueError(f"binary entropy argument outside [0, 1]: {x!r}")
    p = np.clip(arr, 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def _check_antisymmetric(m: np.ndarray, tol: float) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.iscomplexobj(m):
        if np.max(np.abs(m.imag), initial=0.0) > tol:
            raise ValueError("antisymmetric matrix must be real")
        m = m.real
    m = m.astype(float, copy=False)
    err = np.max(np.abs(m + m.T), initial=0.0)
    if err > tol:
        raise ValueError(f"matrix is not antisymmetric (max |m + m^T| = {err:.3e})")
    return m


def antisymmetric_spectrum(m, tol: float = ANTISYMMETRY_TOL) -> np.ndarray:
    """Nonnegative imaginary parts ``nu_j`` of the eigenvalues ``±i nu_j`` of ``m``.

    Parameters
    ----------
    m : array_like
        Real antisymmetric matrix of even dimension.
    tol : float
        Largest accepted deviation from antisymmetry.

    Returns
    -------
    np.ndarray
        ``dim / 2`` values in descending order.

    Notes
    -----
    ``i m`` is Hermitian with spectrum ``{±nu_j}``; the upper half of its
    ordered eigenvalues are the ``nu_j``.
    """
    m = _check_antisymmetric(m, tol)
    dim = m.shape[0]
    if dim % 2:
        raise ValueError(f"antisymmetric spectrum needs an even dimension, got {dim}")
    if dim == 0:
        return np.zeros(0)
    # symmetrize away the residual so eigvalsh sees an exactly Hermitian input
    a = 0.5 * (m - m.T)
    ev = np.linalg.eigvalsh(1j * a)
    nu = ev[dim // 2:][::-1]
    return np.clip(nu, 0.0, None)


def correlation_spectrum(m, tol: float = ANTISYMMETRY_TOL, clamp: float = NU_CLAMP) -> np.ndarray:
    """:func:`antisymmetric_spectrum` of a correlation matrix, clamped into ``[0, 1]``.

    Correlation matrices are contractions, so values above ``1 + clamp``
    indicate a broken input and raise ``ValueError``.
    """
    nu = antisymmetric_spectrum(m, tol)
    if nu.size and nu[0] > 1.0 + clamp:
        raise ValueError(f"correlation matrix eigenvalue {nu[0]!r} exceeds 1")
    return np.minimum(nu, 1.0)


def stable_sech(x):
    """``1 / cosh(x)`` evaluated as ``2 e^{-|x|} / (1 + e^{-2|x|})``."""
    ax = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-ax)
    out = 2.0 * e / (1.0 + e * e)
    return float(out) if out.ndim == 0 else out


def stable_tanh(x):
    """``tanh(x)`` that is exactly ``±1`` at infinite arguments."""
    out = np.tanh(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


class LineFit(NamedTuple):
    slope: float
    intercept: float
    residual: float


def fit_line(x: Sequence[float], y: Sequence[float]) -> LineFit:
    """Ordinary least squares ``y = slope * x + intercept`` with RMS residual."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("a line fit needs at least two points")
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    res = y - (slope * x + intercept)
    return LineFit(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))))


class LogLawFit(NamedTuple):
    c: float
    c_prime: float
    residual: float


def fit_log_law(points: Iterable[Tuple[float, float]], window: Tuple[float, float]) -> LogLawFit:
    """Fit ``S = (c/3) log2(beta) + c'`` to the points with ``beta`` inside ``window``.

    Parameters
    ----------
    points : iterable of (beta, S)
        Samples; every ``beta`` must be positive.
    window : (beta_min, beta_max)
        Closed interval of inverse temperatures used in the fit.

    Returns
    -------
    LogLawFit
        ``(c, c_prime, residual)`` with ``residual`` the RMS deviation in bits.
    """
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if np.any(pts[:, 0] <= 0):
        raise ValueError("log-law fit requires beta > 0")
    lo, hi = window
    sel = pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]
    if len(sel) < 3:
        raise ValueError(
            f"insufficient data: {len(sel)} points inside window [{lo}, {hi}], need at least 3"
        )
    fit = fit_line(np.log2(sel[:, 0]), sel[:, 1])
    return LogLawFit(3.0 * fit.slope, fit.intercept, fit.residual)
