"""Spin-chain Hamiltonian families with open boundaries.

Three families are supported::

    XY           sum_l [(1+g)/2 X_l X_{l+1} + (1-g)/2 Y_l Y_{l+1}] + h sum_l Z_l
    TiltedIsing  sum_l X_l X_{l+1} + sum_l (hx X_l + hz Z_l)
    XXZField     sum_l [X_l X_{l+1} + Y_l Y_{l+1} + delta Z_l Z_{l+1}] + sum_l h_l Z_l

Sites are 0-based in code. Dense matrices use the Kronecker order
``site 0 (x) site 1 (x) ...`` and ``Z = diag(1, -1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

FAMILIES = ("XY", "TiltedIsing", "XXZField")

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
#: Pauli alphabet in the order used for operator-space coefficients
PAULIS = (I2, SX, SY, SZ)


def staggered_fields(n: int) -> Tuple[float, ...]:
    """Fields ``h_l = -(1 + (-1)^l) / 2`` for 1-based ``l``, i.e. ``0, -1, 0, -1, ...``."""
    return tuple(-(1 + (-1) ** l) / 2 for l in range(1, n + 1))


@dataclass(frozen=True)
class ChainSpec:
    """A member of one of the Hamiltonian families.

    Only the parameters of ``family`` are read; the others are ignored.
    ``fields`` is the per-site ``h_l`` list of the XXZ family (``None`` means
    zero field).
    """

    family: str
    n: int
    gamma: float = 0.0
    h: float = 0.0
    hx: float = 0.0
    hz: float = 0.0
    delta: float = 0.0
    fields: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"site count must be a positive integer, got {self.n!r}")
        if self.fields is not None:
            object.__setattr__(self, "fields", tuple(float(v) for v in self.fields))
            if len(self.fields) != self.n:
                raise ValueError(f"need {self.n} site fields, got {len(self.fields)}")

    @classmethod
    def xy(cls, n: int, gamma: float, h: float) -> "ChainSpec":
        return cls("XY", n, gamma=gamma, h=h)

    @classmethod
    def tilted_ising(cls, n: int, hx: float, hz: float) -> "ChainSpec":
        return cls("TiltedIsing", n, hx=hx, hz=hz)

    @classmethod
    def xxz(cls, n: int, delta: float, fields: Optional[Sequence[float]] = None) -> "ChainSpec":
        return cls("XXZField", n, delta=delta, fields=None if fields is None else tuple(fields))

    def site_fields(self) -> np.ndarray:
        if self.fields is None:
            return np.zeros(self.n)
        return np.asarray(self.fields, dtype=float)

    def label(self) -> str:
        if self.family == "XY":
            return f"XY(gamma={self.gamma:g}, h={self.h:g})"
        if self.family == "TiltedIsing":
            return f"TiltedIsing(hx={self.hx:g}, hz={self.hz:g})"
        return f"XXZField(delta={self.delta:g})"


@dataclass
class MajoranaForm:
    """Coefficients ``H`` of ``sum_jl H_jl w_j w_l``; antisymmetric and Hermitian."""

    n: int
    H: np.ndarray


@dataclass
class TermList:
    """Local terms whose embedded sum is the chain Hamiltonian.

    ``bond_terms`` holds ``(l, 4x4)`` couplings of sites ``l, l+1`` and
    ``site_terms`` holds ``(l, 2x2)`` single-site fields.
    """

    n: int
    bond_terms: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    site_terms: List[Tuple[int, np.ndarray]] = field(default_factory=list)


def build_majorana_form(spec: ChainSpec) -> MajoranaForm:
    """Majorana coefficient matrix of an XY chain.

    With ``w_{2m-1} = X_m prod_{l<m} Z_l`` and ``w_{2m} = Y_m prod_{l<m} Z_l``
    (1-based) the XY Hamiltonian reads::

        -i sum_l [(1+g)/2 w_{2l} w_{2l+1} - (1-g)/2 w_{2l-1} w_{2l+2}] - i h sum_l w_{2l-1} w_{2l}

    A monomial ``-i a w_j w_l`` with ``j < l`` is stored as
    ``H[j, l] = -i a / 2`` and ``H[l, j] = +i a / 2``.
    """
    if spec.family != "XY":
        raise ValueError(f"Majorana form exists only for the XY family, got {spec.family}")
    n = spec.n
    H = np.zeros((2 * n, 2 * n), dtype=complex)

    def add(j: int, l: int, a: float) -> None:
        # 0-based Majorana indices, j < l
        H[j, l] += -0.5j * a
        H[l, j] += 0.5j * a

    g, h = spec.gamma, spec.h
    for m in range(n - 1):
        # 1-based l = m + 1: w_{2l} -> index 2m + 1, w_{2l+1} -> 2m + 2, ...
        add(2 * m + 1, 2 * m + 2, (1 + g) / 2)
        add(2 * m, 2 * m + 3, -(1 - g) / 2)
    for m in range(n):
        add(2 * m, 2 * m + 1, h)
    return MajoranaForm(n, H)


def build_term_list(spec: ChainSpec) -> TermList:
    """Bond couplings and site fields of ``spec``."""
    n = spec.n
    terms = TermList(n)
    if spec.family == "XY":
        bond = (1 + spec.gamma) / 2 * np.kron(SX, SX) + (1 - spec.gamma) / 2 * np.kron(SY, SY)
        site = [spec.h * SZ] * n
    elif spec.family == "TiltedIsing":
        bond = np.kron(SX, SX)
        site = [spec.hx * SX + spec.hz * SZ] * n
    else:
        bond = np.kron(SX, SX) + np.kron(SY, SY) + spec.delta * np.kron(SZ, SZ)
        site = [hl * SZ for hl in spec.site_fields()]
    terms.bond_terms = [(l, bond.copy()) for l in range(n - 1)]
    terms.site_terms = [(l, np.array(op)) for l, op in enumerate(site)]
    return terms
