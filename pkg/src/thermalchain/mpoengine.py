"""Thermal states as matrix product operators, cooled in imaginary time.

A density operator is stored through its Pauli coefficients
``c_s = 2^-n tr(sigma^s rho)``, which are orthonormal components under the
inner product ``<x|y> = 2^-n tr(x^dag y)``::

    c_{s_1...s_n} = exp(log_prefactor) * A_1[s_1] A_2[s_2] ... A_n[s_n]

with tensors of shape ``(D_left, 4, D_right)`` and trivial outer bonds.
Coefficients of Hermitian operators are real, so all tensors are real.

One imaginary-time step ``rho -> exp(-eps H/2) rho exp(-eps H/2)`` is split
symmetrically into bond gates: odd bonds for ``eps/2``, even bonds for
``eps``, odd bonds for ``eps/2``. Gates are applied in sweeps that carry the
orthogonality centre along, so every truncation happens in canonical gauge
and keeps the largest singular values.

Bonds are 0-based: bond ``b`` joins sites ``b`` and ``b + 1``. The "odd"
layer holds bonds ``0, 2, 4, ...`` (first, third, ... bond of the chain).

Symmetry sectors
----------------
Pauli strings carry two ``Z2`` labels: the parity of the number of ``X, Y``
letters (odd under conjugation by ``prod Z``) and the parity of the number
of ``Y`` letters (odd under transposition). When every gate preserves a
label, so does the state, and each bond index is tagged with its charge.
Two-site blocks are then block diagonal and are factorized sector by sector;
this is exact and only saves time.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as la

from .models import I2, PAULIS, TermList

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
DEFAULT_EPSILON = 0.05
DEFAULT_SVD_CUT = 1e-10

#: charge bits of 1, X, Y, Z; bit 0 = X/Y parity, bit 1 = Y parity
PAULI_CHARGE = np.array([0, 1, 3, 0])
FULL_MASK = 3


class DegenerateStateError(ArithmeticError):
    """All singular values of a two-site block vanished."""


@dataclass
class OperatorMPS:
    """Pauli-basis MPS of a density operator.

    ``center`` is the site of the orthogonality centre when the tensors are
    in mixed canonical form (left isometries before it, right isometries
    after it) and ``None`` when no gauge is known. ``charges[i]`` labels the
    indices of the bond left of site ``i`` (``n + 1`` entries); only the bits
    in ``charge_mask`` are meaningful.
    """

    tensors: List[np.ndarray]
    log_prefactor: float = 0.0
    center: Optional[int] = None
    beta: float = 0.0
    discarded_weight: float = 0.0
    charges: Optional[List[np.ndarray]] = None
    charge_mask: int = 0

    def __post_init__(self):
        if self.charges is None:
            self.charges = [np.zeros(1, dtype=int)] + [
                np.zeros(t.shape[2], dtype=int) for t in self.tensors
            ]
            self.charge_mask = 0

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> "OperatorMPS":
        return copy.deepcopy(self)

    def restrict_charges(self, mask: int) -> None:
        """Forget charge bits outside ``mask``."""
        mask &= self.charge_mask
        if mask != self.charge_mask:
            self.charges = [q & mask for q in self.charges]
            self.charge_mask = mask


@dataclass
class GateSet:
    """Operator-space bond gates for one symmetric Trotter step of size ``epsilon``.

    Each entry maps a bond to a ``16 x 16`` real matrix acting on the two-site
    Pauli coefficients, realizing ``rho -> g rho g`` with
    ``g = exp(-tau h_b / 2)``. ``odd_half`` uses ``tau = epsilon / 2``;
    ``even`` and ``odd_full`` use ``tau = epsilon``. ``charge_mask`` holds
    the charge bits every gate conserves.
    """

    n: int
    epsilon: float
    odd_half: Dict[int, np.ndarray] = field(default_factory=dict)
    even: Dict[int, np.ndarray] = field(default_factory=dict)
    odd_full: Dict[int, np.ndarray] = field(default_factory=dict)
    charge_mask: int = FULL_MASK


def init_infinite_temperature(n: int) -> OperatorMPS:
    """``rho = 1 / 2^n`` with bond dimension 1."""
    if n < 1:
        raise ValueError(f"need at least one site, got {n}")
    tensors = []
    for _ in range(n):
        t = np.zeros((1, 4, 1))
        t[0, 0, 0] = 1.0
        tensors.append(t)
    charges = [np.zeros(1, dtype=int) for _ in range(n + 1)]
    return OperatorMPS(
        tensors, log_prefactor=-n * LN2, center=0, charges=charges, charge_mask=FULL_MASK
    )


# --- gates --------------------------------------------------------------------------

_PAULI2 = np.array([np.kron(a, b) for a in PAULIS for b in PAULIS])
_PAIR_CHARGE = (PAULI_CHARGE[:, None] ^ PAULI_CHARGE[None, :]).reshape(-1)


def conjugation_matrix(g: np.ndarray) -> np.ndarray:
    """Matrix of ``x -> g x g^dag`` on two-site Pauli coefficients."""
    # G[s, t] = 2^-2 tr(P_s g P_t g^dag)
    left = np.einsum("sij,jk->sik", _PAULI2, g)
    right = np.einsum("tij,jk->tik", _PAULI2, g.conj().T)
    G = np.einsum("sik,tki->st", left, right) / 4.0
    return G.real


def conserved_mask(gate: np.ndarray, tol: float = 1e-14) -> int:
    """Charge bits that ``gate`` never changes."""
    mask = 0
    scale = max(np.max(np.abs(gate)), 1.0)
    flips = _PAIR_CHARGE[:, None] ^ _PAIR_CHARGE[None, :]
    for bit in (1, 2):
        if np.all(np.abs(gate[(flips & bit) != 0]) <= tol * scale):
            mask |= bit
    return mask


def bond_hamiltonians(terms: TermList) -> List[np.ndarray]:
    """Two-site Hamiltonians with the site fields shared out between bonds.

    A field on an interior site is split half and half over its two bonds;
    the end sites give their full field to their only bond.
    """
    n = terms.n
    if n < 2:
        raise ValueError("bond gates need at least two sites")
    hs = [np.zeros((4, 4), dtype=complex) for _ in range(n - 1)]
    for l, op in terms.bond_terms:
        hs[l] += op
    for l, op in terms.site_terms:
        owners = [b for b in (l - 1, l) if 0 <= b < n - 1]
        for b in owners:
            local = np.kron(op, I2) if b == l else np.kron(I2, op)
            hs[b] += local / len(owners)
    return hs


def build_gates(terms: TermList, epsilon: float) -> GateSet:
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    gates = GateSet(terms.n, epsilon)
    for b, h in enumerate(bond_hamiltonians(terms)):
        h = 0.5 * (h + h.conj().T)
        if b % 2 == 0:
            gates.odd_half[b] = conjugation_matrix(la.expm(-0.25 * epsilon * h))
            gates.odd_full[b] = conjugation_matrix(la.expm(-0.5 * epsilon * h))
            gates.charge_mask &= conserved_mask(gates.odd_full[b])
        else:
            gates.even[b] = conjugation_matrix(la.expm(-0.5 * epsilon * h))
            gates.charge_mask &= conserved_mask(gates.even[b])
    return gates


# --- sector-wise factorizations -----------------------------------------------------

def _left_charges(ql: np.ndarray) -> np.ndarray:
    """Charges of the fused ``(left bond, physical)`` index."""
    return (ql[:, None] ^ PAULI_CHARGE[None, :]).reshape(-1)


def _right_charges(qr: np.ndarray) -> np.ndarray:
    """Charges of the fused ``(physical, right bond)`` index."""
    return (PAULI_CHARGE[:, None] ^ qr[None, :]).reshape(-1)


def _svd(block: np.ndarray):
    try:
        return la.svd(block, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except la.LinAlgError:
        return la.svd(block, full_matrices=False, lapack_driver="gesvd", check_finite=False)


def split_block(
    theta: np.ndarray,
    d_max: int,
    svd_cut: float,
    row_q: Optional[np.ndarray] = None,
    col_q: Optional[np.ndarray] = None,
):
    """Truncated SVD of a ``(rows, cols)`` matrix, optionally block diagonal by charge.

    Keeps at most ``d_max`` singular values overall and drops those below
    ``svd_cut`` times the largest. Returns ``(u, s, vh, q, discarded)``:
    ``s`` descending, ``q`` the charge of each kept index and ``discarded``
    the dropped fraction of ``sum s^2``.
    """
    rows, cols = theta.shape
    if row_q is None:
        row_q = np.zeros(rows, dtype=int)
    if col_q is None:
        col_q = np.zeros(cols, dtype=int)
    blocks = []
    for q in np.intersect1d(row_q, col_q):
        r = np.flatnonzero(row_q == q)
        c = np.flatnonzero(col_q == q)
        u, s, vh = _svd(theta[np.ix_(r, c)])
        blocks.append((q, r, c, u, s, vh))
    s_all = np.concatenate([b[4] for b in blocks]) if blocks else np.zeros(0)
    if s_all.size == 0 or s_all.max() == 0.0:
        raise DegenerateStateError("all singular values are zero")
    order = np.argsort(-s_all, kind="stable")
    keep = int(np.count_nonzero(s_all > svd_cut * s_all[order[0]]))
    keep = max(1, min(keep, d_max))
    chosen = order[:keep]
    total = float(np.sum(s_all**2))
    discarded = float(np.sum(s_all[order[keep:]] ** 2)) / total

    u_out = np.zeros((rows, keep))
    vh_out = np.zeros((keep, cols))
    q_out = np.zeros(keep, dtype=int)
    start = 0
    for q, r, c, u, s, vh in blocks:
        in_block = (chosen >= start) & (chosen < start + s.size)
        pos = np.flatnonzero(in_block)
        idx = chosen[in_block] - start
        u_out[np.ix_(r, pos)] = u[:, idx]
        vh_out[np.ix_(pos, c)] = vh[idx]
        q_out[pos] = q
        start += s.size
    return u_out, s_all[chosen], vh_out, q_out, discarded


def _qr_sectors(mat: np.ndarray, row_q: np.ndarray, col_q: np.ndarray):
    """``mat = Q R`` with ``Q`` isometric and both factors charge-block diagonal."""
    rows, cols = mat.shape
    pieces = []
    for q in np.unique(col_q):
        r = np.flatnonzero(row_q == q)
        if r.size == 0:
            continue
        c = np.flatnonzero(col_q == q)
        qm, rm = np.linalg.qr(mat[np.ix_(r, c)])
        pieces.append((q, r, c, qm, rm))
    k = sum(p[3].shape[1] for p in pieces)
    if k == 0:
        raise DegenerateStateError("operator vanished")
    q_out = np.zeros((rows, k))
    r_out = np.zeros((k, cols))
    charges = np.zeros(k, dtype=int)
    start = 0
    for q, r, c, qm, rm in pieces:
        sl = slice(start, start + qm.shape[1])
        q_out[r, sl] = qm
        r_out[sl, c] = rm
        charges[sl] = q
        start = sl.stop
    return q_out, r_out, charges


# --- gauge --------------------------------------------------------------------------

def _qr_right(state: OperatorMPS, site: int) -> None:
    """Left-orthonormalize ``site`` and push the remainder into ``site + 1``."""
    a = state.tensors[site]
    dl, d, dr = a.shape
    row_q = _left_charges(state.charges[site]) & state.charge_mask
    q, r, qc = _qr_sectors(a.reshape(dl * d, dr), row_q, state.charges[site + 1])
    state.tensors[site] = q.reshape(dl, d, q.shape[1])
    state.tensors[site + 1] = np.tensordot(r, state.tensors[site + 1], axes=(1, 0))
    state.charges[site + 1] = qc


def _qr_left(state: OperatorMPS, site: int) -> None:
    """Right-orthonormalize ``site`` and push the remainder into ``site - 1``."""
    a = state.tensors[site]
    dl, d, dr = a.shape
    col_q = _right_charges(state.charges[site + 1]) & state.charge_mask
    q, r, qc = _qr_sectors(a.reshape(dl, d * dr).T, col_q, state.charges[site])
    state.tensors[site] = q.T.reshape(q.shape[1], d, dr)
    state.tensors[site - 1] = np.tensordot(state.tensors[site - 1], r.T, axes=(2, 0))
    state.charges[site] = qc


def _normalize_center(state: OperatorMPS) -> None:
    c = state.center
    nrm = np.linalg.norm(state.tensors[c])
    if nrm == 0:
        raise DegenerateStateError("operator vanished")
    state.tensors[c] = state.tensors[c] / nrm
    state.log_prefactor += math.log(nrm)


def move_center(state: OperatorMPS, site: int) -> None:
    """Shift the orthogonality centre to ``site`` in place."""
    if state.center is None:
        reorthogonalize(state, inplace=True)
    while state.center < site:
        _qr_right(state, state.center)
        state.center += 1
    while state.center > site:
        _qr_left(state, state.center)
        state.center -= 1
    _normalize_center(state)


def reorthogonalize(state: OperatorMPS, inplace: bool = False) -> OperatorMPS:
    """Full left-to-right then right-to-left QR sweep, ending right-canonical.

    The represented operator is unchanged; the centre ends on site 0 with
    unit norm, its scale moved into ``log_prefactor``.
    """
    out = state if inplace else state.copy()
    for site in range(out.n - 1):
        _qr_right(out, site)
    for site in range(out.n - 1, 0, -1):
        _qr_left(out, site)
    out.center = 0
    _normalize_center(out)
    return out


# --- gate application ---------------------------------------------------------------

def apply_gate(
    state: OperatorMPS,
    bond: int,
    gate: np.ndarray,
    d_max: int,
    svd_cut: float = DEFAULT_SVD_CUT,
    direction: str = "right",
) -> float:
    """Apply a ``16 x 16`` gate on ``bond`` in place; returns the discarded weight.

    The centre is moved onto the bond first and ends on ``bond + 1`` for
    ``direction="right"`` or on ``bond`` for ``"left"``. The gate must
    conserve the state's charge bits (see :func:`conserved_mask`).
    """
    move_center(state, bond if direction == "right" else bond + 1)
    a, b = state.tensors[bond], state.tensors[bond + 1]
    dl, dr = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0))  # (dl, 4, 4, dr)
    theta = np.tensordot(gate.reshape(4, 4, 4, 4), theta, axes=([2, 3], [1, 2]))
    theta = theta.transpose(2, 0, 1, 3).reshape(dl * 4, 4 * dr)
    row_q = _left_charges(state.charges[bond]) & state.charge_mask
    col_q = _right_charges(state.charges[bond + 2]) & state.charge_mask
    u, s, vh, q, discarded = split_block(theta, d_max, svd_cut, row_q, col_q)
    nrm = float(np.linalg.norm(s))
    s = s / nrm
    state.log_prefactor += math.log(nrm)
    k = s.size
    state.charges[bond + 1] = q
    if direction == "right":
        state.tensors[bond] = u.reshape(dl, 4, k)
        state.tensors[bond + 1] = (s[:, None] * vh).reshape(k, 4, dr)
        state.center = bond + 1
    else:
        state.tensors[bond] = (u * s).reshape(dl, 4, k)
        state.tensors[bond + 1] = vh.reshape(k, 4, dr)
        state.center = bond
    return discarded


def _apply_layer(state: OperatorMPS, layer: Dict[int, np.ndarray], d_max: int, svd_cut: float) -> float:
    if not layer:
        return 0.0
    bonds = sorted(layer)
    # sweep away from whichever end the centre is closer to
    if state.center is None or state.center <= (bonds[0] + bonds[-1] + 1) / 2:
        order, direction = bonds, "right"
    else:
        order, direction = bonds[::-1], "left"
    total = 0.0
    for b in order:
        total += apply_gate(state, b, layer[b], d_max, svd_cut, direction)
    return total


def trace_log(state: OperatorMPS) -> float:
    """Natural log of ``tr rho = 2^n c_{0...0}``; raises if the trace is not positive."""
    v = np.ones(1)
    acc = state.log_prefactor + state.n * LN2
    for t in state.tensors:
        v = v @ t[:, 0, :]
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise DegenerateStateError("identity component vanished")
        v = v / nrm
        acc += math.log(nrm)
    val = float(v[0])
    if val <= 0:
        raise DegenerateStateError(f"trace is not positive ({val:+.3e} before scaling)")
    return acc + math.log(val)


def renormalize(state: OperatorMPS) -> None:
    """Rescale the prefactor so that ``tr rho = 1``."""
    state.log_prefactor -= trace_log(state)


def _sweep_gauge(state: OperatorMPS) -> None:
    # QR out to the far end and back; restores isometries eroded by roundoff
    c = state.center
    move_center(state, state.n - 1 if c < state.n / 2 else 0)
    move_center(state, c)


def evolve(
    state: OperatorMPS,
    gates: GateSet,
    steps: int,
    d_max: int,
    svd_cut: float = DEFAULT_SVD_CUT,
    reorth_every: int = 1,
) -> OperatorMPS:
    """Advance ``steps`` Trotter steps; returns a new state at ``beta + steps * epsilon``.

    Consecutive odd half layers between steps are fused into one full odd
    layer, so only the first and last half layers are applied separately.
    ``reorth_every = k`` runs a gauge sweep after every ``k``-th step
    (``0`` disables it).
    """
    if d_max < 1:
        raise ValueError("d_max must be at least 1")
    if gates.n != state.n:
        raise ValueError(f"gate set is for {gates.n} sites, state has {state.n}")
    out = state.copy()
    out.restrict_charges(gates.charge_mask)
    if out.center is None:
        reorthogonalize(out, inplace=True)
    for step in range(steps):
        first_layer = gates.odd_half if step == 0 else gates.odd_full
        out.discarded_weight += _apply_layer(out, first_layer, d_max, svd_cut)
        out.discarded_weight += _apply_layer(out, gates.even, d_max, svd_cut)
        if step == steps - 1:
            out.discarded_weight += _apply_layer(out, gates.odd_half, d_max, svd_cut)
        if reorth_every and (step + 1) % reorth_every == 0:
            _sweep_gauge(out)
        renormalize(out)
    out.beta = state.beta + steps * gates.epsilon
    return out


def evolve_step(
    state: OperatorMPS,
    gates: GateSet,
    d_max: int,
    svd_cut: float = DEFAULT_SVD_CUT,
) -> OperatorMPS:
    """One full step: odd half layer, even layer, odd half layer, trace renormalization."""
    return evolve(state, gates, 1, d_max, svd_cut)


# --- measurements -------------------------------------------------------------------

def schmidt_values(state: OperatorMPS, cut: int) -> np.ndarray:
    """Normalized Schmidt coefficients across the bond after the first ``cut`` sites."""
    if not 1 <= cut < state.n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {state.n}, got {cut}")
    work = state.copy()
    move_center(work, cut - 1)
    a = work.tensors[cut - 1]
    s = la.svdvals(a.reshape(-1, a.shape[2]))
    return s / np.linalg.norm(s)


def osee_mpo(state: OperatorMPS, cut: int) -> float:
    """Operator-space entanglement entropy (bits) across the bond after ``cut`` sites."""
    p = schmidt_values(state, cut) ** 2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log2(p)) + 0.0)


def _log_norm_sq(tensors: Sequence[np.ndarray], traced: Sequence[bool]) -> float:
    """``ln sum_s c_s^2`` of the raw tensors, with traced sites pinned to ``s = 0``."""
    env = np.ones((1, 1))
    acc = 0.0
    for t, tr in zip(tensors, traced):
        if tr:
            t = t[:, :1, :]
        env = np.einsum("ab,asc,bsd->cd", env, t, t, optimize=True)
        nrm = np.linalg.norm(env)
        if nrm == 0:
            raise DegenerateStateError("norm contraction vanished")
        env = env / nrm
        acc += math.log(nrm)
    return acc + math.log(float(env[0, 0]))


def purity_log2(state: OperatorMPS) -> float:
    """``log2 tr rho^2`` (``tr rho^2 = 2^n <rho|rho>``)."""
    lnn = _log_norm_sq(state.tensors, [False] * state.n)
    return state.n + (2.0 * state.log_prefactor + lnn) / LN2


def purity(state: OperatorMPS) -> float:
    return 2.0 ** purity_log2(state)


def mutual_purity(state: OperatorMPS, cut: int) -> float:
    """``log2[P(rho) / (P(rho_A) P(rho_B))]`` for the first ``cut`` sites as ``A``.

    Tracing out a site keeps only its identity component (``tr sigma^0 = 2``,
    all other Paulis are traceless).
    """
    n = state.n
    if not 1 <= cut < n:
        raise ValueError(f"cut must satisfy 1 <= n_A < n = {n}, got {cut}")
    in_a = [i < cut for i in range(n)]
    ln_all = _log_norm_sq(state.tensors, [False] * n)
    ln_a = _log_norm_sq(state.tensors, [not x for x in in_a])
    ln_b = _log_norm_sq(state.tensors, in_a)
    # P = 2^n N, P_A = 2^(n + n_B) N_A, P_B = 2^(n + n_A) N_B with N = e^(2 lp) sum c^2
    return (ln_all - ln_a - ln_b - 2.0 * state.log_prefactor) / LN2 - 2 * n


def to_coefficients(state: OperatorMPS) -> np.ndarray:
    """All ``4^n`` Pauli coefficients, shape ``(4,) * n``. Small chains only."""
    if state.n > 12:
        raise ValueError("full contraction is limited to n <= 12")
    t = state.tensors[0]
    for a in state.tensors[1:]:
        t = np.tensordot(t, a, axes=(-1, 0))
    return math.exp(state.log_prefactor) * t.reshape((4,) * state.n)


def coefficient(state: OperatorMPS, string: Sequence[int]) -> float:
    """Single Pauli coefficient ``c_s`` by a left-to-right matrix product."""
    v = np.ones(1)
    for t, s in zip(state.tensors, string):
        v = v @ t[:, s, :]
    return math.exp(state.log_prefactor) * float(v[0])


def from_coefficients(coeffs: np.ndarray, d_max: int = 10**9, svd_cut: float = 0.0) -> OperatorMPS:
    """MPS of a coefficient tensor of shape ``(4,) * n`` (exact unless truncated).

    The result carries no charge labels.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.ndim
    tensors = []
    rest = coeffs.reshape(1, -1)
    for _ in range(n - 1):
        dl = rest.shape[0]
        u, s, vh, _, _ = split_block(rest.reshape(dl * 4, -1), d_max, svd_cut)
        tensors.append(u.reshape(dl, 4, s.size))
        rest = s[:, None] * vh
    tensors.append(rest.reshape(rest.shape[0], 4, 1))
    state = OperatorMPS(tensors, center=n - 1)
    _normalize_center(state)
    return state


# --- driver -------------------------------------------------------------------------

@dataclass
class ThermalPoint:
    beta: float
    state: OperatorMPS
    steps: int


def cool(
    terms: TermList,
    betas: Sequence[float],
    epsilon: float = DEFAULT_EPSILON,
    d_max: int = 128,
    svd_cut: float = DEFAULT_SVD_CUT,
    reorth_every: int = 1,
    start: Optional[OperatorMPS] = None,
):
    """Yield a :class:`ThermalPoint` at each ascending ``beta``, reusing the trajectory.

    Between grid points the state takes full ``epsilon`` steps and, when a
    grid point is not a multiple of ``epsilon`` away, one shorter step to
    land on it exactly.
    """
    state = start.copy() if start is not None else init_infinite_temperature(terms.n)
    gate_cache: Dict[float, GateSet] = {}

    def gates_for(eps: float) -> GateSet:
        key = round(eps, 12)
        if key not in gate_cache:
            gate_cache[key] = build_gates(terms, eps)
        return gate_cache[key]

    total_steps = 0
    for beta in betas:
        if beta < state.beta - 1e-12:
            raise ValueError("beta grid must be ascending and not below the starting state")
        full = int(math.floor((beta - state.beta) / epsilon + 1e-9))
        if full:
            state = evolve(state, gates_for(epsilon), full, d_max, svd_cut, reorth_every)
            total_steps += full
        rem = beta - state.beta
        if rem > 1e-9 * max(1.0, beta):
            state = evolve(state, gates_for(rem), 1, d_max, svd_cut, reorth_every)
            total_steps += 1
        state.beta = float(beta)
        log.debug("beta=%.4g D=%d discarded=%.3e", beta, state.max_bond, state.discarded_weight)
        yield ThermalPoint(float(beta), state, total_steps)


# --- checkpoints --------------------------------------------------------------------

def save_checkpoint(state: OperatorMPS, path) -> None:
    """Write tensors, charges, prefactor, gauge and ``beta`` to an ``.npz`` file."""
    arrays = {f"tensor_{i}": t for i, t in enumerate(state.tensors)}
    arrays.update({f"charge_{i}": q for i, q in enumerate(state.charges)})
    meta = np.array(
        [state.n, -1 if state.center is None else state.center, state.charge_mask], dtype=np.int64
    )
    scalars = np.array([state.log_prefactor, state.beta, state.discarded_weight])
    with open(Path(path), "wb") as fh:
        np.savez(fh, meta=meta, scalars=scalars, **arrays)


def load_checkpoint(path) -> OperatorMPS:
    with np.load(Path(path)) as data:
        n, center, mask = (int(v) for v in data["meta"])
        lp, beta, discarded = (float(v) for v in data["scalars"])
        tensors = [np.array(data[f"tensor_{i}"]) for i in range(n)]
        charges = [np.array(data[f"charge_{i}"]) for i in range(n + 1)]
    return OperatorMPS(
        tensors,
        log_prefactor=lp,
        center=None if center < 0 else center,
        beta=beta,
        discarded_weight=discarded,
        charges=charges,
        charge_mask=mask,
    )
