"""Field-ensemble entanglement entropy and pairwise concurrence.

Two routes to the two-qubit reduced state are provided: a combinatorial
reduction that works directly on the symmetric-sector coefficients, and a
brute-force expansion into the full 2^N register used as its oracle.  All
states reaching this module are real, so the spin-flipped matrix in the
concurrence stays real as well: conjugation is a no-op and the flip matrix
is the antidiagonal (-1, 1, 1, -1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .operators import ProductBasis

TRACE_TOLERANCE = 1e-10
EIGENVALUE_TOLERANCE = -1e-10

#: Spin flip sigma_y (x) sigma_y in the |gg>, |ge>, |eg>, |ee> ordering.
_SPIN_FLIP = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class DensityMatrix:
    """Real symmetric density matrix with validated trace and positivity."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise ValueError("density matrix must be symmetric")
        tr = float(np.trace(m))
        if abs(tr - 1.0) > TRACE_TOLERANCE:
            raise ValueError(f"trace {tr} departs from 1 beyond {TRACE_TOLERANCE}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        """Ascending spectrum, validated against the positivity tolerance."""
        vals = np.linalg.eigvalsh(self.matrix)
        if vals[0] < EIGENVALUE_TOLERANCE:
            raise ValueError(f"eigenvalue {vals[0]:.3e} below tolerance {EIGENVALUE_TOLERANCE:.0e}")
        return vals

    def purity(self) -> float:
        return float(np.sum(self.matrix * self.matrix))


def reduce_to_ensemble(state: np.ndarray, basis: ProductBasis) -> DensityMatrix:
    """Trace out the field: rho[m, m'] = sum_n c_nm c_nm'."""
    c = basis.coefficient_matrix(np.asarray(state, dtype=float))
    return DensityMatrix(c.T @ c)


def entropy_of_entanglement(rho: DensityMatrix) -> float:
    """Von Neumann entropy in bits, with 0 log 0 = 0."""
    vals = np.clip(rho.eigenvalues(), 0.0, None)
    vals = vals[vals > 0.0]
    return float(-(vals @ np.log2(vals))) + 0.0  # + 0.0 drops a negative zero


def _pair_block_overlaps(c: np.ndarray, n_atoms: int) -> np.ndarray:
    """s[t, t'] = sum_e C(N-2, e) <psi|e+t><e+t'|psi>_field / norm factors.

    t counts excitations on the singled-out pair; e those on the remaining
    N - 2 atoms.  Exact for any N: the symmetric state assigns equal weight
    1/sqrt(C(N, k)) to each product configuration with k excited atoms.
    """
    nd = c.shape[1]
    log_binom_n = [
        math.lgamma(n_atoms + 1) - math.lgamma(k + 1) - math.lgamma(n_atoms - k + 1)
        for k in range(nd)
    ]
    s = np.zeros((3, 3))
    for t in range(3):
        for tp in range(3):
            acc = 0.0
            for e in range(n_atoms - 1):
                k, kp = e + t, e + tp
                if k >= nd or kp >= nd:
                    continue
                log_rest = (
                    math.lgamma(n_atoms - 1) - math.lgamma(e + 1) - math.lgamma(n_atoms - 2 - e + 1)
                )
                weight = math.exp(log_rest - 0.5 * (log_binom_n[k] + log_binom_n[kp]))
                acc += weight * float(c[:, k] @ c[:, kp])
            s[t, tp] = acc
    return s


def two_qubit_reduction(state: np.ndarray, basis: ProductBasis) -> DensityMatrix:
    """Reduced state of one atom pair, tracing out the field and N - 2 atoms.

    Works combinatorially on the symmetric coefficients; by permutation
    symmetry every pair yields the same matrix.  Basis order |gg>, |ge>,
    |eg>, |ee>.
    """
    if basis.dicke.n_atoms < 2:
        raise ValueError("two_qubit_reduction needs at least two atoms")
    c = basis.coefficient_matrix(np.asarray(state, dtype=float))
    s = _pair_block_overlaps(c, basis.dicke.n_atoms)
    blocks = {0: [(0, 0)], 1: [(0, 1), (1, 0)], 2: [(1, 1)]}
    rho = np.zeros((4, 4))
    for t, rows in blocks.items():
        for tp, cols in blocks.items():
            for q1, q2 in rows:
                for p1, p2 in cols:
                    rho[2 * q1 + q2, 2 * p1 + p2] = s[t, tp]
    return DensityMatrix(rho)


def wootters_concurrence(rho2: DensityMatrix) -> float:
    """max(0, l1 - l2 - l3 - l4) over the descending spin-flip singular spectrum.

    Computed from the symmetric form sqrt(rho) rho~ sqrt(rho), which keeps
    the whole calculation inside real symmetric eigenproblems.
    """
    if rho2.dim != 4:
        raise ValueError(f"concurrence is defined for two qubits, got dim {rho2.dim}")
    rho = rho2.matrix
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    sqrt_rho = (vecs * np.sqrt(vals)) @ vecs.T
    flipped = _SPIN_FLIP @ rho @ _SPIN_FLIP
    core = sqrt_rho @ flipped @ sqrt_rho
    lam_sq = np.clip(np.linalg.eigvalsh(core), 0.0, None)
    lam = np.sqrt(lam_sq)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def pair_concurrence(state: np.ndarray, basis: ProductBasis) -> float:
    """Convenience: concurrence of any atom pair of a product-basis state."""
    return wootters_concurrence(two_qubit_reduction(state, basis))


# ---------------------------------------------------------------------------
# brute-force oracle on the full 2^N register
# ---------------------------------------------------------------------------

def symmetric_to_register(state: np.ndarray, basis: ProductBasis) -> np.ndarray:
    """Expand the symmetric-sector state onto the field (x) 2^N register.

    Each Dicke component spreads over its C(N, k) product configurations
    with amplitude 1/sqrt(C(N, k)).  Intended for small N; the register
    grows as 2^N.
    """
    n_atoms = basis.dicke.n_atoms
    c = basis.coefficient_matrix(np.asarray(state, dtype=float))
    reg_dim = 2**n_atoms
    out = np.zeros((basis.fock.dim, reg_dim))
    for bits in range(reg_dim):
        k = bin(bits).count("1")
        out[:, bits] = c[:, k] / math.sqrt(math.comb(n_atoms, k))
    return out.reshape(-1)


def two_qubit_reduction_brute_force(
    state: np.ndarray, basis: ProductBasis, pair: tuple[int, int] = (0, 1)
) -> DensityMatrix:
    """Partial trace over the field and all atoms outside ``pair``.

    The independent check for :func:`two_qubit_reduction`; costs
    O(dim * 2^N) and is meant for N <= 12.
    """
    n_atoms = basis.dicke.n_atoms
    i, j = pair
    if i == j or not (0 <= i < n_atoms) or not (0 <= j < n_atoms):
        raise ValueError(f"invalid atom pair {pair} for N={n_atoms}")
    full = symmetric_to_register(state, basis).reshape(basis.fock.dim, 2**n_atoms)
    rho = np.zeros((4, 4))
    rest = [q for q in range(n_atoms) if q not in (i, j)]
    # bit q of the register index holds atom q's state, bit set = excited
    for bi in range(4):
        for bj in range(4):
            acc = 0.0
            for other in range(2 ** len(rest)):
                idx_i = _register_index(bi, other, i, j, rest)
                idx_j = _register_index(bj, other, i, j, rest)
                acc += float(full[:, idx_i] @ full[:, idx_j])
            rho[bi, bj] = acc
    return DensityMatrix(rho)


def _register_index(pair_bits: int, other_bits: int, i: int, j: int, rest: list[int]) -> int:
    idx = 0
    if pair_bits & 2:
        idx |= 1 << i
    if pair_bits & 1:
        idx |= 1 << j
    for pos, q in enumerate(rest):
        if other_bits & (1 << pos):
            idx |= 1 << q
    return idx


def all_pairs_agree(state: np.ndarray, basis: ProductBasis, atol: float = 1e-12) -> bool:
    """Check that every atom pair gives the same reduced matrix (symmetry)."""
    mats = [
        two_qubit_reduction_brute_force(state, basis, pair).matrix
        for pair in combinations(range(basis.dicke.n_atoms), 2)
    ]
    return all(np.allclose(mats[0], m, rtol=0.0, atol=atol) for m in mats[1:])
