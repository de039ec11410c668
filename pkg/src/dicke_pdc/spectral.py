"""Lowest eigenpairs, adaptive photon-cutoff convergence, degeneracy handling.

The flat product ordering makes every model Hamiltonian a narrow-banded
symmetric matrix (half bandwidth 2(N+1) from the two-photon term), so the
primary solver is LAPACK's banded selected-eigenpair routine with a dense
solver as fallback.  Everything here is deterministic: no random starting
vectors, and returned eigenvectors carry a fixed sign convention.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .model import ModelParams, build_full_hamiltonian, parity_diagonal
from .operators import ProductBasis, RealOperator

#: Below this |E1| the residual and degeneracy ratios switch from relative
#: to absolute; a relative measure is meaningless at a spectrum zero crossing.
ENERGY_FLOOR = 1e-14

#: A state counts as a parity eigenstate when |<parity>| exceeds this.
PARITY_PURITY = 1.0 - 1e-8

#: Eigenpair residual contract, relative to the infinity norm of H.
RESIDUAL_CONTRACT = 1e-10


class EigensolverError(RuntimeError):
    """Raised when no solver path meets the residual contract."""


@dataclass(frozen=True)
class TruncationConfig:
    """Adaptive photon-cutoff policy and convergence thresholds."""

    n_start: int = 40
    n_cap: int = 200
    epsilon: float = 1e-10
    epsilon_d: float = 1e-10
    growth: str = "double"

    def __post_init__(self) -> None:
        if not (2 <= self.n_start <= self.n_cap):
            raise ValueError(f"need 2 <= n_start <= n_cap, got {self.n_start}, {self.n_cap}")
        if self.epsilon <= 0 or self.epsilon_d <= 0:
            raise ValueError("epsilon and epsilon_d must be positive")
        if self.growth != "double":
            raise ValueError(f"unknown growth policy {self.growth!r}")

    def next_n_max(self, n_max: int) -> int:
        return min(2 * n_max, self.n_cap)


@dataclass(frozen=True)
class GroundStateResult:
    """Resolved ground state of one parameter point.

    ``vector`` is unit norm over ``basis``; when ``degenerate`` it is the
    equal-weight combination of the sign-fixed parity partners, which are
    kept in ``members`` (even first).  ``residual`` is the enlarged-space
    defect measuring truncation error; ``converged`` is False when the
    photon cap was reached before meeting the target.
    """

    energy: float
    vector: np.ndarray = field(repr=False)
    degenerate: bool
    gap: float
    residual: float
    n_max_used: int
    parity: str  # "+1", "-1" or "mixed"
    converged: bool = True
    residual_mode: str = "relative"
    basis: ProductBasis | None = field(default=None, repr=False)
    members: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Global phase convention: the largest-magnitude coefficient is positive."""
    i = int(np.argmax(np.abs(vec)))
    return -vec if vec[i] < 0 else vec.copy()


def _bandwidth(mat: sp.csr_matrix) -> int:
    coo = mat.tocoo()
    if coo.nnz == 0:
        return 0
    return int(np.max(np.abs(coo.row - coo.col)))


def _banded_upper(mat: sp.csr_matrix, bw: int) -> np.ndarray:
    coo = sp.triu(mat).tocoo()
    ab = np.zeros((bw + 1, mat.shape[0]))
    ab[bw - (coo.col - coo.row), coo.col] = coo.data
    return ab


def lowest_eigenpairs(op: RealOperator, k: int) -> list[tuple[float, np.ndarray]]:
    """The k smallest eigenpairs of a symmetric operator, ascending.

    Each pair satisfies |H v - E v| <= 1e-10 * max(1, |H|_inf); failing that
    on the banded path triggers a dense re-solve, and a persistent failure
    raises with diagnostics rather than returning unverified pairs.
    """
    if k < 1 or k > op.dim:
        raise ValueError(f"k must be in 1..{op.dim}, got {k}")
    if not op.is_symmetric():
        raise ValueError("lowest_eigenpairs requires an exactly symmetric operator")
    mat = op.csr()
    scale = max(1.0, float(np.max(np.abs(mat).sum(axis=1))) if mat.nnz else 0.0)
    tol = RESIDUAL_CONTRACT * scale

    def _verify(vals: np.ndarray, vecs: np.ndarray) -> float:
        defect = mat @ vecs - vecs * vals[np.newaxis, :]
        return float(np.max(np.linalg.norm(defect, axis=0)))

    bw = _bandwidth(mat)
    vals = vecs = None
    if 0 < bw < op.dim // 2:
        try:
            vals, vecs = la.eig_banded(
                _banded_upper(mat, bw), lower=False, select="i", select_range=(0, k - 1)
            )
        except la.LinAlgError:
            vals = vecs = None
        if vals is not None and _verify(vals, vecs) > tol:
            vals = vecs = None
    if vals is None:
        vals, vecs = la.eigh(op.dense(), subset_by_index=(0, k - 1))
        worst = _verify(vals, vecs)
        if worst > tol:
            raise EigensolverError(
                f"residual {worst:.3e} exceeds contract {tol:.3e} (dim={op.dim}, k={k})"
            )
    return [(float(vals[i]), _fix_sign(vecs[:, i])) for i in range(k)]


def _parity_label_and_project(
    vec: np.ndarray, parity_diag: np.ndarray | None
) -> tuple[str, np.ndarray]:
    """Classify <parity> and, for pure states, zero the opposite-sector noise.

    Projection is exact because the Hamiltonian commutes with the diagonal
    parity operator: a pure-sector eigenvector has opposite-sector components
    only through round-off, and removing them makes odd-operator expectation
    values vanish identically instead of sitting at the noise floor.
    """
    if parity_diag is None:
        return "mixed", vec
    p = float(vec @ (parity_diag * vec))
    if abs(p) < PARITY_PURITY:
        return "mixed", vec
    sector = 1.0 if p > 0 else -1.0
    projected = np.where(parity_diag == sector, vec, 0.0)
    projected /= np.linalg.norm(projected)
    return ("+1" if sector > 0 else "-1"), _fix_sign(projected)


def _parity_split(
    v1: np.ndarray, v2: np.ndarray, parity_diag: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate a doublet into its parity-even and parity-odd members.

    A solver may return any rotation within a numerically degenerate
    subspace; diagonalizing the restricted parity operator recovers the
    physical pair deterministically.
    """
    p11 = float(v1 @ (parity_diag * v1))
    p12 = float(v1 @ (parity_diag * v2))
    p22 = float(v2 @ (parity_diag * v2))
    _, rot = np.linalg.eigh(np.array([[p11, p12], [p12, p22]]))
    odd = rot[0, 0] * v1 + rot[1, 0] * v2
    even = rot[0, 1] * v1 + rot[1, 1] * v2
    even /= np.linalg.norm(even)
    odd /= np.linalg.norm(odd)
    return even, odd


def resolve_degeneracy(
    pairs: list[tuple[float, np.ndarray]],
    config: TruncationConfig,
    parity_diag: np.ndarray | None = None,
) -> GroundStateResult:
    """Turn the two lowest eigenpairs into the reported ground state.

    When the doublet is degenerate at threshold ``epsilon_d`` the ground
    vector is the equal-weight sum of the two sign-fixed members, which for
    a parity doublet is one of the symmetry-broken states; otherwise the
    lowest vector is returned unchanged apart from the sign convention.
    """
    if len(pairs) < 2:
        raise ValueError("resolve_degeneracy needs at least two eigenpairs")
    (e1, v1), (e2, v2) = pairs[0], pairs[1]
    gap = e2 - e1
    denom = abs(e1)
    ratio = gap / denom if denom >= ENERGY_FLOOR else gap
    if ratio > config.epsilon_d:
        parity, vec = _parity_label_and_project(_fix_sign(v1), parity_diag)
        return GroundStateResult(
            energy=e1, vector=vec, degenerate=False, gap=gap,
            residual=math.nan, n_max_used=-1, parity=parity,
        )
    if parity_diag is not None:
        even, odd = _parity_split(v1, v2, parity_diag)
        _, even = _parity_label_and_project(_fix_sign(even), parity_diag)
        _, odd = _parity_label_and_project(_fix_sign(odd), parity_diag)
        members: tuple[np.ndarray, np.ndarray] | None = (even, odd)
        combined = (even + odd) / math.sqrt(2.0)
    else:
        members = (_fix_sign(v1), _fix_sign(v2))
        combined = members[0] + members[1]
    combined = combined / np.linalg.norm(combined)
    parity = "mixed"
    if parity_diag is not None:
        p = float(combined @ (parity_diag * combined))
        if abs(p) >= PARITY_PURITY:  # degenerate but same-parity pair
            parity = "+1" if p > 0 else "-1"
    return GroundStateResult(
        energy=e1, vector=combined, degenerate=True, gap=gap,
        residual=math.nan, n_max_used=-1, parity=parity, members=members,
    )


def truncation_residual(
    params: ModelParams, state: np.ndarray, energy: float, n_max: int
) -> tuple[float, str]:
    """Defect of (energy, state) against the Hamiltonian two photons larger.

    The state is zero-padded into the n_max + 2 space; because no term moves
    more than two photons, H_{n_max+2} applied to the padded state captures
    the full leakage of the truncated eigenpair.  Returns the norm of
    (H psi - E psi) divided by |E|, or the bare norm when |E| is at the
    floor, together with which mode was used.
    """
    big_basis = params.basis(n_max + 2)
    h_big = build_full_hamiltonian(params, big_basis)
    padded = np.zeros(big_basis.dim)
    padded[: state.shape[0]] = state
    defect = float(np.linalg.norm(h_big.matvec(padded) - energy * padded))
    if abs(energy) < ENERGY_FLOOR:
        return defect, "absolute"
    return defect / abs(energy), "relative"


def converge_ground_state(params: ModelParams, config: TruncationConfig | None = None) -> GroundStateResult:
    """Grow the photon cutoff until the enlarged-space residual meets target.

    Stages follow the config growth policy starting at ``n_start``; the last
    stage is returned with ``converged=False`` when the cap is exhausted
    first.  Results are pure functions of (params, config): safe to fan out
    across processes.
    """
    if config is None:
        config = TruncationConfig()
    n_max = config.n_start
    while True:
        basis = params.basis(n_max)
        h = build_full_hamiltonian(params, basis)
        pairs = lowest_eigenpairs(h, k=2)
        resolved = resolve_degeneracy(pairs, config, parity_diag=parity_diagonal(basis))
        residual, mode = truncation_residual(params, resolved.vector, resolved.energy, n_max)
        if residual <= config.epsilon or n_max >= config.n_cap:
            converged = residual <= config.epsilon
            if not converged:
                warnings.warn(
                    f"photon cap n_max={config.n_cap} reached with residual "
                    f"{residual:.3e} > {config.epsilon:.1e} "
                    f"(N={params.n_atoms}, coupling={params.coupling}, kappa={params.kappa})",
                    stacklevel=2,
                )
            return GroundStateResult(
                energy=resolved.energy,
                vector=resolved.vector,
                degenerate=resolved.degenerate,
                gap=resolved.gap,
                residual=residual,
                n_max_used=n_max,
                parity=resolved.parity,
                converged=converged,
                residual_mode=mode,
                basis=basis,
                members=resolved.members,
            )
        n_max = config.next_n_max(n_max)
