"""Truncated boson/collective-spin Hilbert spaces and their elementary operators.

All operators are real matrices.  Symmetric ones (Hamiltonians, Jz, Jx,
number operator) certify their symmetry exactly; ladder operators come in
transpose pairs.  Purely imaginary operators (Jy, the Y quadrature) are
represented by their real antisymmetric generator, see
:class:`ImaginaryAntisymOperator`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class FockTruncation:
    """Photon space restricted to at most ``n_max`` excitations.

    ``n_max >= 2`` because the two-photon term couples n to n +/- 2; a
    smaller cutoff cannot even represent one application of it.
    """

    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ValueError(f"n_max must be an integer >= 2, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class DickeSpace:
    """Symmetric sector of ``n_atoms`` two-level systems: fixed j = N/2."""

    n_atoms: int

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be an integer >= 1, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))

    @property
    def j(self) -> float:
        return self.n_atoms / 2.0

    @property
    def dim(self) -> int:
        return self.n_atoms + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers -j ... +j in ascending order."""
        return np.arange(self.dim) - self.j


@dataclass(frozen=True)
class ProductBasis:
    """Flat indexing of the photon (x) ensemble product space.

    The ordering is photon-major with m ascending:
    ``index = n * (N + 1) + (m + N/2)``.  This is fixed so that state-vector
    dumps and coefficient reshapes are reproducible across runs.
    """

    fock: FockTruncation
    dicke: DickeSpace

    @property
    def dim(self) -> int:
        return self.fock.dim * self.dicke.dim

    def flatten(self, n: int, m: float) -> int:
        k = m + self.dicke.j
        ki = int(round(k))
        if abs(k - ki) > 1e-12 or not (0 <= ki < self.dicke.dim):
            raise ValueError(f"m={m} is not a valid magnetic number for N={self.dicke.n_atoms}")
        if not (0 <= n <= self.fock.n_max):
            raise ValueError(f"n={n} outside truncation 0..{self.fock.n_max}")
        return n * self.dicke.dim + ki

    def unflatten(self, index: int) -> tuple[int, float]:
        if not (0 <= index < self.dim):
            raise IndexError(f"flat index {index} outside 0..{self.dim - 1}")
        n, k = divmod(index, self.dicke.dim)
        return n, k - self.dicke.j

    def coefficient_matrix(self, state: np.ndarray) -> np.ndarray:
        """View a flat state vector as the (n_max+1, N+1) coefficient array."""
        state = np.asarray(state)
        if state.shape != (self.dim,):
            raise ValueError(f"state has shape {state.shape}, expected ({self.dim},)")
        return state.reshape(self.fock.dim, self.dicke.dim)


class RealOperator:
    """A real matrix in either sparse (CSR) or dense storage, one interface.

    Construction routines in this package guarantee finite entries; the
    symmetry certificate is an exact entrywise check, not a tolerance one.
    """

    __slots__ = ("_mat", "_sparse")

    def __init__(self, matrix) -> None:
        if sp.issparse(matrix):
            m = matrix.tocsr()
            m.sum_duplicates()
            data = m.data
            self._sparse = True
        else:
            m = np.asarray(matrix, dtype=float)
            data = m
            self._sparse = False
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("operator contains non-finite entries")
        self._mat = m

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @property
    def is_sparse(self) -> bool:
        return self._sparse

    def dense(self) -> np.ndarray:
        return self._mat.toarray() if self._sparse else np.array(self._mat)

    def csr(self) -> sp.csr_matrix:
        return self._mat.copy() if self._sparse else sp.csr_matrix(self._mat)

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self._mat @ np.asarray(vec, dtype=float)

    def diagonal(self) -> np.ndarray:
        return np.asarray(self._mat.diagonal()) if self._sparse else np.diagonal(self._mat).copy()

    def is_symmetric(self) -> bool:
        """Exact symmetry certificate: entries(i, j) == entries(j, i) bitwise."""
        if self._sparse:
            diff = self._mat - self._mat.T
            return diff.nnz == 0 or not np.any(diff.data != 0.0)
        return bool(np.array_equal(self._mat, self._mat.T))

    @property
    def T(self) -> "RealOperator":
        return RealOperator(self._mat.T.tocsr() if self._sparse else self._mat.T)

    def __add__(self, other: "RealOperator") -> "RealOperator":
        self._check_dim(other)
        return RealOperator(self._mat + other._mat)

    def __sub__(self, other: "RealOperator") -> "RealOperator":
        self._check_dim(other)
        return RealOperator(self._mat - other._mat)

    def __mul__(self, scalar: float) -> "RealOperator":
        return RealOperator(self._mat * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "RealOperator") -> "RealOperator":
        self._check_dim(other)
        return RealOperator(self._mat @ other._mat)

    def _check_dim(self, other: "RealOperator") -> None:
        if not isinstance(other, RealOperator):
            raise TypeError(f"expected RealOperator, got {type(other).__name__}")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __repr__(self) -> str:
        kind = "sparse" if self._sparse else "dense"
        return f"RealOperator(dim={self.dim}, storage={kind})"


class ImaginaryAntisymOperator:
    """An operator of the form i*K with K real antisymmetric (Jy, quadrature Y).

    For real state vectors the expectation of i*K vanishes identically and
    the second moment is the positive quadratic form |K psi|^2, so all
    arithmetic stays real.
    """

    __slots__ = ("_k",)

    def __init__(self, generator: RealOperator) -> None:
        k = generator.csr()
        diff = k + k.T
        if diff.nnz and np.any(diff.data != 0.0):
            raise ValueError("generator must be exactly antisymmetric")
        self._k = k

    @property
    def dim(self) -> int:
        return self._k.shape[0]

    def generator(self) -> RealOperator:
        """The real antisymmetric K such that the operator equals i*K."""
        return RealOperator(self._k)

    def expectation(self, state: np.ndarray) -> float:
        # <psi| iK |psi> = i * psi^T K psi = 0 exactly for real psi.
        return 0.0

    def second_moment(self, state: np.ndarray) -> float:
        """<psi|(iK)^2|psi> = |K psi|^2, since (iK)^2 = K^T K for antisymmetric K."""
        v = self._k @ np.asarray(state, dtype=float)
        return float(v @ v)


def annihilator(fock: FockTruncation, storage: str = "sparse") -> tuple[RealOperator, RealOperator]:
    """Ladder pair (a, a_dagger) on the truncated photon space.

    a|n> = sqrt(n)|n-1>, a|0> = 0 and, at the cutoff, a_dagger|n_max> = 0;
    the two returned operators are exact transposes of each other.
    """
    dim = fock.dim
    off = np.sqrt(np.arange(1.0, dim))
    if storage == "sparse":
        a = sp.diags(off, offsets=1, shape=(dim, dim), format="csr")
        return RealOperator(a), RealOperator(a.T.tocsr())
    if storage == "dense":
        a = np.diag(off, k=1)
        return RealOperator(a), RealOperator(a.T)
    raise ValueError(f"unknown storage {storage!r}")


@dataclass(frozen=True)
class SpinOperators:
    """Collective spin matrices on the (N+1)-dimensional symmetric sector."""

    jz: RealOperator
    jplus: RealOperator
    jminus: RealOperator
    jx: RealOperator
    space: DickeSpace = field(repr=False)

    def jy_generator(self) -> ImaginaryAntisymOperator:
        """Jy = (J+ - J-)/(2i) represented as i*K with K = -(J+ - J-)/2."""
        k = -0.5 * (self.jplus - self.jminus)
        return ImaginaryAntisymOperator(k)


def collective_spin(dicke: DickeSpace, storage: str = "sparse") -> SpinOperators:
    """Jz, J+/-, Jx in the |j, m> basis, m ascending from -j to +j.

    J+-|j, m> = sqrt(j(j+1) - m(m +/- 1)) |j, m +/- 1>, Jx = (J+ + J-)/2.
    """
    j = dicke.j
    m = dicke.m_values()
    ladder = np.sqrt(j * (j + 1.0) - m[:-1] * (m[:-1] + 1.0))
    if storage == "sparse":
        jz = sp.diags(m, format="csr")
        jp = sp.diags(ladder, offsets=-1, shape=(dicke.dim, dicke.dim), format="csr")
    elif storage == "dense":
        jz = np.diag(m)
        jp = np.diag(ladder, k=-1)
    else:
        raise ValueError(f"unknown storage {storage!r}")
    jplus = RealOperator(jp)
    jminus = jplus.T
    jx = 0.5 * (jplus + jminus)
    return SpinOperators(jz=RealOperator(jz), jplus=jplus, jminus=jminus, jx=jx, space=dicke)


def identity(dim: int, storage: str = "sparse") -> RealOperator:
    if storage == "sparse":
        return RealOperator(sp.identity(dim, format="csr"))
    return RealOperator(np.eye(dim))


def tensor_product(op_fock: RealOperator, op_dicke: RealOperator, basis: ProductBasis | None = None) -> RealOperator:
    """Kronecker product consistent with the photon-major flat ordering.

    (A (x) B)[(n,m),(n',m')] = A[n,n'] B[m,m'] under index = n*(N+1) + (m+j).
    """
    if basis is not None:
        if op_fock.dim != basis.fock.dim or op_dicke.dim != basis.dicke.dim:
            raise ValueError(
                f"factor dims ({op_fock.dim}, {op_dicke.dim}) do not match basis "
                f"({basis.fock.dim}, {basis.dicke.dim})"
            )
    if op_fock.is_sparse or op_dicke.is_sparse:
        return RealOperator(sp.kron(op_fock.csr(), op_dicke.csr(), format="csr"))
    return RealOperator(np.kron(op_fock.dense(), op_dicke.dense()))
