"""Hamiltonian assembly for the ensemble-field model and its parity symmetry.

Units: hbar = 1 and all frequencies are quoted in units of the atomic
transition frequency, so omega_a defaults to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .operators import (
    DickeSpace,
    FockTruncation,
    ProductBasis,
    RealOperator,
    annihilator,
    collective_spin,
    identity,
    tensor_product,
)

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of one evaluation point.

    ``coupling`` is the linear atom-field coupling strength (the sweep axis),
    ``kappa`` the two-photon nonlinearity.  The field frequency ``omega_f``
    is the effective one that multiplies the number operator; the model never
    asks for a bare pump-referenced frequency.
    """

    n_atoms: int
    coupling: float
    kappa: float
    omega_a: float = 1.0
    omega_f: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be an integer >= 1, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        for name in ("coupling", "kappa", "omega_a", "omega_f"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val!r}")
            object.__setattr__(self, name, val)
        if self.omega_a <= 0 or self.omega_f <= 0:
            raise ValueError("omega_a and omega_f must be positive")
        if self.coupling < 0 or self.kappa < 0:
            raise ValueError("coupling and kappa must be non-negative")

    def basis(self, n_max: int) -> ProductBasis:
        return ProductBasis(FockTruncation(n_max), DickeSpace(self.n_atoms))


def _check_basis(params: ModelParams, basis: ProductBasis) -> None:
    if basis.dicke.n_atoms != params.n_atoms:
        raise ValueError(
            f"basis is for N={basis.dicke.n_atoms} atoms but params have N={params.n_atoms}"
        )


def build_full_hamiltonian(params: ModelParams, basis: ProductBasis) -> RealOperator:
    """Number + ensemble splitting + counter-rotating coupling + two-photon term.

    H = omega_f a'a (x) 1 + omega_a 1 (x) Jz
        + (coupling/sqrt(N)) (a + a') (x) (J+ + J-)
        + kappa (a + a')^2 (x) 1

    The coupling is written with (J+ + J-) so that dropping its
    counter-rotating half reproduces ``build_dicke_hamiltonian`` with the
    same normalization.  Writing it with Jx = (J+ + J-)/2 instead would
    double the superradiant threshold and none of the reference statistics
    (mean photon number, population difference) would be reproduced.

    Every term is the projection of the infinite-space operator onto the
    truncated span, so the quadratic piece enters expanded as
    a^2 + a'^2 + 2a'a + 1 rather than as a square of truncated factors
    (those differ on the n = n_max diagonal).  Projection nesting makes the
    ground energy exactly non-increasing as the cutoff grows.
    """
    _check_basis(params, basis)
    a, ad = annihilator(basis.fock)
    spin = collective_spin(basis.dicke)
    i_f = identity(basis.fock.dim)
    i_d = identity(basis.dicke.dim)
    number = ad @ a
    h = tensor_product(params.omega_f * number, i_d, basis)
    h = h + tensor_product(i_f, params.omega_a * spin.jz, basis)
    g = params.coupling / math.sqrt(params.n_atoms)
    h = h + tensor_product(g * (a + ad), spin.jplus + spin.jminus, basis)
    quad = a @ a + ad @ ad + 2.0 * number + identity(basis.fock.dim)
    h = h + tensor_product(params.kappa * quad, i_d, basis)
    return h


def build_dicke_hamiltonian(params: ModelParams, basis: ProductBasis) -> RealOperator:
    """Rotating-wave model: H = omega_f a'a + omega_a Jz + (g/sqrt(N))(a J+ + a' J-).

    This variant conserves the total excitation number away from the photon
    cutoff; its ground state is exactly |0>|j,-j> below the threshold
    sqrt(omega_a * omega_f).
    """
    _check_basis(params, basis)
    a, ad = annihilator(basis.fock)
    spin = collective_spin(basis.dicke)
    i_f = identity(basis.fock.dim)
    i_d = identity(basis.dicke.dim)
    h = tensor_product(params.omega_f * (ad @ a), i_d, basis)
    h = h + tensor_product(i_f, params.omega_a * spin.jz, basis)
    g = params.coupling / math.sqrt(params.n_atoms)
    h = h + tensor_product(g * a, spin.jplus, basis)
    h = h + tensor_product(g * ad, spin.jminus, basis)
    return h


def build_pdc_hamiltonian(params: ModelParams, basis: ProductBasis) -> RealOperator:
    """Two-photon creation/annihilation term alone: kappa (a^2 + a'^2) (x) 1."""
    _check_basis(params, basis)
    a, ad = annihilator(basis.fock)
    i_d = identity(basis.dicke.dim)
    return tensor_product(params.kappa * (a @ a + ad @ ad), i_d, basis)


def parity_operator(basis: ProductBasis) -> RealOperator:
    """Diagonal Z2 symmetry with entry (-1)^(n + m + N/2) on state (n, m).

    Commutes exactly with the full Hamiltonian (the coupling changes n + m
    parity by 0 or 2, the two-photon term by 0 or 2), including at the
    photon cutoff.
    """
    return RealOperator(sp.diags(parity_diagonal(basis), format="csr"))


def parity_diagonal(basis: ProductBasis) -> np.ndarray:
    """The +/-1 entries of the parity operator as a flat vector."""
    n_sign = (-1.0) ** np.arange(basis.fock.dim)
    k_sign = (-1.0) ** np.arange(basis.dicke.dim)
    return np.kron(n_sign, k_sign)
