"""Closed-form predictions: transformed parameters, critical couplings,
mean-field self-consistency and the separable limit states.

The mean-field branch uses the classical image of the full Hamiltonian,
in which the quadratic field term contributes 4*kappa*alpha^2 and the
ensemble term -(N/2)*sqrt(omega_a^2 + 16 g^2 alpha^2 / N).  Only this
variant is simultaneously consistent with the strong-coupling threshold,
the strong-regime energy, and the reference photon numbers; the published
text writes two of the intermediate coefficients differently and those
literal variants are kept available for comparison via ``convention``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import ModelParams
from .operators import ProductBasis

#: Validity guard for the small-parameter expansions behind the weak-coupling
#: transforms; outputs annotate when eta or xi exceed this.
WEAK_VALIDITY_BOUND = 0.1

#: Coherent-state weight allowed to fall outside the photon cutoff before a
#: truncation warning is emitted.
COHERENT_LOSS_WARN = 1e-8


@dataclass(frozen=True)
class TransformedParams:
    """Parameters after the squeeze and displacement-rotation transforms."""

    eta: float
    omega_f_tilde: float
    g_tilde: float
    kappa_tilde: float
    xi: float
    omega_a_tilde: float
    lambda_tilde: float

    @property
    def eta_valid(self) -> bool:
        return self.eta < WEAK_VALIDITY_BOUND

    @property
    def xi_valid(self) -> bool:
        return abs(self.xi) < WEAK_VALIDITY_BOUND

    @property
    def within_weak_regime(self) -> bool:
        return self.eta_valid and self.xi_valid


def transformed_params(params: ModelParams) -> TransformedParams:
    """Squeeze parameter eta plus the renormalized frequencies and couplings."""
    w_f, w_a, kap, lam = params.omega_f, params.omega_a, params.kappa, params.coupling
    eta = kap / (2.0 * (w_f + 2.0 * kap))
    w_f_t = w_f * (w_f + 4.0 * kap) / (w_f + 2.0 * kap)
    g_t = lam * (w_f + kap) / (w_f + 2.0 * kap)
    kap_t = kap * w_f / (w_f + 2.0 * kap)
    xi = g_t / (math.sqrt(params.n_atoms) * (w_a + w_f_t))
    w_a_t = 2.0 * g_t**2 / (params.n_atoms * (w_a + w_f_t))
    lam_t = 2.0 * w_f_t * g_t / (w_a + w_f_t)
    return TransformedParams(
        eta=eta, omega_f_tilde=w_f_t, g_tilde=g_t, kappa_tilde=kap_t,
        xi=xi, omega_a_tilde=w_a_t, lambda_tilde=lam_t,
    )


def critical_coupling_weak(params: ModelParams) -> float:
    """Threshold of the transformed rotating-wave model.

    Solves lambda_tilde(lambda) = sqrt(omega_a * omega_f_tilde) in closed
    form; reduces to (omega_a + omega_f)/2 * sqrt(omega_a/omega_f) when the
    nonlinearity vanishes.
    """
    w_f, w_a, kap = params.omega_f, params.omega_a, params.kappa
    prefactor = (w_f * (w_a + w_f) + 2.0 * kap * (w_a + 2.0 * w_f)) / (2.0 * (w_f + kap))
    root = math.sqrt(w_a * (w_f + 2.0 * kap) / (w_f * (w_f + 4.0 * kap)))
    return prefactor * root


def critical_coupling_strong(params: ModelParams) -> float:
    """Mean-field threshold: half the geometric mean of omega_a and omega_f + 4 kappa."""
    return 0.5 * math.sqrt(params.omega_a * (params.omega_f + 4.0 * params.kappa))


def classical_energy(params: ModelParams, alpha_r: float, convention: str = "consistent") -> float:
    """Ground energy of the model with the field frozen at real amplitude alpha_r.

    ``consistent``: (omega_f + 4 kappa) alpha^2 - (N/2) sqrt(omega_a^2 + 16 g^2 alpha^2 / N),
    the exact classical image of the full Hamiltonian.  ``literal`` keeps the
    published kappa * alpha^2 field term for comparison.
    """
    n, g = params.n_atoms, params.coupling
    quad = 4.0 * params.kappa if convention == "consistent" else params.kappa
    if convention not in ("consistent", "literal"):
        raise ValueError(f"unknown convention {convention!r}")
    field = (params.omega_f + quad) * alpha_r**2
    spin = -0.5 * n * math.sqrt(params.omega_a**2 + 16.0 * g**2 * alpha_r**2 / n)
    return field + spin


@dataclass(frozen=True)
class MeanFieldSolution:
    """Stationary coherent amplitude, auxiliary superposition weight, energy."""

    alpha_r: float
    alpha_i: float
    beta_aux: float
    energy: float
    superradiant: bool

    @property
    def alpha_sq(self) -> float:
        return self.alpha_r**2

    n_atoms: int

    @property
    def mean_jz(self) -> float:
        """Population difference (N/2)(beta^2 - 1)/(beta^2 + 1) of the product state."""
        b2 = self.beta_aux**2
        return 0.5 * self.n_atoms * (b2 - 1.0) / (b2 + 1.0)


def mean_field_solution(params: ModelParams, convention: str = "consistent") -> MeanFieldSolution:
    """Minimize the classical energy over the coherent amplitude.

    Above the strong-coupling threshold the closed-form minimizer is

        alpha_r^2 = N [16 g^4 - omega_a^2 (omega_f + 4 kappa)^2]
                    / [16 g^2 (omega_f + 4 kappa)^2]

    (``literal`` divides by 4 g^2 instead, as printed in the source text);
    below threshold the normal branch alpha_r = 0, beta = 0 is returned with
    energy -N omega_a / 2.
    """
    if convention not in ("consistent", "literal"):
        raise ValueError(f"unknown convention {convention!r}")
    n, g, w_a = params.n_atoms, params.coupling, params.omega_a
    stiff = params.omega_f + 4.0 * params.kappa
    lam_s = critical_coupling_strong(params)
    if g <= lam_s:
        return MeanFieldSolution(
            alpha_r=0.0, alpha_i=0.0, beta_aux=0.0,
            energy=-0.5 * n * w_a, superradiant=False, n_atoms=n,
        )
    numer = n * (16.0 * g**4 - w_a**2 * stiff**2)
    denom = (16.0 if convention == "consistent" else 4.0) * g**2 * stiff**2
    alpha_sq = numer / denom
    alpha_r = math.sqrt(alpha_sq)
    beta = (w_a * stiff - 4.0 * g**2) / math.sqrt(16.0 * g**4 - w_a**2 * stiff**2)
    if convention == "consistent":
        energy = -n * (16.0 * g**4 + w_a**2 * stiff**2) / (16.0 * g**2 * stiff)
    else:
        energy = classical_energy(params, alpha_r, convention="literal")
    return MeanFieldSolution(
        alpha_r=alpha_r, alpha_i=0.0, beta_aux=beta,
        energy=energy, superradiant=True, n_atoms=n,
    )


def weak_ground_state(params: ModelParams, basis: ProductBasis) -> tuple[np.ndarray, float]:
    """Separable weak-coupling state and its analytic energy.

    The field is (|0> - eta |2>)/sqrt(1 + eta^2), the ensemble fully
    de-excited; the energy is kappa_tilde - N omega_a / 2.
    """
    t = transformed_params(params)
    vec = np.zeros(basis.dim)
    norm = math.sqrt(1.0 + t.eta**2)
    vec[basis.flatten(0, -basis.dicke.j)] = 1.0 / norm
    vec[basis.flatten(2, -basis.dicke.j)] = -t.eta / norm
    energy = t.kappa_tilde - 0.5 * params.n_atoms * params.omega_a
    return vec, energy


def _coherent_amplitudes(alpha: float, n_max: int) -> tuple[np.ndarray, float]:
    """Truncated coherent-state coefficients and the weight lost to the cutoff.

    Evaluated in log space so amplitudes stay finite for alpha^2 ~ 10^2.
    """
    n = np.arange(n_max + 1)
    if alpha == 0.0:
        amps = np.zeros(n_max + 1)
        amps[0] = 1.0
        return amps, 0.0
    log_abs = -0.5 * alpha**2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
    amps = np.exp(log_abs)
    if alpha < 0:
        amps *= (-1.0) ** n
    weight = float(amps @ amps)
    loss = max(0.0, 1.0 - weight)
    return amps / math.sqrt(weight), loss


def _ensemble_product_amplitudes(beta: float, n_atoms: int) -> np.ndarray:
    """Dicke-basis coefficients of the N-fold product of (|g> + beta |e>).

    Coefficient on k excitations is sqrt(C(N, k)) beta^k / (1 + beta^2)^(N/2).
    """
    k = np.arange(n_atoms + 1)
    log_binom = gammaln(n_atoms + 1.0) - gammaln(k + 1.0) - gammaln(n_atoms - k + 1.0)
    signs = np.sign(beta) ** k if beta < 0 else np.ones(n_atoms + 1)
    with np.errstate(divide="ignore"):
        log_beta = k * math.log(abs(beta)) if beta != 0.0 else np.where(k == 0, 0.0, -np.inf)
    amps = signs * np.exp(0.5 * log_binom + log_beta)
    return amps / math.sqrt(amps @ amps)


@dataclass(frozen=True)
class StrongGroundState:
    """Coherent-times-product state, its parity partner combinations, energy."""

    broken: np.ndarray
    symmetrized_even: np.ndarray
    symmetrized_odd: np.ndarray
    energy: float
    truncation_loss: float


def strong_ground_state(params: ModelParams, basis: ProductBasis) -> StrongGroundState:
    """Separable strong-coupling state on the given truncation.

    Returns the alpha_r > 0 broken state |alpha> (x) |v>^N (renormalized
    after the cutoff; the lost weight is reported and warned about above
    1e-8) together with the even/odd combinations with its alpha_r < 0
    partner, and the analytic energy.
    """
    mf = mean_field_solution(params)
    n_max = basis.fock.n_max
    field_p, loss = _coherent_amplitudes(mf.alpha_r, n_max)
    field_m, _ = _coherent_amplitudes(-mf.alpha_r, n_max)
    atoms_p = _ensemble_product_amplitudes(mf.beta_aux, params.n_atoms)
    atoms_m = _ensemble_product_amplitudes(-mf.beta_aux, params.n_atoms)
    if loss > COHERENT_LOSS_WARN:
        warnings.warn(
            f"coherent weight {loss:.3e} beyond n_max={n_max}; "
            "increase the truncation for a faithful strong-regime state",
            stacklevel=2,
        )
    broken = np.kron(field_p, atoms_p)
    partner = np.kron(field_m, atoms_m)
    even = broken + partner
    even /= np.linalg.norm(even)
    odd = broken - partner
    odd_norm = np.linalg.norm(odd)
    # at alpha_r = 0 the two branches coincide and the odd combination is null
    odd = odd / odd_norm if odd_norm > 1e-12 else np.zeros_like(odd)
    if mf.superradiant:
        energy = mf.energy
    else:
        energy = -0.5 * params.n_atoms * params.omega_a
    return StrongGroundState(
        broken=broken, symmetrized_even=even, symmetrized_odd=odd,
        energy=energy, truncation_loss=loss,
    )
