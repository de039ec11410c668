"""Field and ensemble statistics of a ground-state vector.

Quadrature convention: X = a' + a and Y = i(a' - a), so a coherent state has
var X = var Y = 1 and the Heisenberg product is bounded below by 1.  All
states handled here are real in the product basis; odd moments of Y and Jy
then vanish identically and their second moments are positive quadratic
forms of real matrices.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .operators import ProductBasis, RealOperator, annihilator, collective_spin

#: Variances this far below zero are treated as round-off and clamped;
#: anything more negative indicates a genuinely broken input and raises.
VARIANCE_TOLERANCE = -1e-12

#: When <Jx>^2 falls below this, the phase-uncertainty product is reported
#: as the saturated sentinel +inf instead of an arbitrary noise-floor number.
PHASE_MEAN_SQ_FLOOR = 1e-24

NORM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ObservableRecord:
    """Full statistics panel for one state: photon, quadrature, spin, distributions."""

    mean_n: float
    var_n: float
    var_x: float
    var_y: float
    uncertainty_xy: float
    mean_jx: float
    var_jx: float
    mean_jy: float
    var_jy: float
    mean_jz: float
    var_jz: float
    phase_uncertainty_product: float
    photon_distribution: np.ndarray = field(repr=False)
    angmom_distribution: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "mean_n": self.mean_n,
            "var_n": self.var_n,
            "var_X": self.var_x,
            "var_Y": self.var_y,
            "uncert_XY": self.uncertainty_xy,
            "mean_Jx": self.mean_jx,
            "var_Jx": self.var_jx,
            "mean_Jy": self.mean_jy,
            "var_Jy": self.var_jy,
            "mean_Jz": self.mean_jz,
            "var_Jz": self.var_jz,
            "phase_product": self.phase_uncertainty_product,
            "photon_distribution": list(self.photon_distribution),
            "angmom_distribution": list(self.angmom_distribution),
        }


def _check_state(state: np.ndarray, dim: int) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if state.shape != (dim,):
        raise ValueError(f"state has shape {state.shape}, expected ({dim},)")
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state norm {norm} departs from 1 beyond {NORM_TOLERANCE}")
    return state


def _clamp_variance(value: float, label: str) -> float:
    if value >= 0.0:
        return value
    if value >= VARIANCE_TOLERANCE:
        warnings.warn(f"{label} variance {value:.3e} clamped to 0", stacklevel=3)
        return 0.0
    raise ValueError(f"{label} variance {value:.3e} below tolerance {VARIANCE_TOLERANCE:.0e}")


def expectation(state: np.ndarray, op: RealOperator) -> float:
    """<psi|O|psi> for a unit-norm real state."""
    state = _check_state(state, op.dim)
    return float(state @ op.matvec(state))


def quadrature_variances(state: np.ndarray, basis: ProductBasis) -> tuple[float, float, float]:
    """(var X, var Y, var X * var Y) of the field factor.

    Y moments never leave real arithmetic: <Y> = 0 for real states and
    <Y^2> = |(a' - a) psi|^2.
    """
    c = basis.coefficient_matrix(_check_state(state, basis.dim))
    a, ad = annihilator(basis.fock)
    x = (a + ad).csr()
    xc = x @ c
    mean_x = float(np.sum(c * xc))
    var_x = _clamp_variance(float(np.sum(xc * xc)) - mean_x**2, "X")
    k = (ad - a).csr()
    kc = k @ c
    var_y = _clamp_variance(float(np.sum(kc * kc)), "Y")
    return var_x, var_y, var_x * var_y


def angular_momentum_panel(
    state: np.ndarray, basis: ProductBasis
) -> tuple[dict[str, float], float]:
    """Means and variances of Jx, Jy, Jz plus the population-phase product.

    The product is 4 var(Jz) var(Jy) / <Jx>^2; once <Jx>^2 is below the
    noise floor it is reported as +inf (serialized as the string "inf"),
    since any finite value there only measures solver round-off.
    """
    c = basis.coefficient_matrix(_check_state(state, basis.dim))
    spin = collective_spin(basis.dicke, storage="dense")
    m = basis.dicke.m_values()
    pm = np.sum(c * c, axis=0)
    mean_jz = float(m @ pm)
    var_jz = _clamp_variance(float((m**2) @ pm) - mean_jz**2, "Jz")
    jx = spin.jx.dense()
    cjx = c @ jx.T
    mean_jx = float(np.sum(c * cjx))
    var_jx = _clamp_variance(float(np.sum(cjx * cjx)) - mean_jx**2, "Jx")
    ky = -0.5 * (spin.jplus - spin.jminus)
    cky = c @ ky.dense().T
    mean_jy = 0.0
    var_jy = _clamp_variance(float(np.sum(cky * cky)), "Jy")
    if mean_jx**2 < PHASE_MEAN_SQ_FLOOR:
        product = math.inf
    else:
        product = 4.0 * var_jz * var_jy / mean_jx**2
    panel = {
        "mean_jx": mean_jx, "var_jx": var_jx,
        "mean_jy": mean_jy, "var_jy": var_jy,
        "mean_jz": mean_jz, "var_jz": var_jz,
    }
    return panel, product


def distributions(state: np.ndarray, basis: ProductBasis) -> tuple[np.ndarray, np.ndarray]:
    """Marginal photon-number and magnetic-number distributions.

    P(n) = sum_m |c_nm|^2 and P(m) = sum_n |c_nm|^2; both must sum to one
    within 1e-10 or the input was not a normalized product-basis state.
    """
    c = basis.coefficient_matrix(_check_state(state, basis.dim))
    w = c * c
    p_n = w.sum(axis=1)
    p_m = w.sum(axis=0)
    for name, p in (("P(n)", p_n), ("P(m)", p_m)):
        total = float(p.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"{name} sums to {total}, expected 1 within 1e-10")
    return p_n, p_m


def observe(state: np.ndarray, basis: ProductBasis) -> ObservableRecord:
    """Assemble the complete panel for one state."""
    p_n, p_m = distributions(state, basis)
    n = np.arange(basis.fock.dim)
    mean_n = float(n @ p_n)
    var_n = _clamp_variance(float((n.astype(float) ** 2) @ p_n) - mean_n**2, "n")
    var_x, var_y, prod_xy = quadrature_variances(state, basis)
    panel, phase_product = angular_momentum_panel(state, basis)
    return ObservableRecord(
        mean_n=mean_n,
        var_n=var_n,
        var_x=var_x,
        var_y=var_y,
        uncertainty_xy=prod_xy,
        mean_jx=panel["mean_jx"],
        var_jx=panel["var_jx"],
        mean_jy=panel["mean_jy"],
        var_jy=panel["var_jy"],
        mean_jz=panel["mean_jz"],
        var_jz=panel["var_jz"],
        phase_uncertainty_product=phase_product,
        photon_distribution=p_n,
        angmom_distribution=p_m,
    )
