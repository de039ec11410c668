"""Ground-state laboratory for a finite two-level ensemble coupled to a
degenerate parametric field mode: operators, exact diagonalization,
closed-form limits, entanglement and squeezing statistics, grid sweeps."""

__version__ = "0.1.0"

from .model import ModelParams
from .operators import DickeSpace, FockTruncation, ProductBasis
from .spectral import GroundStateResult, TruncationConfig, converge_ground_state

__all__ = [
    "__version__",
    "ModelParams",
    "DickeSpace",
    "FockTruncation",
    "ProductBasis",
    "GroundStateResult",
    "TruncationConfig",
    "converge_ground_state",
]
