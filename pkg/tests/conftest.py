"""Shared fixtures: cached benchmark-marker evaluations and hypothesis profile."""

from __future__ import annotations

import pytest
from hypothesis import settings

from dicke_pdc.model import ModelParams
from dicke_pdc.spectral import TruncationConfig, converge_ground_state

settings.register_profile("ci", derandomize=True, max_examples=50, deadline=None)
settings.load_profile("ci")

MARKER_COUPLING = {2: 3.323, 5: 3.019}
MARKER_KAPPAS = (0.0, 0.3, 2.4, 4.8)


@pytest.fixture(scope="session")
def marker_state():
    """Memoized ground states at the eight benchmark markers."""
    cache: dict[tuple[int, float], object] = {}

    def get(n_atoms: int, kappa: float):
        key = (n_atoms, kappa)
        if key not in cache:
            params = ModelParams(
                n_atoms=n_atoms, coupling=MARKER_COUPLING[n_atoms], kappa=kappa
            )
            cache[key] = converge_ground_state(params, TruncationConfig())
        return cache[key]

    return get
