"""Continuous-time quantum walks on cycle graphs and switchable composite graphs.

The package evolves walkers exactly through spectral decompositions, builds
distributed initial states, measures transfer fidelity and peak envelopes,
and relays wave packets between sub-cycles by switching graph edges.
"""

from cyclewalk.errors import (
    CycleWalkError,
    InconsistentStateError,
    InvalidInputError,
    NotLocalizedError,
    SearchHorizonError,
)
from cyclewalk.spectral import (
    CycleSpec,
    SpectralBasis,
    WalkState,
    amplitude_at,
    evolve_cycle,
    probability_profile,
)
from cyclewalk.states import DistributionSpec, make_state, profile_moments

__version__ = "0.1.0"

__all__ = [
    "CycleSpec",
    "CycleWalkError",
    "DistributionSpec",
    "InconsistentStateError",
    "InvalidInputError",
    "NotLocalizedError",
    "SearchHorizonError",
    "SpectralBasis",
    "WalkState",
    "amplitude_at",
    "evolve_cycle",
    "make_state",
    "probability_profile",
    "profile_moments",
]
