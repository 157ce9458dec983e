"""Probabilistic N -> M universal quantum cloning by symmetrization.

Two engines: :mod:`symclone.cloning` applies symmetric-subspace projectors to
density matrices; :mod:`symclone.fock` propagates photons through the
beam-splitter chain, and :mod:`symclone.detection` counts the coincidences
that herald each symmetric component.
"""

from .algebra import (
    DensityMatrix,
    PureQubit,
    partial_trace,
    state_fidelity,
    symmetric_basis_state,
    symmetric_projector,
    tensor,
)
from .cloning import (
    CloningOutcome,
    CloningSpec,
    EnhancementReport,
    chain_clone,
    clone_map,
    fidelity_from_ratio_12,
    fidelity_from_ratio_23,
    fidelity_from_ratios_13,
    ideal_enhancements,
    success_probability,
    theoretical_fidelity,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "PureQubit",
    "partial_trace",
    "state_fidelity",
    "symmetric_basis_state",
    "symmetric_projector",
    "tensor",
    "CloningOutcome",
    "CloningSpec",
    "EnhancementReport",
    "chain_clone",
    "clone_map",
    "fidelity_from_ratio_12",
    "fidelity_from_ratio_23",
    "fidelity_from_ratios_13",
    "ideal_enhancements",
    "success_probability",
    "theoretical_fidelity",
]
