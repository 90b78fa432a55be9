"""Heralded squeezed Fock states from multimode Gaussian states."""

__version__ = "0.1.0"

from .gaussian_model import SigmaMatrix, UniversalSchemeParams, universal_sigma
from .heralding import (
    DetectionPattern,
    conditional_probability,
    heralded_state,
    optimal_universal_parameter,
    total_probability,
)
from .special_math import WaveParams, sfs_wavefunction
from .synthesis import decompose, reconstruct

__all__ = [
    "DetectionPattern",
    "SigmaMatrix",
    "UniversalSchemeParams",
    "WaveParams",
    "conditional_probability",
    "decompose",
    "heralded_state",
    "optimal_universal_parameter",
    "reconstruct",
    "sfs_wavefunction",
    "total_probability",
    "universal_sigma",
]
