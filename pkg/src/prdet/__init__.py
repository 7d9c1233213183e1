"""Detection toolkit for coded partial-response recording channels."""

from .channel import (
    LorentzianModel,
    NoiseKind,
    PRTarget,
    e2pr4,
    ideal_pr_output,
    lorentzian_readback,
    snr_to_sigma,
)
from .trellis import Trellis, build_trellis, min_distance_search, path_output

__all__ = [
    "LorentzianModel",
    "NoiseKind",
    "PRTarget",
    "Trellis",
    "build_trellis",
    "e2pr4",
    "ideal_pr_output",
    "lorentzian_readback",
    "min_distance_search",
    "path_output",
    "snr_to_sigma",
]

__version__ = "0.1.0"
