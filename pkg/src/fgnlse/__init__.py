"""Finite-gap solutions of the focusing NLSE and their fiber transmission."""

__version__ = "0.1.0"

from .curve import MainSpectrum, build_curve  # noqa: E402
from .fgs import DimensionalSolution, FieldGrid, ScalingParams, ThetaParameters, construct, dimensionalize  # noqa: E402
from .nft import SpectrumEstimate, ZSPotential, find_main_spectrum  # noqa: E402

__all__ = [
    "MainSpectrum",
    "build_curve",
    "ThetaParameters",
    "ScalingParams",
    "DimensionalSolution",
    "FieldGrid",
    "construct",
    "dimensionalize",
    "ZSPotential",
    "SpectrumEstimate",
    "find_main_spectrum",
]
