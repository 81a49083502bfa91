"""Simulation and verification toolkit for the discrete quantum Hermite transform."""

from . import (
    calibration,
    corpus,
    discrete_qho,
    fast_forward,
    hermite_sampling,
    learning_testers,
    qht_pipeline,
    spectral_core,
)

__all__ = [
    "spectral_core",
    "discrete_qho",
    "fast_forward",
    "qht_pipeline",
    "hermite_sampling",
    "corpus",
    "learning_testers",
    "calibration",
]

__version__ = "0.1.0"
