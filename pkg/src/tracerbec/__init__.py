"""Spectral solvers for a classical tracer particle coupled to a Bose gas field.

Modules: :mod:`.model` (parameters, potentials, grid), :mod:`.spectral`
(transforms, dispersion, critical speed), :mod:`.statics`, :mod:`.twave`
(traveling waves, friction, forced branches), :mod:`.dynamics` (time
evolution), :mod:`.reduced` (effective one-particle law) and :mod:`.cli`.
"""
__version__ = "0.1.0"

from .errors import TracerError
from .kernels import BACKEND
from .model import FourierGrid, ModelParams, PotentialSpec

__all__ = ["BACKEND", "FourierGrid", "ModelParams", "PotentialSpec", "TracerError", "__version__"]
