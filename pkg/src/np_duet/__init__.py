"""Spectral solutions of the conductivity problem for two disks."""

from .errors import *  # noqa: F401,F403
from .geometry import DiskPair, Frame, Zone, derive_geometry, forward_map, inverse_map
from .harmonic_data import HarmonicPair, SourcePiece, SourceSpec
from .solver import FieldSolution, solve_field
from .spectrum import ModeCoefficients, lambda_from_k, solve_modes

__version__ = "0.1.0"
