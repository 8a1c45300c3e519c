"""Focusing fractional NLS on R^d x T^m: multipliers, functionals, ground states, scans and dynamics."""

from .params import Criticality, Kind, ModelParams
from .spectral import Field, Grid

__all__ = ["Criticality", "Field", "Grid", "Kind", "ModelParams"]
__version__ = "0.1.0"
