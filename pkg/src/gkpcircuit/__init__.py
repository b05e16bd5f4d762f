"""Numerics for a gyrator-based circuit hosting Gottesman-Kitaev-Preskill states."""
from .core import *  # noqa: F401,F403
from .operators import Basis, Operator, displacement_matrix, ladder_matrix  # noqa: F401

__version__ = "0.1.0"
