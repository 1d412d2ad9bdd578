"""Stresses and displacements around shallow cavities in a gravitational half-plane."""
from .geometry import (CavitySpec, GeometryError, MaterialParams, area_and_resultant,
                       build_case_boundary, cavity_traction, composite_ellipse, initial_stress)
from .annulus_map import CompositeMap, build_verruijt, compose
from .rh_solver import SolverConfig, SolverError
from .pipeline import Solution, solve
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "CavitySpec", "GeometryError", "MaterialParams", "area_and_resultant", "build_case_boundary",
    "cavity_traction", "composite_ellipse", "initial_stress", "CompositeMap", "build_verruijt",
    "compose", "SolverConfig", "SolverError", "Solution", "solve", "BACKEND",
]
