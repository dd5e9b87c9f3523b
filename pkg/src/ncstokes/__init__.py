"""Nonconforming H(grad curl) finite elements on tetrahedra.

Low-order elements with 14 (k=0) and 20 (k=1) degrees of freedom, the
discrete Stokes complex they belong to, and mixed, decoupled and
Schur-complement solvers for the quad-curl problem on the unit cube.
"""
from .mesh import build_uniform_cube_mesh, cell_geometry, classify_boundary
from .spaces import FeFunction, FeSpace, build_space, interpolate

__all__ = [
    "build_uniform_cube_mesh", "cell_geometry", "classify_boundary",
    "FeFunction", "FeSpace", "build_space", "interpolate",
]
__version__ = "0.1.0"
