"""Compressed Galerkin boundary element solver for the Laplace equation.

Builds the single-layer, double-layer and hypersingular Galerkin matrices on
closed triangle meshes, compresses them with hybrid cross approximation (HCA,
blockwise low-rank) or Green cross approximation (GCA, nested-basis H^2), and
solves Dirichlet-to-Neumann / Neumann-to-Dirichlet problems with CG.
"""

from .mesh import (
    MeshError,
    SurfaceMesh,
    build_octahedron,
    mesh_width,
    project_unit_sphere,
    read_mesh,
    refine_red,
    sphere_mesh,
    write_mesh,
)

__all__ = [
    "MeshError",
    "SurfaceMesh",
    "build_octahedron",
    "mesh_width",
    "project_unit_sphere",
    "read_mesh",
    "refine_red",
    "sphere_mesh",
    "write_mesh",
]
