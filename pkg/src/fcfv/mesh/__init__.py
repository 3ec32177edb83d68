from .core import (
    DIRICHLET,
    INTERIOR,
    NEUMANN,
    CellGeometry,
    DegenerateCellError,
    MeshError,
    NonManifoldError,
    SimplicialMesh,
    build_connectivity,
    cell_geometry,
    local_faces,
    stretching_factor,
)
from .generate import distort, generate_structured, stretch, structured_from_coords
from .io import MeshFormatError, read_mesh, write_mesh
from .refine import CellLocator, RefinementWarning, bisect, piecewise_constant, refine_by_sizemap

__all__ = [
    "DIRICHLET", "INTERIOR", "NEUMANN", "CellGeometry", "CellLocator", "DegenerateCellError",
    "MeshError", "MeshFormatError", "NonManifoldError", "RefinementWarning", "SimplicialMesh",
    "bisect", "build_connectivity", "cell_geometry", "distort", "generate_structured",
    "local_faces", "piecewise_constant", "read_mesh", "refine_by_sizemap", "stretch",
    "stretching_factor", "structured_from_coords", "write_mesh",
]
