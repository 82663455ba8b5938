"""Chain domains, Neumann spectra and nodal domain counts."""

from .errors import ChainlabError
from .geometry import (
    DomainConfig,
    GeometricConstants,
    NeckSpec,
    PieceSpec,
    RealizedDomain,
    WidthFamily,
    build_chain_domain,
    estimate_geometric_constants,
    load_config,
)
from .mesh import TriMesh, triangulate
from .fem import EigenPair, Spectrum, assemble, solve, solve_mesh
from .nodal import ClassifierParams, classify_nodal_domains, courant_report, extract_nodal_domains
from .bounds import BoundReport, pleijel_constant

__all__ = [
    "BoundReport",
    "ChainlabError",
    "ClassifierParams",
    "DomainConfig",
    "EigenPair",
    "GeometricConstants",
    "NeckSpec",
    "PieceSpec",
    "RealizedDomain",
    "Spectrum",
    "TriMesh",
    "WidthFamily",
    "assemble",
    "build_chain_domain",
    "classify_nodal_domains",
    "courant_report",
    "estimate_geometric_constants",
    "extract_nodal_domains",
    "load_config",
    "pleijel_constant",
    "solve",
    "solve_mesh",
    "triangulate",
]
