"""Finite element toolkit: quadrature, Q2/P-1/Q1 spaces, assembly and detail spaces."""
from .assembly import DeterministicBlocks, FeSpacePair, assemble_blocks, lame_constants
from .coefficients import CoefficientField, affine_scalar, check_positivity, cosine_expansion, zeta
from .detail import DetailSpace, build_detail_space, cbs_constants

__all__ = [
    "CoefficientField", "DeterministicBlocks", "DetailSpace", "FeSpacePair", "affine_scalar",
    "assemble_blocks", "build_detail_space", "cbs_constants", "check_positivity",
    "cosine_expansion", "lame_constants", "zeta",
]
