"""Adaptive stochastic Galerkin mixed finite elements for parametric linear elasticity.

Three-field formulation (displacement, Herrmann pressure, pressure over
Young's modulus) on the unit square with Q2-P-1 elements, Legendre chaos
in the parameters, hierarchical a posteriori error estimation and an
adaptive loop that refines either the mesh or the index set.
"""
from .adaptor import AdaptiveConfig, AdaptiveTrace, adaptive_step, run
from .chaos import IndexSet, MultiIndex, coupling_matrix, detail_index_set
from .errors import (CoefficientError, ConfigurationError, DetailSpaceError, NonConvergenceError,
                     ParameterError, SGMFEMError, UnsupportedProblemError)
from .estimator import EstimateReport, estimate
from .mesh import BcConfig, Mesh, build_unit_square, refine_uniform
from .problems import tp1, tp2
from .sgsystem import SGOperator, SGSolution, build_operator, minres, solve_minres

__version__ = "0.1.0"
