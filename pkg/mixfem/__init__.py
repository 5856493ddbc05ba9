from __future__ import absolute_import, division, print_function

import logging

from .__version__ import __version__
from .exceptions import *
from .mesh import Mesh, RefinementSpec, build_mesh, rectangle_mesh, unit_square_mesh, refine, read_mesh, write_mesh
from .elements import SpaceDescriptor, QuadratureRule, quadrature, scalar_basis, flux_basis, dof_functionals
from .coefficients import CoefficientField, build_coefficient, harmonic_average
from .spaces import DofMap, FieldVector, build_dofmap, interpolate_flux, l2_project, check_commuting
from .assembly import SaddleSystem, assemble_system, assemble_matrices
from .solver import SolveReport, solve_saddle
from .norms import (
    NormReport,
    compute_norms,
    flux_error_weighted_l2,
    discrete_flux_norm_alpha_h,
    potential_error_dg,
    flux_error_hdiv_alpha_h,
    potential_error_l2,
)
from .postprocess import PostField, stenberg_postprocess
from .analysis import (
    SpectralReport,
    infsup_constant,
    continuity_constant,
    infsup_constant_dual,
    norm_equivalence_constant,
    spectral_sweep,
)
from .problems import ProblemSpec, get_problem, kellogg_constants, verify_problem, classify_elements
from .study import StudyConfig, ConvergenceTable, run_study, observed_rates, fitted_rate

logging.getLogger(__name__).addHandler(logging.NullHandler())
