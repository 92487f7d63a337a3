"""Numerical splitting at infinity for functionals with a degenerate limit Hessian.

The package splits the limiting Hessian into kernel, positive and negative
parts and reduces the functional onto far kernel points. It builds the Morse
normal-form chart on the complement and applies all of this to a
Galerkin-truncated semilinear Dirichlet problem on ``(0, pi)``.
"""

__version__ = "0.1.0"

from . import bvp, errors, functional, hilbert, models, normal_form, reduction
from .errors import *  # noqa: F401,F403
from .functional import (
    E_INFTY,
    E_PRIME_INFTY,
    ConditionResult,
    ContractionData,
    FunctionalProblem,
    HypothesisReport,
    audit_D_infty,
    audit_gradient,
    audit_hessian,
    estimate_contraction,
)
from .hilbert import OperatorConstants, SpectralSplit, operator_constants, project, spectral_split, sym_operator
from .reduction import (
    ReductionSolver,
    decay_audit,
    find_reduced_critical_points,
    lipschitz_audit,
    reduced_gradient,
    reduced_hessian,
    reduced_value,
    solve_h,
)
