"""Cohomogeneity-type Calabi-Yau computations on symmetric spaces of rank one and two."""

from .continuity import (GridField, MAProblem, continuation_solve, ellipticity_certificate,
                         manufactured_problem, membership_U_eps, normalize_to_target)
from .d_operator import WallRegularization, apply_D, D_rho1_rank_one, D_rho1_rank_two, D_rho2_rank_two
from .errors import (CertificateViolation, ContinuationError, DomainError, NewtonDivergence,
                     QuadratureError, ScheduleExhausted, WallSingularityError)
from .invariants import InvariantBasis, rho1, rho2, rho_inverse
from .ma_residual import ChamberFunction, residual_3_6, residual_3_10, residual_5_14
from .radial_profile import RadialProfile
from .root_data import (BUILTIN_NAMES, RestrictedRootSystem, SymmetricSpaceDescriptor, build_rank_one,
                        build_rank_two, builtin_descriptor)

__all__ = [
    "GridField", "MAProblem", "continuation_solve", "ellipticity_certificate", "manufactured_problem",
    "membership_U_eps", "normalize_to_target", "WallRegularization", "apply_D", "D_rho1_rank_one",
    "D_rho1_rank_two", "D_rho2_rank_two", "CertificateViolation", "ContinuationError", "DomainError",
    "NewtonDivergence", "QuadratureError", "ScheduleExhausted", "WallSingularityError", "InvariantBasis",
    "rho1", "rho2", "rho_inverse", "ChamberFunction", "residual_3_6", "residual_3_10", "residual_5_14",
    "RadialProfile", "BUILTIN_NAMES", "RestrictedRootSystem", "SymmetricSpaceDescriptor",
    "build_rank_one", "build_rank_two", "builtin_descriptor",
]
