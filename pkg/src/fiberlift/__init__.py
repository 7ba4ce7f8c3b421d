"""Lifting invariant measures and statistics through shrinking fibers.

Skew products ``T(y, z) = (S(y), R(y, z))`` over expanding circle maps,
Wasserstein and vertical-Wasserstein transport, Ulam transfer operators,
coboundary reduction of potentials and correlation / CLT diagnostics.
"""
__version__ = "0.1.0"

from ._backend import BACKEND, COMPILED
from .errors import (CapabilityError, ConvergenceError, DomainViolation, FiberliftError,
                     InfeasibleError, ParameterError, PreconditionError)
from .lifting import check_lift_uniqueness, lift_measure, stable_leaf_experiment
from .measures import (EmpiricalMeasure, GridMeasure, disintegrate, invariant_grid_cloud,
                       push_T, section_measure, uniform_base_cloud, uniform_total_cloud)
from .systems import (ModulusClass, estimate_shrinking, expanding_map, make_skew_product,
                      make_system, pomeau_manneville, solenoid_system)
from .transfer import build_ulam, disintegration_via_transfer, invariant_density
from .transport import (sinkhorn, vertical_wasserstein, wasserstein_1d,
                        wasserstein_discrete)

__all__ = [
    "__version__", "BACKEND", "COMPILED",
    "FiberliftError", "ParameterError", "DomainViolation", "PreconditionError",
    "InfeasibleError", "CapabilityError", "ConvergenceError",
    "EmpiricalMeasure", "GridMeasure", "disintegrate", "invariant_grid_cloud", "push_T",
    "section_measure", "uniform_base_cloud", "uniform_total_cloud",
    "ModulusClass", "estimate_shrinking", "expanding_map", "make_skew_product", "make_system",
    "pomeau_manneville", "solenoid_system",
    "build_ulam", "disintegration_via_transfer", "invariant_density",
    "sinkhorn", "vertical_wasserstein", "wasserstein_1d", "wasserstein_discrete",
    "check_lift_uniqueness", "lift_measure", "stable_leaf_experiment",
]
