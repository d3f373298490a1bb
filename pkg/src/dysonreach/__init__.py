"""Certified Dyson-series propagation and epsilon-net tools for bilinear control systems.

The system is ``psi' = A psi + u(t) B psi`` on a finite-dimensional space,
with ``u`` a piecewise-constant L1 control.
"""

from .controls import PiecewiseConstantControl, constant_control, control_family, zero_control
from .dyson import (DysonConfig, PropagationResult, apriori_bound, choose_truncation, propagate_dyson,
                    tail_bound, tail_sum, w_terms, w_trajectories)
from .errors import (CertificateUnreachableError, InvalidInputError, NetBudgetExceededError,
                     NumericalOverflowError, UncoveredPointError)
from .linops import SemigroupBounds, expm, log_norm, operator_norm, semigroup_bounds
from .oracle import picard_iterates, picard_solution, propagate_oracle
from .reach import (EpsNet, PartitionOfUnity, attainable_net, covering_number, greedy_eps_net,
                    minkowski_sum_net, obstruction_report, partition_weights, sample_attainable_points,
                    sample_w_set, unit_sphere_targets, verify_cover)

__version__ = "0.1.0"

__all__ = [
    "PiecewiseConstantControl", "constant_control", "control_family", "zero_control", "DysonConfig",
    "PropagationResult", "apriori_bound", "choose_truncation", "propagate_dyson", "tail_bound",
    "tail_sum", "w_terms", "w_trajectories", "CertificateUnreachableError", "InvalidInputError",
    "NetBudgetExceededError", "NumericalOverflowError", "UncoveredPointError", "SemigroupBounds",
    "expm", "log_norm", "operator_norm", "semigroup_bounds", "picard_iterates", "picard_solution",
    "propagate_oracle", "EpsNet", "PartitionOfUnity", "attainable_net", "covering_number",
    "greedy_eps_net", "minkowski_sum_net", "obstruction_report", "partition_weights",
    "sample_attainable_points", "sample_w_set", "unit_sphere_targets", "verify_cover",
]
