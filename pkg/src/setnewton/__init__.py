"""Newton and steepest-descent methods for set optimization under the lower set less order."""

from .bench import BenchResult, BenchStats, bench, emit, load_run, summarize
from .cone import Cone, ConeError, contains, gerstewitz, gerstewitz_lipschitz, leq, lower_set_less, varsigma
from .direction import (DirectionOutcome, InnerSolverError, StrongConvexityError, direction_for_tuple,
                        newton_direction, sd_direction, xi)
from .minimal import (MinimalDecomposition, PartitionBlowUp, decompose, minimal_indices, partition_tuples,
                      weakly_minimal_indices)
from .problem import EXAMPLES, OracleError, ProblemInstance, evaluate_family, fd_check, make_example
from .solver import (AuditReport, LineSearchFailure, RunRecord, SolverConfig, Status, convergence_order,
                     descent_audit, solve_newton, solve_sd)

__version__ = "0.1.0"
