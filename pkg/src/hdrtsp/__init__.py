"""Hierarchical destroy-and-repair solver for large Euclidean TSP instances."""

__version__ = "0.1.0"

from .core import (CEIL_2D, EUC_2D, Edge, Instance, Tour, ValidationReport, edge_cost,
                   tour_cost, validate_tour)
from .destroy import (SelectionCounters, SubProblem, build_subproblem, pick_center,
                      select_edges_to_delete, update_counters)
from .errors import (ContractViolation, DestroyInfeasible, HDRError, InfeasibleError,
                     MalformedFileError, SizeLimitError, UnsupportedFormatError,
                     ValidationError)
from .hierarchy import (CompressionMap, RepairConfig, RunStats, SolverConfig,
                        compress_instance, expand_to_parent, fix_common_edges, hdr_solve,
                        run_local_opt)
from .init import InitConfig, build_initial_tour, two_opt_window
from .io import generate_instance, parse_tour, parse_tsplib, write_tour, write_tsplib
from .repair import expand_solution, held_karp_forced, held_karp_tour, solve_subproblem
from .report import report_results
from .spatial import GridIndex, build_index, query_knn
