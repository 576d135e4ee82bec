"""Certified lower bounds for scalar optimal control problems with
polynomial data and unbounded controls.

The pipeline: model a problem, homogenize the control onto a compact
slice, pose the linear program over occupation measures, relax it to a
semidefinite program of moments, and solve with a conic backend.
"""

from .errors import IoError
from .homogenize import (
    DomainError,
    HomogenizedLagrangian,
    NotOnSlice,
    OddFreeControl,
    SphereSlice,
    build_polynomial_lp,
    build_polynomial_lp_split,
    default_test_degree,
    homogenize_lagrangian,
    map_control,
    unmap_control,
)
from .measure_lp import (
    LinearFunctionalRow,
    MeasureLP,
    SupportSet,
    bounded_variables,
    dump_lp,
    max_constraint_degree,
    validate_lp,
)
from .oracle import (
    BudgetExceeded,
    SampledTrajectory,
    SingularIntegrand,
    grid_search_upper_bound,
    quadrature_objective,
)
from .poly import (
    ClearTooSmall,
    MissingAssignment,
    Polynomial,
    PolynomialParseError,
    parse_polynomial,
)
from .problems import (
    OcpProblem,
    RawMeasureLpProblem,
    UnknownLabel,
    brachistochrone_measure_lp,
    builtin_problem,
    coercive_moment_bound,
    known_optimal_value,
    lavrentiev_modified,
    load_problem,
    problem_from_config,
    validate,
)
from .relaxation import (
    MomentRelaxation,
    OrderTooSmall,
    SolveReport,
    assemble_sdp,
    flatness_check,
    min_order,
    unscale_moments,
)
from .runner import (
    OrderEntry,
    RunConfig,
    RunReport,
    StageFailure,
    format_report,
    report_from_dict,
    report_to_dict,
    run,
)
from .sdp import (
    BackendSolution,
    NoBackend,
    SdpStandardForm,
    SolveSettings,
    SolverFailure,
    available_backends,
    export_sdpa,
    parse_sdpa,
    solve,
    solve_relaxation,
    to_standard_form,
)

__all__ = [
    "BackendSolution",
    "BudgetExceeded",
    "ClearTooSmall",
    "DomainError",
    "HomogenizedLagrangian",
    "IoError",
    "LinearFunctionalRow",
    "MeasureLP",
    "MissingAssignment",
    "MomentRelaxation",
    "NoBackend",
    "NotOnSlice",
    "OcpProblem",
    "OddFreeControl",
    "OrderEntry",
    "OrderTooSmall",
    "Polynomial",
    "PolynomialParseError",
    "RawMeasureLpProblem",
    "RunConfig",
    "RunReport",
    "SampledTrajectory",
    "SdpStandardForm",
    "SingularIntegrand",
    "SolveReport",
    "SolveSettings",
    "SolverFailure",
    "SphereSlice",
    "StageFailure",
    "SupportSet",
    "UnknownLabel",
    "assemble_sdp",
    "available_backends",
    "bounded_variables",
    "brachistochrone_measure_lp",
    "build_polynomial_lp",
    "build_polynomial_lp_split",
    "builtin_problem",
    "coercive_moment_bound",
    "default_test_degree",
    "dump_lp",
    "export_sdpa",
    "flatness_check",
    "format_report",
    "grid_search_upper_bound",
    "homogenize_lagrangian",
    "known_optimal_value",
    "lavrentiev_modified",
    "load_problem",
    "map_control",
    "max_constraint_degree",
    "min_order",
    "parse_polynomial",
    "parse_sdpa",
    "problem_from_config",
    "quadrature_objective",
    "report_from_dict",
    "report_to_dict",
    "run",
    "solve",
    "solve_relaxation",
    "to_standard_form",
    "unmap_control",
    "unscale_moments",
    "validate",
    "validate_lp",
]

__version__ = "0.1.0"
