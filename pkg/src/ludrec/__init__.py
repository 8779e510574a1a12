"""Camera location recovery from corrupted pairwise direction measurements.

The package covers the full pipeline: sampling instances from the random
corruption model (`viewgraph`), solving the LUD and ShapeFit convex
programs (`solvers`, `estimators`), verifying the recovery conditions the
theory rests on (`conditions`), and reproducing the corruption/noise
sweeps (`experiments`). The `ludrec` console script fronts all of it.
"""

from .geometry import center, nrmse, optimal_scale, pairwise_direction, project_perp
from .viewgraph import (
    DisconnectedGraphError,
    Edge,
    EdgeFraction,
    HlvParams,
    Instance,
    MaxDegreeBound,
    ViewGraph,
    add_noise,
    corrupt,
    corruption_level,
    dump_instance,
    generate_instance,
    load_instance,
    sample_graph,
    sample_locations,
    true_directions,
    uniform_sphere,
)
from .solvers import (
    OracleScaleResult,
    SolverParams,
    SolverResult,
    SolverStatus,
    dump_results,
    good_long_partition,
    load_results,
    lud_objective,
    optimal_alpha,
    oracle_scale,
    ray_distance,
    scale_objective,
    shapefit_objective,
    solve_lud,
    solve_reference,
    solve_shapefit,
)
from .estimators import LudSolver, ShapeFitSolver, check_view_graph
from .conditions import (
    ConditionReport,
    GoodShapeParams,
    HennebergCertificate,
    MotionDecomposition,
    Verdict,
    check_dominance,
    check_good_shape,
    check_p_typical,
    codegree,
    consistent_realization,
    default_good_shape_params,
    direction_constraint_matrix,
    henneberg_certificate,
    motion_decomposition,
    parallel_rigidity,
    project_perturbation,
    report_text,
    reports_csv,
    self_consistency,
    undeformed_sets,
    well_distributed_constant,
)
from .experiments import (
    Axis,
    SummaryRow,
    SweepSpec,
    TrialRecord,
    run_sweep,
    run_trial,
    summarize,
)

__version__ = "0.1.0"
