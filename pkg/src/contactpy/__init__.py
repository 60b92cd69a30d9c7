from ._lattice import (
    Site,
    Edge,
    Rect,
    EdgeRegion,
    Seed,
    as_site,
    parse_site,
    parse_corner,
    format_site,
    rect,
    ball,
    edge_region,
    seed_sites,
)

from ._environment import (
    DistSpec,
    Environment,
    FrozenEnvironment,
    Mode,
    point,
    two_point,
    zero_or,
    uniform,
    exponential,
    parse_spec,
    make_env,
    export_env,
    edge_uniform,
    EDGE_CACHE_SIZE,
    import_env,
    annealed,
    quenched,
)

from ._stats import (
    ENV,
    DYNAMICS,
    REFERENCE,
    StreamId,
    EstimateWithCI,
    TrialResult,
    MannKendall,
    derive,
    derive_path,
    wilson,
    binomial_sigma,
    map_trials,
    run_trials,
    bootstrap,
    paired_difference,
    mann_kendall,
)

from ._graphical import (
    DEATH,
    ARROW,
    GraphicalRep,
    Constraint,
    Trajectory,
    SpaceTimeSet,
    JoinResult,
    IntervalUnion,
    sample_rep,
    rep_from_marks,
    unconstrained,
    within_sites,
    within_edges,
    evolve,
    at_time,
    during,
    is_joined,
    infected_time,
    trajectory_time,
)

from ._blocks import (
    SIDES,
    BoxSpec,
    PhiResult,
    ThetaResult,
    BlockEstimate,
    ConditionReport,
    SegmentSearch,
    ProbeResult,
    default_horizon,
    phi,
    theta,
    phi_theta,
    block_sizes,
    estimate_block,
    estimate_block_grid,
    estimate_block_mixed,
    block_condition_report,
    first_segment,
    seed_to_seed,
    event_probe,
    box_rep,
)

from ._renorm import (
    ORIENTATIONS,
    Geometry,
    PlacedBox,
    Leg,
    RoutePlan,
    RouteOutcome,
    GridWalk,
    RenormGrid,
    GRoute,
    LRoute,
    LoopRoute,
    FTimeStats,
    as_orientation,
    plan_leg,
    check_disjoint,
    route_plan,
    run_box,
    run_leg,
    run_route,
    explore_grid,
    renorm_grid,
    grid_f,
    g_route,
    l_route,
    loop_route,
    default_origin,
    f_time_stats,
    calibrate_w_bar,
    resolve_w_bar,
    CALIBRATION_TRIALS,
)

from ._convergence import (
    MAX_WINDOW,
    SurvivalEstimate,
    ConditionRow,
    WindowLaw,
    MixtureDistance,
    ConvergenceReport,
    GrowthEstimate,
    IncreasingEvent,
    CovarianceEstimate,
    cone_margin,
    survival_times,
    estimate_survival,
    survival_curve,
    survival_sensitivity,
    seed_survival_trend,
    condition_a,
    condition_b,
    condition_b_trend,
    upper_invariant_sample,
    cc_distance,
    richardson_evolve,
    richardson_front,
    richardson_growth,
    coupling_check,
    joined_event,
    phi_event,
    custom_event,
    fkg_covariance,
)

from ._histogram import Hist1d

from ._io import (
    save_1d_as_txt,
    save_sweep_as_txt,
    load_1d_from_txt,
    work_out_bin_edges,
    save_env,
    load_env,
    parse_rep,
    load_rep,
    format_rep,
    save_rep,
    write_table,
    write_summary,
)

from ._errors import (
    ContactpyError,
    AspectError,
    HalfSpaceError,
    InfiniteRegionError,
    SpecError,
    WindowError,
    FormatError,
    ConstraintError,
    GeomError,
    WindowTooLargeError,
    PreconditionError,
    NotIncreasingError,
    ConfigError,
)

from ._plotting import (
    colors,
    plot_spacetime,
    plot_sweep,
    plot_hist,
    plot_grid,
    mark_sites,
)

from ._config import Config, parse_config, load_config

from ._cli import run_command, main

from ._version import __version__
