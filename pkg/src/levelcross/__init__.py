"""Level-crossing analysis of piecewise-deterministic Markov processes.

Simulation of drift/jump processes, exact crossing detection, regenerative
estimation of crossing intensities and the stationary density, and the
compound-Poisson description of rare upcrossings, together with numerical
audits of the ergodicity conditions.
"""

from .model import (
    ModelError,
    LimitLaw,
    Drift,
    JumpRate,
    JumpKernel,
    ClosedFlow,
    Model,
    exp_jump_kernel,
    linear_shot_noise,
    tanh_drift,
    updrift_negjumps,
    stress_release,
    CATALOG,
    catalog,
    validate,
    TailEnvelope,
    tail_envelope,
    ScenarioReport,
    classify_scenario,
    transform_model,
)
from .flow import (
    FlowError,
    flow,
    flow_solution,
    hit_time,
    occupation_time,
    integrated_hazard,
    invert_hazard,
)
from .simulate import (
    RngConfig,
    Horizon,
    EventCount,
    CycleCount,
    FirstPassage,
    Trajectory,
    simulate,
    CrossingEvent,
    CONTINUOUS_UP,
    CONTINUOUS_DOWN,
    DISCONTINUOUS_UP,
    DISCONTINUOUS_DOWN,
    KIND_NAMES,
    crossing_arrays,
    detect_crossings,
    crossing_counts,
    crossing_balance,
    TargetCounts,
    CycleData,
    cycle_counts,
    cycle_decompose,
    first_passages,
    first_passage_sample,
)
from .estimate import (
    CyclePartition,
    cycle_partition,
    burn_in_time,
    DensityEstimate,
    default_bandwidth,
    estimate_density,
    density_sensitivity,
    IntensityEstimate,
    IntensityBundle,
    estimate_intensities,
    pool_intensities,
    RiceReport,
    rice_residual,
    sample_states,
    intensity_by_integral,
    state_average_rate,
    CycleCountStats,
    cycle_count_stats,
    GammaEstimate,
    gamma_hat,
    zero_cycle_residual,
    TestFunction,
    smooth_bump,
    stationarity_residual,
)
from .limits import (
    CompoundPoissonParams,
    compute_rho,
    GeomCPPath,
    simulate_geom_cpp,
    window_masses,
    laplace_count,
    levy_masses,
    gamma_law_cdf,
    ScaledUpcrossings,
    scale_upcrossings,
    split_batches,
    test_exponential_first_passage,
    test_geometric_cycles,
    LaplaceGapReport,
    laplace_functional_distance,
)
from .ergodicity import (
    ErgodicityError,
    GeneratorValue,
    ConditionCheck,
    AssumptionReport,
    apply_generator,
    abs_drift_decomposition,
    check_moment_conditions,
    check_drift_conditions,
    audit_model,
)
from .config import ConfigError, AnalysisConfig, RunConfig, load_config
from .stats import (
    ratio_estimate,
    block_estimate,
    KSReport,
    ks_test,
    Chi2Report,
    chi2_test,
)

__version__ = "0.1.0"
