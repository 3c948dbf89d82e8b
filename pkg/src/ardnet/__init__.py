"""Strategic network-formation inference from aggregate relational data."""

from .ard import (
    ArdQuery,
    ArdQuerySet,
    ArdVector,
    Predicate,
    abs_diff_range,
    alter_attr_range,
    alter_attr_threshold,
    always_true,
    ard_distance,
    builtin_query_sets,
    compute_ard,
    load_query_set,
    save_query_set,
    within_tolerance,
)
from .backend import active_backend, set_backend, use_backend
from .dynamics import SweepConfig, glauber_sweep, sample_network, sample_stationary_codes
from .errors import (
    ArdnetError,
    CapacityError,
    DegenerateEvidenceError,
    DomainError,
    ParseError,
    ValidationError,
)
from .experiments import (
    ExperimentConfig,
    default_sampler_config,
    design1_model,
    design2_model,
    example2_covariates,
    example2_model,
    example2_queries,
    load_covariates,
    oracle_validate,
    run_experiment,
    synthetic_ages,
)
from .meanfield import (
    MeanFieldOptions,
    MeanFieldState,
    entropy,
    expected_potential,
    fixed_point_solve,
    log_c_mf,
)
from .model import (
    CovariateTable,
    Network,
    PairFeature,
    Theta,
    UtilityModel,
    abs_diff,
    alter_attr,
    constant,
    delta_potential,
    pair_value,
    potential,
    same_bin,
    utility,
    utility_matrices,
)
from .oracle import (
    ThetaGrid,
    exact_ard_likelihood,
    exact_pi,
    exact_pi_all,
    exact_posterior_on_grid,
    log_c_exact,
    network_code,
    network_from_code,
    sufficiency_variation,
)
from .sampler import (
    ChainState,
    CredibleInterval,
    SamplerConfig,
    TraceRecord,
    acceptance_log_ratio,
    adapt_delta,
    credible_interval,
    delta_multiplier,
    posterior_mean,
    propose_theta,
    run_chain,
    write_trace_csv,
)

__version__ = "0.1.0"
