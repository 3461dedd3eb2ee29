"""Interacting particle systems with site-wise departure rates: simulation
on integer lattices, invariant product measures, coupled runs through a
shared noise field, and the verification diagnostics built on them."""

from .configuration import (
    Configuration,
    Trajectory,
    cesaro_profile,
    config_from_json,
    config_to_json,
    enumerate_particles,
    events_csv_string,
    events_to_csv,
    replay,
    snapshots,
    trajectory_summary,
    truncate,
)
from .diagnostics import (
    Report,
    engine_agreement_check,
    forward_equation_check,
    generator_apply,
    j_discrepancy,
    j_inequality_check,
    martingale_residual,
    mass_conservation_check,
    poisson_flux_check,
    stationarity_exact,
    stationarity_statistical,
)
from .engine import (
    OPEN,
    BoundaryPolicy,
    ConfigRule,
    constant_rule,
    killed,
    periodic,
    point_rule,
    profile_rule,
    simulate,
    simulate_gillespie,
    simulate_pq_family,
    simulate_truncation_schedule,
)
from .errors import (
    CertificationError,
    ConfigError,
    InvariantViolation,
    RateRangeError,
    ZRPError,
)
from .hitting import (
    HittingCurve,
    MbarReport,
    calibrate_doob_constant,
    estimate_F,
    exact_F_curve,
    exact_F_small,
    exp_moment_check,
    mbar,
)
from .kernel import (
    Kernel,
    kernel_from_json,
    kernel_to_json,
    make_kernel,
    mean_drift,
    nn_kernel_1d,
    symmetric_nn_kernel,
)
from .localfn import (
    LocalFunction,
    capped_occupancy,
    occupancy_indicator,
    product_local,
)
from .measures import (
    CanonicalTorusMeasure,
    FugacityMeasure,
    canonical_torus_measure,
    density,
    fugacity_identity,
    fugacity_measure,
    partition_function,
    sample_box_config,
)
from .noise import HarrisNoise
from .parallel import derived_rng, replica_map, resolve_threads
from .rates import (
    RateFn,
    check_corollary_conditions,
    check_exponential_bound,
    custom_rate,
    exp_rate,
    power_rate,
    rate_from_json,
    rate_to_json,
    table_rate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
