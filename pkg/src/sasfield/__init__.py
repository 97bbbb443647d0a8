"""Simulation and verification of stationary symmetric alpha-stable random
fields generated by nonsingular R^d actions."""

from .actions import (
    ActionDescriptor,
    Axis,
    BaseFunction,
    DirectSumKernel,
    KernelDescriptor,
    LatticeSpec,
    builtin_kernel,
    check_action_identities,
    direct_sum,
    evaluate_kernel,
    lattice_points,
)
from .errors import (
    ConfigError,
    DataError,
    EfficiencyError,
    NumericRangeError,
    ResourceError,
    SasFieldError,
    ShapeError,
    UnsupportedKernelError,
)
from .hopf import classify, split_cd
from .lepage import (
    FieldSample,
    FieldSimulator,
    SeriesConfig,
    char_function_test,
    default_series_config,
    exact_scale,
    load_field_sample,
    save_field_sample,
    simulate_field,
)
from .maxima import (
    LimitLawSpec,
    check_condition,
    compute_b_tau,
    compute_K_X,
    growth_exponent_fit,
    limit_law_test,
    partial_maxima,
    sample_eta_tau,
)
from .stable import (
    FrechetLaw,
    StableIndex,
    frechet_cdf,
    frechet_quantile,
    make_rng,
    sample_sas,
    stable_tail_constant,
)

__version__ = "0.1.0"
