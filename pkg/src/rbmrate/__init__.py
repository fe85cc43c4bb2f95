"""Rate bounds, couplings, and grid simulation for reflected Brownian motion
in the nonnegative orthant."""

from .bounds import (
    A0,
    BcBound,
    BoundReport,
    BoundValue,
    CascadeConstants,
    DecayProfile,
    LyapunovEval,
    OptimalWeights,
    RankBound,
    SupBound,
    ThetaFunctionals,
    WeightScales,
    bc_bound,
    bound_report,
    constant_cascade,
    contraction_coefficient,
    decay_profile,
    default_cascade,
    lambda_phi,
    lyapunov,
    optimal_v,
    rank_bound,
    rbm_sup_bound,
    relaxation_time_bound,
    theta_functionals,
    wasserstein_bound,
)
from .catalog import (
    BcClassCheck,
    RankBasedSpec,
    StabilityB,
    StationaryLaw,
    atlas_spec,
    bc_class_check,
    parse_rank_spec,
    rank_based_params,
    stability_b,
    stationary_gap_law,
)
from .experiments import (
    CheckReport,
    DecayFit,
    EtaCounter,
    McEstimate,
    SmallSetReport,
    StationaryTest,
    W1Curve,
    contraction_check,
    contraction_check_mc,
    count_eta,
    decay_fit,
    domination_check,
    domination_check_mc,
    estimate_w1,
    marginal_stationary_test,
    rbmdrift_mc,
    sample_final_states,
    small_set_mc,
)
from .model import (
    DerivedModel,
    ModelParams,
    ValidationReport,
    WeightedNorms,
    derive,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    spectral_radius,
    validate_params,
    weighted_norms,
)
from .reflect import (
    CoupledRun,
    SimConfig,
    Trajectory,
    load_trajectory,
    save_trajectory,
    simulate_coupled,
    simulate_normal_rbm,
    simulate_rbm,
    skorokhod_step,
    trajectory_csv,
)

__version__ = "0.1.0"
