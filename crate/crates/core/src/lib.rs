//! Numerical laboratory for a two-coordinate shortcut model.
//!
//! Inputs are `X = (Z, S) ∈ {±1}²` with an invariant coordinate `Z` and a
//! family-dependent shortcut `S`. The crate provides
//!
//! * [`model`]: families, mixtures, weights and agreement-state laws,
//! * [`closed_form`]: exact 0-1 risks, logistic surrogates, rule-level risks,
//! * [`optimizer`]: ridge-logistic minimizers via the `u/v` channel split,
//! * [`montecarlo`]: finite-sample ERM with reproducible repetition streams.
//!
//! The math is generic over the scalar type. Exact 0-1 formulas accept any
//! [`Scalar`] (including rationals); surrogate and solver code needs [`Real`]
//! (`f32` or `f64`). The aliases below fix `f64`, which is what the Monte
//! Carlo harness and the CLI use.

pub mod closed_form;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod scalar;

pub use closed_form::{
    cone_gap, det_shortcut_derivative, det_surrogate, det_surrogate_gap, deterministic_risk,
    hoeffding_selection_bound, logistic, noisy_rule_risk, noisy_surrogate, noisy_test_gap, psi,
    sigmoid, test_margin, ClosedFormError, RulePair,
};
pub use model::{
    classify_cone, population_states, rho_bar, ChannelCoords, Cone, FamilySpec, ModelError,
    NoisyParams, Side, StateDistribution, StateSource, TrainingMixture, Weights,
};
pub use montecarlo::{
    empirical_erm, exact_test_error, linear_sizes, run_repetitions, sample_batch, selector_erm,
    Estimate, McConfig, MonteCarloError, RepetitionSummary, SampleBatch,
};
pub use optimizer::{
    induced_rule, linspace, locate_sign_boundary, noisy_derivatives_at_zero, phase_grid,
    solve_deterministic, solve_noisy, solve_scalar_channel, ChannelSolution, GridCellError,
    InducedRule, OptimizerError, Phase, PhaseGrid, RidgeConfig,
};
pub use scalar::{Real, Scalar};

pub type FamilySpec64 = FamilySpec<f64>;
pub type TrainingMixture64 = TrainingMixture<f64>;
pub type Weights64 = Weights<f64>;
pub type ChannelCoords64 = ChannelCoords<f64>;
pub type NoisyParams64 = NoisyParams<f64>;
pub type StateDistribution64 = StateDistribution<f64>;
pub type RidgeConfig64 = RidgeConfig<f64>;
pub type ChannelSolution64 = ChannelSolution<f64>;
pub type PhaseGrid64 = PhaseGrid<f64>;

pub type Weights32 = Weights<f32>;
pub type RidgeConfig32 = RidgeConfig<f32>;
pub type ChannelSolution32 = ChannelSolution<f32>;
