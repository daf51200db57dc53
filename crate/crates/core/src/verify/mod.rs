//! Monte Carlo verification of the barycenter step and noise statistics.
//!
//! Each check pairs an empirical estimator (brute-force simulation of the
//! quantity) with a closed-form prediction whose expectations are themselves
//! estimated by Monte Carlo on an independent stream. Results come back as
//! [`McReport`]s whose pass criteria are stated in standard-error units or
//! as explicit tolerances.

mod gain;
mod interference;
mod montecarlo;
mod noise;
mod report;
mod steps;
mod suite;

pub use gain::GainContext;
pub use interference::{
    aggregate_weight_magnitude, check_complex_interference, check_phase_ladder, interference_ratio,
    ramp_cluster, InterferenceSetup,
};
pub use montecarlo::{Estimate, MatrixEstimate, ProposalDistribution};
pub use noise::{
    check_bias_direction, check_noise_scaling, check_theorem4, noise_moments,
    noisy_barycenter_statistics, theorem4_fixture, NoiseMoments, NOISE_VALIDITY_LIMIT,
};
pub use report::{Component, Criterion, McReport};
pub use steps::{
    check_flat_baseline, check_theorem1, check_theorem2, check_variance_ladder,
    empirical_mean_step, empirical_variance_step, predicted_mean_step, predicted_variance_step,
    theorem1_grid, theorem2_h_ladder, theorem2_nu_ladder, theorem2_scenarios, GradientSource,
    MeanStepScenario, VarianceScenario, DEFAULT_PRIOR_MASS_RATIO,
};
pub use suite::{run_suite, Suite, SuiteOutcome, DEFAULT_BASE_TRIALS};

/// Fewest trials any Monte Carlo estimator accepts.
pub const MIN_TRIALS: usize = 1000;
