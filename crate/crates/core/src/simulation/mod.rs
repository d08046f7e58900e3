//! Experiment harness.
//!
//! Every estimator here is an expectation over random exam outcomes, random
//! assignments, or random train/test splits. Work units draw from seed
//! streams keyed by their index and are reduced in index order, so reports
//! are bit-identical for a given seed whatever the thread count.

mod bias;
mod bound;
mod cv;
mod decompose;
mod exact;
mod sampler;
mod signatures;
mod stats;
mod sweep;
mod theorems;

pub use bias::{estimate_ex_post_bias, estimate_ex_post_bias_many, ex_post_bias_against, BiasReport, Estimator};
pub use bound::{bound_compliance, BoundCheck, BOUND_SLACK};
pub use cv::{
    cross_validate, cross_validate_grid, simulated_answers, simulated_cross_validate, CvPoint, CvResult, CvRuleScore,
};
pub use decompose::{decompose_error, decompose_error_exact, ErrorDecomposition};
pub use exact::{
    ex_ante_expected_grade, exact_ex_post_bias, exact_expected_grade, exact_grade_moments, verify_ex_ante_fairness,
    ExactMoments, MAX_ENUMERATED_EDGES,
};
pub use sampler::DifficultySampler;
pub use signatures::{connectivity_fraction, consistency_errors};
pub use stats::{mean, sample_variance, standard_error};
pub use sweep::{
    sweep_degree, sweep_question_sample_size, BenchmarkScope, RuleStats, SweepPoint, SweepResult, SweepSettings,
};
pub use theorems::{equivalence_gap, random_equivalence_instance, EquivalenceFamily};

use crate::model::PriorSpec;

/// Range of fitted student abilities on a real 35 x 22 exam.
pub const REFERENCE_ABILITY_RANGE: (f64, f64) = (-1.486, 1.149);
/// Range of fitted question difficulties on the same exam.
pub const REFERENCE_DIFFICULTY_RANGE: (f64, f64) = (-3.090, 2.099);

/// Gaussian priors centred on the reference ranges with a quarter of each
/// range as standard deviation.
pub fn range_prior() -> PriorSpec {
    let (alo, ahi) = REFERENCE_ABILITY_RANGE;
    let (dlo, dhi) = REFERENCE_DIFFICULTY_RANGE;
    PriorSpec::new(
        (alo + ahi) / 2.0,
        (ahi - alo) / 4.0,
        (dlo + dhi) / 2.0,
        (dhi - dlo) / 4.0,
    )
    .expect("reference ranges give a valid prior")
}
