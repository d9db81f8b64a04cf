//! Multi-target tracking observation models with detection failures, Poisson
//! clutter and constrained association uncertainty: likelihoods, Fisher
//! identity scores, Monte Carlo Fisher information and information loss, and
//! maximum likelihood experiments.

// `!(a < b)` rejects NaN on purpose; index loops follow the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod fisher;
pub mod likelihood;
pub mod math;
pub mod mle;
pub mod model;
pub mod perm;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use fisher::{
    additivity_unperturbed_targets, association_weights_ci, association_weights_cik, cardinality_information,
    fisher_mc, information_loss_mc, loss_detection_failure, loss_false_alarm_closed_form,
    loss_false_alarm_worst_case, score_conditional_expectation_identity_check, score_fisher_identity,
    FisherEstimate, FisherExperiment, InformationLossReport, LatentHandling, Provenance, ScoreRegime,
};
pub use likelihood::{
    frame_posterior, log_joint_known_association, log_multi_likelihood, log_multi_likelihood_k1,
    log_perturbed_likelihood, marginal_log_likelihood_sequence, FramePosterior, Integration, MultiTargetState,
    ObservationFrame,
};
pub use mle::{maximize_loglik, MleResult, MleSettings};
pub use model::{
    single_target_fisher, ClutterDensity, ClutterModel, FisherRegime, FreeParam, FreeParameter, GroundTruth,
    McConfig, ModelParams, Observation, Restrictions, SingleTargetModel, SpecialEpsilonLikelihood, Transition,
};
pub use perm::{
    count_constrained, enumerate_constrained, hamming_distance, sample_uniform_constrained, subfactorial, Bound,
    ConstrainedPermutation, DetectionMask, DetectionMaskLaw, PerturbationSpec,
};
pub use simulate::{simulate_sequence, simulate_static, SimulatedFrame};
