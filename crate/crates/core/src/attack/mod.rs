//! The adversary: subspace estimation and attack construction.

mod framing;
mod plan;
mod subspace;
mod unobservable;

pub use framing::{
    build_framing_problem, framing_attack_partial, solve_framing_qcqp, FramingProblem, DEFAULT_EPS1,
    DEFAULT_EPS2,
};
pub use plan::{apply_attack, calibrate_eta, AttackPlan};
pub use subspace::{eigengap_dimension, estimate_subspace, restrict_samples, sample_covariance, SubspaceBasis};
pub use unobservable::{
    null_spectrum, unobservable_attack_full, unobservable_attack_partial, DEFAULT_GAP, DEFAULT_NULL_TOL,
};
