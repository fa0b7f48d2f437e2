//! Fusion center: least-squares estimation and bad-data processing.

mod detection;
mod pipeline;
mod wls;

pub use detection::{
    chi2_threshold, j_test, normalized_residues, projector_diagonal, NormalizedResidue,
    ZERO_LEVERAGE,
};
pub use pipeline::{
    bad_data_pipeline, AcAngleModel, BadDataTrace, Iteration, LinearModel, MeasurementModel,
    Termination,
};
pub use wls::{gauss_newton, linear_wls, nonlinear_wls, EstimationResult, MAX_ITERATIONS, STEP_TOL};

/// Residual projector `W = I - H (H^T H)^{-1} H^T`.
pub fn residual_projector(h: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    crate::linalg::residual_projector(h)
}
