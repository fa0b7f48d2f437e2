use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::wls::EstimationResult;
use crate::error::{Error, Result};
use crate::linalg;

/// Relative leverage below which a residual is treated as structurally zero.
pub const ZERO_LEVERAGE: f64 = 1e-8;

/// J-test: bad data iff `||r||^2 / sigma^2 > tau`.
pub fn j_test(result: &EstimationResult, sigma: f64, tau: f64) -> bool {
    result.objective(sigma) > tau
}

/// Upper-tail chi-square quantile: `P(X > tau) = alpha` for `X ~ chi2(dof)`.
pub fn chi2_threshold(dof: usize, alpha: f64) -> Result<f64> {
    if dof == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "chi-square threshold needs dof >= 1 and 0 < alpha < 1 (got {dof}, {alpha})"
        )));
    }
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.inverse_cdf(1.0 - alpha))
}

/// Residues scaled by their null-hypothesis standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedResidue {
    pub values: DVector<f64>,
    /// Diagonal of the normalizer `Omega`.
    pub omega: DVector<f64>,
    /// Diagonal of the residual projector `W`.
    pub leverage: DVector<f64>,
}

impl NormalizedResidue {
    /// Index of the largest `|r~_i|`, lowest index on ties; `None` when every
    /// normalized residue is zero.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.values.iter().enumerate() {
            let a = v.abs();
            if a > 0.0 && best.is_none_or(|(_, b)| a > b) {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Diagonal of `W = I - H (H^T H)^{-1} H^T`.
pub fn projector_diagonal(h: &DMatrix<f64>) -> DVector<f64> {
    linalg::residual_leverage(h).unwrap_or_else(|| linalg::residual_projector(h).diagonal())
}

/// `r~ = Omega r` with `Omega_ii = 1 / sqrt(sigma^2 W_ii)`, or zero when `W_ii`
/// falls below the zero-leverage threshold.
pub fn normalized_residues(h: &DMatrix<f64>, r: &DVector<f64>, sigma: f64) -> NormalizedResidue {
    let leverage = projector_diagonal(h);
    let m = leverage.len().max(1) as f64;
    let cutoff = ZERO_LEVERAGE * leverage.sum().max(0.0) / m;
    let omega = leverage.map(|w| {
        if w < cutoff || w <= 0.0 {
            0.0
        } else {
            1.0 / (sigma * w.sqrt())
        }
    });
    NormalizedResidue {
        values: omega.component_mul(r),
        omega,
        leverage,
    }
}
