use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{AcModel, GridCase, SensorId};
use crate::linalg;

pub const MAX_ITERATIONS: usize = 50;
pub const STEP_TOL: f64 = 1e-8;

/// Output of one least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub estimate: DVector<f64>,
    /// `z - h(estimate)` over the rows that were fitted.
    pub residue: DVector<f64>,
    /// Gauss-Newton iterations; zero for the closed-form linear solve.
    pub iterations: usize,
}

impl EstimationResult {
    /// `||r||^2 / sigma^2`.
    pub fn objective(&self, sigma: f64) -> f64 {
        self.residue.norm_squared() / (sigma * sigma)
    }
}

/// Solves `min ||A x - b||` for full-column-rank `A`: Cholesky on the normal
/// equations, SVD when that fails.
fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = a.transpose() * a;
    let rhs = a.transpose() * b;
    if let Some(chol) = gram.clone().cholesky() {
        let x = chol.solve(&rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let svd = linalg::svd_sorted(a);
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * linalg::RANK_TOL && s > 0.0)
        .count();
    if rank < a.ncols() {
        return Err(Error::Singular);
    }
    let utb = svd.u.transpose() * b;
    let scaled = DVector::from_fn(rank, |k, _| utb[k] / svd.singular_values[k]);
    Ok(&svd.v * scaled)
}

/// Linear LS estimate `x = (H^T H)^{-1} H^T z` with residue `r = W z`.
pub fn linear_wls(h: &DMatrix<f64>, z: &DVector<f64>) -> Result<EstimationResult> {
    if h.nrows() != z.len() {
        return Err(Error::InvalidArgument(format!(
            "measurement has {} entries, matrix has {} rows",
            z.len(),
            h.nrows()
        )));
    }
    let rank = linalg::rank(h);
    if rank < h.ncols() {
        return Err(Error::RankDeficient {
            rank,
            cols: h.ncols(),
        });
    }
    let estimate = solve_least_squares(h, z)?;
    let residue = z - h * &estimate;
    Ok(EstimationResult {
        estimate,
        residue,
        iterations: 0,
    })
}

/// Gauss-Newton over the angle state with the bus voltage magnitudes held at
/// `magnitudes`. `z` holds the readings of `rows`, in order.
pub fn gauss_newton(
    model: &AcModel,
    magnitudes: &[f64],
    z: &DVector<f64>,
    rows: &[usize],
    initial: &[f64],
) -> Result<EstimationResult> {
    if z.len() != rows.len() {
        return Err(Error::InvalidArgument(format!(
            "{} readings for {} sensor rows",
            z.len(),
            rows.len()
        )));
    }
    let mut x = initial.to_vec();
    for it in 1..=MAX_ITERATIONS {
        let residue = z - model.measure_rows(magnitudes, &x, rows);
        let jac = model.angle_jacobian_rows(magnitudes, &x, rows);
        let step = solve_least_squares(&jac, &residue)?;
        for (xi, di) in x.iter_mut().zip(step.iter()) {
            *xi += di;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence(it));
        }
        if step.amax() < STEP_TOL {
            let residue = z - model.measure_rows(magnitudes, &x, rows);
            return Ok(EstimationResult {
                estimate: DVector::from_vec(x),
                residue,
                iterations: it,
            });
        }
    }
    Err(Error::Divergence(MAX_ITERATIONS))
}

/// Nonlinear LS fit of the angle state to a full-length measurement vector
/// `z`, using only the sensors in `subset` (all sensors when `None`).
///
/// Magnitudes are taken as known and equal to `magnitudes`; iteration starts
/// from the case operating angles.
pub fn nonlinear_wls(
    case: &GridCase,
    magnitudes: &[f64],
    z: &DVector<f64>,
    subset: Option<&[SensorId]>,
) -> Result<EstimationResult> {
    if z.len() != case.sensor_count() || magnitudes.len() != case.bus_count() {
        return Err(Error::InvalidArgument(
            "measurement or magnitude vector does not match the case".into(),
        ));
    }
    let rows: Vec<usize> = match subset {
        Some(ids) => ids.iter().map(|id| id.0).collect(),
        None => (0..case.sensor_count()).collect(),
    };
    let model = AcModel::new(case)?;
    let zr = DVector::from_iterator(rows.len(), rows.iter().map(|&r| z[r]));
    gauss_newton(
        &model,
        magnitudes,
        &zr,
        &rows,
        &case.operating_state().angles,
    )
}
