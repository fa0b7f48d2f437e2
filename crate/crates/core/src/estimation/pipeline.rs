use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::detection::{chi2_threshold, normalized_residues};
use super::wls::{gauss_newton, EstimationResult};
use crate::error::{Error, Result};
use crate::grid::{AcModel, GridCase, SensorId};

/// Measurement model seen by the fusion center.
///
/// Rows are indices into the full measurement vector.
pub trait MeasurementModel {
    fn state_dim(&self) -> usize;

    /// Fits the state to `z` restricted to `rows`.
    fn estimate(&self, z: &DVector<f64>, rows: &[usize]) -> Result<EstimationResult>;

    /// Jacobian of `rows` at `x`, used for residue normalization.
    fn jacobian(&self, x: &DVector<f64>, rows: &[usize]) -> DMatrix<f64>;
}

/// `z = H x + e`.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub h: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(h: DMatrix<f64>) -> Self {
        LinearModel { h }
    }

    fn rows(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.h.ncols(), |i, j| self.h[(rows[i], j)])
    }
}

impl MeasurementModel for LinearModel {
    fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    fn estimate(&self, z: &DVector<f64>, rows: &[usize]) -> Result<EstimationResult> {
        let h = self.rows(rows);
        let zr = DVector::from_iterator(rows.len(), rows.iter().map(|&r| z[r]));
        let chol = (h.transpose() * &h).cholesky().ok_or(Error::Singular)?;
        let estimate = chol.solve(&(h.transpose() * &zr));
        let residue = &zr - &h * &estimate;
        Ok(EstimationResult {
            estimate,
            residue,
            iterations: 0,
        })
    }

    fn jacobian(&self, _x: &DVector<f64>, rows: &[usize]) -> DMatrix<f64> {
        self.rows(rows)
    }
}

/// AC real-power model over the angles, with voltage magnitudes known to the
/// estimator.
pub struct AcAngleModel<'a> {
    model: AcModel<'a>,
    magnitudes: Vec<f64>,
    initial: Vec<f64>,
}

impl<'a> AcAngleModel<'a> {
    /// Starts Gauss-Newton from the case operating angles.
    pub fn new(case: &'a GridCase, magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != case.bus_count() {
            return Err(Error::InvalidArgument(format!(
                "{} magnitudes for {} buses",
                magnitudes.len(),
                case.bus_count()
            )));
        }
        Ok(AcAngleModel {
            model: AcModel::new(case)?,
            magnitudes,
            initial: case.operating_state().angles,
        })
    }
}

impl MeasurementModel for AcAngleModel<'_> {
    fn state_dim(&self) -> usize {
        self.initial.len()
    }

    fn estimate(&self, z: &DVector<f64>, rows: &[usize]) -> Result<EstimationResult> {
        let zr = DVector::from_iterator(rows.len(), rows.iter().map(|&r| z[r]));
        gauss_newton(&self.model, &self.magnitudes, &zr, rows, &self.initial)
    }

    fn jacobian(&self, x: &DVector<f64>, rows: &[usize]) -> DMatrix<f64> {
        self.model
            .angle_jacobian_rows(&self.magnitudes, x.as_slice(), rows)
    }
}

/// One pass of estimate, detect and (possibly) remove.
#[derive(Clone, Debug, PartialEq)]
pub struct Iteration {
    /// Sensors in play, in measurement order.
    pub active: Vec<SensorId>,
    pub result: EstimationResult,
    pub statistic: f64,
    pub threshold: f64,
    pub detected: bool,
    pub removed: Option<SensorId>,
}

/// Why the loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The J-test accepted the remaining data.
    Passed,
    /// Bad data detected but every remaining normalized residue is zero.
    Unidentifiable,
    /// No redundancy left to test (`m_k <= n`).
    NoRedundancy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BadDataTrace {
    pub iterations: Vec<Iteration>,
    pub termination: Termination,
}

impl BadDataTrace {
    pub fn final_estimate(&self) -> &DVector<f64> {
        &self.last().result.estimate
    }

    pub fn removed(&self) -> Vec<SensorId> {
        self.iterations.iter().filter_map(|it| it.removed).collect()
    }

    /// Whether the J-test detected anything on the first pass.
    pub fn detected_initially(&self) -> bool {
        self.iterations[0].detected
    }

    pub fn passed(&self) -> bool {
        self.termination == Termination::Passed
    }

    fn last(&self) -> &Iteration {
        self.iterations.last().expect("trace has at least one iteration")
    }

    /// One line per iteration: index, sensor count, J, tau, removed label.
    pub fn to_text(&self, labels: &[String]) -> String {
        let mut out = String::new();
        for (k, it) in self.iterations.iter().enumerate() {
            let removed = it
                .removed
                .map_or_else(|| "-".to_string(), |id| labels[id.0].clone());
            let _ = writeln!(
                out,
                "iteration={} sensors={} j={:.6} tau={:.6} detected={} removed={}",
                k + 1,
                it.active.len(),
                it.statistic,
                it.threshold,
                it.detected,
                removed
            );
        }
        let _ = writeln!(out, "termination={:?}", self.termination);
        out
    }

    pub const CSV_HEADER: &'static str = "iterations,removed,initial_j,final_j,passed";

    /// Summary row matching [`BadDataTrace::CSV_HEADER`]; removed labels are
    /// joined with `;`.
    pub fn csv_row(&self, labels: &[String]) -> String {
        let removed: Vec<&str> = self.removed().iter().map(|id| labels[id.0].as_str()).collect();
        format!(
            "{},{},{},{},{}",
            self.iterations.len(),
            removed.join(";"),
            self.iterations[0].statistic,
            self.last().statistic,
            self.passed()
        )
    }
}

/// Fusion-center loop: estimate, J-test at false-alarm `alpha` with
/// `dof = m_k - n`, remove the sensor with the largest normalized residue,
/// repeat until the test passes.
pub fn bad_data_pipeline<M: MeasurementModel + ?Sized>(
    model: &M,
    z: &DVector<f64>,
    sigma: f64,
    alpha: f64,
) -> Result<BadDataTrace> {
    let n = model.state_dim();
    let mut active: Vec<usize> = (0..z.len()).collect();
    let mut iterations = Vec::new();
    let mut thresholds: Vec<Option<f64>> = vec![None; z.len() + 1];
    loop {
        let result = match model.estimate(z, &active) {
            Ok(r) => r,
            Err(Error::Singular) if iterations.is_empty() => return Err(Error::Unobservable),
            Err(e) => return Err(e),
        };
        let statistic = result.objective(sigma);
        let ids: Vec<SensorId> = active.iter().map(|&k| SensorId(k)).collect();
        if active.len() <= n {
            iterations.push(Iteration {
                active: ids,
                result,
                statistic,
                threshold: f64::INFINITY,
                detected: false,
                removed: None,
            });
            return Ok(BadDataTrace {
                iterations,
                termination: Termination::NoRedundancy,
            });
        }
        let dof = active.len() - n;
        let threshold = match thresholds[dof] {
            Some(t) => t,
            None => {
                let t = chi2_threshold(dof, alpha)?;
                thresholds[dof] = Some(t);
                t
            }
        };
        let detected = statistic > threshold;
        if !detected {
            iterations.push(Iteration {
                active: ids,
                result,
                statistic,
                threshold,
                detected,
                removed: None,
            });
            return Ok(BadDataTrace {
                iterations,
                termination: Termination::Passed,
            });
        }
        let jac = model.jacobian(&result.estimate, &active);
        let suspect = normalized_residues(&jac, &result.residue, sigma).largest();
        let removed = suspect.map(|pos| SensorId(active[pos]));
        iterations.push(Iteration {
            active: ids,
            result,
            statistic,
            threshold,
            detected,
            removed,
        });
        match suspect {
            Some(pos) => {
                active.remove(pos);
            }
            None => {
                return Ok(BadDataTrace {
                    iterations,
                    termination: Termination::Unidentifiable,
                })
            }
        }
    }
}
