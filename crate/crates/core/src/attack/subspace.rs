use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{MeasurementMatrix, SensorId};
use crate::linalg;

/// Orthonormal basis of a measurement column space, rows labelled by the
/// sensors they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub matrix: DMatrix<f64>,
    pub rows: Vec<SensorId>,
    /// Spectrum the basis was cut from, descending.
    pub singular_values: Vec<f64>,
}

impl SubspaceBasis {
    /// Basis of `R(H)` from a known measurement matrix.
    pub fn exact(h: &MeasurementMatrix) -> Self {
        let svd = linalg::svd_sorted(&h.matrix);
        let basis = linalg::orthonormal_basis(&h.matrix);
        SubspaceBasis {
            matrix: basis,
            rows: h.rows.clone(),
            singular_values: svd.singular_values,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn position(&self, id: SensorId) -> Option<usize> {
        self.rows.iter().position(|&r| r == id)
    }

    pub(crate) fn positions(&self, ids: &[SensorId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.position(id)
                    .ok_or_else(|| Error::UnknownSensor(format!("#{} is not a basis row", id.0)))
            })
            .collect()
    }

    /// Rows of the basis whose sensor is not in `removed`.
    pub fn without_rows(&self, removed: &[SensorId]) -> DMatrix<f64> {
        let keep: Vec<usize> = (0..self.rows.len())
            .filter(|&k| !removed.contains(&self.rows[k]))
            .collect();
        linalg::select_rows(&self.matrix, &keep)
    }

    /// Writes the spectrum as `index,singular_value` CSV.
    pub fn write_spectrum_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "index,singular_value")?;
        for (k, s) in self.singular_values.iter().enumerate() {
            writeln!(out, "{},{}", k + 1, s)?;
        }
        Ok(())
    }
}

/// Sample covariance with the sample mean removed, normalized by `K - 1`.
pub fn sample_covariance(samples: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::DegenerateSamples(k));
    }
    let m = samples[0].len();
    if samples.iter().any(|z| z.len() != m) {
        return Err(Error::InvalidArgument("samples differ in length".into()));
    }
    let mut mean = DVector::zeros(m);
    for z in samples {
        mean += z;
    }
    mean /= k as f64;
    let mut centered = DMatrix::zeros(m, k);
    for (j, z) in samples.iter().enumerate() {
        centered.set_column(j, &(z - &mean));
    }
    Ok(&centered * centered.transpose() / (k - 1) as f64)
}

/// The `dim` leading left singular vectors of the sample covariance of
/// `samples`, whose entries are the readings of `rows`.
pub fn estimate_subspace(samples: &[DVector<f64>], rows: &[SensorId], dim: usize) -> Result<SubspaceBasis> {
    if samples.len() < dim + 1 {
        return Err(Error::DegenerateSamples(dim));
    }
    if samples.iter().any(|z| z.len() != rows.len()) {
        return Err(Error::InvalidArgument(format!(
            "samples must have one entry per row ({})",
            rows.len()
        )));
    }
    if dim == 0 || dim > rows.len() {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {dim} out of range for {} rows",
            rows.len()
        )));
    }
    let cov = sample_covariance(samples)?;
    let svd = linalg::svd_sorted(&cov);
    let smax = svd.singular_values[0];
    if smax <= 0.0 || svd.singular_values[dim - 1] <= smax * linalg::RANK_TOL {
        return Err(Error::DegenerateSamples(dim));
    }
    Ok(SubspaceBasis {
        matrix: svd.u.columns(0, dim).into_owned(),
        rows: rows.to_vec(),
        singular_values: svd.singular_values,
    })
}

/// Keeps the entries of `rows` from full-length measurement vectors.
pub fn restrict_samples(samples: &[DVector<f64>], rows: &[SensorId]) -> Vec<DVector<f64>> {
    samples
        .iter()
        .map(|z| DVector::from_iterator(rows.len(), rows.iter().map(|id| z[id.0])))
        .collect()
}

/// Dimension at the largest ratio between consecutive singular values,
/// ignoring exact zeros.
pub fn eigengap_dimension(singular_values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..singular_values.len().saturating_sub(1) {
        let (a, b) = (singular_values[k], singular_values[k + 1]);
        if b <= 0.0 {
            continue;
        }
        let ratio = a / b;
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((k + 1, ratio));
        }
    }
    best.map(|(k, _)| k)
}
