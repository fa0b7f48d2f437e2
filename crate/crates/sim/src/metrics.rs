use std::fmt::Write as _;

use crate::error::{Result, SimError};

pub const CSV_HEADER: &str = "magnitude,mean_error,normalized_error,stderr,detection_rate,\
framed_removed_rate,adversary_removed_rate,pass_rate";

/// Aggregates at one attack magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub magnitude: f64,
    /// Mean of `||x_hat - x||_2` over runs.
    pub mean_error: f64,
    /// `mean_error` over the no-attack mean error.
    pub normalized_error: f64,
    /// Standard error of `normalized_error`.
    pub stderr: f64,
    /// Fraction of runs whose first J-test flagged bad data.
    pub detection_rate: f64,
    /// Mean fraction of the framed set removed by the pipeline.
    pub framed_removed_rate: f64,
    /// Mean fraction of the adversary set removed by the pipeline.
    pub adversary_removed_rate: f64,
    /// Fraction of runs where the pipeline ended with the J-test passing.
    pub pass_rate: f64,
}

impl MetricsRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.magnitude,
            self.mean_error,
            self.normalized_error,
            self.stderr,
            self.detection_rate,
            self.framed_removed_rate,
            self.adversary_removed_rate,
            self.pass_rate
        )
    }
}

/// The no-attack baseline followed by one row per magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsTable {
    pub baseline: MetricsRow,
    pub rows: Vec<MetricsRow>,
    pub runs: usize,
}

impl MetricsTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        let _ = writeln!(out, "{}", self.baseline.csv());
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.csv());
        }
        out
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.magnitude).collect()
    }
}

/// Normalized errors of several methods side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub names: Vec<String>,
    pub magnitudes: Vec<f64>,
    /// `normalized[method][row]`.
    pub normalized: Vec<Vec<f64>>,
}

impl Comparison {
    /// `(method - first) / first` for every method after the first.
    pub fn relative_difference(&self, method: usize, row: usize) -> f64 {
        let base = self.normalized[0][row];
        (self.normalized[method][row] - base) / base
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["magnitude".to_string()];
        header.extend(self.names.iter().map(|n| format!("{n}_normalized_error")));
        header.extend(self.names.iter().skip(1).map(|n| format!("{n}_relative_difference")));
        let mut out = String::new();
        let _ = writeln!(out, "{}", header.join(","));
        for (row, mag) in self.magnitudes.iter().enumerate() {
            let mut cells = vec![mag.to_string()];
            cells.extend(self.normalized.iter().map(|m| m[row].to_string()));
            cells.extend((1..self.names.len()).map(|k| self.relative_difference(k, row).to_string()));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Joins tables on their magnitude grids, which must coincide.
pub fn compare_methods(tables: &[(String, MetricsTable)]) -> Result<Comparison> {
    let Some((_, first)) = tables.first() else {
        return Err(SimError::Invalid("nothing to compare".into()));
    };
    let magnitudes = first.magnitudes();
    for (name, t) in tables {
        if t.magnitudes() != magnitudes {
            return Err(SimError::MismatchedGrids(format!(
                "{name} has {:?}, expected {magnitudes:?}",
                t.magnitudes()
            )));
        }
    }
    Ok(Comparison {
        names: tables.iter().map(|(n, _)| n.clone()).collect(),
        magnitudes,
        normalized: tables
            .iter()
            .map(|(_, t)| t.rows.iter().map(|r| r.normalized_error).collect())
            .collect(),
    })
}
