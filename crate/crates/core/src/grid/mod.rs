//! Network model: case data, AC and DC measurement functions, sampling.

mod case;
mod model;
mod sampling;
mod synthetic;
mod topology;

use std::io::Write;

use nalgebra::DVector;

pub use case::{Bus, BusId, GridCase, Line, SensorId, SensorKind, SensorSpec};
pub use model::{ac_measure, dc_jacobian, AcModel, AcState, MeasurementMatrix};
pub use sampling::{
    add_noise, noise_std_for_snr, noise_std_from_reference, sample_measurements, sample_state,
    MeasurementSampler, Sample, StateCovariance,
};
pub use synthetic::random_case;
pub use topology::{reduced_network, ReducedNetwork, Topology};

/// Loads a case file.
pub fn load_case(path: impl AsRef<std::path::Path>) -> crate::Result<GridCase> {
    GridCase::load(path)
}

/// Writes measurement vectors as CSV: a header of sensor labels, then one row
/// per sample.
pub fn write_measurements_csv<W: Write>(
    out: &mut W,
    case: &GridCase,
    samples: &[DVector<f64>],
) -> crate::Result<()> {
    writeln!(out, "{}", case.labels().join(","))?;
    for z in samples {
        let row: Vec<String> = z.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
