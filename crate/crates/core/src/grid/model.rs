use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::case::{BusId, GridCase, SensorId, SensorKind};
use crate::error::{Error, Result};

/// Full AC state: magnitudes at every bus, angles at every non-reference bus.
///
/// The reference angle is not a state variable; it stays at the case's
/// operating value.
#[derive(Clone, Debug, PartialEq)]
pub struct AcState {
    pub magnitudes: Vec<f64>,
    pub angles: Vec<f64>,
}

impl AcState {
    pub fn dim(&self) -> usize {
        self.magnitudes.len() + self.angles.len()
    }

    pub fn flat(case: &GridCase) -> Self {
        AcState {
            magnitudes: vec![1.0; case.bus_count()],
            angles: vec![0.0; case.dc_dim()],
        }
    }
}

/// Row- and column-labelled real matrix (typically the DC Jacobian `H`).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMatrix {
    pub matrix: DMatrix<f64>,
    pub rows: Vec<SensorId>,
    pub cols: Vec<BusId>,
}

impl MeasurementMatrix {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn position(&self, id: SensorId) -> Option<usize> {
        self.rows.iter().position(|&r| r == id)
    }

    /// Keeps the listed sensors, in the listed order. Unknown ids are skipped.
    pub fn select_rows(&self, ids: &[SensorId]) -> MeasurementMatrix {
        let picks: Vec<usize> = ids.iter().filter_map(|&id| self.position(id)).collect();
        self.take_rows(&picks)
    }

    pub fn without_rows(&self, ids: &[SensorId]) -> MeasurementMatrix {
        let picks: Vec<usize> = (0..self.nrows())
            .filter(|&k| !ids.contains(&self.rows[k]))
            .collect();
        self.take_rows(&picks)
    }

    pub fn select_cols(&self, cols: &[usize]) -> MeasurementMatrix {
        let matrix = DMatrix::from_fn(self.nrows(), cols.len(), |i, j| self.matrix[(i, cols[j])]);
        MeasurementMatrix {
            matrix,
            rows: self.rows.clone(),
            cols: cols.iter().map(|&c| self.cols[c]).collect(),
        }
    }

    fn take_rows(&self, picks: &[usize]) -> MeasurementMatrix {
        let matrix = DMatrix::from_fn(picks.len(), self.ncols(), |i, j| self.matrix[(picks[i], j)]);
        MeasurementMatrix {
            matrix,
            rows: picks.iter().map(|&k| self.rows[k]).collect(),
            cols: self.cols.clone(),
        }
    }
}

/// One line term contributing to a sensor reading: `(line index, from-side bus
/// position, to-side bus position)`.
type Term = (usize, usize, usize);

/// Precomputed AC real-power measurement function for a case.
#[derive(Clone, Debug)]
pub struct AcModel<'a> {
    case: &'a GridCase,
    admittance: Vec<Complex64>,
    terms: Vec<Vec<Term>>,
    columns: Vec<Option<usize>>,
}

impl<'a> AcModel<'a> {
    pub fn new(case: &'a GridCase) -> Result<Self> {
        let mut admittance = Vec::with_capacity(case.lines().len());
        for l in case.lines() {
            if l.connected && l.impedance.norm() == 0.0 {
                return Err(Error::ZeroImpedance {
                    from: l.from,
                    to: l.to,
                });
            }
            admittance.push(if l.connected {
                l.impedance.inv()
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
        let pos = |b: BusId| case.bus_position(b).expect("validated bus");
        let terms = case
            .sensors()
            .iter()
            .map(|s| match s.kind {
                SensorKind::Flow { from, to } => {
                    let k = case.line_between(from, to).expect("validated line");
                    vec![(k, pos(from), pos(to))]
                }
                SensorKind::Injection { bus } => case
                    .incident_lines(bus)
                    .map(|k| {
                        let l = &case.lines()[k];
                        let other = if l.from == bus { l.to } else { l.from };
                        (k, pos(bus), pos(other))
                    })
                    .collect(),
            })
            .collect();
        let columns = case
            .buses()
            .iter()
            .map(|b| case.angle_column(b.id))
            .collect();
        Ok(AcModel {
            case,
            admittance,
            terms,
            columns,
        })
    }

    pub fn case(&self) -> &GridCase {
        self.case
    }

    fn full_angles(&self, angles: &[f64]) -> Vec<f64> {
        let reference = self.case.reference_angle();
        self.columns
            .iter()
            .map(|c| c.map_or(reference, |k| angles[k]))
            .collect()
    }

    fn flow(&self, line: usize, i: usize, j: usize, v: &[f64], th: &[f64]) -> f64 {
        let y = self.admittance[line];
        let d = th[i] - th[j];
        v[i] * v[i] * y.re - v[i] * v[j] * (y.re * d.cos() + y.im * d.sin())
    }

    /// Real power seen by the given sensor rows.
    pub fn measure_rows(&self, magnitudes: &[f64], angles: &[f64], rows: &[usize]) -> DVector<f64> {
        let th = self.full_angles(angles);
        DVector::from_iterator(
            rows.len(),
            rows.iter().map(|&r| {
                self.terms[r]
                    .iter()
                    .map(|&(k, i, j)| self.flow(k, i, j, magnitudes, &th))
                    .sum::<f64>()
            }),
        )
    }

    pub fn measure(&self, x: &AcState) -> Result<DVector<f64>> {
        self.check_dims(x)?;
        let rows: Vec<usize> = (0..self.case.sensor_count()).collect();
        Ok(self.measure_rows(&x.magnitudes, &x.angles, &rows))
    }

    /// Analytic Jacobian of the selected rows with respect to the angle state.
    pub fn angle_jacobian_rows(
        &self,
        magnitudes: &[f64],
        angles: &[f64],
        rows: &[usize],
    ) -> DMatrix<f64> {
        let th = self.full_angles(angles);
        let mut jac = DMatrix::zeros(rows.len(), self.case.dc_dim());
        for (r, &row) in rows.iter().enumerate() {
            for &(k, i, j) in &self.terms[row] {
                let y = self.admittance[k];
                let d = th[i] - th[j];
                let g = magnitudes[i] * magnitudes[j] * (y.re * d.sin() - y.im * d.cos());
                if let Some(c) = self.columns[i] {
                    jac[(r, c)] += g;
                }
                if let Some(c) = self.columns[j] {
                    jac[(r, c)] -= g;
                }
            }
        }
        jac
    }

    fn check_dims(&self, x: &AcState) -> Result<()> {
        if x.magnitudes.len() != self.case.bus_count() || x.angles.len() != self.case.dc_dim() {
            return Err(Error::InvalidArgument(format!(
                "state has {} magnitudes and {} angles, case needs {} and {}",
                x.magnitudes.len(),
                x.angles.len(),
                self.case.bus_count(),
                self.case.dc_dim()
            )));
        }
        Ok(())
    }
}

/// Evaluates the AC real-power measurement function at `x`.
pub fn ac_measure(case: &GridCase, x: &AcState) -> Result<DVector<f64>> {
    AcModel::new(case)?.measure(x)
}

/// DC measurement matrix for all sensors, or for `subset` in the given order.
///
/// A flow row for `(i, j)` carries `+B_ij` at the column of `theta_i` and
/// `-B_ij` at `theta_j`; an injection row is the sum of the bus's outgoing
/// flow rows. Disconnected lines contribute nothing.
pub fn dc_jacobian(case: &GridCase, subset: Option<&[SensorId]>) -> Result<MeasurementMatrix> {
    let rows: Vec<SensorId> = match subset {
        Some(ids) => {
            for id in ids {
                if id.0 >= case.sensor_count() {
                    return Err(Error::UnknownSensor(format!("#{}", id.0)));
                }
            }
            ids.to_vec()
        }
        None => case.sensors().iter().map(|s| s.id).collect(),
    };
    let n = case.dc_dim();
    let mut matrix = DMatrix::zeros(rows.len(), n);
    let mut add_flow = |r: usize, line: usize, from: BusId, to: BusId| -> Result<()> {
        let l = &case.lines()[line];
        if !l.connected {
            return Ok(());
        }
        if l.impedance.norm() == 0.0 {
            return Err(Error::ZeroImpedance {
                from: l.from,
                to: l.to,
            });
        }
        let b = l.susceptance();
        if let Some(c) = case.angle_column(from) {
            matrix[(r, c)] += b;
        }
        if let Some(c) = case.angle_column(to) {
            matrix[(r, c)] -= b;
        }
        Ok(())
    };
    for (r, id) in rows.iter().enumerate() {
        match case.sensors()[id.0].kind {
            SensorKind::Flow { from, to } => {
                let k = case.line_between(from, to).expect("validated line");
                add_flow(r, k, from, to)?;
            }
            SensorKind::Injection { bus } => {
                for k in case.incident_lines(bus).collect::<Vec<_>>() {
                    let l = &case.lines()[k];
                    let other = if l.from == bus { l.to } else { l.from };
                    add_flow(r, k, bus, other)?;
                }
            }
        }
    }
    Ok(MeasurementMatrix {
        matrix,
        rows,
        cols: case.state_buses(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::case::{Bus, Line};

    fn two_bus(theta2: f64) -> GridCase {
        GridCase::new(
            vec![
                Bus { id: 1, magnitude: 1.0, angle: 0.0 },
                Bus { id: 2, magnitude: 1.0, angle: theta2 },
            ],
            vec![Line {
                from: 1,
                to: 2,
                impedance: Complex64::new(0.0, 0.1),
                connected: true,
            }],
            1,
            vec![
                SensorKind::Flow { from: 1, to: 2 },
                SensorKind::Flow { from: 2, to: 1 },
                SensorKind::Injection { bus: 1 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn flat_state_measures_zero() {
        let case = two_bus(0.0);
        let z = ac_measure(&case, &AcState::flat(&case)).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn two_bus_flow_matches_complex_formula() {
        // Direct complex evaluation of V_i e^{j th_i} * conj((V_i e^{j th_i} - V_j e^{j th_j}) / Z).
        let case = two_bus(-0.1);
        let z = ac_measure(&case, &case.operating_state()).unwrap();
        let vi = Complex64::from_polar(1.0, 0.0);
        let vj = Complex64::from_polar(1.0, -0.1);
        let s = vi * ((vi - vj) / Complex64::new(0.0, 0.1)).conj();
        assert!((z[0] - s.re).abs() < 1e-14);
        // 10 * sin(0.1)
        assert!((z[0] - 0.998_334_166_468_281_6).abs() < 1e-12);
        assert!((z[0] + z[1]).abs() < 1e-14, "lossless line");
        assert_eq!(z[2], z[0]);
    }

    #[test]
    fn dc_row_for_single_line() {
        let case = two_bus(0.0);
        let h = dc_jacobian(&case, Some(&[SensorId(0)])).unwrap();
        assert_eq!(h.matrix.shape(), (1, 1));
        assert!((h.matrix[(0, 0)] + 10.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_line_gives_zero_row() {
        let mut case = two_bus(0.0);
        let buses = case.buses().to_vec();
        let mut lines = case.lines().to_vec();
        lines[0].connected = false;
        let kinds = case.sensors().iter().map(|s| s.kind).collect();
        case = GridCase::new(buses, lines, 1, kinds).unwrap();
        let h = dc_jacobian(&case, None).unwrap();
        assert!(h.matrix.iter().all(|&v| v == 0.0));
        let z = ac_measure(&case, &case.operating_state()).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_impedance_rejected() {
        let case = two_bus(0.0);
        let mut lines = case.lines().to_vec();
        lines[0].impedance = Complex64::new(0.0, 0.0);
        let kinds = case.sensors().iter().map(|s| s.kind).collect();
        let case = GridCase::new(case.buses().to_vec(), lines, 1, kinds).unwrap();
        assert!(matches!(
            ac_measure(&case, &case.operating_state()),
            Err(Error::ZeroImpedance { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let case = two_bus(0.0);
        let bad = AcState { magnitudes: vec![1.0], angles: vec![0.0] };
        assert!(ac_measure(&case, &bad).is_err());
    }
}
