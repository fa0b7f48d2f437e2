use crate::grid::{MeasurementMatrix, SensorId};
use crate::linalg;

/// Entries at or below this magnitude do not make a column "affected".
pub const AFFECTED_TOL: f64 = 1e-12;

/// Full column rank at the default numeric tolerance.
pub fn is_observable(h: &MeasurementMatrix) -> bool {
    h.ncols() == 0 || linalg::rank(&h.matrix) == h.ncols()
}

/// True iff removing the rows of `s_a` leaves `h` column-rank deficient.
pub fn attack_feasible(h: &MeasurementMatrix, s_a: &[SensorId]) -> bool {
    !is_observable(&h.without_rows(s_a))
}

/// Removing `c` breaks observability and removing any `|c| - 1` of its
/// members does not.
pub fn is_critical_set(h: &MeasurementMatrix, c: &[SensorId]) -> bool {
    if c.is_empty() || !attack_feasible(h, c) {
        return false;
    }
    (0..c.len()).all(|k| {
        let rest: Vec<SensorId> = c
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &s)| s)
            .collect();
        !attack_feasible(h, &rest)
    })
}

/// Columns of `h_o` with an entry above [`AFFECTED_TOL`].
pub fn affected_states(h_o: &MeasurementMatrix) -> Vec<usize> {
    (0..h_o.ncols())
        .filter(|&j| h_o.matrix.column(j).iter().any(|v| v.abs() > AFFECTED_TOL))
        .collect()
}

/// Whether the states `x_o` are uniquely determined by the rows of `h_o`:
/// the columns `x_o` of `h_o` have full column rank.
pub fn partial_observable(h_o: &MeasurementMatrix, x_o: &[usize]) -> bool {
    if x_o.is_empty() {
        return true;
    }
    if h_o.nrows() == 0 {
        return false;
    }
    let h_s = h_o.select_cols(x_o);
    linalg::rank(&h_s.matrix) == x_o.len()
}

/// `c` is critical with respect to `(S_o, x_o)`, where `S_o` is the row set of
/// `h_o`.
pub fn is_critical_wrt(h_o: &MeasurementMatrix, x_o: &[usize], c: &[SensorId]) -> bool {
    if c.is_empty() || c.iter().any(|&s| h_o.position(s).is_none()) {
        return false;
    }
    let observable_without = |removed: &[SensorId]| partial_observable(&h_o.without_rows(removed), x_o);
    if observable_without(c) {
        return false;
    }
    (0..c.len()).all(|k| {
        let rest: Vec<SensorId> = c
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &s)| s)
            .collect();
        observable_without(&rest)
    })
}

/// Null-space dimension of `h` with the rows of `removed` deleted.
pub fn null_dimension_without(h: &MeasurementMatrix, removed: &[SensorId]) -> usize {
    let reduced = h.without_rows(removed);
    reduced.ncols() - linalg::rank(&reduced.matrix)
}
