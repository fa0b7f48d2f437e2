use nalgebra::DVector;

use super::plan::AttackPlan;
use super::subspace::SubspaceBasis;
use crate::error::{Error, Result};
use crate::grid::SensorId;
use crate::linalg;

/// Relative singular value below which `U` minus the attacked rows counts as
/// rank deficient.
pub const DEFAULT_NULL_TOL: f64 = 0.05;

/// Required ratio between the two smallest singular values before a null
/// vector is accepted as unique.
pub const DEFAULT_GAP: f64 = 10.0;

/// Smallest right singular vector of `U` without the `removed` rows, with the
/// two smallest singular values (padded with zeros for wide matrices).
fn smallest_null_vector(u: &SubspaceBasis, removed: &[SensorId]) -> (DVector<f64>, f64, f64, f64) {
    let reduced = u.without_rows(removed);
    let (s, v) = linalg::right_singular(&reduced);
    let n = s.len();
    let smallest = s[n - 1];
    let second = if n >= 2 { s[n - 2] } else { f64::INFINITY };
    let smax = s.first().copied().unwrap_or(0.0);
    (v.column(n - 1).into_owned(), smallest, second, smax)
}

/// Entries of `U v` on the `attacked` rows.
fn restricted(u: &SubspaceBasis, v: &DVector<f64>, attacked: &[SensorId]) -> Result<DVector<f64>> {
    let pos = u.positions(attacked)?;
    let full = &u.matrix * v;
    Ok(DVector::from_iterator(pos.len(), pos.iter().map(|&p| full[p])))
}

/// Unobservable attack on `s_a` from a basis of the full measurement space:
/// `a = U v` with `v` spanning the null space of `U` minus the rows of `s_a`.
///
/// `null_tol` is relative to the largest singular value of the reduced basis.
pub fn unobservable_attack_full(u: &SubspaceBasis, s_a: &[SensorId], null_tol: f64) -> Result<AttackPlan> {
    u.positions(s_a)?;
    if s_a.is_empty() {
        return Err(Error::Infeasible("no adversary sensors".into()));
    }
    let (v, smallest, _, smax) = smallest_null_vector(u, s_a);
    if smallest > null_tol * smax {
        return Err(Error::Infeasible(format!(
            "basis without the adversary rows has full rank (smallest singular value {smallest:.3e}, \
             tolerance {:.3e})",
            null_tol * smax
        )));
    }
    AttackPlan::from_entries(s_a.to_vec(), Vec::new(), restricted(u, &v, s_a)?)
}

/// Null vector of `U` minus `removed`, accepted only when it is unique by the
/// singular value `gap` criterion; the attack is `U v` on `attacked`.
pub(crate) fn one_dimensional_attack(
    u: &SubspaceBasis,
    removed: &[SensorId],
    attacked: &[SensorId],
    framed: &[SensorId],
    gap: f64,
) -> Result<AttackPlan> {
    u.positions(attacked)?;
    if removed.is_empty() {
        return Err(Error::Infeasible("empty critical set".into()));
    }
    let (v, smallest, second, _) = smallest_null_vector(u, removed);
    if second <= 0.0 || second < gap * smallest {
        return Err(Error::AmbiguousNullSpace {
            gap: second / smallest,
            required: gap,
        });
    }
    AttackPlan::from_entries(attacked.to_vec(), framed.to_vec(), restricted(u, &v, attacked)?)
}

/// Unobservable attack on `c` with only the observed sensors' basis `U_o`.
pub fn unobservable_attack_partial(u_o: &SubspaceBasis, c: &[SensorId], gap: f64) -> Result<AttackPlan> {
    one_dimensional_attack(u_o, c, c, &[], gap)
}

/// Smallest two singular values of the basis with `removed` rows deleted,
/// zero-padded when the reduced matrix is wide.
pub fn null_spectrum(u: &SubspaceBasis, removed: &[SensorId]) -> (f64, f64) {
    let (_, smallest, second, _) = smallest_null_vector(u, removed);
    (smallest, second)
}
