use nalgebra::{DMatrix, DVector};

use super::plan::AttackPlan;
use super::subspace::SubspaceBasis;
use super::unobservable::one_dimensional_attack;
use crate::error::{Error, Result};
use crate::grid::SensorId;
use crate::linalg;

/// Default `eps1`, relative to the largest singular value of `U_2`.
pub const DEFAULT_EPS1: f64 = 0.05;
pub const DEFAULT_EPS2: f64 = 1e-6;

/// The framing QCQP in feasible-basis coordinates.
#[derive(Clone, Debug)]
pub struct FramingProblem {
    /// `W~ = I - U U^T` over the basis rows.
    pub projector: DMatrix<f64>,
    /// Diagonal of `Omega~`.
    pub normalizer: DVector<f64>,
    /// Basis-row positions of the framed sensors.
    pub framed_rows: Vec<usize>,
    /// Basis of `R(U_1) ∩ A`, one row per basis row.
    pub feasible: DMatrix<f64>,
    pub rows: Vec<SensorId>,
    pub attacked: Vec<SensorId>,
    pub framed: Vec<SensorId>,
    /// Absolute thresholds actually used.
    pub eps1: f64,
    pub eps2: f64,
}

impl FramingProblem {
    pub fn feasible_dim(&self) -> usize {
        self.feasible.ncols()
    }

    /// `I_SF Omega~ W~`, the map from attack vectors to framed normalized
    /// residues.
    pub fn residue_map(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.framed_rows.len(), self.projector.ncols(), |i, j| {
            let r = self.framed_rows[i];
            self.normalizer[r] * self.projector[(r, j)]
        })
    }

    /// Objective `||I_SF Omega~ W~ a||^2` at a full-row-space vector `a`.
    pub fn objective(&self, a: &DVector<f64>) -> f64 {
        (self.residue_map() * a).norm_squared()
    }
}

/// Sets up the framing problem for adversary set `s_a` and framed set `s_f`.
///
/// `eps1` is relative to the largest singular value of `U_2` (the rows outside
/// `s_a` and `s_f`); `eps2` is absolute on the diagonal of `W~`.
pub fn build_framing_problem(
    u: &SubspaceBasis,
    s_a: &[SensorId],
    s_f: &[SensorId],
    eps1: f64,
    eps2: f64,
) -> Result<FramingProblem> {
    if let Some(id) = s_a.iter().find(|id| s_f.contains(id)) {
        return Err(Error::InvalidArgument(format!(
            "sensor #{} is both adversary and framed",
            id.0
        )));
    }
    let a_pos = u.positions(s_a)?;
    let framed_rows = u.positions(s_f)?;
    let m = u.rows.len();
    let projector = DMatrix::identity(m, m) - &u.matrix * u.matrix.transpose();
    let normalizer = DVector::from_fn(m, |i, _| {
        let w = projector[(i, i)];
        if w <= eps2 {
            0.0
        } else {
            1.0 / w.sqrt()
        }
    });
    let mut excluded = s_a.to_vec();
    excluded.extend_from_slice(s_f);
    let u2 = u.without_rows(&excluded);
    let (s, v) = linalg::right_singular(&u2);
    let threshold = eps1 * s.first().copied().unwrap_or(0.0);
    let null: Vec<usize> = (0..s.len()).filter(|&k| s[k] < threshold || s[k] == 0.0).collect();
    if null.is_empty() {
        return Err(Error::EmptyFeasibleSpace(threshold));
    }
    let v_hat = DMatrix::from_fn(v.nrows(), null.len(), |r, c| v[(r, null[c])]);
    let mut u_a = DMatrix::zeros(m, u.dim());
    for &p in &a_pos {
        u_a.set_row(p, &u.matrix.row(p));
    }
    Ok(FramingProblem {
        projector,
        normalizer,
        framed_rows,
        feasible: u_a * v_hat,
        rows: u.rows.clone(),
        attacked: s_a.to_vec(),
        framed: s_f.to_vec(),
        eps1: threshold,
        eps2,
    })
}

/// Top generalized eigenpair of `(A, G)` with `G` positive definite.
fn top_generalized_eigen(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Option<(f64, DVector<f64>)> {
    let chol = g.clone().cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))?;
    let w = eig.eigenvectors.column(k).into_owned();
    Some((lambda, l_inv.transpose() * w))
}

/// Maximizes the framed normalized-residue energy over unit attacks in the
/// feasible space, as the generalized eigenproblem
/// `M^T M y = lambda B^T B y` with `M = I_SF Omega~ W~ B`.
pub fn solve_framing_qcqp(problem: &FramingProblem) -> Result<AttackPlan> {
    let solve = |b: &DMatrix<f64>| {
        let mmat = problem.residue_map() * b;
        top_generalized_eigen(&(mmat.transpose() * &mmat), &(b.transpose() * b)).map(|(l, y)| (l, b * y))
    };
    let (lambda, a) = match solve(&problem.feasible) {
        Some(found) => found,
        None => {
            let b = linalg::orthonormal_basis(&problem.feasible);
            if b.ncols() == 0 {
                return Err(Error::Singular);
            }
            solve(&b).ok_or(Error::Singular)?
        }
    };
    let a = &a / a.norm();
    let pos: Vec<usize> = problem
        .attacked
        .iter()
        .map(|id| problem.rows.iter().position(|r| r == id).expect("checked at build"))
        .collect();
    let entries = DVector::from_iterator(pos.len(), pos.iter().map(|&p| a[p]));
    let mut plan = AttackPlan::from_entries(problem.attacked.clone(), problem.framed.clone(), entries)?;
    plan.objective = Some(lambda);
    Ok(plan)
}

/// Framing attack on `c1` from a basis `u_a` of the observed sensors `S_o \
/// C_2`: `v` spans the null space of `u_a` minus `c1`. `c2` is recorded as the
/// framed set.
pub fn framing_attack_partial(
    u_a: &SubspaceBasis,
    c1: &[SensorId],
    c2: &[SensorId],
    gap: f64,
) -> Result<AttackPlan> {
    if let Some(id) = c2.iter().find(|id| u_a.position(**id).is_some()) {
        return Err(Error::InvalidArgument(format!(
            "framed sensor #{} is among the observed basis rows",
            id.0
        )));
    }
    one_dimensional_attack(u_a, c1, c1, c2, gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(m: &DMatrix<f64>) -> SubspaceBasis {
        SubspaceBasis {
            matrix: linalg::orthonormal_basis(m),
            rows: (0..m.nrows()).map(SensorId).collect(),
            singular_values: Vec::new(),
        }
    }

    #[test]
    fn overlapping_sets_rejected() {
        let u = basis(&DMatrix::identity(3, 1));
        assert!(build_framing_problem(&u, &[SensorId(0)], &[SensorId(0)], DEFAULT_EPS1, DEFAULT_EPS2).is_err());
    }

    #[test]
    fn full_rank_remainder_has_no_feasible_space() {
        let h = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let u = basis(&h);
        assert!(matches!(
            build_framing_problem(&u, &[SensorId(0)], &[SensorId(1)], DEFAULT_EPS1, DEFAULT_EPS2),
            Err(Error::EmptyFeasibleSpace(_))
        ));
    }

    #[test]
    fn one_dimensional_feasible_space() {
        // Column 2 is seen only by rows 2 and 3.
        let h = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0]);
        let u = basis(&h);
        let p = build_framing_problem(&u, &[SensorId(2)], &[SensorId(3)], DEFAULT_EPS1, DEFAULT_EPS2).unwrap();
        assert_eq!(p.feasible_dim(), 1);
        for r in [0, 1, 3, 4] {
            assert!(p.feasible[(r, 0)].abs() < 1e-12);
        }
        let w = &p.projector;
        assert!((w * w - w).amax() < 1e-12);
        let plan = solve_framing_qcqp(&p).unwrap();
        assert_eq!(plan.direction.len(), 1);
        assert!((plan.direction[0] - 1.0).abs() < 1e-12);
        let obj = p.objective(&plan.embedded(5));
        assert!((obj - plan.objective.unwrap()).abs() < 1e-9);
    }
}
