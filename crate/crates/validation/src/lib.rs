//! Independent oracles used to check gridsub: an eigenvalue rank test,
//! random framing instances and a brute-force search of the framing
//! objective over the unit sphere.

use std::time::Duration;

use gridsub::attack::{build_framing_problem, FramingProblem, SubspaceBasis, DEFAULT_EPS1, DEFAULT_EPS2};
use gridsub::grid::SensorId;
use gridsub::linalg;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Numeric rank from the eigenvalues of `A^T A`.
pub fn eigen_rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let eig = (a.transpose() * a).symmetric_eigen();
    let top = eig.eigenvalues.max();
    if top <= 0.0 {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&l| l > top * 1e-14).count()
}

/// A framing problem over a random 5-dimensional basis whose feasible space
/// has dimension `dim` (2 to 4): `5 - dim` rows outside the attack, `dim + 1`
/// adversary rows and 3 framed rows.
pub fn random_framing_toy<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> FramingProblem {
    assert!((1..5).contains(&dim));
    let n = 5;
    let outside = n - dim;
    let m = outside + dim + 1 + 3;
    let h = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = SubspaceBasis {
        matrix: linalg::orthonormal_basis(&h),
        rows: (0..m).map(SensorId).collect(),
        singular_values: Vec::new(),
    };
    let s_a: Vec<SensorId> = (outside..outside + dim + 1).map(SensorId).collect();
    let s_f: Vec<SensorId> = (outside + dim + 1..m).map(SensorId).collect();
    build_framing_problem(&u, &s_a, &s_f, DEFAULT_EPS1, DEFAULT_EPS2).expect("toy has a feasible space")
}

/// Largest framing objective over feasible unit attacks `B y / ||B y||`, with
/// `y` on a hyperspherical-angle grid of the given step. Antipodal points
/// share a value, so the last angle covers half a turn.
pub fn grid_search_objective(problem: &FramingProblem, step: f64) -> f64 {
    let b = &problem.feasible;
    let mb = problem.residue_map() * b;
    let p = mb.transpose() * &mb;
    let g = b.transpose() * b;
    let d = b.ncols();
    let value = |y: &DVector<f64>| (y.transpose() * &p * y)[0] / (y.transpose() * &g * y)[0];
    let pi = std::f64::consts::PI;
    let ticks = |range: f64| (0..=(range / step).ceil() as usize).map(move |k| (k as f64 * step).min(range));
    let mut best = f64::NEG_INFINITY;
    match d {
        1 => best = value(&DVector::from_element(1, 1.0)),
        2 => {
            for t in ticks(pi) {
                best = best.max(value(&DVector::from_vec(vec![t.cos(), t.sin()])));
            }
        }
        3 => {
            for t1 in ticks(pi) {
                for t2 in ticks(pi) {
                    let y = DVector::from_vec(vec![t1.cos(), t1.sin() * t2.cos(), t1.sin() * t2.sin()]);
                    best = best.max(value(&y));
                }
            }
        }
        4 => {
            for t1 in ticks(pi) {
                for t2 in ticks(pi) {
                    for t3 in ticks(pi) {
                        let (s1, s2) = (t1.sin(), t2.sin());
                        let y = DVector::from_vec(vec![
                            t1.cos(),
                            s1 * t2.cos(),
                            s1 * s2 * t3.cos(),
                            s1 * s2 * t3.sin(),
                        ]);
                        best = best.max(value(&y));
                    }
                }
            }
        }
        _ => panic!("grid search supports feasible dimensions 1 to 4"),
    }
    best
}

/// One acceptance criterion's outcome.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {} ({}): {} [{:.1}s]",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridsub::attack::solve_framing_qcqp;
    use rand::SeedableRng;

    #[test]
    fn eigen_rank_counts() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert_eq!(eigen_rank(&a), 1);
        assert_eq!(eigen_rank(&DMatrix::identity(4, 3)), 3);
        assert_eq!(eigen_rank(&DMatrix::zeros(2, 2)), 0);
    }

    #[test]
    fn toys_have_requested_dimension() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for dim in 2..=4 {
            assert_eq!(random_framing_toy(&mut rng, dim).feasible_dim(), dim);
        }
    }

    #[test]
    fn grid_never_beats_the_eigen_solution() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let problem = random_framing_toy(&mut rng, 2);
        let plan = solve_framing_qcqp(&problem).unwrap();
        let grid = grid_search_objective(&problem, 1e-3);
        let best = plan.objective.unwrap();
        assert!(grid <= best * (1.0 + 1e-12));
        assert!(best - grid < 1e-4 * best);
    }
}
