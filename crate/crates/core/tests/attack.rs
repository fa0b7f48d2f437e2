mod common;

use common::*;
use gridsub::attack::{
    apply_attack, build_framing_problem, calibrate_eta, estimate_subspace, framing_attack_partial, null_spectrum,
    solve_framing_qcqp, unobservable_attack_full, unobservable_attack_partial, AttackPlan, SubspaceBasis,
    DEFAULT_EPS1, DEFAULT_EPS2, DEFAULT_GAP, DEFAULT_NULL_TOL,
};
use gridsub::estimation::linear_wls;
use gridsub::grid::{dc_jacobian, noise_std_for_snr, sample_measurements, GridCase, SensorId, StateCovariance};
use gridsub::linalg::{self, direction_angle, largest_principal_angle};
use gridsub::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn exact(case: &GridCase, rows: Option<&[SensorId]>) -> SubspaceBasis {
    SubspaceBasis::exact(&dc_jacobian(case, rows).unwrap())
}

fn range_residual(h: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    (linalg::residual_projector(h) * a).norm()
}

fn trained_basis(case: &GridCase, seed: u64) -> SubspaceBasis {
    let sigma = noise_std_for_snr(case, 46.0).unwrap();
    let samples = sample_measurements(case, 1000, &StateCovariance::default(), sigma, seed).unwrap();
    estimate_subspace(&samples, &all_ids(case), case.dc_dim()).unwrap()
}

#[test]
fn exact_full_attack_lies_in_range() {
    let case = ieee14();
    let h = dc_jacobian(&case, None).unwrap();
    let s_a = ids(&case, FULL_ADVERSARY);
    let plan = unobservable_attack_full(&SubspaceBasis::exact(&h), &s_a, DEFAULT_NULL_TOL).unwrap();
    let a = plan.embedded(54);
    assert!(range_residual(&h.matrix, &a) < 1e-8);
    assert!((a.norm() - 1.0).abs() < 1e-12);
    for (k, v) in a.iter().enumerate() {
        if !s_a.contains(&SensorId(k)) {
            assert_eq!(*v, 0.0);
        }
    }
}

#[test]
fn empty_or_non_critical_adversary_is_infeasible() {
    let case = ieee14();
    let u = exact(&case, None);
    assert!(matches!(unobservable_attack_full(&u, &[], DEFAULT_NULL_TOL), Err(Error::Infeasible(_))));
    let few = ids(&case, "inj:1,flow:1:2");
    assert!(matches!(unobservable_attack_full(&u, &few, DEFAULT_NULL_TOL), Err(Error::Infeasible(_))));
}

#[test]
fn noiseless_samples_recover_range_exactly() {
    let case = ieee14();
    let h = dc_jacobian(&case, None).unwrap().matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let samples: Vec<DVector<f64>> = (0..40)
        .map(|_| &h * DVector::from_fn(13, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let u = estimate_subspace(&samples, &all_ids(&case), 13).unwrap();
    assert!(largest_principal_angle(&u.matrix, &linalg::orthonormal_basis(&h)) < 1e-8);
    let cols = u.matrix.transpose() * &u.matrix;
    assert!((cols - DMatrix::identity(13, 13)).amax() < 1e-10);
}

#[test]
fn too_few_samples_is_an_error() {
    let case = ieee14();
    let samples = sample_measurements(&case, 10, &StateCovariance::default(), 1e-3, 1).unwrap();
    assert!(matches!(
        estimate_subspace(&samples, &all_ids(&case), 13),
        Err(Error::DegenerateSamples(_))
    ));
}

#[test]
fn trained_subspace_is_close_to_range() {
    let case = ieee14();
    let u = trained_basis(&case, 21);
    let angle = largest_principal_angle(&u.matrix, &exact(&case, None).matrix);
    assert!(angle < 0.05, "{angle}");
}

#[test]
fn data_driven_direction_matches_exact() {
    let case = ieee14();
    let s_a = ids(&case, FULL_ADVERSARY);
    let exact_plan = unobservable_attack_full(&exact(&case, None), &s_a, DEFAULT_NULL_TOL).unwrap();
    let trained = unobservable_attack_full(&trained_basis(&case, 22), &s_a, DEFAULT_NULL_TOL).unwrap();
    let angle = direction_angle(&exact_plan.direction, &trained.direction);
    assert!(angle < 0.05, "{angle}");
}

#[test]
fn ieee14_partial_attack_lies_in_range() {
    let case = ieee14();
    let h = dc_jacobian(&case, None).unwrap().matrix;
    let s_o = ids(&case, OBSERVED_14);
    let c = ids(&case, FULL_ADVERSARY);
    let u_o = exact(&case, Some(&s_o));
    let (smallest, second) = null_spectrum(&u_o, &c);
    assert!(second >= DEFAULT_GAP * smallest);
    let plan = unobservable_attack_partial(&u_o, &c, DEFAULT_GAP).unwrap();
    assert!(range_residual(&h, &plan.embedded(54)) < 1e-8);
    let full = unobservable_attack_full(&exact(&case, None), &c, DEFAULT_NULL_TOL).unwrap();
    assert!(direction_angle(&plan.direction, &full.direction) < 1e-6);
}

#[test]
fn ieee118_partial_attack_lies_in_range() {
    let case = ieee118();
    let h = dc_jacobian(&case, None).unwrap().matrix;
    let u_o = exact(&case, Some(&ids(&case, OBSERVED_118)));
    let c = ids(&case, ATTACK_118);
    let (smallest, second) = null_spectrum(&u_o, &c);
    assert!(second >= DEFAULT_GAP * smallest);
    let plan = unobservable_attack_partial(&u_o, &c, DEFAULT_GAP).unwrap();
    assert!(range_residual(&h, &plan.embedded(case.sensor_count())) < 1e-8);
}

#[test]
fn ambiguous_null_space_is_rejected() {
    let case = ieee14();
    let u_o = exact(&case, Some(&ids(&case, OBSERVED_14)));
    let mut c = ids(&case, FULL_ADVERSARY);
    c.extend(ids(&case, "flow:4:5,flow:3:2,flow:5:6,flow:4:7,flow:4:9"));
    assert!(matches!(
        unobservable_attack_partial(&u_o, &c, DEFAULT_GAP),
        Err(Error::AmbiguousNullSpace { .. })
    ));
}

#[test]
fn ieee14_framing_problem_is_one_dimensional() {
    let case = ieee14();
    let s_a = ids(&case, FRAMING_ADVERSARY_14);
    let s_f = ids(&case, FRAMED_14);
    let problem = build_framing_problem(&exact(&case, None), &s_a, &s_f, DEFAULT_EPS1, DEFAULT_EPS2).unwrap();
    assert_eq!(problem.feasible_dim(), 1);
    for (r, id) in problem.rows.iter().enumerate() {
        if !s_a.contains(id) {
            assert!(problem.feasible.row(r).amax() < 1e-8);
        }
    }
    let plan = solve_framing_qcqp(&problem).unwrap();
    let a = plan.embedded(54);
    let b = problem.feasible.column(0).normalize();
    assert!((a.dot(&b).abs() - 1.0).abs() < 1e-10);
    assert!((problem.objective(&a) - plan.objective.unwrap()).abs() < 1e-9);
}

#[test]
fn framing_without_critical_set_has_empty_space() {
    let case = ieee14();
    let s_a = ids(&case, "inj:4");
    let s_f = ids(&case, "inj:1");
    assert!(matches!(
        build_framing_problem(&exact(&case, None), &s_a, &s_f, DEFAULT_EPS1, DEFAULT_EPS2),
        Err(Error::EmptyFeasibleSpace(_))
    ));
}

#[test]
fn trained_framing_direction_matches_exact() {
    let case = ieee14();
    let s_a = ids(&case, FRAMING_ADVERSARY_14);
    let s_f = ids(&case, FRAMED_14);
    let solve = |u: &SubspaceBasis| {
        solve_framing_qcqp(&build_framing_problem(u, &s_a, &s_f, DEFAULT_EPS1, DEFAULT_EPS2).unwrap()).unwrap()
    };
    let angle = direction_angle(&solve(&exact(&case, None)).direction, &solve(&trained_basis(&case, 23)).direction);
    assert!(angle < 0.05, "{angle}");
}

/// Five sensors, three states; a single outside row leaves a 2-dimensional
/// feasible space over the two adversary rows.
fn toy_basis(rng: &mut ChaCha8Rng) -> SubspaceBasis {
    let h = DMatrix::from_fn(5, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    SubspaceBasis {
        matrix: linalg::orthonormal_basis(&h),
        rows: (0..5).map(SensorId).collect(),
        singular_values: Vec::new(),
    }
}

#[test]
fn toy_qcqp_matches_circle_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let s_a = [SensorId(1), SensorId(2)];
    let s_f = [SensorId(3), SensorId(4)];
    for _ in 0..5 {
        let u = toy_basis(&mut rng);
        let problem = build_framing_problem(&u, &s_a, &s_f, DEFAULT_EPS1, DEFAULT_EPS2).unwrap();
        assert_eq!(problem.feasible_dim(), 2);
        let plan = solve_framing_qcqp(&problem).unwrap();
        let best_eig = problem.objective(&plan.embedded(5));
        assert!((best_eig - plan.objective.unwrap()).abs() < 1e-9);
        let mut best_grid = 0.0f64;
        let steps = (std::f64::consts::PI / 1e-3).ceil() as usize;
        for k in 0..steps {
            let phi = k as f64 * 1e-3;
            let a = &problem.feasible * DVector::from_vec(vec![phi.cos(), phi.sin()]);
            best_grid = best_grid.max(problem.objective(&(&a / a.norm())));
        }
        assert!(best_eig >= best_grid - 1e-9);
        assert!(best_eig - best_grid < 1e-3 * best_eig.max(1.0));
    }
}

#[test]
fn ieee14_partial_framing_matches_qcqp() {
    let case = ieee14();
    let c1 = ids(&case, FRAMING_ADVERSARY_14);
    let c2 = ids(&case, FRAMED_14);
    let rows = minus(&ids(&case, OBSERVED_14), &c2);
    let u_a = exact(&case, Some(&rows));
    let (smallest, second) = null_spectrum(&u_a, &c1);
    assert!(second >= DEFAULT_GAP * smallest);
    let partial = framing_attack_partial(&u_a, &c1, &c2, DEFAULT_GAP).unwrap();
    let problem = build_framing_problem(&exact(&case, None), &c1, &c2, DEFAULT_EPS1, DEFAULT_EPS2).unwrap();
    let full = solve_framing_qcqp(&problem).unwrap();
    let angle = direction_angle(&partial.direction, &full.direction);
    assert!(angle < 0.05, "{angle}");
    assert_eq!(partial.framed, c2);
}

#[test]
fn ieee118_partial_framing_matches_qcqp() {
    let case = ieee118();
    let c1 = ids(&case, FRAMING_ADVERSARY_118);
    let c2 = ids(&case, FRAMED_118);
    let rows = minus(&ids(&case, OBSERVED_118), &c2);
    let u_a = exact(&case, Some(&rows));
    let (smallest, second) = null_spectrum(&u_a, &c1);
    assert!(second >= DEFAULT_GAP * smallest);
    let partial = framing_attack_partial(&u_a, &c1, &c2, DEFAULT_GAP).unwrap();
    let problem = build_framing_problem(&exact(&case, None), &c1, &c2, DEFAULT_EPS1, DEFAULT_EPS2).unwrap();
    let full = solve_framing_qcqp(&problem).unwrap();
    assert!(direction_angle(&partial.direction, &full.direction) < 0.05);
}

#[test]
fn framed_rows_inside_basis_are_rejected() {
    let case = ieee14();
    let c1 = ids(&case, FRAMING_ADVERSARY_14);
    let c2 = ids(&case, FRAMED_14);
    let u = exact(&case, Some(&ids(&case, OBSERVED_14)));
    assert!(framing_attack_partial(&u, &c1, &c2, DEFAULT_GAP).is_err());
}

#[test]
fn direction_ignores_basis_column_order_and_sign() {
    let case = ieee14();
    let s_a = ids(&case, FULL_ADVERSARY);
    let u = exact(&case, None);
    let reference = unobservable_attack_full(&u, &s_a, DEFAULT_NULL_TOL).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..5 {
        let mut order: Vec<usize> = (0..13).collect();
        for k in (1..13).rev() {
            order.swap(k, rng.random_range(0..=k));
        }
        let mut shuffled = u.clone();
        shuffled.matrix = DMatrix::from_fn(54, 13, |r, c| {
            let flip = if c % 3 == 0 { -1.0 } else { 1.0 };
            flip * u.matrix[(r, order[c])]
        });
        let plan = unobservable_attack_full(&shuffled, &s_a, DEFAULT_NULL_TOL).unwrap();
        assert!((plan.direction - &reference.direction).amax() < 1e-10);
    }
}

#[test]
fn attack_application_and_calibration() {
    let case = ieee14();
    let plan = unobservable_attack_full(&exact(&case, None), &ids(&case, FULL_ADVERSARY), DEFAULT_NULL_TOL).unwrap();
    let z = gridsub::grid::ac_measure(&case, &case.operating_state()).unwrap();
    assert_eq!(apply_attack(&z, &plan, 0.0), z);
    let eta = calibrate_eta(&z, &plan, 0.04);
    let za = apply_attack(&z, &plan, eta);
    assert!(((&za - &z).lp_norm(1) / z.lp_norm(1) - 0.04).abs() < 1e-12);
    let back = apply_attack(&za, &plan, -eta);
    assert!((back - &z).amax() < 1e-12);
    for k in 0..54 {
        if !plan.attacked.contains(&SensorId(k)) {
            assert_eq!(za[k].to_bits(), z[k].to_bits());
        }
    }
}

#[test]
fn estimation_error_scales_linearly() {
    let case = ieee14();
    let h = dc_jacobian(&case, None).unwrap().matrix;
    let plan = unobservable_attack_full(&exact(&case, None), &ids(&case, FULL_ADVERSARY), DEFAULT_NULL_TOL).unwrap();
    let a = plan.embedded(54);
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let z = &h * DVector::from_fn(13, |_, _| 0.1 * rng.sample::<f64, _>(StandardNormal))
        + DVector::from_fn(54, |_, _| 0.01 * rng.sample::<f64, _>(StandardNormal));
    let base = linear_wls(&h, &z).unwrap().estimate;
    let err = |eta: f64| (linear_wls(&h, &(&z + &a * eta)).unwrap().estimate - &base).norm();
    let unit = err(1.0);
    assert!(unit > 0.0);
    for eta in [2.0, 4.0] {
        assert!((err(eta) - eta * unit).abs() < 1e-8);
    }
}

#[test]
fn plan_text_round_trip() {
    let case = ieee14();
    let problem = build_framing_problem(
        &exact(&case, None),
        &ids(&case, FRAMING_ADVERSARY_14),
        &ids(&case, FRAMED_14),
        DEFAULT_EPS1,
        DEFAULT_EPS2,
    )
    .unwrap();
    let plan = solve_framing_qcqp(&problem).unwrap().with_eta(0.37);
    let back = AttackPlan::from_text(&case, &plan.to_text(&case)).unwrap();
    assert_eq!(back, plan);
}

#[test]
fn spectrum_csv_lists_singular_values() {
    let case = ieee14();
    let u = exact(&case, None);
    let mut out = Vec::new();
    u.write_spectrum_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,singular_value");
    assert_eq!(lines.len(), 1 + u.singular_values.len());
}
