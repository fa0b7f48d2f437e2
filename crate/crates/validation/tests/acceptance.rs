//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use gridsub::attack::{null_spectrum, solve_framing_qcqp, DEFAULT_GAP};
use gridsub::estimation::{normalized_residues, AcAngleModel, MeasurementModel};
use gridsub::grid::{add_noise, dc_jacobian, load_case, random_case, sample_state, AcModel, SensorId};
use gridsub::linalg::direction_angle;
use gridsub::observability::{case_spanning_tree, is_observable};
use gridsub_sim::{compare_methods, run_rng, Experiment, MetricsTable, Scenario};
use gridsub_validation::{eigen_rank, grid_search_objective, random_framing_toy, Verdict};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_PLACEMENTS: usize = 200;
const OBSERVABILITY_SECONDS: f64 = 30.0;
const UNDETECTABLE_MARGIN: f64 = 0.01;
const UNDETECTABLE_SECONDS: f64 = 60.0;
const METHOD_GAP: f64 = 0.10;
const DIRECTION_TOL: f64 = 0.05;
const FRAMING_PASS_RATE: f64 = 0.8;
const TOY_INSTANCES: usize = 21;
const GRID_SLACK: f64 = 1e-3;
const FALSE_ALARM: f64 = 0.04;
const FALSE_ALARM_TOL: f64 = 0.02;
const RESIDUE_DRAWS: usize = 5000;
const RESIDUE_VARIANCE: (f64, f64) = (0.9, 1.1);
const SCALE_SECONDS: f64 = 1800.0;

type Check = fn() -> (bool, String);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(root().join("scenarios").join(name)).expect("scenario loads")
}

fn run(name: &str) -> MetricsTable {
    gridsub_sim::run_scenario(&scenario(name)).expect("scenario runs")
}

fn increasing(t: &MetricsTable) -> bool {
    let mut last = t.baseline.normalized_error;
    t.rows.iter().all(|r| {
        let up = r.normalized_error > last;
        last = r.normalized_error;
        up
    })
}

fn fmt(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/")
}

fn observability_equivalence() -> (bool, String) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    let mut observable = 0;
    for _ in 0..RANDOM_PLACEMENTS {
        let buses = rng.random_range(2..=10);
        let (edge_prob, sensor_prob) = (rng.random_range(0.2..0.7), rng.random_range(0.1..0.6));
        let case = random_case(&mut rng, buses, edge_prob, sensor_prob);
        let ids: Vec<SensorId> = case.sensors().iter().map(|s| s.id).collect();
        let h = dc_jacobian(&case, None).expect("jacobian");
        let rank = is_observable(&h);
        assert_eq!(rank, eigen_rank(&h.matrix) == case.dc_dim());
        let graph = case_spanning_tree(&case, &ids).observable;
        agree += (graph == rank) as usize;
        observable += rank as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    (
        agree == RANDOM_PLACEMENTS && secs < OBSERVABILITY_SECONDS,
        format!("{agree}/{RANDOM_PLACEMENTS} agree ({observable} observable) in {secs:.2}s"),
    )
}

fn linear_undetectability() -> (bool, String) {
    let start = Instant::now();
    let t = run("ieee14_unobs_linear_known.scn");
    let secs = start.elapsed().as_secs_f64();
    let worst = t
        .rows
        .iter()
        .map(|r| r.detection_rate - t.baseline.detection_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    (
        worst <= UNDETECTABLE_MARGIN && secs < UNDETECTABLE_SECONDS,
        format!(
            "baseline detection {:.4}, attacked {}, worst excess {worst:.4} over {} runs in {secs:.1}s",
            t.baseline.detection_rate,
            fmt(t.rows.iter().map(|r| r.detection_rate)),
            t.runs
        ),
    )
}

fn data_driven_matches_known() -> (bool, String) {
    let known = run("ieee14_unobs_full_known.scn");
    let learned = run("ieee14_unobs_full.scn");
    let cmp = compare_methods(&[("known".into(), known.clone()), ("learned".into(), learned.clone())]).expect("grids");
    let gaps: Vec<f64> = (0..cmp.magnitudes.len()).map(|k| cmp.relative_difference(1, k).abs()).collect();
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    (
        worst <= METHOD_GAP,
        format!(
            "normalized error known {} vs data-driven {}, worst relative gap {worst:.4}",
            fmt(known.rows.iter().map(|r| r.normalized_error)),
            fmt(learned.rows.iter().map(|r| r.normalized_error))
        ),
    )
}

fn partial_direction() -> (bool, String) {
    let exp = Experiment::new(&scenario("ieee14_unobs_partial.scn")).expect("experiment");
    let exact = exp.exact_plan().expect("exact plan");
    let first = exp.trained_plan_for_run(0).expect("trained plan");
    let again = exp.trained_plan_for_run(0).expect("trained plan");
    let deterministic = first == again;
    let angle = direction_angle(&first.direction, &exact.direction);
    let worst = (1..10)
        .map(|r| direction_angle(&exp.trained_plan_for_run(r).expect("plan").direction, &exact.direction))
        .fold(angle, f64::max);
    (
        angle < DIRECTION_TOL && deterministic,
        format!("angle {angle:.4} rad (worst of 10 windows {worst:.4}), deterministic={deterministic}"),
    )
}

fn framing_efficacy() -> (bool, String) {
    let t = run("ieee14_framing_full.scn");
    let up = increasing(&t);
    let passes = t.rows.iter().all(|r| r.pass_rate >= FRAMING_PASS_RATE);
    let framed_first = t.rows.iter().all(|r| r.framed_removed_rate > r.adversary_removed_rate);
    (
        up && passes && framed_first,
        format!(
            "normalized error {} (increasing={up}), pass rate {}, framed removed {} vs adversary removed {}",
            fmt(t.rows.iter().map(|r| r.normalized_error)),
            fmt(t.rows.iter().map(|r| r.pass_rate)),
            fmt(t.rows.iter().map(|r| r.framed_removed_rate)),
            fmt(t.rows.iter().map(|r| r.adversary_removed_rate))
        ),
    )
}

fn dimension_one() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in [
        "ieee14_unobs_partial_known.scn",
        "ieee14_framing_partial_known.scn",
        "ieee118_unobs_partial_known.scn",
        "ieee118_framing_partial_known.scn",
    ] {
        let exp = Experiment::new(&scenario(name)).expect("experiment");
        let u = exp.exact_basis();
        let (smallest, second) = null_spectrum(&u, &exp.adversary);
        let pass = second >= DEFAULT_GAP * smallest && second > 0.0;
        ok &= pass;
        parts.push(format!("{}: s_min {smallest:.1e}, next {second:.3}", name.trim_end_matches(".scn")));
    }
    (ok, parts.join("; "))
}

fn qcqp_against_grid() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for k in 0..TOY_INSTANCES {
        let dim = 2 + k % 3;
        let problem = random_framing_toy(&mut rng, dim);
        let plan = solve_framing_qcqp(&problem).expect("qcqp");
        let objective = plan.objective.expect("objective");
        let step = if dim == 4 { 1e-2 } else { 1e-3 };
        let grid = grid_search_objective(&problem, step);
        let margin = objective - grid;
        let certified = (problem.objective(&plan.embedded(problem.rows.len())) - objective).abs() <= 1e-9 * objective.max(1.0);
        ok &= margin >= -GRID_SLACK && certified;
        worst = worst.min(margin);
    }
    (ok, format!("{TOY_INSTANCES} instances (dims 2-4), worst eigen minus grid {worst:.2e}"))
}

fn estimator_sanity() -> (bool, String) {
    let t = run("ieee14_none.scn");
    let rate = t.baseline.detection_rate;
    let rate_ok = (rate - FALSE_ALARM).abs() <= FALSE_ALARM_TOL;
    let exp = Experiment::new(&scenario("ieee14_none.scn")).expect("experiment");
    let case = &exp.case;
    let ac = AcModel::new(case).expect("model");
    let rows: Vec<usize> = (0..case.sensor_count()).collect();
    let m = rows.len();
    let mut sum_sq = DVector::<f64>::zeros(m);
    let mut counted = vec![0usize; m];
    for draw in 0..RESIDUE_DRAWS as u64 {
        let mut rng = run_rng(8080, draw, 0);
        let x = sample_state(case, &exp.scenario.covariance, &mut rng);
        let mut z = ac.measure_rows(&x.magnitudes, &x.angles, &rows);
        add_noise(&mut z, exp.sigma, &mut rng);
        let model = AcAngleModel::new(case, x.magnitudes.clone()).expect("model");
        let est = model.estimate(&z, &rows).expect("estimate");
        let h = model.jacobian(&est.estimate, &rows);
        let nr = normalized_residues(&h, &est.residue, exp.sigma);
        for i in 0..m {
            if nr.omega[i] > 0.0 {
                sum_sq[i] += nr.values[i] * nr.values[i];
                counted[i] += 1;
            }
        }
    }
    let variances: Vec<f64> = (0..m)
        .filter(|&i| counted[i] == RESIDUE_DRAWS)
        .map(|i| sum_sq[i] / RESIDUE_DRAWS as f64)
        .collect();
    let lo = variances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = variances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let var_ok = !variances.is_empty() && lo >= RESIDUE_VARIANCE.0 && hi <= RESIDUE_VARIANCE.1;
    (
        rate_ok && var_ok,
        format!(
            "false alarm {rate:.4} over {} runs; residue variance in [{lo:.3}, {hi:.3}] over {} non-critical sensors",
            t.runs,
            variances.len()
        ),
    )
}

fn ieee118_scale() -> (bool, String) {
    let start = Instant::now();
    let case = load_case(root().join("cases/ieee118.case")).expect("case");
    let total = case.sensor_count() as f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["ieee118_unobs_partial.scn", "ieee118_framing_partial.scn"] {
        let s = scenario(name);
        let t = gridsub_sim::run_scenario(&s).expect("scenario runs");
        let up = increasing(&t);
        ok &= up;
        parts.push(format!(
            "{}: observed {:.1}% attacked {:.1}%, normalized error {} (increasing={up})",
            name.trim_end_matches(".scn"),
            100.0 * s.observed.len() as f64 / total,
            100.0 * s.adversary.len() as f64 / total,
            fmt(t.rows.iter().map(|r| r.normalized_error))
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= SCALE_SECONDS;
    (ok, format!("{} in {secs:.1}s", parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(usize, &'static str, Check); 9] = [
        (1, "observability oracle equivalence", observability_equivalence),
        (2, "undetectable exact attack, linear model", linear_undetectability),
        (3, "data-driven matches known H", data_driven_matches_known),
        (4, "partial-observation direction", partial_direction),
        (5, "framing efficacy", framing_efficacy),
        (6, "dimension-one null spaces", dimension_one),
        (7, "QCQP against grid search", qcqp_against_grid),
        (8, "estimator statistical sanity", estimator_sanity),
        (9, "118-bus scale check", ieee118_scale),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = check();
        let verdict = Verdict {
            id,
            name,
            pass,
            detail,
            elapsed: start.elapsed(),
        };
        println!("{}", verdict.line());
        failed += !pass as usize;
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
