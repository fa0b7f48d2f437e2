use gridsub::attack::{
    apply_attack, build_framing_problem, calibrate_eta, estimate_subspace, framing_attack_partial,
    solve_framing_qcqp, unobservable_attack_full, unobservable_attack_partial, AttackPlan, SubspaceBasis,
};
use gridsub::estimation::{bad_data_pipeline, AcAngleModel, LinearModel, MeasurementModel};
use gridsub::grid::{
    add_noise, dc_jacobian, load_case, noise_std_for_snr, noise_std_from_reference, sample_state, AcModel,
    GridCase, MeasurementMatrix, SensorId,
};
use gridsub::linalg;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::metrics::{MetricsRow, MetricsTable};
use crate::scenario::{AttackKind, ModelKind, Scenario, Training};

/// Stream `2 * run + k` of the scenario seed; `k = 0` evaluates, `k = 1`
/// trains.
pub fn run_rng(seed: u64, run: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * run + k);
    rng
}

/// Stream of the shared training window under `training=once`.
const SHARED_TRAINING_STREAM: u64 = u64::MAX;

/// One ground-truth draw.
struct Draw {
    magnitudes: Vec<f64>,
    angles: Vec<f64>,
    z: DVector<f64>,
}

/// Per-run outcome: the no-attack baseline, then one entry per magnitude.
#[derive(Clone, Debug)]
struct Outcome {
    error: f64,
    detected: bool,
    framed_removed: f64,
    adversary_removed: f64,
    passed: bool,
}

/// A scenario resolved against its case.
pub struct Experiment {
    pub scenario: Scenario,
    pub case: GridCase,
    /// Full DC matrix.
    pub h: MeasurementMatrix,
    pub adversary: Vec<SensorId>,
    pub framed: Vec<SensorId>,
    pub observed: Vec<SensorId>,
    /// Sensors whose readings the adversary learns its subspace from.
    pub basis_rows: Vec<SensorId>,
    pub dim: usize,
    pub sigma: f64,
}

fn resolve(case: &GridCase, labels: &[String]) -> Result<Vec<SensorId>> {
    Ok(labels
        .iter()
        .map(|l| case.sensor_by_label(l))
        .collect::<gridsub::Result<_>>()?)
}

impl Experiment {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let case = load_case(&scenario.case).map_err(|e| match e {
            gridsub::Error::Io(source) => SimError::Io {
                path: scenario.case.clone(),
                source,
            },
            other => SimError::Core(other),
        })?;
        let h = dc_jacobian(&case, None)?;
        let adversary = resolve(&case, &scenario.adversary)?;
        let framed = resolve(&case, &scenario.framed)?;
        let observed = resolve(&case, &scenario.observed)?;
        let all: Vec<SensorId> = case.sensors().iter().map(|s| s.id).collect();
        let basis_rows = match scenario.attack {
            AttackKind::UnobservablePartial => observed.clone(),
            AttackKind::FramingPartial => observed.iter().copied().filter(|id| !framed.contains(id)).collect(),
            _ => all,
        };
        let dim = match scenario.dim {
            Some(d) => d,
            None => linalg::rank(&h.select_rows(&basis_rows).matrix),
        };
        let sigma = match scenario.model {
            ModelKind::Ac => noise_std_for_snr(&case, scenario.snr_db)?,
            ModelKind::Linear => {
                let theta0 = DVector::from_vec(case.operating_state().angles);
                noise_std_from_reference(&(&h.matrix * theta0), scenario.snr_db)
            }
        };
        Ok(Experiment {
            scenario: scenario.clone(),
            case,
            h,
            adversary,
            framed,
            observed,
            basis_rows,
            dim,
            sigma,
        })
    }

    /// Basis of the adversary's rows from the exact DC matrix.
    pub fn exact_basis(&self) -> SubspaceBasis {
        SubspaceBasis::exact(&self.h.select_rows(&self.basis_rows))
    }

    /// Builds the scenario's attack from a basis over `basis_rows`.
    pub fn plan_from_basis(&self, basis: &SubspaceBasis) -> Result<AttackPlan> {
        let s = &self.scenario;
        let plan = match s.attack {
            AttackKind::None => return Err(SimError::Invalid("scenario has no attack".into())),
            AttackKind::UnobservableFull => unobservable_attack_full(basis, &self.adversary, s.null_tol)?,
            AttackKind::UnobservablePartial => unobservable_attack_partial(basis, &self.adversary, s.gap)?,
            AttackKind::FramingFull => {
                let problem = build_framing_problem(basis, &self.adversary, &self.framed, s.eps1, s.eps2)?;
                solve_framing_qcqp(&problem)?
            }
            AttackKind::FramingPartial => framing_attack_partial(basis, &self.adversary, &self.framed, s.gap)?,
        };
        Ok(plan)
    }

    pub fn exact_plan(&self) -> Result<AttackPlan> {
        self.plan_from_basis(&self.exact_basis())
    }

    fn draw<R: Rng + ?Sized>(&self, ac: &AcModel, rows: &[usize], rng: &mut R) -> Draw {
        let s = &self.scenario;
        let (magnitudes, angles, mut z) = match s.model {
            ModelKind::Ac => {
                let x = sample_state(&self.case, &s.covariance, rng);
                let z = ac.measure_rows(&x.magnitudes, &x.angles, rows);
                (x.magnitudes, x.angles, z)
            }
            ModelKind::Linear => {
                let mut angles = self.case.operating_state().angles;
                for a in angles.iter_mut() {
                    *a += s.covariance.angle_std * rng.sample::<f64, _>(StandardNormal);
                }
                let theta = DVector::from_column_slice(&angles);
                let z = DVector::from_iterator(
                    rows.len(),
                    rows.iter().map(|&r| (self.h.matrix.row(r) * &theta)[0]),
                );
                (vec![1.0; self.case.bus_count()], angles, z)
            }
        };
        add_noise(&mut z, self.sigma, rng);
        Draw { magnitudes, angles, z }
    }

    /// `train_k` samples of the basis rows drawn from `rng`.
    pub fn training_samples<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        let ac = AcModel::new(&self.case)?;
        let rows: Vec<usize> = self.basis_rows.iter().map(|id| id.0).collect();
        Ok((0..self.scenario.train_k).map(|_| self.draw(&ac, &rows, rng).z).collect())
    }

    /// Data-driven attack trained on the window of the given RNG.
    pub fn trained_plan<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<AttackPlan> {
        let samples = self.training_samples(rng)?;
        let basis = estimate_subspace(&samples, &self.basis_rows, self.dim)?;
        self.plan_from_basis(&basis)
    }

    /// Training window of run `run` under the scenario seed.
    pub fn trained_plan_for_run(&self, run: u64) -> Result<AttackPlan> {
        self.trained_plan(&mut run_rng(self.scenario.seed, run, 1))
    }

    fn outcome<M: MeasurementModel>(&self, model: &M, z: &DVector<f64>, truth: &[f64], plan: Option<&AttackPlan>) -> Result<Outcome> {
        let trace = bad_data_pipeline(model, z, self.sigma, self.scenario.alpha)?;
        let error = trace
            .final_estimate()
            .iter()
            .zip(truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let removed = trace.removed();
        let fraction = |set: &[SensorId]| {
            if set.is_empty() {
                0.0
            } else {
                removed.iter().filter(|id| set.contains(id)).count() as f64 / set.len() as f64
            }
        };
        let (framed_removed, adversary_removed) = match plan {
            Some(p) => (fraction(&p.framed), fraction(&p.attacked)),
            None => (fraction(&self.framed), fraction(&self.adversary)),
        };
        Ok(Outcome {
            error,
            detected: trace.detected_initially(),
            framed_removed,
            adversary_removed,
            passed: trace.passed(),
        })
    }

    fn run_once(&self, ac: &AcModel, run: u64, shared: Option<&AttackPlan>) -> Result<Vec<Outcome>> {
        let s = &self.scenario;
        let mut rng = run_rng(s.seed, run, 0);
        let rows: Vec<usize> = (0..self.case.sensor_count()).collect();
        let draw = self.draw(ac, &rows, &mut rng);
        let plan = match (s.attack, shared) {
            (AttackKind::None, _) => None,
            (_, Some(p)) => Some(p.clone()),
            (_, None) => Some(self.trained_plan_for_run(run)?),
        };
        let evaluate = |z: &DVector<f64>| -> Result<Outcome> {
            match s.model {
                ModelKind::Ac => {
                    let model = AcAngleModel::new(&self.case, draw.magnitudes.clone())?;
                    self.outcome(&model, z, &draw.angles, plan.as_ref())
                }
                ModelKind::Linear => {
                    let model = LinearModel::new(self.h.matrix.clone());
                    self.outcome(&model, z, &draw.angles, plan.as_ref())
                }
            }
        };
        let mut out = vec![evaluate(&draw.z)?];
        if let Some(plan) = &plan {
            for &mag in &s.magnitudes {
                let eta = calibrate_eta(&draw.z, plan, mag);
                out.push(evaluate(&apply_attack(&draw.z, plan, eta))?);
            }
        }
        Ok(out)
    }

    /// Runs every Monte Carlo trial and aggregates in run order.
    pub fn run(&self) -> Result<MetricsTable> {
        let s = &self.scenario;
        let ac = AcModel::new(&self.case)?;
        let shared = match s.attack {
            AttackKind::None => None,
            _ if s.known_h => Some(self.exact_plan()?),
            _ if s.training == Training::Once => {
                let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
                rng.set_stream(SHARED_TRAINING_STREAM);
                Some(self.trained_plan(&mut rng)?)
            }
            _ => None,
        };
        let outcomes: Vec<Vec<Outcome>> = (0..s.runs as u64)
            .into_par_iter()
            .map(|run| self.run_once(&ac, run, shared.as_ref()))
            .collect::<Result<_>>()?;
        Ok(aggregate(&outcomes, &s.magnitudes, s.attack != AttackKind::None))
    }
}

fn aggregate(outcomes: &[Vec<Outcome>], magnitudes: &[f64], attacked: bool) -> MetricsTable {
    let n = outcomes.len() as f64;
    let column = |k: usize, magnitude: f64, baseline_mean: f64| -> MetricsRow {
        let mean = |f: &dyn Fn(&Outcome) -> f64| outcomes.iter().map(|o| f(&o[k])).sum::<f64>() / n;
        let mean_error = mean(&|o| o.error);
        let var = if outcomes.len() > 1 {
            outcomes.iter().map(|o| (o[k].error - mean_error).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let base = if k == 0 { mean_error } else { baseline_mean };
        MetricsRow {
            magnitude,
            mean_error,
            normalized_error: mean_error / base,
            stderr: (var / n).sqrt() / base,
            detection_rate: mean(&|o| o.detected as u8 as f64),
            framed_removed_rate: mean(&|o| o.framed_removed),
            adversary_removed_rate: mean(&|o| o.adversary_removed),
            pass_rate: mean(&|o| o.passed as u8 as f64),
        }
    };
    let baseline = column(0, 0.0, 0.0);
    let rows = if attacked {
        magnitudes
            .iter()
            .enumerate()
            .map(|(j, &m)| column(j + 1, m, baseline.mean_error))
            .collect()
    } else {
        Vec::new()
    };
    MetricsTable {
        baseline,
        rows,
        runs: outcomes.len(),
    }
}

/// Resolves, runs and aggregates a scenario.
pub fn run_scenario(scenario: &Scenario) -> Result<MetricsTable> {
    Experiment::new(scenario)?.run()
}
