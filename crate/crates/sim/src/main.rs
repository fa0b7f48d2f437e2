use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use gridsub::attack::{eigengap_dimension, estimate_subspace, SubspaceBasis};
use gridsub::grid::{
    dc_jacobian, load_case, noise_std_for_snr, sample_measurements, GridCase, SensorId, StateCovariance,
};
use gridsub::linalg;
use gridsub::observability::{
    attack_feasible, case_spanning_tree, check_graph_conditions, check_partial_conditions, is_critical_set,
    rank_report, Role, SensorSet,
};
use gridsub_sim::{compare_methods, Scenario, SimError};

#[derive(Parser)]
#[command(name = "gridsub", version, about = "Grid state-estimation attack experiments")]
struct Cli {
    /// Write the CSV result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario or sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metrics table.
    Run {
        scenario: PathBuf,
        /// Override the run count.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Run several scenarios and join their normalized errors.
    Compare {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Check observability and attack conditions for sensor sets.
    ///
    /// Sets are given as `adversary=...`, `observed=...` and `framed=...`
    /// arguments, or as a file holding such lines.
    CheckObservability { case: PathBuf, sets: Vec<String> },
    /// Estimate the measurement subspace from K noisy samples and write its spectrum.
    TrainSubspace {
        case: PathBuf,
        k: usize,
        #[arg(long, default_value_t = 46.0)]
        snr_db: f64,
        /// Subspace dimension; defaults to the case state dimension.
        #[arg(long)]
        dim: Option<usize>,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>, runs: Option<usize>) -> Result<Scenario, SimError> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(runs) = runs {
        s.runs = runs;
    }
    s.validate()?;
    Ok(s)
}

fn set_lines(args: &[String]) -> anyhow::Result<Vec<(String, String)>> {
    let mut lines = Vec::new();
    for arg in args {
        let text = if Path::new(arg).is_file() {
            std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
        } else {
            arg.clone()
        };
        for line in text.lines().map(|l| l.split('#').next().unwrap_or("").trim()) {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got '{line}'"))?;
            lines.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(lines)
}

/// Returns whether the adversary can attack.
fn check_observability(case: &GridCase, sets: &[String]) -> anyhow::Result<(String, bool)> {
    let mut adversary = None;
    let mut observed = None;
    let mut framed = None;
    for (k, v) in set_lines(sets)? {
        match k.as_str() {
            "adversary" => adversary = Some(SensorSet::parse(case, &v, Role::Adversary)?),
            "observed" => observed = Some(SensorSet::parse(case, &v, Role::Observed)?),
            "framed" => framed = Some(SensorSet::parse(case, &v, Role::Framed)?),
            _ => {}
        }
    }
    let all: Vec<SensorId> = case.sensors().iter().map(|s| s.id).collect();
    let h = dc_jacobian(case, None)?;
    let mut out = String::new();
    let report = rank_report(case, &all)?;
    out.push_str(&format!("observable={} rank={}\n", report.observable, report.rank.unwrap_or(0)));
    out.push_str(&format!("spanning_tree={}\n", case_spanning_tree(case, &all).observable));
    let Some(adversary) = adversary else {
        return Ok((out, report.observable));
    };
    let mut feasible = attack_feasible(&h, &adversary.ids);
    out.push_str(&format!("critical={}\n", is_critical_set(&h, &adversary.ids)));
    if let Some(observed) = &observed {
        let partial = check_partial_conditions(case, &observed.ids, &adversary.ids)?;
        let graph = check_graph_conditions(case, &observed.ids, &adversary.ids)?;
        out.push_str(&format!("partial_conditions={partial}\ngraph_conditions={graph}\n"));
        feasible &= partial;
    }
    if let Some(framed) = &framed {
        let mut union = adversary.ids.clone();
        union.extend_from_slice(&framed.ids);
        let framable = attack_feasible(&h, &union);
        out.push_str(&format!("framing_feasible={framable}\n"));
        feasible &= framable;
    }
    out.push_str(if feasible { "verdict=feasible\n" } else { "verdict=infeasible\n" });
    Ok((out, feasible))
}

fn train_subspace(case_path: &Path, k: usize, snr_db: f64, dim: Option<usize>, seed: u64) -> anyhow::Result<(String, String)> {
    let case = load_case(case_path)?;
    let sigma = noise_std_for_snr(&case, snr_db)?;
    let samples = sample_measurements(&case, k, &StateCovariance::default(), sigma, seed)?;
    let rows: Vec<SensorId> = case.sensors().iter().map(|s| s.id).collect();
    let basis = estimate_subspace(&samples, &rows, dim.unwrap_or(case.dc_dim()))?;
    let mut csv = Vec::new();
    basis.write_spectrum_csv(&mut csv)?;
    let exact = SubspaceBasis::exact(&dc_jacobian(&case, None)?);
    let summary = format!(
        "dim={} eigengap_dim={} principal_angle={:.6}\n",
        basis.dim(),
        eigengap_dimension(&basis.singular_values).unwrap_or(0),
        linalg::largest_principal_angle(&basis.matrix, &exact.matrix)
    );
    Ok((String::from_utf8(csv)?, summary))
}

fn run(cli: Cli) -> Result<ExitCode, anyhow::Error> {
    match cli.command {
        Command::Run { scenario, runs } => {
            let s = load_scenario(&scenario, cli.seed, runs)?;
            let table = gridsub_sim::run_scenario(&s)?;
            emit(&cli.out, &table.to_csv())?;
        }
        Command::Compare { scenarios, runs } => {
            let mut tables = Vec::new();
            for path in &scenarios {
                let s = load_scenario(path, cli.seed, runs)?;
                let name = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
                tables.push((name, gridsub_sim::run_scenario(&s)?));
            }
            emit(&cli.out, &compare_methods(&tables)?.to_csv())?;
        }
        Command::CheckObservability { case, sets } => {
            let case = load_case(&case).with_context(|| format!("loading {}", case.display()))?;
            let (text, feasible) = check_observability(&case, &sets)?;
            emit(&cli.out, &text)?;
            if !feasible {
                return Ok(ExitCode::from(2));
            }
        }
        Command::TrainSubspace { case, k, snr_db, dim } => {
            let (csv, summary) = train_subspace(&case, k, snr_db, dim, cli.seed.unwrap_or(0))?;
            emit(&cli.out, &csv)?;
            eprint!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.downcast_ref::<SimError>().is_some_and(SimError::is_infeasible)
                || e.downcast_ref::<gridsub::Error>().is_some_and(|g| {
                    matches!(
                        g,
                        gridsub::Error::Infeasible(_)
                            | gridsub::Error::AmbiguousNullSpace { .. }
                            | gridsub::Error::EmptyFeasibleSpace(_)
                    )
                });
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}
