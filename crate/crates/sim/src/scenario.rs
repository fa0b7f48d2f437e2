use std::path::{Path, PathBuf};
use std::str::FromStr;

use gridsub::grid::StateCovariance;

use crate::error::{Result, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackKind {
    None,
    UnobservableFull,
    UnobservablePartial,
    FramingFull,
    FramingPartial,
}

impl AttackKind {
    pub fn is_framing(self) -> bool {
        matches!(self, AttackKind::FramingFull | AttackKind::FramingPartial)
    }

    pub fn is_partial(self) -> bool {
        matches!(self, AttackKind::UnobservablePartial | AttackKind::FramingPartial)
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::UnobservableFull => "unobservable-full",
            AttackKind::UnobservablePartial => "unobservable-partial",
            AttackKind::FramingFull => "framing-full",
            AttackKind::FramingPartial => "framing-partial",
        }
    }
}

/// Model that generates measurements and that the estimator assumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// AC real-power measurements, Gauss-Newton over angles.
    Ac,
    /// `z = H theta + e` with `H` the DC matrix, linear LS.
    Linear,
}

/// Where the data-driven adversary gets its training samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Training {
    /// A fresh `train_k` window for every run.
    PerRun,
    /// One window shared by all runs.
    Once,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub case: PathBuf,
    pub attack: AttackKind,
    /// Build attacks from the exact DC matrix instead of samples.
    pub known_h: bool,
    pub model: ModelKind,
    /// `S_A`, `C` or `C_1` depending on the attack kind.
    pub adversary: Vec<String>,
    /// `S_F` or `C_2`.
    pub framed: Vec<String>,
    /// `S_o` for partial kinds.
    pub observed: Vec<String>,
    pub snr_db: f64,
    pub alpha: f64,
    pub train_k: usize,
    pub magnitudes: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub covariance: StateCovariance,
    pub training: Training,
    /// Subspace dimension override.
    pub dim: Option<usize>,
    pub eps1: f64,
    pub eps2: f64,
    pub null_tol: f64,
    pub gap: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            case: PathBuf::new(),
            attack: AttackKind::None,
            known_h: false,
            model: ModelKind::Ac,
            adversary: Vec::new(),
            framed: Vec::new(),
            observed: Vec::new(),
            snr_db: 46.0,
            alpha: 0.04,
            train_k: 1000,
            magnitudes: Vec::new(),
            runs: 1000,
            seed: 0,
            covariance: StateCovariance::default(),
            training: Training::PerRun,
            dim: None,
            eps1: gridsub::attack::DEFAULT_EPS1,
            eps2: gridsub::attack::DEFAULT_EPS2,
            null_tol: gridsub::attack::DEFAULT_NULL_TOL,
            gap: gridsub::attack::DEFAULT_GAP,
        }
    }
}

fn labels(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl Scenario {
    /// Reads a scenario file; a relative `case=` path is resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s: Scenario = text.parse()?;
        if s.case.is_relative() {
            if let Some(dir) = path.parent() {
                s.case = dir.join(&s.case);
            }
        }
        Ok(s)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let bad = |msg: String| SimError::Scenario { line, message: msg };
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| bad(format!("'{key}' expects a number, got '{v}'")))
        };
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| bad(format!("'{key}' expects a non-negative integer, got '{v}'")))
        };
        match key {
            "case" => self.case = PathBuf::from(value),
            "attack" => {
                let (base, known) = match value.strip_suffix("-known") {
                    Some(b) => (b, true),
                    None => (value, false),
                };
                self.known_h = known;
                self.attack = match base {
                    "none" => AttackKind::None,
                    "unobservable-full" => AttackKind::UnobservableFull,
                    "unobservable-partial" => AttackKind::UnobservablePartial,
                    "framing-full" => AttackKind::FramingFull,
                    "framing-partial" => AttackKind::FramingPartial,
                    other => return Err(bad(format!("unknown attack kind '{other}'"))),
                };
            }
            "model" => {
                self.model = match value {
                    "ac" => ModelKind::Ac,
                    "linear" => ModelKind::Linear,
                    other => return Err(bad(format!("unknown model '{other}'"))),
                }
            }
            "training" => {
                self.training = match value {
                    "per-run" => Training::PerRun,
                    "once" => Training::Once,
                    other => return Err(bad(format!("unknown training policy '{other}'"))),
                }
            }
            "adversary" => self.adversary = labels(value),
            "framed" => self.framed = labels(value),
            "observed" => self.observed = labels(value),
            "snr_db" => self.snr_db = num(value)?,
            "alpha" => self.alpha = num(value)?,
            "train_k" => self.train_k = int(value)? as usize,
            "runs" => self.runs = int(value)? as usize,
            "seed" => self.seed = int(value)?,
            "dim" => self.dim = Some(int(value)? as usize),
            "angle_std" => self.covariance.angle_std = num(value)?,
            "magnitude_std" => self.covariance.magnitude_std = num(value)?,
            "eps1" => self.eps1 = num(value)?,
            "eps2" => self.eps2 = num(value)?,
            "null_tol" => self.null_tol = num(value)?,
            "gap" => self.gap = num(value)?,
            "magnitudes" => {
                self.magnitudes = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<Result<_>>()?
            }
            other => return Err(bad(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Checks the sets and parameters against the attack kind.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(SimError::Invalid(m.to_string()));
        if self.case.as_os_str().is_empty() {
            return invalid("scenario needs case=");
        }
        if self.runs == 0 {
            return invalid("runs must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return invalid("alpha must lie in (0, 1)");
        }
        if !self.snr_db.is_finite() {
            return invalid("snr_db must be finite");
        }
        if self.magnitudes.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return invalid("magnitudes must be non-negative");
        }
        match self.attack {
            AttackKind::None => {}
            kind => {
                if self.adversary.is_empty() {
                    return invalid("attack needs adversary=");
                }
                if kind.is_framing() && self.framed.is_empty() {
                    return invalid("framing attack needs framed=");
                }
                if kind.is_framing() && self.framed.iter().any(|f| self.adversary.contains(f)) {
                    return invalid("adversary and framed sets must be disjoint");
                }
                if kind.is_partial() {
                    if self.observed.is_empty() {
                        return invalid("partial attack needs observed=");
                    }
                    if self.adversary.iter().any(|a| !self.observed.contains(a)) {
                        return invalid("adversary sensors must be observed");
                    }
                }
                if !self.known_h && self.train_k < 2 {
                    return invalid("train_k must be at least 2");
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| SimError::Scenario {
                line: k + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            s.set(k + 1, key.trim(), value.trim())?;
        }
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_suffix_and_lists() {
        let s: Scenario = "case=x.case\nattack=framing-full-known\nadversary=inj:4,flow:1:5\n\
                           framed=inj:1\nmagnitudes=0.01, 0.02\nruns=10 # short\n"
            .parse()
            .unwrap();
        assert_eq!(s.attack, AttackKind::FramingFull);
        assert!(s.known_h);
        assert_eq!(s.adversary, vec!["inj:4", "flow:1:5"]);
        assert_eq!(s.magnitudes, vec![0.01, 0.02]);
        assert_eq!(s.runs, 10);
        assert_eq!(s.alpha, 0.04);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            "case=x\nfoo=1\n".parse::<Scenario>(),
            Err(SimError::Scenario { line: 2, .. })
        ));
        assert!("case=x\nattack=framing-full\nadversary=inj:1\nframed=inj:1\n"
            .parse::<Scenario>()
            .is_err());
        assert!("case=x\nruns=ten\n".parse::<Scenario>().is_err());
        assert!("attack=none\n".parse::<Scenario>().is_err());
    }
}
