use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::{GridCase, SensorId};
use crate::linalg;

/// An attack direction over the attacked sensors plus its scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackPlan {
    pub attacked: Vec<SensorId>,
    /// Sensors the attack aims to get removed; empty for unobservable attacks.
    pub framed: Vec<SensorId>,
    /// Unit vector, one entry per attacked sensor.
    pub direction: DVector<f64>,
    pub eta: f64,
    /// Framing objective of the direction, when one was maximized.
    pub objective: Option<f64>,
}

impl AttackPlan {
    pub(crate) fn from_entries(attacked: Vec<SensorId>, framed: Vec<SensorId>, entries: DVector<f64>) -> Result<Self> {
        let norm = entries.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Infeasible("attack direction vanishes on the attacked set".into()));
        }
        let mut direction = entries / norm;
        linalg::canonical_sign(&mut direction, 1e-8);
        Ok(AttackPlan {
            attacked,
            framed,
            direction,
            eta: 1.0,
            objective: None,
        })
    }

    /// The direction as a length-`m` vector over all sensors.
    pub fn embedded(&self, m: usize) -> DVector<f64> {
        let mut a = DVector::zeros(m);
        for (k, id) in self.attacked.iter().enumerate() {
            a[id.0] = self.direction[k];
        }
        a
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn to_text(&self, case: &GridCase) -> String {
        let label = |ids: &[SensorId]| -> String {
            ids.iter()
                .map(|id| case.sensors()[id.0].kind.label())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = String::new();
        let _ = writeln!(out, "attacked={}", label(&self.attacked));
        let _ = writeln!(out, "framed={}", label(&self.framed));
        let _ = writeln!(out, "eta={}", self.eta);
        if let Some(obj) = self.objective {
            let _ = writeln!(out, "objective={obj}");
        }
        let entries: Vec<String> = self.direction.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "direction={}", entries.join(","));
        out
    }

    pub fn from_text(case: &GridCase, text: &str) -> Result<Self> {
        let mut attacked = None;
        let mut framed = Vec::new();
        let mut eta = 1.0;
        let mut objective = None;
        let mut direction = None;
        let labels = |v: &str| -> Result<Vec<SensorId>> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| case.sensor_by_label(s.trim()))
                .collect()
        };
        let number = |line: usize, v: &str| -> Result<f64> {
            v.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number '{v}'"),
            })
        };
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                message: "expected key=value".into(),
            })?;
            match key.trim() {
                "attacked" => attacked = Some(labels(value)?),
                "framed" => framed = labels(value)?,
                "eta" => eta = number(k + 1, value)?,
                "objective" => objective = Some(number(k + 1, value)?),
                "direction" => {
                    let v = value
                        .split(',')
                        .map(|s| number(k + 1, s))
                        .collect::<Result<Vec<f64>>>()?;
                    direction = Some(DVector::from_vec(v));
                }
                other => {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        let attacked = attacked.ok_or_else(|| Error::InvalidArgument("plan lacks attacked=".into()))?;
        let direction = direction.ok_or_else(|| Error::InvalidArgument("plan lacks direction=".into()))?;
        if direction.len() != attacked.len() {
            return Err(Error::InvalidArgument(format!(
                "{} direction entries for {} attacked sensors",
                direction.len(),
                attacked.len()
            )));
        }
        Ok(AttackPlan {
            attacked,
            framed,
            direction,
            eta,
            objective,
        })
    }
}

/// `z + eta * a` with `a` the embedded plan direction; other entries are
/// left untouched.
pub fn apply_attack(z: &DVector<f64>, plan: &AttackPlan, eta: f64) -> DVector<f64> {
    let mut out = z.clone();
    for (k, id) in plan.attacked.iter().enumerate() {
        out[id.0] += eta * plan.direction[k];
    }
    out
}

/// `eta` giving `||eta a||_1 / ||z||_1 = relative`.
pub fn calibrate_eta(z: &DVector<f64>, plan: &AttackPlan, relative: f64) -> f64 {
    let a1: f64 = plan.direction.iter().map(|v| v.abs()).sum();
    relative * z.lp_norm(1) / a1
}
