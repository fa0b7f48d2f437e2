use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// External bus number as written in case files.
pub type BusId = u32;

/// Position of a sensor in the measurement vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SensorId(pub usize);

impl SensorId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: BusId,
    /// Operating voltage magnitude (p.u.).
    pub magnitude: f64,
    /// Operating phase angle (rad).
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub from: BusId,
    pub to: BusId,
    pub impedance: Complex64,
    pub connected: bool,
}

impl Line {
    pub fn touches(&self, bus: BusId) -> bool {
        self.from == bus || self.to == bus
    }

    pub fn joins(&self, a: BusId, b: BusId) -> bool {
        (self.from == a && self.to == b) || (self.from == b && self.to == a)
    }

    /// DC-model susceptance `-Im(1/Z)`; positive for inductive lines.
    pub fn susceptance(&self) -> f64 {
        -self.impedance.inv().im
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SensorKind {
    Injection { bus: BusId },
    Flow { from: BusId, to: BusId },
}

impl SensorKind {
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensorKind::Injection { bus } => write!(f, "inj:{bus}"),
            SensorKind::Flow { from, to } => write!(f, "flow:{from}:{to}"),
        }
    }
}

impl FromStr for SensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownSensor(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<BusId>().map_err(|_| bad());
        match parts.as_slice() {
            ["inj", i] => Ok(SensorKind::Injection { bus: num(i)? }),
            ["flow", i, j] => Ok(SensorKind::Flow {
                from: num(i)?,
                to: num(j)?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorSpec {
    pub id: SensorId,
    pub kind: SensorKind,
}

/// A power network with its sensors and operating point.
///
/// The sensor order is fixed at construction and defines the row order of
/// every measurement vector and measurement matrix built from the case.
#[derive(Clone, Debug)]
pub struct GridCase {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    reference: BusId,
    sensors: Vec<SensorSpec>,
    bus_index: HashMap<BusId, usize>,
    label_index: HashMap<SensorKind, SensorId>,
}

impl GridCase {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        reference: BusId,
        sensors: Vec<SensorKind>,
    ) -> Result<Self> {
        let mut bus_index = HashMap::new();
        for (k, b) in buses.iter().enumerate() {
            if bus_index.insert(b.id, k).is_some() {
                return Err(Error::InvalidCase(format!("duplicate bus {}", b.id)));
            }
        }
        if !bus_index.contains_key(&reference) {
            return Err(Error::InvalidCase(format!(
                "reference bus {reference} is not defined"
            )));
        }
        for (k, l) in lines.iter().enumerate() {
            for b in [l.from, l.to] {
                if !bus_index.contains_key(&b) {
                    return Err(Error::InvalidCase(format!(
                        "line {} references undefined bus {b}",
                        k + 1
                    )));
                }
            }
            if l.from == l.to {
                return Err(Error::InvalidCase(format!("line {}-{} is a loop", l.from, l.to)));
            }
            if lines[..k].iter().any(|o| o.joins(l.from, l.to)) {
                return Err(Error::InvalidCase(format!(
                    "duplicate line {}-{}",
                    l.from, l.to
                )));
            }
        }
        let mut label_index = HashMap::new();
        let mut specs = Vec::with_capacity(sensors.len());
        for (k, kind) in sensors.into_iter().enumerate() {
            match kind {
                SensorKind::Injection { bus } => {
                    if !bus_index.contains_key(&bus) {
                        return Err(Error::InvalidCase(format!(
                            "sensor {kind} references undefined bus {bus}"
                        )));
                    }
                }
                SensorKind::Flow { from, to } => {
                    if !lines.iter().any(|l| l.joins(from, to)) {
                        return Err(Error::InvalidCase(format!(
                            "sensor {kind} references a missing line"
                        )));
                    }
                }
            }
            if label_index.insert(kind, SensorId(k)).is_some() {
                return Err(Error::InvalidCase(format!("duplicate sensor {kind}")));
            }
            specs.push(SensorSpec {
                id: SensorId(k),
                kind,
            });
        }
        let touches_ref = specs.iter().any(|s| match s.kind {
            SensorKind::Injection { bus } => bus == reference,
            SensorKind::Flow { from, to } => from == reference || to == reference,
        });
        if !touches_ref {
            return Err(Error::InvalidCase(format!(
                "no sensor is incident to the reference bus {reference}"
            )));
        }
        Ok(GridCase {
            buses,
            lines,
            reference,
            sensors: specs,
            bus_index,
            label_index,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    pub fn reference(&self) -> BusId {
        self.reference
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    /// Dimension of the angle (DC) state: one angle per non-reference bus.
    pub fn dc_dim(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn bus_position(&self, bus: BusId) -> Option<usize> {
        self.bus_index.get(&bus).copied()
    }

    pub fn reference_angle(&self) -> f64 {
        self.buses[self.bus_index[&self.reference]].angle
    }

    /// Non-reference buses in case order; the k-th entry owns state column k.
    pub fn state_buses(&self) -> Vec<BusId> {
        self.buses
            .iter()
            .map(|b| b.id)
            .filter(|&b| b != self.reference)
            .collect()
    }

    /// State column of a bus angle, `None` for the reference bus.
    pub fn angle_column(&self, bus: BusId) -> Option<usize> {
        let pos = self.bus_position(bus)?;
        let ref_pos = self.bus_index[&self.reference];
        match pos.cmp(&ref_pos) {
            std::cmp::Ordering::Less => Some(pos),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(pos - 1),
        }
    }

    pub fn line_between(&self, a: BusId, b: BusId) -> Option<usize> {
        self.lines.iter().position(|l| l.joins(a, b))
    }

    pub fn sensor(&self, kind: &SensorKind) -> Option<SensorId> {
        self.label_index.get(kind).copied()
    }

    pub fn sensor_by_label(&self, label: &str) -> Result<SensorId> {
        let kind: SensorKind = label.parse()?;
        self.sensor(&kind)
            .ok_or_else(|| Error::UnknownSensor(label.to_string()))
    }

    pub fn labels(&self) -> Vec<String> {
        self.sensors.iter().map(|s| s.kind.label()).collect()
    }

    /// Lines touching `bus`, connected or not.
    pub fn incident_lines(&self, bus: BusId) -> impl Iterator<Item = usize> + '_ {
        self.lines
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.touches(bus))
            .map(|(k, _)| k)
    }

    pub fn operating_state(&self) -> super::AcState {
        super::AcState {
            magnitudes: self.buses.iter().map(|b| b.magnitude).collect(),
            angles: self
                .buses
                .iter()
                .filter(|b| b.id != self.reference)
                .map(|b| b.angle)
                .collect(),
        }
    }
}

struct PendingSensor {
    line: usize,
    kind: SensorKind,
}

impl FromStr for GridCase {
    type Err = Error;

    /// Parses the line-oriented case schema:
    ///
    /// ```text
    /// bus <id> <V> <theta>
    /// ref <id>
    /// line <i> <j> <R> <X> <status>
    /// sensor inj <i>
    /// sensor flow <i> <j>
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut buses = Vec::new();
        let mut lines: Vec<(usize, Line)> = Vec::new();
        let mut reference = None;
        let mut sensors: Vec<PendingSensor> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tok: Vec<&str> = content.split_whitespace().collect();
            let err = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| err(format!("expected a number, found `{s}`")))
            };
            let id = |s: &str| {
                s.parse::<BusId>()
                    .map_err(|_| err(format!("expected a bus id, found `{s}`")))
            };
            match tok.as_slice() {
                ["bus", i, v, theta] => buses.push(Bus {
                    id: id(i)?,
                    magnitude: num(v)?,
                    angle: num(theta)?,
                }),
                ["ref", i] => {
                    if reference.is_some() {
                        return Err(err("reference bus given twice".into()));
                    }
                    reference = Some((lineno, id(i)?));
                }
                ["line", i, j, r, x, status] => {
                    let connected = match *status {
                        "1" | "connected" | "on" => true,
                        "0" | "disconnected" | "off" => false,
                        other => return Err(err(format!("bad line status `{other}`"))),
                    };
                    lines.push((
                        lineno,
                        Line {
                            from: id(i)?,
                            to: id(j)?,
                            impedance: Complex64::new(num(r)?, num(x)?),
                            connected,
                        },
                    ));
                }
                ["sensor", "inj", i] => sensors.push(PendingSensor {
                    line: lineno,
                    kind: SensorKind::Injection { bus: id(i)? },
                }),
                ["sensor", "flow", i, j] => sensors.push(PendingSensor {
                    line: lineno,
                    kind: SensorKind::Flow {
                        from: id(i)?,
                        to: id(j)?,
                    },
                }),
                _ => return Err(err(format!("unrecognized record `{content}`"))),
            }
        }

        let known = |b: BusId| buses.iter().any(|x| x.id == b);
        let (ref_line, reference) =
            reference.ok_or_else(|| Error::InvalidCase("missing `ref` record".into()))?;
        if !known(reference) {
            return Err(Error::DanglingBus {
                line: ref_line,
                bus: reference,
            });
        }
        for (lineno, l) in &lines {
            for b in [l.from, l.to] {
                if !known(b) {
                    return Err(Error::DanglingBus {
                        line: *lineno,
                        bus: b,
                    });
                }
            }
        }
        let mut seen: HashMap<SensorKind, usize> = HashMap::new();
        for s in &sensors {
            match s.kind {
                SensorKind::Injection { bus } if !known(bus) => {
                    return Err(Error::DanglingBus { line: s.line, bus });
                }
                SensorKind::Flow { from, to } => {
                    for b in [from, to] {
                        if !known(b) {
                            return Err(Error::DanglingBus { line: s.line, bus: b });
                        }
                    }
                    if !lines.iter().any(|(_, l)| l.joins(from, to)) {
                        return Err(Error::Parse {
                            line: s.line,
                            message: format!("no line between buses {from} and {to}"),
                        });
                    }
                }
                _ => {}
            }
            if seen.insert(s.kind, s.line).is_some() {
                return Err(Error::DuplicateSensor {
                    line: s.line,
                    label: s.kind.label(),
                });
            }
        }

        GridCase::new(
            buses,
            lines.into_iter().map(|(_, l)| l).collect(),
            reference,
            sensors.into_iter().map(|s| s.kind).collect(),
        )
    }
}
