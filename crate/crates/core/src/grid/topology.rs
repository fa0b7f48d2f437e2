use std::collections::BTreeSet;

use super::case::{BusId, GridCase, SensorId, SensorKind};
use crate::error::{Error, Result};

/// Undirected graph of buses and connected lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    pub buses: Vec<BusId>,
    /// Each edge stores its endpoints in case line order.
    pub edges: Vec<(BusId, BusId)>,
}

impl Topology {
    /// The grid topology: every bus, every connected line.
    pub fn of_case(case: &GridCase) -> Self {
        Topology {
            buses: case.buses().iter().map(|b| b.id).collect(),
            edges: case
                .lines()
                .iter()
                .filter(|l| l.connected)
                .map(|l| (l.from, l.to))
                .collect(),
        }
    }

    pub fn edge_between(&self, a: BusId, b: BusId) -> Option<usize> {
        self.edges
            .iter()
            .position(|&(i, j)| (i == a && j == b) || (i == b && j == a))
    }

    pub fn has_bus(&self, b: BusId) -> bool {
        self.buses.contains(&b)
    }
}

/// Sub-network seen through a sensor subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedNetwork {
    pub topology: Topology,
    /// Case line index of each topology edge.
    pub lines: Vec<usize>,
    pub sensors: Vec<SensorId>,
}

/// Builds the reduced network of `observed`: a connected line `{i, j}` is kept
/// when a flow sensor on it or an injection sensor at `i` or `j` is observed;
/// the buses are the endpoints of kept lines.
pub fn reduced_network(case: &GridCase, observed: &[SensorId]) -> Result<ReducedNetwork> {
    if observed.is_empty() {
        return Err(Error::InvalidArgument("empty observed sensor set".into()));
    }
    let mut sensors = Vec::with_capacity(observed.len());
    let mut kept = BTreeSet::new();
    for &id in observed {
        let spec = case
            .sensors()
            .get(id.0)
            .ok_or_else(|| Error::UnknownSensor(format!("#{}", id.0)))?;
        if !sensors.contains(&id) {
            sensors.push(id);
        }
        match spec.kind {
            SensorKind::Flow { from, to } => {
                let k = case.line_between(from, to).expect("validated line");
                if case.lines()[k].connected {
                    kept.insert(k);
                }
            }
            SensorKind::Injection { bus } => {
                kept.extend(case.incident_lines(bus).filter(|&k| case.lines()[k].connected));
            }
        }
    }
    let lines: Vec<usize> = kept.into_iter().collect();
    let mut endpoints = BTreeSet::new();
    for &k in &lines {
        let l = &case.lines()[k];
        endpoints.insert(case.bus_position(l.from).unwrap());
        endpoints.insert(case.bus_position(l.to).unwrap());
    }
    Ok(ReducedNetwork {
        topology: Topology {
            buses: endpoints.into_iter().map(|p| case.buses()[p].id).collect(),
            edges: lines
                .iter()
                .map(|&k| (case.lines()[k].from, case.lines()[k].to))
                .collect(),
        },
        lines,
        sensors,
    })
}
