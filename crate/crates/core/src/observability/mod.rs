//! Observability: rank tests, critical sets, partial observability and the
//! graph conditions for attack feasibility.

mod graph;
mod rank;

use std::collections::BTreeSet;
use std::fmt::Write as _;

pub use graph::{covering_tree, verify_witness, Witness};
pub use rank::{
    affected_states, attack_feasible, is_critical_set, is_critical_wrt, is_observable,
    null_dimension_without, partial_observable, AFFECTED_TOL,
};

use crate::error::{Error, Result};
use crate::grid::{dc_jacobian, reduced_network, BusId, GridCase, SensorId, SensorKind, Topology};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Adversary,
    Observed,
    Critical,
    Framed,
}

/// An ordered subset of a case's sensors with a role tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensorSet {
    pub ids: Vec<SensorId>,
    pub role: Role,
}

impl SensorSet {
    pub fn new(case: &GridCase, ids: Vec<SensorId>, role: Role) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for id in &ids {
            if id.0 >= case.sensor_count() {
                return Err(Error::UnknownSensor(format!("#{}", id.0)));
            }
            if !seen.insert(*id) {
                return Err(Error::InvalidArgument(format!(
                    "sensor {} listed twice",
                    case.sensors()[id.0].kind
                )));
            }
        }
        Ok(SensorSet { ids, role })
    }

    /// Parses a comma-separated list of labels (`inj:4,flow:1:5`).
    pub fn parse(case: &GridCase, text: &str, role: Role) -> Result<Self> {
        let ids = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| case.sensor_by_label(s))
            .collect::<Result<Vec<_>>>()?;
        SensorSet::new(case, ids, role)
    }

    pub fn labels(&self, case: &GridCase) -> Vec<String> {
        self.ids.iter().map(|id| case.sensors()[id.0].kind.label()).collect()
    }

    pub fn contains(&self, id: SensorId) -> bool {
        self.ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityReport {
    pub observable: bool,
    pub rank: Option<usize>,
    /// Angle-state buses touched by the sensor set (partial queries).
    pub affected: Vec<BusId>,
    pub witness: Option<Witness>,
}

impl ObservabilityReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "observable={}", self.observable);
        if let Some(r) = self.rank {
            let _ = writeln!(out, "rank={r}");
        }
        if !self.affected.is_empty() {
            let buses: Vec<String> = self.affected.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(out, "affected={}", buses.join(","));
        }
        if let Some(w) = &self.witness {
            for (sensor, (a, b)) in &w.assignment {
                let _ = writeln!(out, "tree_edge={a}-{b} sensor={sensor}");
            }
        }
        out
    }
}

/// Graph criterion: a spanning tree of `topology` with every edge covered by
/// a distinct sensor.
pub fn spanning_tree_observable(topology: &Topology, sensors: &[SensorKind]) -> ObservabilityReport {
    let witness = covering_tree(topology, sensors);
    ObservabilityReport {
        observable: witness.is_some(),
        rank: None,
        affected: Vec::new(),
        witness,
    }
}

fn kinds(case: &GridCase, ids: &[SensorId]) -> Vec<SensorKind> {
    ids.iter().map(|id| case.sensors()[id.0].kind).collect()
}

/// Graph criterion on the whole case topology for the sensors `ids`.
pub fn case_spanning_tree(case: &GridCase, ids: &[SensorId]) -> ObservabilityReport {
    spanning_tree_observable(&Topology::of_case(case), &kinds(case, ids))
}

/// Rank report for the sensors `ids` of `case`.
pub fn rank_report(case: &GridCase, ids: &[SensorId]) -> Result<ObservabilityReport> {
    let h = dc_jacobian(case, Some(ids))?;
    let rank = linalg::rank(&h.matrix);
    let affected = affected_states(&h).into_iter().map(|c| h.cols[c]).collect();
    Ok(ObservabilityReport {
        observable: rank == h.ncols(),
        rank: Some(rank),
        affected,
        witness: None,
    })
}

fn require_subset(c: &[SensorId], s_o: &[SensorId]) -> Result<()> {
    match c.iter().find(|id| !s_o.contains(id)) {
        Some(id) => Err(Error::InvalidArgument(format!(
            "sensor #{} of the critical candidate is not observed",
            id.0
        ))),
        None => Ok(()),
    }
}

/// The three partial-measurement conditions:
/// 1) `S_o` observes its affected states `X_o`;
/// 2) `c` is critical with respect to `(S_o, X_o)`;
/// 3) removing `c` from all sensors makes the system unobservable.
pub fn check_partial_conditions(case: &GridCase, s_o: &[SensorId], c: &[SensorId]) -> Result<bool> {
    require_subset(c, s_o)?;
    if c.is_empty() {
        return Ok(false);
    }
    let h_o = dc_jacobian(case, Some(s_o))?;
    let x_o = affected_states(&h_o);
    let h = dc_jacobian(case, None)?;
    Ok(partial_observable(&h_o, &x_o) && is_critical_wrt(&h_o, &x_o, c) && attack_feasible(&h, c))
}

/// Components of `topology` minus the edges flagged in `removed`, as a bus
/// label per vertex.
fn components(topology: &Topology, removed: &[bool]) -> Vec<usize> {
    let n = topology.buses.len();
    let mut label = vec![usize::MAX; n];
    let pos = |b: BusId| topology.buses.iter().position(|&x| x == b).unwrap();
    let mut adj = vec![Vec::new(); n];
    for (k, &(a, b)) in topology.edges.iter().enumerate() {
        if !removed[k] {
            adj[pos(a)].push(pos(b));
            adj[pos(b)].push(pos(a));
        }
    }
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if label[v] == usize::MAX {
                    label[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Most components of `G - E_C` enumerated when searching for a cut.
pub const MAX_CUT_COMPONENTS: usize = 20;

/// Sensors a cut line set accounts for: flow sensors on the lines and
/// injections at their endpoints.
fn cut_sensors(case: &GridCase, lines: &[usize]) -> BTreeSet<SensorId> {
    let mut out = BTreeSet::new();
    for s in case.sensors() {
        let hit = match s.kind {
            SensorKind::Flow { from, to } => lines.iter().any(|&k| case.lines()[k].joins(from, to)),
            SensorKind::Injection { bus } => lines.iter().any(|&k| case.lines()[k].touches(bus)),
        };
        if hit {
            out.insert(s.id);
        }
    }
    out
}

/// Condition 1 of the graph corollary: some cut of the grid topology has `c`
/// as exactly its flow sensors plus endpoint injections. Returns the lines of
/// such a cut.
pub fn find_cut(case: &GridCase, c: &[SensorId]) -> Result<Option<Vec<usize>>> {
    let target: BTreeSet<SensorId> = c.iter().copied().collect();
    if target.is_empty() {
        return Ok(None);
    }
    let topology = Topology::of_case(case);
    let line_of_edge: Vec<usize> = (0..case.lines().len()).filter(|&k| case.lines()[k].connected).collect();
    // Lines that may lie in the cut: all of their sensors are in `c`.
    let candidate: Vec<bool> = line_of_edge
        .iter()
        .map(|&k| cut_sensors(case, &[k]).is_subset(&target))
        .collect();
    let label = components(&topology, &candidate);
    let count = label.iter().max().map_or(0, |m| m + 1);
    if count < 2 {
        return Ok(None);
    }
    if count > MAX_CUT_COMPONENTS {
        return Err(Error::InvalidArgument(format!(
            "{count} components to enumerate for the cut search (limit {MAX_CUT_COMPONENTS})"
        )));
    }
    let pos = |b: BusId| topology.buses.iter().position(|&x| x == b).unwrap();
    // Fix component 0 on the outside so each cut is visited once.
    for mask in 1u32..(1u32 << (count - 1)) {
        let inside = |comp: usize| comp > 0 && mask & (1 << (comp - 1)) != 0;
        let cut: Vec<usize> = topology
            .edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| inside(label[pos(a)]) != inside(label[pos(b)]))
            .map(|(e, _)| line_of_edge[e])
            .collect();
        if !cut.is_empty() && cut_sensors(case, &cut) == target {
            return Ok(Some(cut));
        }
    }
    Ok(None)
}

/// Condition 2 of the graph corollary: for every `s` in `c`, the reduced
/// network of `S_o` has a spanning tree covered by `(S_o \ c) + {s}`.
///
/// The reduced network must also contain the reference bus; otherwise its
/// angles are fixed only up to a common offset.
pub fn reduced_tree_condition(case: &GridCase, s_o: &[SensorId], c: &[SensorId]) -> Result<bool> {
    let reduced = reduced_network(case, s_o)?;
    if !reduced.topology.has_bus(case.reference()) {
        return Ok(false);
    }
    let rest: Vec<SensorId> = s_o.iter().copied().filter(|id| !c.contains(id)).collect();
    for &s in c {
        let mut ids = rest.clone();
        ids.push(s);
        if covering_tree(&reduced.topology, &kinds(case, &ids)).is_none() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both graph conditions of the corollary.
pub fn check_graph_conditions(case: &GridCase, s_o: &[SensorId], c: &[SensorId]) -> Result<bool> {
    require_subset(c, s_o)?;
    if c.is_empty() || find_cut(case, c)?.is_none() {
        return Ok(false);
    }
    reduced_tree_condition(case, s_o, c)
}
