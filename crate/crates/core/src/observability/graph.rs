use std::collections::{BTreeSet, HashMap, VecDeque};

use petgraph::unionfind::UnionFind;

use crate::grid::{BusId, SensorKind, Topology};

/// A spanning tree together with the sensor covering each tree edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// `(sensor, edge)` pairs, one per tree edge.
    pub assignment: Vec<(SensorKind, (BusId, BusId))>,
}

impl Witness {
    pub fn tree_edges(&self) -> Vec<(BusId, BusId)> {
        self.assignment.iter().map(|&(_, e)| e).collect()
    }
}

fn same_edge(a: (BusId, BusId), b: (BusId, BusId)) -> bool {
    a == b || a == (b.1, b.0)
}

fn covers(sensor: &SensorKind, edge: (BusId, BusId)) -> bool {
    match *sensor {
        SensorKind::Flow { from, to } => same_edge((from, to), edge),
        SensorKind::Injection { bus } => edge.0 == bus || edge.1 == bus,
    }
}

/// Largest set of `(sensor, edge)` pairs whose edges form a forest and whose
/// sensors are distinct, found by matroid intersection of the graphic matroid
/// with the partition matroid on sensors.
fn max_covered_forest(topology: &Topology, sensors: &[SensorKind]) -> Vec<(usize, usize)> {
    let index: HashMap<BusId, usize> = topology
        .buses
        .iter()
        .enumerate()
        .map(|(k, &b)| (b, k))
        .collect();
    let nb = topology.buses.len();
    // Ground set: (sensor index, edge index).
    let mut ground = Vec::new();
    for (s, kind) in sensors.iter().enumerate() {
        for (e, &edge) in topology.edges.iter().enumerate() {
            if covers(kind, edge) && edge.0 != edge.1 {
                ground.push((s, e));
            }
        }
    }
    let ends: Vec<(usize, usize)> = topology
        .edges
        .iter()
        .map(|&(a, b)| (index[&a], index[&b]))
        .collect();
    let mut chosen = vec![false; ground.len()];
    loop {
        let members: Vec<usize> = (0..ground.len()).filter(|&g| chosen[g]).collect();
        // Forest adjacency over the chosen pairs.
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nb];
        let mut uf = UnionFind::<usize>::new(nb);
        for &g in &members {
            let (a, b) = ends[ground[g].1];
            adj[a].push((b, g));
            adj[b].push((a, g));
            uf.union(a, b);
        }
        let mut sensor_owner: HashMap<usize, usize> = HashMap::new();
        for &g in &members {
            sensor_owner.insert(ground[g].0, g);
        }
        let outside: Vec<usize> = (0..ground.len()).filter(|&g| !chosen[g]).collect();
        let mut sources = Vec::new();
        let mut sink = vec![false; ground.len()];
        // arcs[x] lists successors: member -> outside (graphic exchange),
        // outside -> member (partition exchange).
        let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); ground.len()];
        for &y in &outside {
            let (a, b) = ends[ground[y].1];
            if uf.find(a) != uf.find(b) {
                sources.push(y);
            } else {
                for x in forest_path(&adj, a, b) {
                    arcs[x].push(y);
                }
            }
            match sensor_owner.get(&ground[y].0) {
                None => sink[y] = true,
                Some(&x) => arcs[y].push(x),
            }
        }
        let Some(path) = shortest_path(&arcs, &sources, &sink) else {
            return members.iter().map(|&g| ground[g]).collect();
        };
        for g in path {
            chosen[g] = !chosen[g];
        }
    }
}

/// Ground elements on the forest path between buses `a` and `b`.
fn forest_path(adj: &[Vec<(usize, usize)>], a: usize, b: usize) -> Vec<usize> {
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([a]);
    seen[a] = true;
    while let Some(u) = queue.pop_front() {
        if u == b {
            break;
        }
        for &(v, g) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some((u, g));
                queue.push_back(v);
            }
        }
    }
    let mut out = Vec::new();
    let mut cur = b;
    while let Some((u, g)) = prev[cur] {
        out.push(g);
        cur = u;
    }
    out
}

fn shortest_path(arcs: &[Vec<usize>], sources: &[usize], sink: &[bool]) -> Option<Vec<usize>> {
    let mut prev: Vec<Option<usize>> = vec![None; arcs.len()];
    let mut seen = vec![false; arcs.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        seen[s] = true;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        if sink[u] {
            let mut path = vec![u];
            let mut cur = u;
            while let Some(p) = prev[cur] {
                path.push(p);
                cur = p;
            }
            return Some(path);
        }
        for &v in &arcs[u] {
            if !seen[v] {
                seen[v] = true;
                prev[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    None
}

/// Searches for a spanning tree of `topology` whose every edge is covered by a
/// distinct sensor: a flow sensor covers its own line, an injection sensor
/// any line incident to its bus.
pub fn covering_tree(topology: &Topology, sensors: &[SensorKind]) -> Option<Witness> {
    let nb = topology.buses.len();
    if nb == 0 {
        return None;
    }
    let pairs = max_covered_forest(topology, sensors);
    if pairs.len() + 1 != nb {
        return None;
    }
    Some(Witness {
        assignment: pairs
            .into_iter()
            .map(|(s, e)| (sensors[s], topology.edges[e]))
            .collect(),
    })
}

/// Independent re-check of a witness: distinct sensors, each covering its
/// edge, edges forming a spanning tree of `topology`.
pub fn verify_witness(topology: &Topology, sensors: &[SensorKind], witness: &Witness) -> bool {
    let index: HashMap<BusId, usize> = topology
        .buses
        .iter()
        .enumerate()
        .map(|(k, &b)| (b, k))
        .collect();
    if witness.assignment.len() + 1 != topology.buses.len() {
        return false;
    }
    let mut used = BTreeSet::new();
    let mut uf = UnionFind::<usize>::new(topology.buses.len());
    for (sensor, edge) in &witness.assignment {
        if !sensors.contains(sensor) || !used.insert(sensor.label()) || !covers(sensor, *edge) {
            return false;
        }
        if topology.edge_between(edge.0, edge.1).is_none() {
            return false;
        }
        let (Some(&a), Some(&b)) = (index.get(&edge.0), index.get(&edge.1)) else {
            return false;
        };
        if !uf.union(a, b) {
            return false;
        }
    }
    true
}
