use num_complex::Complex64;
use rand::Rng;

use super::case::{Bus, GridCase, Line, SensorKind};

/// Random small network for property tests.
///
/// Buses are `1..=buses` with bus 1 as reference; each bus pair is joined with
/// probability `edge_prob` by a line with random positive reactance and small
/// resistance; each possible sensor (injection per bus, flow per line end) is
/// placed with probability `sensor_prob`. An injection at the reference bus is
/// added when no sensor touches it.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, buses: usize, edge_prob: f64, sensor_prob: f64) -> GridCase {
    assert!(buses >= 2, "need at least two buses");
    let bus_list: Vec<Bus> = (1..=buses as u32)
        .map(|id| Bus {
            id,
            magnitude: rng.random_range(0.95..1.05),
            angle: if id == 1 { 0.0 } else { rng.random_range(-0.2..0.2) },
        })
        .collect();
    let mut lines = Vec::new();
    for i in 1..=buses as u32 {
        for j in i + 1..=buses as u32 {
            if rng.random_bool(edge_prob) {
                lines.push(Line {
                    from: i,
                    to: j,
                    impedance: Complex64::new(rng.random_range(0.0..0.05), rng.random_range(0.05..0.5)),
                    connected: true,
                });
            }
        }
    }
    let mut sensors = Vec::new();
    for b in &bus_list {
        if rng.random_bool(sensor_prob) {
            sensors.push(SensorKind::Injection { bus: b.id });
        }
    }
    for l in &lines {
        for (from, to) in [(l.from, l.to), (l.to, l.from)] {
            if rng.random_bool(sensor_prob) {
                sensors.push(SensorKind::Flow { from, to });
            }
        }
    }
    let touches_ref = sensors.iter().any(|s| match *s {
        SensorKind::Injection { bus } => bus == 1,
        SensorKind::Flow { from, to } => from == 1 || to == 1,
    });
    if !touches_ref {
        sensors.push(SensorKind::Injection { bus: 1 });
    }
    GridCase::new(bus_list, lines, 1, sensors).expect("generated case is valid")
}
