#![allow(dead_code)]

use std::path::PathBuf;

use gridsub::grid::{load_case, GridCase, SensorId};

pub const FULL_ADVERSARY: &str = "inj:1,inj:3,inj:4,inj:5,flow:1:2,flow:2:1,flow:1:5,flow:5:1,\
                                  flow:2:5,flow:5:2,flow:2:4,flow:4:2,flow:4:3,flow:3:4";

pub const OBSERVED_14: &str = "inj:1,inj:2,inj:3,inj:4,inj:5,flow:1:2,flow:2:1,flow:1:5,flow:5:1,\
                               flow:2:5,flow:5:2,flow:2:4,flow:4:2,flow:4:3,flow:3:4,flow:4:5,\
                               flow:3:2,flow:5:6,flow:4:7,flow:4:9";

pub const FRAMING_ADVERSARY_14: &str = "inj:4,flow:1:5,flow:5:1,flow:5:2,flow:4:2,flow:4:3,flow:3:4";
pub const FRAMED_14: &str = "inj:1,inj:3,inj:5,flow:1:2,flow:2:1,flow:2:5,flow:2:4";

pub const OBSERVED_118: &str = "inj:27,inj:114,inj:115,flow:27:115,flow:115:27,flow:114:115,\
                                flow:115:114,flow:27:25,flow:27:28,flow:27:32,flow:32:114";
pub const ATTACK_118: &str = "inj:27,inj:114,inj:115,flow:27:115,flow:115:27,flow:114:115,flow:115:114";
pub const FRAMING_ADVERSARY_118: &str = "flow:114:115,flow:115:114,flow:27:115";
pub const FRAMED_118: &str = "inj:114,inj:115,inj:27,flow:115:27";

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

pub fn ieee14() -> GridCase {
    load_case(case_path("ieee14.case")).unwrap()
}

pub fn ieee118() -> GridCase {
    load_case(case_path("ieee118.case")).unwrap()
}

pub fn ids(case: &GridCase, labels: &str) -> Vec<SensorId> {
    labels
        .split(',')
        .map(|l| case.sensor_by_label(l.trim()).unwrap())
        .collect()
}

pub fn all_ids(case: &GridCase) -> Vec<SensorId> {
    case.sensors().iter().map(|s| s.id).collect()
}

pub fn minus(a: &[SensorId], b: &[SensorId]) -> Vec<SensorId> {
    a.iter().copied().filter(|x| !b.contains(x)).collect()
}
