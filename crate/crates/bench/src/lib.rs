//! Fixtures shared by the criterion benchmarks.

use cobra_core::{PreparedScenario, Scenario};
use std::path::Path;

pub fn scenario(name: &str, robots: usize, seed: u64) -> PreparedScenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::load(&path).expect("bundled scenario").with_fleet(robots, seed).prepare().expect("bundled scenario prepares")
}
