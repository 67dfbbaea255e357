//! Benchmark workloads shared by the criterion targets.

use schatten_core::fixtures;
use schatten_core::StateSpaceSystem;

/// Named systems of increasing state dimension.
pub fn workloads() -> Vec<(String, StateSpaceSystem)> {
    let mut out = vec![
        ("mimo4".to_string(), fixtures::mimo4()),
        ("random8".to_string(), fixtures::random8()),
    ];
    for n in [16, 32] {
        out.push((format!("random{n}"), fixtures::random_stable(n, 3, 2, 0.3, n as u64)));
    }
    out
}
