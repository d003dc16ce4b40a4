//! Fixtures shared by the benchmarks.

use chc_core::density::DEFAULT_STEP;
use chc_core::{
    enumerate_orbit, estimate_delta, scenarios, DensityApprox, GroupSpec, OrbitCloud, ProbeGrid,
};

/// A built-in scenario as a ready-to-enumerate group.
pub fn spec(name: &str) -> GroupSpec {
    scenarios::by_name(name)
        .unwrap_or_else(|| panic!("unknown scenario {name}"))
        .group_spec()
        .expect("built-in scenarios are valid")
}

/// Schottky density together with a probe grid around the basepoint.
pub fn schottky_density(depth: usize, points: usize, directions: usize) -> (DensityApprox, ProbeGrid, f64) {
    let spec = spec("schottky");
    let cloud: OrbitCloud = enumerate_orbit(&spec, depth, 1_000_000).expect("orbit");
    let est = estimate_delta(&cloud).expect("estimate");
    let density = DensityApprox::from_estimate(&cloud, est.point).expect("density");
    let grid = ProbeGrid::random(spec.model(), spec.basepoint(), points, directions, 1.0, 1).expect("grid");
    (density, grid, DEFAULT_STEP)
}
