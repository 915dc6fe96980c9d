//! Shared inputs for the benchmarks.

use bsca_core::domain::{Request, Topology, TopologySpec, UtilityModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A column as the policy produces it before projection: a feasible point
/// with one entry pushed up by a gradient step.
pub fn step_input(n: usize, c: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![c as f64 / n as f64; n];
    for v in q.iter_mut().take(n / 2) {
        *v += rng.random_range(-0.1..0.1) * (c as f64 / n as f64);
    }
    let k = rng.random_range(0..n);
    q[k] += 0.5;
    q
}

/// An arbitrary vector with entries spread over [-1, 2].
pub fn dense_input(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..2.0)).collect()
}

/// Three caches shared by four locations with per-cache weights (1, 2, 100).
pub fn bipartite(library: usize, capacity: usize) -> (Topology, UtilityModel) {
    let top = Topology::new(TopologySpec {
        num_locations: 4,
        num_caches: 3,
        library_size: library,
        capacities: vec![capacity; 3],
        reachable: vec![
            vec![true, false, true],
            vec![true, true, false],
            vec![false, true, true],
            vec![false, true, true],
        ],
    })
    .expect("valid topology");
    let w = UtilityModel::per_cache(library, 4, &[1.0, 2.0, 100.0]).expect("valid weights");
    (top, w)
}

pub fn uniform_requests(top: &Topology, count: usize, seed: u64) -> Vec<Request> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=count as u64)
        .map(|t| {
            Request::new(
                t,
                rng.random_range(0..top.library_size()),
                rng.random_range(0..top.num_locations()),
            )
        })
        .collect()
}
