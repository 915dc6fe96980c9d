//! Optimal per-request routing and its LP duals.
//!
//! For a request `(n, i)` the routing LP is a fractional knapsack over the
//! caches reachable from `i`: maximize `sum_j w_j z_j` subject to
//! `sum_j z_j <= 1` and `0 <= z_j <= y[n, j]`, with the remainder served by the
//! MBS at zero utility. Greedy filling in decreasing weight order is optimal,
//! and the duals follow in closed form from where the greedy stops.

use crate::domain::{CachingVector, Request, Topology, UtilityModel};

/// Remaining demand below this is treated as zero.
const FILL_TOL: f64 = 1e-12;

/// Routing decision and LP duals for one request.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingOutcome {
    /// `(cache, fraction)` for every reachable cache, in cache-index order.
    pub z: Vec<(usize, f64)>,
    /// Fraction served by the MBS.
    pub z_mbs: f64,
    pub utility: f64,
    /// Dual of the full-service constraint `sum_j z_j <= 1`.
    pub alpha: f64,
    /// `(cache, beta_j)` duals of `z_j <= y[n, j]`, one per reachable cache.
    pub beta: Vec<(usize, f64)>,
}

impl RoutingOutcome {
    /// Fraction of the request served from caches.
    pub fn served_from_caches(&self) -> f64 {
        self.z.iter().map(|&(_, v)| v).sum()
    }
}

/// Reachable caches ordered by decreasing weight, ties to the lower index.
fn greedy_order(reach: &[usize], weights: &[f64]) -> Vec<usize> {
    let mut order = reach.to_vec();
    // Stable sort keeps index order among equal weights.
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    order
}

/// Routes one request optimally given caching `y`.
pub fn route(req: &Request, y: &CachingVector, top: &Topology, w: &UtilityModel) -> RoutingOutcome {
    let reach = top.reachable_caches(req.location);
    let weights = w.weights_for(req.file, req.location);
    route_parts(reach, weights, |j| y.get(req.file, j))
}

/// Core of [`route`] on plain slices: `reach` lists the candidate caches,
/// `weights[j]` is the utility of cache `j` and `cached(j)` its stored fraction.
pub fn route_parts(
    reach: &[usize],
    weights: &[f64],
    cached: impl Fn(usize) -> f64,
) -> RoutingOutcome {
    let order = greedy_order(reach, weights);
    let mut z = vec![0.0; weights.len()];
    let mut remaining = 1.0_f64;
    let mut utility = 0.0;
    // Cache at which the request became fully served.
    let mut filled_at: Option<usize> = None;

    for &j in &order {
        if filled_at.is_some() {
            break;
        }
        let take = cached(j).clamp(0.0, 1.0).min(remaining);
        z[j] = take;
        utility += weights[j] * take;
        remaining -= take;
        if remaining <= FILL_TOL {
            remaining = 0.0;
            filled_at = Some(j);
        }
    }

    // Exhausted content leaves the capacity constraint slack, so alpha = 0.
    // Otherwise alpha is the weight of the cache that completed the request;
    // when that cache is also exhausted this picks the minimal-beta dual.
    let alpha = filled_at.map_or(0.0, |j| weights[j]);
    let beta = reach
        .iter()
        .map(|&j| {
            let y = cached(j).clamp(0.0, 1.0);
            let tight = z[j] >= y - FILL_TOL && Some(j) != filled_at;
            let b = if tight { (weights[j] - alpha).max(0.0) } else { 0.0 };
            (j, b)
        })
        .collect();

    RoutingOutcome {
        z: reach.iter().map(|&j| (j, z[j])).collect(),
        z_mbs: remaining,
        utility,
        alpha,
        beta,
    }
}

/// Utility accrued by serving `req` under `y`.
pub fn evaluate_utility(req: &Request, y: &CachingVector, top: &Topology, w: &UtilityModel) -> f64 {
    let reach = top.reachable_caches(req.location);
    let weights = w.weights_for(req.file, req.location);
    let order = greedy_order(reach, weights);
    let mut remaining = 1.0_f64;
    let mut utility = 0.0;
    for j in order {
        if remaining <= FILL_TOL {
            break;
        }
        let take = y.get(req.file, j).clamp(0.0, 1.0).min(remaining);
        utility += weights[j] * take;
        remaining -= take;
    }
    utility
}
