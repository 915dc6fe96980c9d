//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use bsca_core::domain::{CachingVector, Request, Topology, TopologySpec, UtilityModel};
use rand::Rng;

/// Euclidean projection onto `{0 <= y <= 1, sum y <= c}` by locating the
/// multiplier on the sorted breakpoints of the piecewise-linear load curve.
pub fn kkt_project(q: &[f64], c: usize) -> Vec<f64> {
    let load = |rho: f64| q.iter().map(|v| (v - rho).clamp(0.0, 1.0)).sum::<f64>();
    let clip = |rho: f64| q.iter().map(|v| (v - rho).clamp(0.0, 1.0)).collect::<Vec<_>>();
    let c = c as f64;
    if load(0.0) <= c {
        return clip(0.0);
    }
    let mut points: Vec<f64> = q
        .iter()
        .flat_map(|&v| [v, v - 1.0])
        .filter(|&b| b > 0.0)
        .collect();
    points.push(0.0);
    points.sort_by(|a, b| a.total_cmp(b));
    points.dedup();
    // load is nonincreasing in rho; find consecutive breakpoints bracketing c.
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (l_lo, l_hi) = (load(lo), load(hi));
        if l_lo >= c && l_hi <= c {
            let rho = if l_lo == l_hi {
                lo
            } else {
                lo + (l_lo - c) * (hi - lo) / (l_lo - l_hi)
            };
            return clip(rho);
        }
    }
    clip(*points.last().unwrap())
}

/// Projection by enumerating every assignment of entries to
/// {lower bound, interior, upper bound}; returns the closest feasible candidate.
pub fn sign_pattern_project(q: &[f64], c: usize) -> Vec<f64> {
    let n = q.len();
    let c = c as f64;
    let tol = 1e-12;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut pattern = vec![0u8; n];
    loop {
        let ones = pattern.iter().filter(|&&p| p == 2).count() as f64;
        let mids: Vec<usize> = (0..n).filter(|&k| pattern[k] == 1).collect();
        let mut rhos = vec![0.0];
        if !mids.is_empty() {
            let s: f64 = mids.iter().map(|&k| q[k]).sum();
            rhos.push((s - (c - ones)) / mids.len() as f64);
        }
        for rho in rhos {
            if rho < -tol {
                continue;
            }
            let y: Vec<f64> = (0..n)
                .map(|k| match pattern[k] {
                    0 => 0.0,
                    2 => 1.0,
                    _ => q[k] - rho,
                })
                .collect();
            let inside = y.iter().all(|v| (-tol..=1.0 + tol).contains(v));
            if inside && y.iter().sum::<f64>() <= c + 1e-9 {
                let d: f64 = y.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                    best = Some((d, y));
                }
            }
        }
        // Next pattern in base 3.
        let mut k = 0;
        while k < n && pattern[k] == 2 {
            pattern[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        pattern[k] += 1;
    }
    best.expect("the feasible set is nonempty").1
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Optimal value of `max sum w_j z_j, sum z <= 1, 0 <= z_j <= y_j` by
/// enumerating basic solutions: every variable at a bound except at most one,
/// which absorbs the remaining demand.
pub fn lp_route_value(weights: &[f64], y: &[f64]) -> f64 {
    let d = weights.len();
    let mut best = 0.0f64;
    for mask in 0..(1usize << d) {
        let at_upper = |j: usize| mask >> j & 1 == 1;
        let base: f64 = (0..d).filter(|&j| at_upper(j)).map(|j| y[j]).sum();
        let base_value: f64 = (0..d).filter(|&j| at_upper(j)).map(|j| weights[j] * y[j]).sum();
        if base <= 1.0 + 1e-12 {
            best = best.max(base_value);
        }
        for free in (0..d).filter(|&j| !at_upper(j)) {
            let z = 1.0 - base;
            if (0.0..=y[free]).contains(&z) {
                best = best.max(base_value + weights[free] * z);
            }
        }
    }
    best
}

/// Random topology where every location reaches between 0 and `max_deg` caches.
pub fn random_topology<R: Rng>(rng: &mut R, max_deg: usize) -> Topology {
    let n = rng.random_range(3..10);
    let j = rng.random_range(1..5);
    let i = rng.random_range(1..5);
    let capacities = (0..j).map(|_| rng.random_range(1..n)).collect();
    let reachable = (0..i)
        .map(|_| {
            let mut row = vec![false; j];
            let d = rng.random_range(0..=max_deg.min(j));
            let mut picked = 0;
            while picked < d {
                let k = rng.random_range(0..j);
                if !row[k] {
                    row[k] = true;
                    picked += 1;
                }
            }
            row
        })
        .collect();
    Topology::new(TopologySpec {
        num_locations: i,
        num_caches: j,
        library_size: n,
        capacities,
        reachable,
    })
    .unwrap()
}

/// Random weights with occasional ties and zeros.
pub fn random_weights<R: Rng>(rng: &mut R, top: &Topology) -> UtilityModel {
    UtilityModel::from_fn(
        top.library_size(),
        top.num_locations(),
        top.num_caches(),
        |_, _, _| match rng.random_range(0..10) {
            0 => 0.0,
            1..=3 => rng.random_range(1..4) as f64,
            _ => rng.random_range(0.0..100.0),
        },
    )
    .unwrap()
}

/// Random feasible caching vector mixing interior, boundary and integral points.
pub fn random_caching<R: Rng>(rng: &mut R, top: &Topology) -> CachingVector {
    let n = top.library_size();
    let cols = (0..top.num_caches())
        .map(|j| {
            let c = top.capacity(j);
            match rng.random_range(0..4) {
                0 => {
                    // Integral: c distinct files.
                    let mut col = vec![0.0; n];
                    let mut placed = 0;
                    while placed < c {
                        let k = rng.random_range(0..n);
                        if col[k] == 0.0 {
                            col[k] = 1.0;
                            placed += 1;
                        }
                    }
                    col
                }
                1 => {
                    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..1.5)).collect();
                    kkt_project(&raw, rng.random_range(0..=c))
                }
                _ => {
                    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
                    kkt_project(&raw, c)
                }
            }
        })
        .collect();
    CachingVector::from_columns(cols).unwrap()
}

pub fn random_request<R: Rng>(rng: &mut R, top: &Topology) -> Request {
    Request::new(
        1,
        rng.random_range(0..top.library_size()),
        rng.random_range(0..top.num_locations()),
    )
}

/// Best pairing score `max_p sum_k sqrt(w[p(2k-1)] + w[p(2k)])` by recursion
/// over ordered selections of `2c` distinct indices.
pub fn brute_force_pairing(w: &[f64], c: usize) -> f64 {
    fn go(w: &[f64], used: &mut Vec<bool>, left: usize) -> f64 {
        if left == 0 {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..w.len() {
            if used[a] {
                continue;
            }
            used[a] = true;
            for b in 0..w.len() {
                if used[b] {
                    continue;
                }
                used[b] = true;
                best = best.max((w[a] + w[b]).sqrt() + go(w, used, left - 1));
                used[b] = false;
            }
            used[a] = false;
        }
        best
    }
    go(w, &mut vec![false; w.len()], c)
}

/// Exact maximum of the static objective over caching vectors whose entries
/// lie on a grid of step `1/steps`, by dynamic programming over files with the
/// per-cache grid load as state. Supports up to two caches.
pub fn grid_hindsight(
    requests: &[Request],
    top: &Topology,
    w: &UtilityModel,
    steps: usize,
) -> f64 {
    let n = top.library_size();
    let j = top.num_caches();
    assert!(j <= 2);
    let caps: Vec<usize> = (0..2)
        .map(|k| if k < j { top.capacity(k) * steps } else { 0 })
        .collect();
    // Value of each file for each grid pair.
    let file_value = |file: usize, a: usize, b: usize| -> f64 {
        let y = [a as f64 / steps as f64, b as f64 / steps as f64];
        requests
            .iter()
            .filter(|r| r.file == file)
            .map(|r| {
                let reach = top.reachable_caches(r.location);
                let weights = w.weights_for(file, r.location);
                let wv: Vec<f64> = reach.iter().map(|&k| weights[k]).collect();
                let yv: Vec<f64> = reach.iter().map(|&k| y[k]).collect();
                lp_route_value(&wv, &yv)
            })
            .sum()
    };
    let width = caps[1] + 1;
    let mut dp = vec![f64::NEG_INFINITY; (caps[0] + 1) * width];
    dp[0] = 0.0;
    for file in 0..n {
        let mut table = vec![vec![0.0; steps + 1]; steps + 1];
        for (a, row) in table.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                if b == 0 || j == 2 {
                    *v = file_value(file, a, b);
                }
            }
        }
        let mut next = vec![f64::NEG_INFINITY; dp.len()];
        for u0 in 0..=caps[0] {
            for u1 in 0..=caps[1] {
                let cur = dp[u0 * width + u1];
                if cur == f64::NEG_INFINITY {
                    continue;
                }
                for (a, row) in table.iter().enumerate().take(steps.min(caps[0] - u0) + 1) {
                    for (b, v) in row.iter().enumerate().take(steps.min(caps[1] - u1) + 1) {
                        let k = (u0 + a) * width + u1 + b;
                        next[k] = next[k].max(cur + v);
                    }
                }
            }
        }
        dp = next;
    }
    dp.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
