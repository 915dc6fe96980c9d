//! Euclidean projection onto the per-cache capped simplex
//! `{ y in [0, 1]^N : sum_n y_n <= C }`.
//!
//! [`project_cache`] is the fast partition method used by the online policy.
//! Files are split into fully cached (`M1`, value 1), partially cached (`M2`,
//! value `q - rho/2`) and evicted (`M3`, value 0). `rho` follows from the
//! capacity being fully used; entries driven negative move to `M3` until the
//! partition is stable, and an entry above 1 is then pinned into `M1`.
//!
//! [`oracle_project`] and [`enumerate_project`] are slower, independent
//! reference implementations used to validate it.

use crate::domain::{CachingVector, Topology};
use crate::error::{Error, Result};

/// Threshold for the "negative" and "above one" tests.
pub const PARTITION_TOL: f64 = 1e-12;

/// Passes beyond this are logged; the projection is expected to settle in a
/// couple of passes on inputs produced by the online policy.
const EXPECTED_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Full,
    Partial,
    Evicted,
}

/// Final partition of the files of one cache.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartitionState {
    /// Fully cached files.
    pub m1: Vec<usize>,
    /// Partially cached files.
    pub m2: Vec<usize>,
    /// Evicted files.
    pub m3: Vec<usize>,
    /// Lagrange multiplier of the capacity constraint; zero in the slack case.
    pub rho: f64,
}

/// Work counters for one projection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProjectionStats {
    /// Number of `rho` evaluations (passes of the repeat loop).
    pub passes: usize,
    /// Number of times a file was pinned to `M1` and the partition reset.
    pub resets: usize,
    /// The capacity constraint was slack and the input was only clipped.
    pub slack: bool,
}

fn check_capacity(len: usize, capacity: usize) -> Result<()> {
    if capacity >= len {
        return Err(Error::DegenerateProjection {
            capacity,
            library: len,
        });
    }
    Ok(())
}

/// Projects `q` onto the capped simplex of capacity `capacity`, in place.
pub fn project_cache_in_place(q: &mut [f64], capacity: usize) -> Result<ProjectionStats> {
    let (stats, _) = project_impl(q, capacity, false)?;
    Ok(stats)
}

/// Projects `q` onto the capped simplex of capacity `capacity`.
pub fn project_cache(q: &[f64], capacity: usize) -> Result<Vec<f64>> {
    let mut y = q.to_vec();
    project_cache_in_place(&mut y, capacity)?;
    Ok(y)
}

/// Like [`project_cache`], also returning the final partition and counters.
pub fn project_cache_detailed(
    q: &[f64],
    capacity: usize,
) -> Result<(Vec<f64>, PartitionState, ProjectionStats)> {
    let mut y = q.to_vec();
    let (stats, partition) = project_impl(&mut y, capacity, true)?;
    Ok((y, partition.unwrap_or_default(), stats))
}

fn project_impl(
    q: &mut [f64],
    capacity: usize,
    want_partition: bool,
) -> Result<(ProjectionStats, Option<PartitionState>)> {
    let n = q.len();
    check_capacity(n, capacity)?;
    let c = capacity as f64;
    let mut stats = ProjectionStats::default();

    let clipped: f64 = q.iter().map(|v| v.clamp(0.0, 1.0)).sum();
    if clipped <= c + PARTITION_TOL {
        stats.slack = true;
        let partition = want_partition.then(|| {
            let mut p = PartitionState::default();
            for (k, &v) in q.iter().enumerate() {
                match v {
                    v if v > 1.0 => p.m1.push(k),
                    v if v < 0.0 => p.m3.push(k),
                    _ => p.m2.push(k),
                }
            }
            p
        });
        q.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        return Ok((stats, partition));
    }

    let mut part = vec![Part::Partial; n];
    let mut full = 0usize;
    let mut half_rho;
    loop {
        // (Re)start with every non-pinned file partially cached.
        for p in part.iter_mut() {
            if *p == Part::Evicted {
                *p = Part::Partial;
            }
        }
        let mut count = n - full;
        let mut sum: f64 = q
            .iter()
            .zip(&part)
            .filter(|(_, p)| **p == Part::Partial)
            .map(|(v, _)| *v)
            .sum();

        loop {
            stats.passes += 1;
            if count == 0 {
                half_rho = 0.0;
                break;
            }
            half_rho = (full as f64 - c + sum) / count as f64;
            let mut moved = false;
            let mut next_sum = 0.0;
            for (v, p) in q.iter().zip(part.iter_mut()) {
                if *p != Part::Partial {
                    continue;
                }
                if *v - half_rho < -PARTITION_TOL {
                    *p = Part::Evicted;
                    count -= 1;
                    moved = true;
                } else {
                    next_sum += *v;
                }
            }
            sum = next_sum;
            if !moved {
                break;
            }
        }

        // The stable partition can still leave an entry above one. The largest
        // such entry is capped at the optimum, so pin it and start over.
        let over = q
            .iter()
            .zip(&part)
            .enumerate()
            .filter(|(_, (v, p))| **p == Part::Partial && **v - half_rho > 1.0 + PARTITION_TOL)
            .max_by(|a, b| a.1 .0.total_cmp(b.1 .0))
            .map(|(k, _)| k);
        match over {
            Some(k) => {
                part[k] = Part::Full;
                full += 1;
                stats.resets += 1;
            }
            None => break,
        }
    }

    if stats.passes > EXPECTED_PASSES {
        log::debug!(
            "capped-simplex projection took {} passes ({} resets) for N = {n}",
            stats.passes,
            stats.resets
        );
    }

    let partition = want_partition.then(|| {
        let mut p = PartitionState {
            rho: 2.0 * half_rho,
            ..Default::default()
        };
        for (k, part) in part.iter().enumerate() {
            match part {
                Part::Full => p.m1.push(k),
                Part::Partial => p.m2.push(k),
                Part::Evicted => p.m3.push(k),
            }
        }
        p
    });

    for (v, p) in q.iter_mut().zip(&part) {
        *v = match p {
            Part::Full => 1.0,
            Part::Partial => (*v - half_rho).clamp(0.0, 1.0),
            Part::Evicted => 0.0,
        };
    }
    Ok((stats, partition))
}

/// Projects every cache column of `q` independently.
pub fn project_all(q: &CachingVector, top: &Topology) -> Result<CachingVector> {
    let mut y = q.clone();
    for j in 0..top.num_caches() {
        project_cache_in_place(y.column_mut(j), top.capacity(j))?;
    }
    Ok(y)
}

/// Reference projection by search over ordered partitions.
///
/// Sorts `q` in decreasing order and, for every split into a leading block of
/// ones, a middle block and a trailing block of zeros, solves the capacity
/// identity for `rho` and accepts the split that satisfies every KKT sign
/// condition. `O(N^2)` after sorting; intended for `N` up to a few hundred.
pub fn oracle_project(q: &[f64], capacity: usize) -> Result<Vec<f64>> {
    let n = q.len();
    check_capacity(n, capacity)?;
    let c = capacity as f64;
    let tol = 1e-10;

    let clipped: Vec<f64> = q.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clipped.iter().sum::<f64>() <= c {
        return Ok(clipped);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    let s: Vec<f64> = order.iter().map(|&k| q[k]).collect();
    let mut prefix = vec![0.0; n + 1];
    for k in 0..n {
        prefix[k + 1] = prefix[k] + s[k];
    }

    for ones in 0..=n {
        for zeros in 0..=(n - ones) {
            let mid = n - ones - zeros;
            let tau = if mid == 0 {
                if ones != capacity {
                    continue;
                }
                // Any tau between the bordering values works; take the smallest.
                let lo = if zeros > 0 { s[ones].max(0.0) } else { 0.0 };
                let hi = if ones > 0 { s[ones - 1] - 1.0 } else { f64::INFINITY };
                if lo > hi + tol {
                    continue;
                }
                lo
            } else {
                let tau = (ones as f64 + prefix[ones + mid] - prefix[ones] - c) / mid as f64;
                let first = s[ones] - tau;
                let last = s[ones + mid - 1] - tau;
                if tau < -tol || first > 1.0 + tol || last < -tol {
                    continue;
                }
                tau
            };
            if ones > 0 && s[ones - 1] - tau < 1.0 - tol {
                continue;
            }
            if zeros > 0 && s[ones + mid] - tau > tol {
                continue;
            }
            let mut y = vec![0.0; n];
            for (rank, &k) in order.iter().enumerate() {
                y[k] = if rank < ones {
                    1.0
                } else if rank < ones + mid {
                    (q[k] - tau).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
            return Ok(y);
        }
    }
    unreachable!("some ordered partition always satisfies the KKT conditions")
}

/// Largest library size accepted by [`enumerate_project`].
pub const ENUMERATION_MAX_N: usize = 12;

/// Brute-force projection over all `3^N` assignments of files to
/// {evicted, partial, full}.
///
/// For each assignment the candidate with a tight capacity and the candidate
/// with a slack capacity are built, infeasible ones are dropped and the
/// closest feasible point wins. No optimality conditions are used.
pub fn enumerate_project(q: &[f64], capacity: usize) -> Result<Vec<f64>> {
    let n = q.len();
    check_capacity(n, capacity)?;
    if n > ENUMERATION_MAX_N {
        return Err(Error::InvalidWorkload(format!(
            "enumeration limited to N <= {ENUMERATION_MAX_N}, got {n}"
        )));
    }
    let c = capacity as f64;
    let tol = 1e-12;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut labels = vec![0u8; n];
    let total = 3usize.pow(n as u32);
    let mut y = vec![0.0; n];

    let consider = |y: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        let in_box = y.iter().all(|v| *v >= -tol && *v <= 1.0 + tol);
        let load: f64 = y.iter().sum();
        if !in_box || load > c + 1e-9 {
            return;
        }
        let dist: f64 = y.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            *best = Some((dist, y.iter().map(|v| v.clamp(0.0, 1.0)).collect()));
        }
    };

    for code in 0..total {
        let mut rem = code;
        for l in labels.iter_mut() {
            *l = (rem % 3) as u8;
            rem /= 3;
        }
        let ones = labels.iter().filter(|&&l| l == 2).count();
        let free: Vec<usize> = (0..n).filter(|&k| labels[k] == 1).collect();

        // Slack capacity: free entries keep their value.
        for k in 0..n {
            y[k] = match labels[k] {
                0 => 0.0,
                1 => q[k],
                _ => 1.0,
            };
        }
        consider(&y, &mut best);

        // Tight capacity: a common shift on the free entries.
        if !free.is_empty() {
            let sum: f64 = free.iter().map(|&k| q[k]).sum();
            let shift = (ones as f64 + sum - c) / free.len() as f64;
            for &k in &free {
                y[k] = q[k] - shift;
            }
            consider(&y, &mut best);
        }
    }
    Ok(best.expect("the zero vector is always feasible").1)
}
