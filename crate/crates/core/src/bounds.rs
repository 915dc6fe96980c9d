//! Closed-form regret bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters shared by the bounds. Field aliases follow the usual symbols,
/// so `{"J": 3, "deg": 2, "C": 10, "w1": 100, "T": 1e5}` deserializes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Number of caches `J`.
    #[serde(alias = "J")]
    pub caches: usize,
    /// Largest cache capacity `C`.
    #[serde(alias = "C")]
    pub capacity: usize,
    /// Largest number of caches reachable from one location.
    #[serde(default = "one")]
    pub deg: usize,
    /// Largest utility weight.
    #[serde(alias = "w1", alias = "w")]
    pub max_weight: f64,
    /// Horizon `T`; may be given in floating-point notation.
    #[serde(alias = "T")]
    pub horizon: f64,
    /// Library size `N`, needed for the lower bounds.
    #[serde(default, alias = "N")]
    pub library: Option<usize>,
    /// Per-file weights for the weighted lower bound.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

/// `w1 sqrt(2 deg J C T)`.
pub fn upper_bound_bsca(inputs: &BoundInputs) -> f64 {
    let BoundInputs {
        caches,
        capacity,
        deg,
        max_weight,
        horizon,
        ..
    } = *inputs;
    max_weight * (2.0 * deg as f64 * caches as f64 * capacity as f64 * horizon.max(0.0)).sqrt()
}

/// Bound for the diminishing step `1/sqrt(t)`: `D^2 sqrt(T)/2 + (sqrt(T) - 1/2) K^2`.
pub fn upper_bound_diminishing(delta_y: f64, k: f64, horizon: f64) -> f64 {
    let s = horizon.max(0.0).sqrt();
    if s == 0.0 {
        return 0.0;
    }
    delta_y * delta_y * s / 2.0 + (s - 0.5) * k * k
}

fn check_lower_bound_domain(capacity: usize, library: usize) -> Result<()> {
    if capacity == 0 || 2 * capacity >= library {
        return Err(Error::BoundInapplicable(format!(
            "lower bound requires 0 < C < N/2, got C = {capacity}, N = {library}"
        )));
    }
    Ok(())
}

/// Equal-weight lower bound `w sqrt(gamma/pi) sqrt(C T)` with `gamma = C/N`.
pub fn lower_bound_uniform(weight: f64, capacity: usize, library: usize, horizon: f64) -> Result<f64> {
    check_lower_bound_domain(capacity, library)?;
    let gamma = capacity as f64 / library as f64;
    Ok(weight * (gamma / std::f64::consts::PI).sqrt() * (capacity as f64 * horizon).sqrt())
}

/// How the best pairing of weights is found.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PermutationSearch {
    /// Take the `2C` largest weights and pair the largest with the smallest,
    /// the second largest with the second smallest, and so on.
    #[default]
    Sorted,
    /// Enumerate every permutation of the weights.
    Exhaustive,
}

/// Largest permutation count the exhaustive search accepts.
pub const EXHAUSTIVE_MAX_N: usize = 10;

/// `sum_k sqrt(w[p(2k-1)] + w[p(2k)])` over the first `C` pairs of `perm`.
fn pair_score(w: &[f64], perm: &[usize], capacity: usize) -> f64 {
    perm[..2 * capacity]
        .chunks_exact(2)
        .map(|p| (w[p[0]] + w[p[1]]).sqrt())
        .sum()
}

fn sorted_pair_score(w: &[f64], capacity: usize) -> f64 {
    let mut top = w.to_vec();
    top.sort_by(|a, b| b.total_cmp(a));
    top.truncate(2 * capacity);
    (0..capacity)
        .map(|k| (top[k] + top[2 * capacity - 1 - k]).sqrt())
        .sum()
}

fn exhaustive_pair_score(w: &[f64], capacity: usize) -> f64 {
    // Heap's algorithm over all permutations.
    let n = w.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut best = pair_score(w, &perm, capacity);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(pair_score(w, &perm, capacity));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Weighted lower bound:
/// `max_p sum_k sqrt(w[p(2k-1)] + w[p(2k)]) / sqrt(2 pi sum_n 1/w[n]) * sqrt(T)`.
pub fn lower_bound_weighted(
    weights: &[f64],
    capacity: usize,
    horizon: f64,
    search: PermutationSearch,
) -> Result<f64> {
    check_lower_bound_domain(capacity, weights.len())?;
    if let Some(n) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::BoundInapplicable(format!(
            "weight of file {} must be > 0, got {}",
            n + 1,
            weights[n]
        )));
    }
    let score = match search {
        PermutationSearch::Sorted => sorted_pair_score(weights, capacity),
        PermutationSearch::Exhaustive => {
            if weights.len() > EXHAUSTIVE_MAX_N {
                return Err(Error::BoundInapplicable(format!(
                    "exhaustive permutation search limited to N <= {EXHAUSTIVE_MAX_N}"
                )));
            }
            exhaustive_pair_score(weights, capacity)
        }
    };
    let inv_sum: f64 = weights.iter().map(|w| 1.0 / w).sum();
    Ok(score / (2.0 * std::f64::consts::PI * inv_sum).sqrt() * horizon.max(0.0).sqrt())
}

/// All bounds computable from one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub upper_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound_uniform: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_bound_weighted: Option<f64>,
}

/// Evaluates every bound whose inputs are present and whose preconditions hold.
pub fn evaluate(inputs: &BoundInputs) -> Result<BoundReport> {
    if !(inputs.max_weight.is_finite() && inputs.max_weight >= 0.0) {
        return Err(Error::Config("max weight must be finite and >= 0".into()));
    }
    if !(inputs.horizon.is_finite() && inputs.horizon >= 0.0) {
        return Err(Error::Config("horizon must be finite and >= 0".into()));
    }
    let lower_uniform = match inputs.library {
        Some(n) if 2 * inputs.capacity < n && inputs.capacity > 0 => Some(lower_bound_uniform(
            inputs.max_weight,
            inputs.capacity,
            n,
            inputs.horizon,
        )?),
        _ => None,
    };
    let lower_weighted = match &inputs.weights {
        Some(w) => Some(lower_bound_weighted(
            w,
            inputs.capacity,
            inputs.horizon,
            PermutationSearch::Sorted,
        )?),
        None => None,
    };
    Ok(BoundReport {
        upper_bound: upper_bound_bsca(inputs),
        lower_bound_uniform: lower_uniform,
        lower_bound_weighted: lower_weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(j: usize, c: usize, deg: usize, w1: f64, t: f64) -> BoundInputs {
        BoundInputs {
            caches: j,
            capacity: c,
            deg,
            max_weight: w1,
            horizon: t,
            library: None,
            weights: None,
        }
    }

    #[test]
    fn upper_bound_examples() {
        let u = upper_bound_bsca(&inputs(3, 10, 2, 100.0, 1e5));
        assert!((u - 346_410.16).abs() < 0.01, "{u}");
        let single = upper_bound_bsca(&inputs(1, 30, 1, 1.0, 1e5));
        assert!((single - (2.0f64 * 30.0 * 1e5).sqrt()).abs() < 1e-9);
        assert_eq!(upper_bound_bsca(&inputs(3, 10, 2, 100.0, 0.0)), 0.0);
    }

    #[test]
    fn diminishing_examples() {
        let d = 20f64.sqrt();
        assert!((upper_bound_diminishing(d, 1.0, 1e4) - 1099.5).abs() < 1e-9);
        assert!((upper_bound_diminishing(d, 3.0, 1.0) - (10.0 + 4.5)).abs() < 1e-12);
        assert!((upper_bound_diminishing(d, 0.0, 1e4) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_lower_bound_examples() {
        let l = lower_bound_uniform(1.0, 30, 100, 1e4).unwrap();
        assert!((l - 169.26).abs() < 0.01, "{l}");
        assert!(matches!(
            lower_bound_uniform(1.0, 50, 100, 1e4),
            Err(Error::BoundInapplicable(_))
        ));
        let l2 = lower_bound_uniform(2.0, 30, 100, 1e4).unwrap();
        assert!((l2 - 2.0 * l).abs() < 1e-12);
    }

    #[test]
    fn weighted_three_file_example() {
        let l = lower_bound_weighted(&[4.0, 1.0, 1.0], 1, 1.0, PermutationSearch::Sorted).unwrap();
        // sum 1/w = 1/4 + 1 + 1.
        let expected = 5f64.sqrt() / (2.0 * std::f64::consts::PI * 2.25).sqrt();
        assert!((l - expected).abs() < 1e-12);
    }

    #[test]
    fn adjacent_pairing_is_not_optimal() {
        // Adjacent pairs (4,3), (2,1) score sqrt 7 + sqrt 3; folding gives 2 sqrt 5.
        let w = [4.0, 3.0, 2.0, 1.0, 0.5];
        let sorted = lower_bound_weighted(&w, 2, 1.0, PermutationSearch::Sorted).unwrap();
        let brute = lower_bound_weighted(&w, 2, 1.0, PermutationSearch::Exhaustive).unwrap();
        assert!((sorted - brute).abs() < 1e-12);
        assert!(sorted_pair_score(&w, 2) > 7f64.sqrt() + 3f64.sqrt());
    }

    #[test]
    fn weighted_rejects_bad_inputs() {
        assert!(lower_bound_weighted(&[1.0, 2.0, 3.0, 4.0], 2, 1.0, PermutationSearch::Sorted).is_err());
        assert!(lower_bound_weighted(&[1.0, 0.0, 3.0], 1, 1.0, PermutationSearch::Sorted).is_err());
        assert!(lower_bound_weighted(&[1.0; 11], 1, 1.0, PermutationSearch::Exhaustive).is_err());
    }

    #[test]
    fn bounds_json_aliases() {
        let b: BoundInputs =
            serde_json::from_str(r#"{"J":3,"deg":2,"C":10,"w1":100,"T":1e5}"#).unwrap();
        let r = evaluate(&b).unwrap();
        assert!((r.upper_bound - 346_410.16).abs() < 0.01);
        assert!(r.lower_bound_uniform.is_none());
    }

    proptest! {
        #[test]
        fn sqrt_t_scaling(t in 1.0f64..1e7, c in 1usize..20) {
            let i = inputs(2, c, 2, 3.0, t);
            let i4 = BoundInputs { horizon: 4.0 * t, ..i.clone() };
            prop_assert!((upper_bound_bsca(&i4) / upper_bound_bsca(&i) - 2.0).abs() < 1e-12);
            let n = 2 * c + 1;
            let l = lower_bound_uniform(1.0, c, n, t).unwrap();
            let l4 = lower_bound_uniform(1.0, c, n, 4.0 * t).unwrap();
            prop_assert!((l4 / l - 2.0).abs() < 1e-12);
        }

        #[test]
        fn upper_exceeds_lower(c in 1usize..40, extra in 1usize..100, w in 0.1f64..100.0, t in 1.0f64..1e7) {
            let n = 2 * c + extra;
            let upper = upper_bound_bsca(&inputs(1, c, 1, w, t));
            prop_assert!(upper >= lower_bound_uniform(w, c, n, t).unwrap());
            let weights: Vec<f64> = (0..n).map(|k| w / (1.0 + k as f64)).collect();
            let lw = lower_bound_weighted(&weights, c, t, PermutationSearch::Sorted).unwrap();
            prop_assert!(upper >= lw);
        }
    }
}
