//! Online projected supergradient caching.
//!
//! Every slot the request is routed against the current caching vector, the
//! routing duals give a supergradient of the slot utility, and the caches that
//! the supergradient touches take a step `y + eta * g` followed by a Euclidean
//! projection back onto their capped simplex.

use serde::{Deserialize, Serialize};

use crate::domain::{
    feasible_initial_cache, CachingVector, InitialFill, Request, Topology, UtilityModel,
};
use crate::error::{Error, Result};
use crate::projection::{project_cache_in_place, ProjectionStats};
use crate::routing::{route, RoutingOutcome};

/// Step-size rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// `Delta / (K sqrt(T))` for a known horizon `T`.
    #[default]
    Fixed,
    /// `1 / sqrt(t)`.
    Diminishing,
    /// The fixed rule with `T` replaced by the next power of two `>= t`.
    Doubling,
}

/// Step-size schedule together with the constants it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub mode: ScheduleMode,
    pub horizon: Option<u64>,
    pub delta_y: f64,
    pub k: f64,
}

impl StepSchedule {
    pub fn eta(&self, t: u64) -> Result<f64> {
        step_size(self.mode, t, self.horizon, self.delta_y, self.k)
    }
}

/// Step size at slot `t` (1-based).
pub fn step_size(
    mode: ScheduleMode,
    t: u64,
    horizon: Option<u64>,
    delta_y: f64,
    k: f64,
) -> Result<f64> {
    let t = t.max(1);
    // With K = 0 every supergradient is zero and the step size is irrelevant.
    let k = if k > 0.0 { k } else { 1.0 };
    let fixed = |horizon: u64| delta_y / (k * (horizon.max(1) as f64).sqrt());
    match mode {
        ScheduleMode::Fixed => horizon.map(fixed).ok_or(Error::UnknownHorizon),
        ScheduleMode::Diminishing => Ok(1.0 / (t as f64).sqrt()),
        ScheduleMode::Doubling => Ok(fixed(t.next_power_of_two())),
    }
}

/// Set diameter, supergradient norm bound and maximum degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub delta_y: f64,
    pub k: f64,
    pub deg: usize,
}

/// Squared diameter of one capped simplex: two vectors caching disjoint sets
/// of files, which is `2C` while `C <= N/2` and `2(N - C)` beyond.
fn squared_cache_diameter(capacity: usize, library: usize) -> f64 {
    if 2 * capacity <= library {
        2.0 * capacity as f64
    } else {
        2.0 * (library - capacity) as f64
    }
}

/// Diameter of the feasible set and the supergradient bound `w_max sqrt(deg)`.
pub fn constants(top: &Topology, max_weight: f64) -> Constants {
    let n = top.library_size();
    let delta_sq: f64 = top
        .capacities()
        .iter()
        .map(|&c| squared_cache_diameter(c, n))
        .sum();
    let deg = top.degree();
    Constants {
        delta_y: delta_sq.sqrt(),
        k: max_weight * (deg as f64).sqrt(),
        deg,
    }
}

/// Sparse supergradient: `(file, cache, value)` triples, zero elsewhere.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Supergradient {
    pub entries: Vec<(usize, usize, f64)>,
}

impl Supergradient {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    /// `g . (other - base)`.
    pub fn dot_diff(&self, other: &CachingVector, base: &CachingVector) -> f64 {
        self.entries
            .iter()
            .map(|&(n, j, g)| g * (other.get(n, j) - base.get(n, j)))
            .sum()
    }

    /// Value at `(file, cache)`.
    pub fn get(&self, file: usize, cache: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 == file && e.1 == cache)
            .map(|e| e.2)
            .sum()
    }

    fn add(&mut self, file: usize, cache: usize, value: f64) {
        match self
            .entries
            .iter_mut()
            .find(|e| e.0 == file && e.1 == cache)
        {
            Some(e) => e.2 += value,
            None => self.entries.push((file, cache, value)),
        }
    }
}

/// Supergradient of the slot utility from the routing duals: `beta_j` on the
/// requested file at each reachable cache.
pub fn supergradient(outcome: &RoutingOutcome, req: &Request) -> Supergradient {
    Supergradient {
        entries: outcome
            .beta
            .iter()
            .map(|&(j, b)| (req.file, j, b))
            .collect(),
    }
}

/// Gradient for a single cache, where the slot utility is linear:
/// `w` on the requested file when the cache is reachable.
pub fn single_cache_gradient(req: &Request, top: &Topology, w: &UtilityModel) -> Supergradient {
    let entries = top
        .reachable_caches(req.location)
        .iter()
        .map(|&j| (req.file, j, w.weight(req.file, req.location, j)))
        .collect();
    Supergradient { entries }
}

/// Per-unit cost of fetching file chunks into a cache.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconfigCosts {
    library_size: usize,
    costs: Vec<f64>,
    max_cost: f64,
}

impl ReconfigCosts {
    pub fn uniform(library_size: usize, num_caches: usize, cost: f64) -> Result<Self> {
        Self::per_cache(library_size, &vec![cost; num_caches])
    }

    /// Same cost for every file at a given cache.
    pub fn per_cache(library_size: usize, per_cache: &[f64]) -> Result<Self> {
        let costs = per_cache
            .iter()
            .flat_map(|&c| std::iter::repeat(c).take(library_size))
            .collect();
        Self::dense(library_size, costs)
    }

    /// Cache-major dense costs `c[j * N + n]`.
    pub fn dense(library_size: usize, costs: Vec<f64>) -> Result<Self> {
        if library_size == 0 || costs.len() % library_size != 0 {
            return Err(Error::Config("reconfiguration cost shape mismatch".into()));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config(
                "reconfiguration costs must be finite and >= 0".into(),
            ));
        }
        let max_cost = costs.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            library_size,
            costs,
            max_cost,
        })
    }

    pub fn cost(&self, file: usize, cache: usize) -> f64 {
        self.costs[cache * self.library_size + file]
    }

    pub fn max_cost(&self) -> f64 {
        self.max_cost
    }

    /// `sum_{n,j} c[n,j] * max(y_now - y_prev, 0)`.
    pub fn charge(&self, y_now: &CachingVector, y_prev: &CachingVector) -> f64 {
        y_now
            .as_slice()
            .iter()
            .zip(y_prev.as_slice())
            .zip(&self.costs)
            .map(|((a, b), c)| c * (a - b).max(0.0))
            .sum()
    }
}

/// Supergradient of the utility-minus-reconfiguration-cost objective:
/// `g + h`, where `h[n, j] = -c[n, j]` wherever `y_now` exceeds `y_prev`.
///
/// On policy trajectories only the previously requested file can increase,
/// so `h` is supported on that file.
pub fn reconfig_supergradient(
    g: &Supergradient,
    y_now: &CachingVector,
    y_prev: &CachingVector,
    costs: &ReconfigCosts,
) -> Supergradient {
    let mut q = g.clone();
    let n = y_now.library_size();
    for (k, (a, b)) in y_now.as_slice().iter().zip(y_prev.as_slice()).enumerate() {
        if a - b > 0.0 {
            let (file, cache) = (k % n, k / n);
            q.add(file, cache, -costs.cost(file, cache));
        }
    }
    q
}

/// Supergradient bound with reconfiguration costs: every reachable cache may
/// carry both a dual and a cost entry.
pub fn reconfig_k(max_weight: f64, max_cost: f64, deg: usize) -> f64 {
    (max_weight + max_cost) * (deg as f64).sqrt()
}

/// How the gradient is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientRule {
    /// Dense `w * r` gradient when there is exactly one cache, duals otherwise.
    #[default]
    Auto,
    /// Always use the routing duals.
    Duals,
}

/// Configuration of the online policy.
#[derive(Debug, Clone, Default)]
pub struct BscaConfig {
    pub schedule: ScheduleMode,
    pub horizon: Option<u64>,
    pub init: InitialFill,
    pub gradient: GradientRule,
    pub reconfig: Option<ReconfigCosts>,
    /// Largest utility weight over the whole run; used for `K`.
    pub max_weight: f64,
}

/// Result of one policy step.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Routing under the caching vector in force when the request arrived.
    pub routing: RoutingOutcome,
    pub eta: f64,
    /// Cost charged for reaching the pre-update caching vector from the one
    /// before it; zero without reconfiguration costs.
    pub reconfig_cost: f64,
    /// Projection counters, one per touched cache.
    pub projections: Vec<(usize, ProjectionStats)>,
}

/// State of the online projected supergradient policy.
#[derive(Debug, Clone)]
pub struct Bsca {
    top: Topology,
    y: CachingVector,
    t: u64,
    schedule: StepSchedule,
    constants: Constants,
    gradient: GradientRule,
    reconfig: Option<ReconfigCosts>,
    /// Columns as they were before the last update, for the reconfiguration
    /// term. Untouched columns are identical in both slots.
    prev_columns: Vec<(usize, Vec<f64>)>,
}

impl Bsca {
    pub fn new(top: Topology, config: BscaConfig) -> Result<Self> {
        let y = feasible_initial_cache(&top, config.init);
        Self::with_initial(top, y, config)
    }

    /// Starts from a caller-supplied feasible caching vector.
    pub fn with_initial(top: Topology, y: CachingVector, config: BscaConfig) -> Result<Self> {
        y.check_feasible(&top, crate::domain::FEASIBILITY_TOL)?;
        let mut constants = constants(&top, config.max_weight);
        if let Some(costs) = &config.reconfig {
            constants.k = reconfig_k(config.max_weight, costs.max_cost(), constants.deg);
        }
        let schedule = StepSchedule {
            mode: config.schedule,
            horizon: config.horizon,
            delta_y: constants.delta_y,
            k: constants.k,
        };
        // Fail early rather than at the first step.
        schedule.eta(1)?;
        Ok(Self {
            top,
            y,
            t: 1,
            schedule,
            constants,
            gradient: config.gradient,
            reconfig: config.reconfig,
            prev_columns: Vec::new(),
        })
    }

    pub fn caching(&self) -> &CachingVector {
        &self.y
    }

    pub fn topology(&self) -> &Topology {
        &self.top
    }

    /// Next slot to be served (1-based).
    pub fn slot(&self) -> u64 {
        self.t
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn schedule(&self) -> StepSchedule {
        self.schedule
    }

    fn previous_caching(&self) -> CachingVector {
        let mut prev = self.y.clone();
        for (j, col) in &self.prev_columns {
            prev.column_mut(*j).copy_from_slice(col);
        }
        prev
    }

    /// Supergradient used for `req` at the current state, without updating.
    pub fn direction(&self, req: &Request, w: &UtilityModel, routing: &RoutingOutcome) -> Supergradient {
        let g = match self.gradient {
            GradientRule::Auto if self.top.num_caches() == 1 => {
                single_cache_gradient(req, &self.top, w)
            }
            _ => supergradient(routing, req),
        };
        match &self.reconfig {
            Some(costs) => {
                let mut q = g;
                for (j, col) in &self.prev_columns {
                    for (n, (now, before)) in self.y.column(*j).iter().zip(col).enumerate() {
                        if now - before > 0.0 {
                            q.add(n, *j, -costs.cost(n, *j));
                        }
                    }
                }
                q
            }
            None => g,
        }
    }

    /// Serves one request and updates the caches.
    pub fn step(&mut self, req: &Request, w: &UtilityModel) -> Result<StepReport> {
        let routing = route(req, &self.y, &self.top, w);
        let reconfig_cost = match &self.reconfig {
            Some(costs) if !self.prev_columns.is_empty() => {
                costs.charge(&self.y, &self.previous_caching())
            }
            _ => 0.0,
        };
        let direction = self.direction(req, w, &routing);
        let eta = self.schedule.eta(self.t)?;

        let mut touched: Vec<usize> = direction
            .entries
            .iter()
            .filter(|e| e.2 != 0.0)
            .map(|e| e.1)
            .collect();
        touched.sort_unstable();
        touched.dedup();

        let mut prev_columns = Vec::with_capacity(touched.len());
        let mut projections = Vec::with_capacity(touched.len());
        for &j in &touched {
            let before = self.y.column(j).to_vec();
            let col = self.y.column_mut(j);
            for &(n, cj, g) in &direction.entries {
                if cj == j {
                    col[n] += eta * g;
                }
            }
            let stats = project_cache_in_place(col, self.top.capacity(j))?;
            projections.push((j, stats));
            prev_columns.push((j, before));
        }
        if self.reconfig.is_some() {
            self.prev_columns = prev_columns;
        }
        self.t += 1;
        Ok(StepReport {
            routing,
            eta,
            reconfig_cost,
            projections,
        })
    }
}

/// Outcome of serving one request, as seen by the metrics layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Served {
    pub utility: f64,
    /// Fraction of the request served from caches, in `[0, 1]`.
    pub hit: f64,
}

/// A policy that serves one request per slot and then updates its caches.
pub trait OnlinePolicy {
    fn name(&self) -> &str;

    /// Serves `req` with the slot's utility snapshot `w`.
    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served>;
}

impl OnlinePolicy for Bsca {
    fn name(&self) -> &str {
        "bsca"
    }

    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served> {
        let report = self.step(req, w)?;
        Ok(Served {
            utility: report.routing.utility - report.reconfig_cost,
            hit: report.routing.served_from_caches(),
        })
    }
}

/// A fixed caching vector with optimal routing; used to replay hindsight
/// configurations through the same metrics path as online policies.
#[derive(Debug, Clone)]
pub struct StaticPolicy {
    name: String,
    top: Topology,
    y: CachingVector,
}

impl StaticPolicy {
    pub fn new(name: impl Into<String>, top: Topology, y: CachingVector) -> Result<Self> {
        y.check_feasible(&top, crate::domain::FEASIBILITY_TOL)?;
        Ok(Self {
            name: name.into(),
            top,
            y,
        })
    }

    pub fn caching(&self) -> &CachingVector {
        &self.y
    }
}

impl OnlinePolicy for StaticPolicy {
    fn name(&self) -> &str {
        &self.name
    }

    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served> {
        let out = route(req, &self.y, &self.top, w);
        Ok(Served {
            utility: out.utility,
            hit: out.served_from_caches(),
        })
    }
}
