//! Network model: bipartite topology, requests, utility weights and the
//! fractional caching vector.
//!
//! Indices are zero-based throughout the library. Cache `j` in `0..J` is a
//! small-cell cache; the macro base station (MBS) is implicit, stores the whole
//! library and yields zero utility, so it never appears in any array.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for feasibility checks on caching vectors.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Unvalidated topology description, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub num_locations: usize,
    pub num_caches: usize,
    pub library_size: usize,
    pub capacities: Vec<usize>,
    /// `reachable[i][j]` is true when cache `j` can serve location `i`.
    pub reachable: Vec<Vec<bool>>,
}

/// One violated topology invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyLibrary,
    NoLocations,
    NoCaches,
    CapacityCount { expected: usize, found: usize },
    ZeroCapacity { cache: usize },
    CapacityNotBelowLibrary { cache: usize, capacity: usize, library: usize },
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyLibrary => write!(f, "library size must be >= 1"),
            Violation::NoLocations => write!(f, "number of locations must be >= 1"),
            Violation::NoCaches => write!(f, "number of caches must be >= 1"),
            Violation::CapacityCount { expected, found } => {
                write!(f, "expected {expected} capacities, found {found}")
            }
            Violation::ZeroCapacity { cache } => {
                write!(f, "cache {cache}: capacity must be positive")
            }
            Violation::CapacityNotBelowLibrary { cache, capacity, library } => write!(
                f,
                "cache {cache}: capacity must be < N (capacity {capacity}, N {library})"
            ),
            Violation::ShapeMismatch { expected, found } => write!(
                f,
                "reachability matrix shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
        }
    }
}

/// Outcome of [`validate_topology`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every topology invariant and reports all violations at once.
pub fn validate_topology(spec: &TopologySpec) -> ValidationReport {
    let mut violations = Vec::new();
    if spec.library_size == 0 {
        violations.push(Violation::EmptyLibrary);
    }
    if spec.num_locations == 0 {
        violations.push(Violation::NoLocations);
    }
    if spec.num_caches == 0 {
        violations.push(Violation::NoCaches);
    }
    if spec.capacities.len() != spec.num_caches {
        violations.push(Violation::CapacityCount {
            expected: spec.num_caches,
            found: spec.capacities.len(),
        });
    }
    for (cache, &capacity) in spec.capacities.iter().enumerate() {
        if capacity == 0 {
            violations.push(Violation::ZeroCapacity { cache });
        } else if capacity >= spec.library_size {
            violations.push(Violation::CapacityNotBelowLibrary {
                cache,
                capacity,
                library: spec.library_size,
            });
        }
    }
    let rows = spec.reachable.len();
    let bad_row = spec.reachable.iter().find(|r| r.len() != spec.num_caches);
    if rows != spec.num_locations || bad_row.is_some() {
        let cols = bad_row
            .or_else(|| spec.reachable.first())
            .map_or(0, |r| r.len());
        violations.push(Violation::ShapeMismatch {
            expected: (spec.num_locations, spec.num_caches),
            found: (rows, cols),
        });
    }
    ValidationReport { violations }
}

/// A validated bipartite topology between user locations and caches.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    num_locations: usize,
    num_caches: usize,
    library_size: usize,
    capacities: Vec<usize>,
    reachable: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    pub fn new(spec: TopologySpec) -> Result<Self> {
        let report = validate_topology(&spec);
        if !report.is_ok() {
            return Err(Error::InvalidTopology(report.to_string()));
        }
        let TopologySpec {
            num_locations,
            num_caches,
            library_size,
            capacities,
            reachable,
        } = spec;
        let neighbors = reachable
            .iter()
            .map(|row| (0..num_caches).filter(|&j| row[j]).collect())
            .collect();
        Ok(Self {
            num_locations,
            num_caches,
            library_size,
            capacities,
            reachable: reachable.into_iter().flatten().collect(),
            neighbors,
        })
    }

    /// Every location reaches every cache.
    pub fn fully_connected(
        num_locations: usize,
        library_size: usize,
        capacities: Vec<usize>,
    ) -> Result<Self> {
        let num_caches = capacities.len();
        Self::new(TopologySpec {
            num_locations,
            num_caches,
            library_size,
            capacities,
            reachable: vec![vec![true; num_caches]; num_locations],
        })
    }

    /// One cache, one location.
    pub fn single_cache(library_size: usize, capacity: usize) -> Result<Self> {
        Self::fully_connected(1, library_size, vec![capacity])
    }

    pub fn num_locations(&self) -> usize {
        self.num_locations
    }

    pub fn num_caches(&self) -> usize {
        self.num_caches
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn capacities(&self) -> &[usize] {
        &self.capacities
    }

    pub fn capacity(&self, cache: usize) -> usize {
        self.capacities[cache]
    }

    /// Largest cache capacity.
    pub fn max_capacity(&self) -> usize {
        self.capacities.iter().copied().max().unwrap_or(0)
    }

    pub fn is_reachable(&self, location: usize, cache: usize) -> bool {
        self.reachable[location * self.num_caches + cache]
    }

    /// Caches reachable from `location`, in increasing index order.
    pub fn reachable_caches(&self, location: usize) -> &[usize] {
        &self.neighbors[location]
    }

    /// Maximum number of caches reachable from any single location.
    pub fn degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            num_locations: self.num_locations,
            num_caches: self.num_caches,
            library_size: self.library_size,
            capacities: self.capacities.clone(),
            reachable: self
                .reachable
                .chunks(self.num_caches)
                .map(<[bool]>::to_vec)
                .collect(),
        }
    }
}

/// One file request: exactly one (file, location) pair per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Request {
    /// 1-based slot number.
    pub slot: u64,
    pub file: usize,
    pub location: usize,
}

impl Request {
    pub fn new(slot: u64, file: usize, location: usize) -> Self {
        Self { slot, file, location }
    }
}

/// Utility per unit of file served, indexed by (file, location, cache).
///
/// The MBS weight is zero by construction and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityModel {
    library_size: usize,
    num_locations: usize,
    num_caches: usize,
    weights: Vec<f64>,
    max_weight: f64,
}

impl UtilityModel {
    /// Dense weights laid out as `((n * I) + i) * J + j`.
    pub fn dense(
        library_size: usize,
        num_locations: usize,
        num_caches: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let expected = library_size * num_locations * num_caches;
        if weights.len() != expected {
            return Err(Error::InvalidWeights(format!(
                "expected {expected} weights, found {}",
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and >= 0, found {bad}"
            )));
        }
        let max_weight = weights.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            library_size,
            num_locations,
            num_caches,
            weights,
            max_weight,
        })
    }

    pub fn from_fn(
        library_size: usize,
        num_locations: usize,
        num_caches: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(library_size * num_locations * num_caches);
        for n in 0..library_size {
            for i in 0..num_locations {
                for j in 0..num_caches {
                    weights.push(f(n, i, j));
                }
            }
        }
        Self::dense(library_size, num_locations, num_caches, weights)
    }

    /// The same per-cache vector for every file and location.
    pub fn per_cache(library_size: usize, num_locations: usize, per_cache: &[f64]) -> Result<Self> {
        Self::from_fn(library_size, num_locations, per_cache.len(), |_, _, j| {
            per_cache[j]
        })
    }

    /// File-specific weights, identical across locations and caches.
    pub fn per_file(
        per_file: &[f64],
        num_locations: usize,
        num_caches: usize,
    ) -> Result<Self> {
        Self::from_fn(per_file.len(), num_locations, num_caches, |n, _, _| {
            per_file[n]
        })
    }

    /// Uniform weight `w` everywhere.
    pub fn uniform(
        library_size: usize,
        num_locations: usize,
        num_caches: usize,
        w: f64,
    ) -> Result<Self> {
        Self::from_fn(library_size, num_locations, num_caches, |_, _, _| w)
    }

    /// Product form `w[n,i,j] = cache_benefit[n][j] * routing_benefit[i][j]`.
    pub fn factored(cache_benefit: &[Vec<f64>], routing_benefit: &[Vec<f64>]) -> Result<Self> {
        let library_size = cache_benefit.len();
        let num_locations = routing_benefit.len();
        let num_caches = cache_benefit
            .first()
            .or(routing_benefit.first())
            .map_or(0, Vec::len);
        if cache_benefit.iter().any(|r| r.len() != num_caches)
            || routing_benefit.iter().any(|r| r.len() != num_caches)
        {
            return Err(Error::InvalidWeights(
                "factored weights: inconsistent number of caches".into(),
            ));
        }
        Self::from_fn(library_size, num_locations, num_caches, |n, i, j| {
            cache_benefit[n][j] * routing_benefit[i][j]
        })
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn num_locations(&self) -> usize {
        self.num_locations
    }

    pub fn num_caches(&self) -> usize {
        self.num_caches
    }

    #[inline]
    pub fn weight(&self, file: usize, location: usize, cache: usize) -> f64 {
        self.weights[(file * self.num_locations + location) * self.num_caches + cache]
    }

    /// Weights of all caches for one (file, location) pair.
    #[inline]
    pub fn weights_for(&self, file: usize, location: usize) -> &[f64] {
        let start = (file * self.num_locations + location) * self.num_caches;
        &self.weights[start..start + self.num_caches]
    }

    /// Largest weight over all (file, location, cache).
    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    /// Checks that the dimensions agree with `top`.
    pub fn check_against(&self, top: &Topology) -> Result<()> {
        if self.library_size != top.library_size()
            || self.num_locations != top.num_locations()
            || self.num_caches != top.num_caches()
        {
            return Err(Error::InvalidWeights(format!(
                "weights are {}x{}x{} but topology is {}x{}x{}",
                self.library_size,
                self.num_locations,
                self.num_caches,
                top.library_size(),
                top.num_locations(),
                top.num_caches()
            )));
        }
        Ok(())
    }
}

/// Static or piecewise-constant utility weights over time.
#[derive(Debug, Clone)]
pub struct UtilitySchedule {
    epochs: Vec<(u64, Arc<UtilityModel>)>,
    max_weight: f64,
}

impl UtilitySchedule {
    pub fn constant(model: UtilityModel) -> Self {
        let max_weight = model.max_weight();
        Self {
            epochs: vec![(1, Arc::new(model))],
            max_weight,
        }
    }

    /// `epochs` are `(first_slot, weights)` pairs. The first epoch must start
    /// at slot 1 and start slots must be strictly increasing.
    pub fn piecewise(epochs: Vec<(u64, UtilityModel)>) -> Result<Self> {
        if epochs.first().map(|e| e.0) != Some(1) {
            return Err(Error::InvalidWeights(
                "the first utility epoch must start at slot 1".into(),
            ));
        }
        if epochs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidWeights(
                "utility epochs must have increasing start slots".into(),
            ));
        }
        let dims = |m: &UtilityModel| (m.library_size, m.num_locations, m.num_caches);
        if epochs.iter().any(|e| dims(&e.1) != dims(&epochs[0].1)) {
            return Err(Error::InvalidWeights(
                "all utility epochs must share dimensions".into(),
            ));
        }
        let max_weight = epochs.iter().map(|e| e.1.max_weight()).fold(0.0, f64::max);
        Ok(Self {
            epochs: epochs.into_iter().map(|(s, m)| (s, Arc::new(m))).collect(),
            max_weight,
        })
    }

    /// Index of the epoch that covers `slot`.
    pub fn epoch_index(&self, slot: u64) -> usize {
        self.epochs.partition_point(|e| e.0 <= slot).saturating_sub(1)
    }

    /// Weight snapshot in force at `slot`.
    pub fn at(&self, slot: u64) -> &UtilityModel {
        &self.epochs[self.epoch_index(slot)].1
    }

    pub fn epoch(&self, index: usize) -> &UtilityModel {
        &self.epochs[index].1
    }

    pub fn num_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_static(&self) -> bool {
        self.epochs.len() == 1
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }
}

/// Fractional cache occupancy `y[n, j]` in `[0, 1]`, stored cache-major so
/// each cache column is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CachingVector {
    library_size: usize,
    num_caches: usize,
    data: Vec<f64>,
}

impl CachingVector {
    pub fn zeros(library_size: usize, num_caches: usize) -> Self {
        Self {
            library_size,
            num_caches,
            data: vec![0.0; library_size * num_caches],
        }
    }

    /// Builds from one column per cache.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let num_caches = columns.len();
        let library_size = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != library_size) {
            return Err(Error::InvalidTopology(
                "caching vector columns differ in length".into(),
            ));
        }
        Ok(Self {
            library_size,
            num_caches,
            data: columns.into_iter().flatten().collect(),
        })
    }

    pub fn library_size(&self) -> usize {
        self.library_size
    }

    pub fn num_caches(&self) -> usize {
        self.num_caches
    }

    #[inline]
    pub fn get(&self, file: usize, cache: usize) -> f64 {
        self.data[cache * self.library_size + file]
    }

    #[inline]
    pub fn set(&mut self, file: usize, cache: usize, value: f64) {
        self.data[cache * self.library_size + file] = value;
    }

    pub fn column(&self, cache: usize) -> &[f64] {
        let start = cache * self.library_size;
        &self.data[start..start + self.library_size]
    }

    pub fn column_mut(&mut self, cache: usize) -> &mut [f64] {
        let start = cache * self.library_size;
        &mut self.data[start..start + self.library_size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Occupied capacity of one cache.
    pub fn load(&self, cache: usize) -> f64 {
        self.column(cache).iter().sum()
    }

    /// Euclidean distance to another caching vector of the same shape.
    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self { data, ..*self }
    }

    /// Verifies the box and per-cache capacity constraints within `tol`.
    pub fn check_feasible(&self, top: &Topology, tol: f64) -> Result<()> {
        if self.library_size != top.library_size() || self.num_caches != top.num_caches() {
            return Err(Error::InvalidTopology(format!(
                "caching vector is {}x{}, topology expects {}x{}",
                self.library_size,
                self.num_caches,
                top.library_size(),
                top.num_caches()
            )));
        }
        for j in 0..self.num_caches {
            let col = self.column(j);
            if let Some((n, v)) = col
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= -tol && **v <= 1.0 + tol))
            {
                return Err(Error::InvalidTopology(format!(
                    "y[{n},{j}] = {v} outside [0, 1]"
                )));
            }
            let load: f64 = col.iter().sum();
            if load > top.capacity(j) as f64 + tol {
                return Err(Error::InvalidTopology(format!(
                    "cache {j} load {load} exceeds capacity {}",
                    top.capacity(j)
                )));
            }
        }
        Ok(())
    }

    pub fn is_feasible(&self, top: &Topology, tol: f64) -> bool {
        self.check_feasible(top, tol).is_ok()
    }
}

/// How the first caching vector is filled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFill {
    /// `y[n, j] = C_j / N` for every file.
    #[default]
    Uniform,
    /// Files `0..C_j` cached entirely.
    TopIndex,
}

/// A caching vector in which every cache is exactly full.
pub fn feasible_initial_cache(top: &Topology, fill: InitialFill) -> CachingVector {
    let n = top.library_size();
    let mut y = CachingVector::zeros(n, top.num_caches());
    for j in 0..top.num_caches() {
        let c = top.capacity(j);
        let col = y.column_mut(j);
        match fill {
            InitialFill::Uniform => col.fill(c as f64 / n as f64),
            InitialFill::TopIndex => col[..c].fill(1.0),
        }
    }
    y
}

/// An undirected network with nonnegative link costs, designated user nodes,
/// cache nodes and one MBS node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralGraph {
    pub num_nodes: usize,
    /// `(u, v, cost)` undirected links.
    pub edges: Vec<(usize, usize, f64)>,
    pub users: Vec<usize>,
    pub caches: Vec<usize>,
    pub mbs: usize,
}

/// Result of collapsing a general graph onto the bipartite model.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphReduction {
    /// `reachable[i][j]`: user `i` has some path to cache `j`.
    pub reachable: Vec<Vec<bool>>,
    /// Minimum path cost per (user, cache), `None` when unreachable.
    pub path_cost: Vec<Vec<Option<f64>>>,
    /// Minimum path cost from each user to the MBS node.
    pub mbs_cost: Vec<f64>,
}

impl GraphReduction {
    pub fn num_users(&self) -> usize {
        self.reachable.len()
    }

    /// Builds the bipartite topology given cache capacities and library size.
    pub fn into_topology(&self, capacities: Vec<usize>, library_size: usize) -> Result<Topology> {
        Topology::new(TopologySpec {
            num_locations: self.reachable.len(),
            num_caches: capacities.len(),
            library_size,
            capacities,
            reachable: self.reachable.clone(),
        })
    }

    /// Largest finite path cost to any cache.
    pub fn max_cost(&self) -> f64 {
        self.path_cost
            .iter()
            .flatten()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Routing benefit `w_rout[i][j] = maxcost - cost[i][j]`, zero when unreachable.
    pub fn routing_benefit(&self) -> Vec<Vec<f64>> {
        let max = self.max_cost();
        self.routing_benefit_with(|cost| max - cost)
    }

    /// Routing benefit with a caller-supplied cost transform.
    pub fn routing_benefit_with(&self, transform: impl Fn(f64) -> f64) -> Vec<Vec<f64>> {
        self.path_cost
            .iter()
            .map(|row| row.iter().map(|c| c.map_or(0.0, &transform)).collect())
            .collect()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn shortest_paths(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: source });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let cand = cost + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(HeapEntry { cost: cand, node: next });
            }
        }
    }
    dist
}

/// Collapses an uncapacitated general graph onto the bipartite model by
/// replacing each (user, cache) pair with its minimum-cost path.
pub fn reduce_general_graph(g: &GeneralGraph) -> Result<GraphReduction> {
    let in_range = |v: usize| v < g.num_nodes;
    if !in_range(g.mbs)
        || !g.users.iter().copied().all(in_range)
        || !g.caches.iter().copied().all(in_range)
    {
        return Err(Error::InvalidGraph("designated node out of range".into()));
    }
    let mut adj = vec![Vec::new(); g.num_nodes];
    for &(u, v, cost) in &g.edges {
        if !in_range(u) || !in_range(v) {
            return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
        }
        if !(cost >= 0.0 && cost.is_finite()) {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) has invalid cost {cost}"
            )));
        }
        adj[u].push((v, cost));
        adj[v].push((u, cost));
    }

    let mut reachable = Vec::with_capacity(g.users.len());
    let mut path_cost = Vec::with_capacity(g.users.len());
    let mut mbs_cost = Vec::with_capacity(g.users.len());
    for &user in &g.users {
        let dist = shortest_paths(&adj, user);
        if !dist[g.mbs].is_finite() {
            return Err(Error::UnserviceableLocation(user));
        }
        mbs_cost.push(dist[g.mbs]);
        let costs: Vec<Option<f64>> = g
            .caches
            .iter()
            .map(|&c| dist[c].is_finite().then_some(dist[c]))
            .collect();
        reachable.push(costs.iter().map(Option::is_some).collect());
        path_cost.push(costs);
    }
    Ok(GraphReduction {
        reachable,
        path_cost,
        mbs_cost,
    })
}
