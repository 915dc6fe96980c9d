//! Reactive integral-cache competitors and best-static benchmarks.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    CachingVector, Request, Topology, UtilityModel, UtilitySchedule, FEASIBILITY_TOL,
};
use crate::error::{Error, Result};
use crate::policy::{OnlinePolicy, Served};
use crate::projection::project_cache_in_place;
use crate::routing::route_parts;

/// Whole files held by one cache with LRU ordering.
#[derive(Debug, Clone)]
pub struct LruSet {
    capacity: usize,
    clock: u64,
    stamps: HashMap<usize, u64>,
    by_stamp: BTreeMap<u64, usize>,
}

impl LruSet {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            clock: 0,
            stamps: HashMap::new(),
            by_stamp: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    pub fn contains(&self, file: usize) -> bool {
        self.stamps.contains_key(&file)
    }

    /// Marks `file` as most recently used. Returns false if absent.
    pub fn touch(&mut self, file: usize) -> bool {
        let Some(old) = self.stamps.get(&file).copied() else {
            return false;
        };
        self.by_stamp.remove(&old);
        self.clock += 1;
        self.stamps.insert(file, self.clock);
        self.by_stamp.insert(self.clock, file);
        true
    }

    /// Inserts `file` as most recent, evicting the least recent file when full.
    /// Returns the evicted file.
    pub fn insert(&mut self, file: usize) -> Option<usize> {
        if self.touch(file) || self.capacity == 0 {
            return None;
        }
        let evicted = if self.stamps.len() >= self.capacity {
            let (_, victim) = self.by_stamp.pop_first()?;
            self.stamps.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.clock += 1;
        self.stamps.insert(file, self.clock);
        self.by_stamp.insert(self.clock, file);
        evicted
    }

    /// Files from least to most recently used.
    pub fn recency(&self) -> Vec<usize> {
        self.by_stamp.values().copied().collect()
    }

    /// Files in increasing id order.
    pub fn contents(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.stamps.keys().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Whole files held by one cache with LFU eviction over the full request
/// history. Ties are broken toward the lower file id.
#[derive(Debug, Clone)]
pub struct LfuSet {
    capacity: usize,
    counts: HashMap<usize, u64>,
    cached: BTreeSet<(u64, usize)>,
}

impl LfuSet {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            counts: HashMap::new(),
            cached: BTreeSet::new(),
        }
    }

    pub fn count(&self, file: usize) -> u64 {
        self.counts.get(&file).copied().unwrap_or(0)
    }

    pub fn contains(&self, file: usize) -> bool {
        self.cached.contains(&(self.count(file), file))
    }

    /// Records a request; returns whether it was a hit.
    pub fn request(&mut self, file: usize) -> bool {
        let old = self.count(file);
        let hit = self.cached.remove(&(old, file));
        self.counts.insert(file, old + 1);
        if hit {
            self.cached.insert((old + 1, file));
        } else if self.capacity > 0 {
            if self.cached.len() >= self.capacity {
                self.cached.pop_first();
            }
            self.cached.insert((old + 1, file));
        }
        hit
    }

    pub fn contents(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cached.iter().map(|e| e.1).collect();
        v.sort_unstable();
        v
    }
}

fn single_cache_weight(top: &Topology, req: &Request, w: &UtilityModel) -> Option<f64> {
    top.is_reachable(req.location, 0)
        .then(|| w.weight(req.file, req.location, 0))
}

fn require_single_cache(top: &Topology, name: &str) -> Result<()> {
    if top.num_caches() == 1 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} needs a single cache, topology has {}",
            top.num_caches()
        )))
    }
}

/// Classic LRU on a single cache.
#[derive(Debug, Clone)]
pub struct LruPolicy {
    top: Topology,
    cache: LruSet,
}

impl LruPolicy {
    pub fn new(top: Topology) -> Result<Self> {
        require_single_cache(&top, "lru")?;
        let cache = LruSet::new(top.capacity(0));
        Ok(Self { top, cache })
    }

    pub fn cache(&self) -> &LruSet {
        &self.cache
    }
}

impl OnlinePolicy for LruPolicy {
    fn name(&self) -> &str {
        "lru"
    }

    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served> {
        let Some(weight) = single_cache_weight(&self.top, req, w) else {
            return Ok(Served { utility: 0.0, hit: 0.0 });
        };
        let hit = self.cache.touch(req.file);
        if !hit {
            self.cache.insert(req.file);
        }
        Ok(if hit {
            Served { utility: weight, hit: 1.0 }
        } else {
            Served { utility: 0.0, hit: 0.0 }
        })
    }
}

/// Classic LFU on a single cache.
#[derive(Debug, Clone)]
pub struct LfuPolicy {
    top: Topology,
    cache: LfuSet,
}

impl LfuPolicy {
    pub fn new(top: Topology) -> Result<Self> {
        require_single_cache(&top, "lfu")?;
        let cache = LfuSet::new(top.capacity(0));
        Ok(Self { top, cache })
    }

    pub fn cache(&self) -> &LfuSet {
        &self.cache
    }
}

impl OnlinePolicy for LfuPolicy {
    fn name(&self) -> &str {
        "lfu"
    }

    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served> {
        let Some(weight) = single_cache_weight(&self.top, req, w) else {
            return Ok(Served { utility: 0.0, hit: 0.0 });
        };
        Ok(if self.cache.request(req.file) {
            Served { utility: weight, hit: 1.0 }
        } else {
            Served { utility: 0.0, hit: 0.0 }
        })
    }
}

/// Insertion rule of a multi-cache LRU policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiLruRule {
    /// Each request is also directed to one random reachable cache, which
    /// applies the LRU rule to the requested file.
    Mlru,
    /// Insert only when no reachable cache holds the file, with probability `q`.
    QLazy { q: f64 },
}

/// mLRU and q-LRU with the lazy rule on a bipartite network.
#[derive(Debug, Clone)]
pub struct MultiLru {
    top: Topology,
    caches: Vec<LruSet>,
    rule: MultiLruRule,
    rng: ChaCha8Rng,
}

impl MultiLru {
    pub fn new(top: Topology, rule: MultiLruRule, seed: u64) -> Result<Self> {
        if let MultiLruRule::QLazy { q } = rule {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Config(format!("q must lie in [0, 1], got {q}")));
            }
        }
        let caches = top.capacities().iter().map(|&c| LruSet::new(c)).collect();
        Ok(Self {
            top,
            caches,
            rule,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn mlru(top: Topology, seed: u64) -> Result<Self> {
        Self::new(top, MultiLruRule::Mlru, seed)
    }

    pub fn qlru_lazy(top: Topology, q: f64, seed: u64) -> Result<Self> {
        Self::new(top, MultiLruRule::QLazy { q }, seed)
    }

    pub fn cache(&self, j: usize) -> &LruSet {
        &self.caches[j]
    }

    /// Integral caching vector of the current contents.
    pub fn caching(&self) -> CachingVector {
        let mut y = CachingVector::zeros(self.top.library_size(), self.caches.len());
        for (j, c) in self.caches.iter().enumerate() {
            for n in c.contents() {
                y.set(n, j, 1.0);
            }
        }
        y
    }
}

impl OnlinePolicy for MultiLru {
    fn name(&self) -> &str {
        match self.rule {
            MultiLruRule::Mlru => "mlru",
            MultiLruRule::QLazy { .. } => "qlru-lazy",
        }
    }

    fn serve(&mut self, req: &Request, w: &UtilityModel) -> Result<Served> {
        let reach = self.top.reachable_caches(req.location);
        if reach.is_empty() {
            return Ok(Served { utility: 0.0, hit: 0.0 });
        }
        let weights = w.weights_for(req.file, req.location);
        // Best holder, ties to the lower cache index.
        let mut best: Option<usize> = None;
        for &j in reach {
            if self.caches[j].contains(req.file)
                && best.map_or(true, |b| weights[j] > weights[b])
            {
                best = Some(j);
            }
        }
        if let Some(b) = best {
            self.caches[b].touch(req.file);
        }
        match self.rule {
            MultiLruRule::Mlru => {
                let target = reach[self.rng.random_range(0..reach.len())];
                self.caches[target].insert(req.file);
            }
            MultiLruRule::QLazy { q } => {
                if best.is_none() && q > 0.0 && (q >= 1.0 || self.rng.random_bool(q)) {
                    let target = reach[self.rng.random_range(0..reach.len())];
                    self.caches[target].insert(req.file);
                }
            }
        }
        Ok(match best {
            Some(b) => Served { utility: weights[b], hit: 1.0 },
            None => Served { utility: 0.0, hit: 0.0 },
        })
    }
}

/// How a hindsight configuration was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HindsightMethod {
    ExactSingleCache,
    OfflineAscent,
}

/// Best static caching vector for a finite request log.
#[derive(Debug, Clone)]
pub struct HindsightSolution {
    pub y: CachingVector,
    pub total_utility: f64,
    pub method: HindsightMethod,
}

/// Top-`C` files by accumulated value, ties to the lower id.
fn top_files(values: &[f64], capacity: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(capacity);
    order
}

fn single_cache_solution(values: &[f64], capacity: usize) -> HindsightSolution {
    let mut y = CachingVector::zeros(values.len(), 1);
    let mut total = 0.0;
    for n in top_files(values, capacity) {
        y.set(n, 0, 1.0);
        total += values[n];
    }
    HindsightSolution {
        y,
        total_utility: total,
        method: HindsightMethod::ExactSingleCache,
    }
}

/// Best static single cache for per-file weights: the `C` files with the
/// largest `w[n] * count[n]`.
pub fn hindsight_single_cache(requests: &[Request], w: &[f64], capacity: usize) -> HindsightSolution {
    let mut values = vec![0.0; w.len()];
    for r in requests {
        values[r.file] += w[r.file];
    }
    single_cache_solution(&values, capacity.min(w.len()))
}

/// Best static single cache under a general utility schedule; requests from
/// locations that cannot reach the cache contribute nothing.
pub fn hindsight_single_cache_model(
    requests: &[Request],
    top: &Topology,
    schedule: &UtilitySchedule,
) -> Result<HindsightSolution> {
    require_single_cache(top, "exact single-cache hindsight")?;
    let mut values = vec![0.0; top.library_size()];
    for r in requests {
        if top.is_reachable(r.location, 0) {
            values[r.file] += schedule.at(r.slot).weight(r.file, r.location, 0);
        }
    }
    Ok(single_cache_solution(&values, top.capacity(0)))
}

/// Request counts aggregated by `(file, location, utility epoch)`.
#[derive(Debug, Clone)]
pub struct RequestAtoms {
    /// `(file, location, epoch, count)`, grouped by file.
    atoms: Vec<(usize, usize, usize, f64)>,
    /// Range of `atoms` for each file.
    by_file: Vec<std::ops::Range<usize>>,
}

impl RequestAtoms {
    pub fn new(requests: &[Request], library_size: usize, schedule: &UtilitySchedule) -> Self {
        let mut counts: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for r in requests {
            *counts
                .entry((r.file, r.location, schedule.epoch_index(r.slot)))
                .or_insert(0.0) += 1.0;
        }
        let atoms: Vec<_> = counts.into_iter().map(|((n, i, e), c)| (n, i, e, c)).collect();
        let mut by_file = vec![0..0; library_size];
        let mut start = 0;
        while start < atoms.len() {
            let n = atoms[start].0;
            let mut end = start;
            while end < atoms.len() && atoms[end].0 == n {
                end += 1;
            }
            by_file[n] = start..end;
            start = end;
        }
        Self { atoms, by_file }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total utility of file `n` under the caching fractions `row(j)`.
    fn file_value(
        &self,
        n: usize,
        top: &Topology,
        schedule: &UtilitySchedule,
        row: impl Fn(usize) -> f64,
    ) -> f64 {
        self.atoms[self.by_file[n].clone()]
            .iter()
            .map(|&(_, i, e, c)| {
                let w = schedule.epoch(e).weights_for(n, i);
                c * route_parts(top.reachable_caches(i), w, &row).utility
            })
            .sum()
    }

    /// Total utility of the log under the static caching vector `y`.
    pub fn objective(&self, y: &CachingVector, top: &Topology, schedule: &UtilitySchedule) -> f64 {
        (0..self.by_file.len())
            .map(|n| self.file_value(n, top, schedule, |j| y.get(n, j)))
            .sum()
    }

    /// Objective and a supergradient, as a dense cache-major vector.
    fn objective_and_supergradient(
        &self,
        y: &CachingVector,
        top: &Topology,
        schedule: &UtilitySchedule,
        grad: &mut CachingVector,
    ) -> f64 {
        grad.as_mut_slice().fill(0.0);
        let mut total = 0.0;
        for &(n, i, e, c) in &self.atoms {
            let w = schedule.epoch(e).weights_for(n, i);
            let out = route_parts(top.reachable_caches(i), w, |j| y.get(n, j));
            total += c * out.utility;
            for (j, b) in out.beta {
                let g = grad.get(n, j) + c * b;
                grad.set(n, j, g);
            }
        }
        total
    }
}

/// Integral greedy placement: repeatedly cache the `(file, cache)` pair with
/// the largest marginal gain while capacity remains.
fn greedy_placement(
    atoms: &RequestAtoms,
    top: &Topology,
    schedule: &UtilitySchedule,
) -> CachingVector {
    let n_files = top.library_size();
    let n_caches = top.num_caches();
    let mut y = CachingVector::zeros(n_files, n_caches);
    let mut room: Vec<usize> = top.capacities().to_vec();
    let mut value: Vec<f64> = vec![0.0; n_files];
    let mut version = vec![0u64; n_files];

    #[derive(PartialEq)]
    struct Cand {
        gain: f64,
        file: usize,
        cache: usize,
        version: u64,
    }
    impl Eq for Cand {}
    impl PartialOrd for Cand {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Cand {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.gain
                .total_cmp(&other.gain)
                .then(other.file.cmp(&self.file))
                .then(other.cache.cmp(&self.cache))
        }
    }

    let gain = |y: &CachingVector, value: f64, n: usize, j: usize| {
        atoms.file_value(n, top, schedule, |k| if k == j { 1.0 } else { y.get(n, k) }) - value
    };
    let mut heap = BinaryHeap::new();
    for n in 0..n_files {
        if atoms.by_file[n].is_empty() {
            continue;
        }
        for j in 0..n_caches {
            let g = gain(&y, 0.0, n, j);
            if g > 0.0 {
                heap.push(Cand { gain: g, file: n, cache: j, version: 0 });
            }
        }
    }
    while let Some(c) = heap.pop() {
        if room[c.cache] == 0 || y.get(c.file, c.cache) > 0.0 {
            continue;
        }
        if c.version != version[c.file] {
            let g = gain(&y, value[c.file], c.file, c.cache);
            if g > 0.0 {
                heap.push(Cand { gain: g, version: version[c.file], ..c });
            }
            continue;
        }
        y.set(c.file, c.cache, 1.0);
        room[c.cache] -= 1;
        value[c.file] += c.gain;
        version[c.file] += 1;
    }
    y
}

/// Tuning of the offline ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    /// Supergradient steps per pass.
    pub iters: usize,
    /// Number of passes; each restarts from the best point with half the step scale.
    pub passes: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            iters: 400,
            passes: 4,
        }
    }
}

/// Best static caching vector on a bipartite network, found by a greedy
/// integral placement refined with projected supergradient ascent.
///
/// The returned objective never decreases across passes.
pub fn hindsight_network(
    requests: &[Request],
    top: &Topology,
    schedule: &UtilitySchedule,
    options: AscentOptions,
) -> Result<HindsightSolution> {
    let atoms = RequestAtoms::new(requests, top.library_size(), schedule);
    Ok(hindsight_from_atoms(&atoms, top, schedule, options)?.0)
}

/// As [`hindsight_network`], also returning the best objective after each pass.
pub fn hindsight_from_atoms(
    atoms: &RequestAtoms,
    top: &Topology,
    schedule: &UtilitySchedule,
    options: AscentOptions,
) -> Result<(HindsightSolution, Vec<f64>)> {
    let mut best = greedy_placement(atoms, top, schedule);
    let mut best_value = atoms.objective(&best, top, schedule);
    let mut history = vec![best_value];
    if atoms.is_empty() {
        return Ok((solution(best, best_value), history));
    }

    let diameter: f64 = top
        .capacities()
        .iter()
        .map(|&c| 2.0 * c.min(top.library_size() - c) as f64)
        .sum::<f64>()
        .sqrt();
    let mut grad = CachingVector::zeros(top.library_size(), top.num_caches());
    let mut scale = 0.5 * diameter;

    for _ in 0..options.passes {
        let mut y = best.clone();
        let mut avg = CachingVector::zeros(top.library_size(), top.num_caches());
        let mut avg_weight = 0.0;
        for k in 1..=options.iters {
            let value = atoms.objective_and_supergradient(&y, top, schedule, &mut grad);
            if value > best_value {
                best_value = value;
                best = y.clone();
            }
            let norm = grad.as_slice().iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let eta = scale / (norm * (k as f64).sqrt());
            for (v, g) in y.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                *v += eta * g;
            }
            for j in 0..top.num_caches() {
                project_cache_in_place(y.column_mut(j), top.capacity(j))?;
            }
            // Average over the second half of the pass.
            if 2 * k > options.iters {
                for (a, v) in avg.as_mut_slice().iter_mut().zip(y.as_slice()) {
                    *a += v;
                }
                avg_weight += 1.0;
            }
        }
        for y_last in [Some(y), (avg_weight > 0.0).then(|| {
            for a in avg.as_mut_slice() {
                *a /= avg_weight;
            }
            avg
        })]
        .into_iter()
        .flatten()
        {
            let value = atoms.objective(&y_last, top, schedule);
            if value > best_value {
                best_value = value;
                best = y_last;
            }
        }
        history.push(best_value);
        scale *= 0.5;
    }
    debug_assert!(best.is_feasible(top, FEASIBILITY_TOL));
    Ok((solution(best, best_value), history))
}

fn solution(y: CachingVector, total_utility: f64) -> HindsightSolution {
    HindsightSolution {
        y,
        total_utility,
        method: HindsightMethod::OfflineAscent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reqs(files: &[usize]) -> Vec<Request> {
        files
            .iter()
            .enumerate()
            .map(|(t, &n)| Request::new(t as u64 + 1, n, 0))
            .collect()
    }

    /// Straightforward list-based LRU used as a replay oracle.
    fn replay_lru(files: &[usize], cap: usize) -> (Vec<u8>, Vec<usize>) {
        let mut list: Vec<usize> = Vec::new();
        let mut hits = Vec::new();
        for &f in files {
            if let Some(p) = list.iter().position(|&x| x == f) {
                list.remove(p);
                list.push(f);
                hits.push(1);
            } else {
                if list.len() == cap {
                    list.remove(0);
                }
                list.push(f);
                hits.push(0);
            }
        }
        list.sort_unstable();
        (hits, list)
    }

    fn replay_lfu(files: &[usize], cap: usize, n: usize) -> (Vec<u8>, Vec<usize>) {
        let mut counts = vec![0u64; n];
        let mut cached: Vec<usize> = Vec::new();
        let mut hits = Vec::new();
        for &f in files {
            counts[f] += 1;
            if cached.contains(&f) {
                hits.push(1);
                continue;
            }
            hits.push(0);
            if cached.len() == cap {
                let victim = *cached
                    .iter()
                    .min_by_key(|&&x| (counts[x], x))
                    .unwrap();
                cached.retain(|&x| x != victim);
            }
            cached.push(f);
        }
        cached.sort_unstable();
        (hits, cached)
    }

    fn run_single<P: OnlinePolicy>(p: &mut P, files: &[usize], n: usize) -> Vec<u8> {
        let w = UtilityModel::uniform(n, 1, 1, 1.0).unwrap();
        reqs(files)
            .iter()
            .map(|r| p.serve(r, &w).unwrap().hit as u8)
            .collect()
    }

    #[test]
    fn lru_reference_sequence() {
        let top = Topology::single_cache(4, 2).unwrap();
        let mut p = LruPolicy::new(top).unwrap();
        // Files 1, 2, 3, 1 in one-based ids.
        let hits = run_single(&mut p, &[0, 1, 2, 0], 4);
        assert_eq!(hits, vec![0, 0, 0, 0]);
        assert_eq!(p.cache().contents(), vec![0, 2]);
        assert_eq!(replay_lru(&[0, 1, 2, 0], 2), (hits, vec![0, 2]));
    }

    #[test]
    fn lru_hit_refreshes_recency() {
        let mut s = LruSet::new(2);
        s.insert(0);
        s.insert(1);
        assert!(s.touch(0));
        assert_eq!(s.recency(), vec![1, 0]);
        assert_eq!(s.insert(2), Some(1));
        assert_eq!(s.contents(), vec![0, 2]);
    }

    #[test]
    fn lfu_reference_sequence() {
        let top = Topology::single_cache(4, 2).unwrap();
        let mut p = LfuPolicy::new(top).unwrap();
        let hits = run_single(&mut p, &[0, 0, 1, 2], 4);
        assert_eq!(hits, vec![0, 1, 0, 0]);
        assert_eq!(p.cache().contents(), vec![0, 2]);
    }

    #[test]
    fn lfu_tie_evicts_lower_id() {
        let mut s = LfuSet::new(2);
        s.request(3);
        s.request(1);
        s.request(2);
        assert_eq!(s.contents(), vec![2, 3]);
    }

    #[test]
    fn single_file_always_hits_after_first() {
        let top = Topology::single_cache(5, 1).unwrap();
        let mut lru = LruPolicy::new(top.clone()).unwrap();
        let mut lfu = LfuPolicy::new(top).unwrap();
        let files = [3; 20];
        for hits in [run_single(&mut lru, &files, 5), run_single(&mut lfu, &files, 5)] {
            assert_eq!(hits[0], 0);
            assert!(hits[1..].iter().all(|&h| h == 1));
        }
    }

    #[test]
    fn lru_lfu_match_replay_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let cap = rng.random_range(1..n);
            let files: Vec<usize> = (0..200).map(|_| rng.random_range(0..n)).collect();
            let top = Topology::single_cache(n, cap).unwrap();
            let mut lru = LruPolicy::new(top.clone()).unwrap();
            let hits = run_single(&mut lru, &files, n);
            assert_eq!((hits, lru.cache().contents()), replay_lru(&files, cap));
            let mut lfu = LfuPolicy::new(top).unwrap();
            let hits = run_single(&mut lfu, &files, n);
            assert_eq!((hits, lfu.cache().contents()), replay_lfu(&files, cap, n));
        }
    }

    #[test]
    fn single_cache_policies_reject_networks() {
        let top = Topology::fully_connected(1, 5, vec![1, 1]).unwrap();
        assert!(LruPolicy::new(top.clone()).is_err());
        assert!(LfuPolicy::new(top).is_err());
    }

    fn two_cache_net() -> (Topology, UtilityModel) {
        let top = Topology::new(crate::domain::TopologySpec {
            num_locations: 2,
            num_caches: 2,
            library_size: 5,
            capacities: vec![2, 2],
            reachable: vec![vec![true, true], vec![false, false]],
        })
        .unwrap();
        (top, UtilityModel::per_cache(5, 2, &[2.0, 100.0]).unwrap())
    }

    #[test]
    fn mlru_serves_from_best_holder() {
        let (top, w) = two_cache_net();
        let mut p = MultiLru::mlru(top, 1).unwrap();
        p.caches[0].insert(3);
        p.caches[1].insert(3);
        let s = p.serve(&Request::new(1, 3, 0), &w).unwrap();
        assert_eq!(s.utility, 100.0);
    }

    #[test]
    fn mlru_single_reachable_cache_inserts_there() {
        let top = Topology::fully_connected(1, 5, vec![2]).unwrap();
        let w = UtilityModel::uniform(5, 1, 1, 1.0).unwrap();
        let mut p = MultiLru::mlru(top, 3).unwrap();
        let s = p.serve(&Request::new(1, 4, 0), &w).unwrap();
        assert_eq!(s.utility, 0.0);
        assert!(p.cache(0).contains(4));
        assert_eq!(p.serve(&Request::new(2, 4, 0), &w).unwrap().hit, 1.0);
    }

    #[test]
    fn unreachable_location_leaves_state() {
        let (top, w) = two_cache_net();
        for mut p in [
            MultiLru::mlru(top.clone(), 1).unwrap(),
            MultiLru::qlru_lazy(top.clone(), 1.0, 1).unwrap(),
        ] {
            let s = p.serve(&Request::new(1, 2, 1), &w).unwrap();
            assert_eq!(s.utility, 0.0);
            assert!(p.cache(0).is_empty() && p.cache(1).is_empty());
        }
    }

    #[test]
    fn lazy_rule_skips_insertion_when_held() {
        let (top, w) = two_cache_net();
        let mut p = MultiLru::qlru_lazy(top, 1.0, 5).unwrap();
        p.caches[0].insert(1);
        let s = p.serve(&Request::new(1, 1, 0), &w).unwrap();
        assert_eq!(s.utility, 2.0);
        assert!(!p.cache(1).contains(1));
        // Absent everywhere: inserted somewhere.
        p.serve(&Request::new(2, 4, 0), &w).unwrap();
        assert!(p.cache(0).contains(4) || p.cache(1).contains(4));
    }

    #[test]
    fn lazy_with_zero_q_never_changes() {
        let (top, w) = two_cache_net();
        let mut p = MultiLru::qlru_lazy(top, 0.0, 5).unwrap();
        for t in 1..50 {
            p.serve(&Request::new(t, (t % 5) as usize, 0), &w).unwrap();
        }
        assert!(p.cache(0).is_empty() && p.cache(1).is_empty());
    }

    #[test]
    fn multi_lru_replays_identically() {
        let (top, w) = two_cache_net();
        let run = || {
            let mut p = MultiLru::mlru(top.clone(), 42).unwrap();
            (1..200u64)
                .map(|t| p.serve(&Request::new(t, (t * 7 % 5) as usize, 0), &w).unwrap().utility)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn hindsight_single_cache_examples() {
        // Counts (5, 3, 2), weights (1, 2, 1), C = 1.
        let log = reqs(&[0, 0, 0, 0, 0, 1, 1, 1, 2, 2]);
        let sol = hindsight_single_cache(&log, &[1.0, 2.0, 1.0], 1);
        assert_eq!(sol.total_utility, 6.0);
        assert_eq!(sol.y.get(1, 0), 1.0);
        let all = hindsight_single_cache(&log, &[1.0, 2.0, 1.0], 3);
        assert_eq!(all.total_utility, 5.0 + 6.0 + 2.0);
        let lfu = hindsight_single_cache(&log, &[1.0; 3], 2);
        assert_eq!(lfu.total_utility, 8.0);
    }

    #[test]
    fn network_hindsight_single_atom() {
        let (top, w) = two_cache_net();
        let sched = UtilitySchedule::constant(w);
        let log: Vec<Request> = (1..=10).map(|t| Request::new(t, 2, 0)).collect();
        let sol = hindsight_network(&log, &top, &sched, AscentOptions::default()).unwrap();
        assert_eq!(sol.total_utility, 1000.0);
        assert_eq!(sol.y.get(2, 1), 1.0);
    }

    #[test]
    fn network_hindsight_agrees_on_single_cache() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(3..30);
            let cap = rng.random_range(1..n);
            let wv: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
            let log: Vec<Request> = (0..300)
                .map(|t| Request::new(t + 1, rng.random_range(0..n), 0))
                .collect();
            let exact = hindsight_single_cache(&log, &wv, cap);
            let top = Topology::single_cache(n, cap).unwrap();
            let sched = UtilitySchedule::constant(UtilityModel::per_file(&wv, 1, 1).unwrap());
            let net = hindsight_network(&log, &top, &sched, AscentOptions::default()).unwrap();
            assert!((net.total_utility - exact.total_utility).abs() <= 1e-9 * exact.total_utility.max(1.0));
        }
    }

    #[test]
    fn ascent_history_is_monotone_and_improves_greedy() {
        // Greedy integral placement is suboptimal here; fractional splitting helps.
        let top = Topology::new(crate::domain::TopologySpec {
            num_locations: 3,
            num_caches: 2,
            library_size: 4,
            capacities: vec![1, 1],
            reachable: vec![vec![true, false], vec![true, true], vec![false, true]],
        })
        .unwrap();
        let w = UtilityModel::per_cache(4, 3, &[1.0, 1.0]).unwrap();
        let sched = UtilitySchedule::constant(w);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let log: Vec<Request> = (0..200)
            .map(|t| Request::new(t + 1, rng.random_range(0..4), rng.random_range(0..3)))
            .collect();
        let atoms = RequestAtoms::new(&log, 4, &sched);
        let (sol, history) = hindsight_from_atoms(&atoms, &top, &sched, AscentOptions::default()).unwrap();
        assert!(history.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(*history.last().unwrap(), sol.total_utility);
        assert!((atoms.objective(&sol.y, &top, &sched) - sol.total_utility).abs() < 1e-9);
        assert!(sol.y.is_feasible(&top, 1e-9));
    }
}
