//! Request-sequence generators and trace ingestion.
//!
//! Every generator is a pure function of its parameters and seed and emits
//! exactly one request per slot.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::domain::Request;
use crate::error::{Error, Result};

/// Shape of a generated stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamParams {
    pub library_size: usize,
    pub num_locations: usize,
    pub horizon: u64,
    pub seed: u64,
}

impl StreamParams {
    fn check(&self) -> Result<()> {
        if self.library_size == 0 {
            return Err(Error::InvalidWorkload("library must contain at least one file".into()));
        }
        if self.num_locations == 0 {
            return Err(Error::InvalidWorkload("need at least one location".into()));
        }
        Ok(())
    }
}

fn default_alpha() -> f64 {
    0.8
}

/// Workload description as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkloadKind {
    Zipf {
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    ShotNoise(#[serde(default)] ShotNoiseParams),
    /// Requests with probability proportional to `1 / w[n]`. Without explicit
    /// weights the per-file weights of the utility model are used.
    LbAdversary {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Trace {
        path: PathBuf,
    },
}

/// Zipf probabilities `n^-alpha / sum_m m^-alpha` for ranks `1..=N`.
pub fn zipf_pmf(library_size: usize, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidWorkload(format!("zipf exponent must be >= 0, got {alpha}")));
    }
    let raw: Vec<f64> = (1..=library_size).map(|n| (n as f64).powf(-alpha)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|p| p / total).collect())
}

/// Probabilities proportional to `1 / w[n]`.
pub fn lb_adversary_pmf(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidWorkload("empty weight vector".into()));
    }
    if let Some(n) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidWorkload(format!(
            "weight of file {} is {}; the adversary pmf needs every weight > 0",
            n + 1,
            weights[n]
        )));
    }
    let inv: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|p| p / total).collect())
}

/// i.i.d. requests from a fixed file pmf, locations uniform.
#[derive(Debug, Clone)]
pub struct IidStream {
    files: WeightedIndex<f64>,
    num_locations: usize,
    horizon: u64,
    t: u64,
    rng: ChaCha8Rng,
}

impl IidStream {
    pub fn new(pmf: &[f64], params: &StreamParams) -> Result<Self> {
        params.check()?;
        if pmf.len() != params.library_size {
            return Err(Error::LengthMismatch {
                left: pmf.len(),
                right: params.library_size,
            });
        }
        let files = WeightedIndex::new(pmf)
            .map_err(|e| Error::InvalidWorkload(format!("bad pmf: {e}")))?;
        Ok(Self {
            files,
            num_locations: params.num_locations,
            horizon: params.horizon,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }
}

impl Iterator for IidStream {
    type Item = Request;

    fn next(&mut self) -> Option<Request> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let file = self.files.sample(&mut self.rng);
        let location = self.rng.random_range(0..self.num_locations);
        Some(Request::new(self.t, file, location))
    }
}

/// Stationary Zipf requests.
pub fn gen_zipf(params: &StreamParams, alpha: f64) -> Result<IidStream> {
    IidStream::new(&zipf_pmf(params.library_size, alpha)?, params)
}

/// Requests drawn with probability proportional to `1 / w[n]`.
pub fn gen_lb_adversary(params: &StreamParams, weights: &[f64]) -> Result<IidStream> {
    IidStream::new(&lb_adversary_pmf(weights)?, params)
}

/// Poisson shot-noise popularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotNoiseParams {
    /// Mean number of new shots per slot.
    pub rate: f64,
    /// Slots each shot stays active.
    pub lifespan: u64,
    /// Request intensity contributed by each active shot.
    pub intensity: f64,
    /// Intensity of every file regardless of shots.
    pub floor: f64,
    /// Files (0-based) with a shot starting at slot 1.
    pub initial_shots: Vec<usize>,
}

impl Default for ShotNoiseParams {
    fn default() -> Self {
        Self {
            rate: 0.01,
            lifespan: 5000,
            intensity: 1.0,
            floor: 1e-6,
            initial_shots: Vec::new(),
        }
    }
}

/// Shot-noise request stream.
#[derive(Debug, Clone)]
pub struct ShotNoiseStream {
    params: ShotNoiseParams,
    library_size: usize,
    num_locations: usize,
    horizon: u64,
    t: u64,
    arrivals: Option<Poisson<f64>>,
    /// `(file, last active slot)` in arrival order.
    active: VecDeque<(usize, u64)>,
    rng: ChaCha8Rng,
}

impl ShotNoiseStream {
    /// Files with an active shot at the last emitted slot.
    pub fn active_files(&self) -> Vec<usize> {
        self.active.iter().map(|s| s.0).collect()
    }
}

/// Shot-noise requests: shots arrive as a Poisson process, each on a
/// uniformly chosen file, and boost that file for `lifespan` slots.
pub fn gen_shot_noise(params: &StreamParams, shots: &ShotNoiseParams) -> Result<ShotNoiseStream> {
    params.check()?;
    if !(shots.rate.is_finite() && shots.rate >= 0.0) {
        return Err(Error::InvalidWorkload(format!("shot rate must be >= 0, got {}", shots.rate)));
    }
    if shots.lifespan == 0 {
        return Err(Error::InvalidWorkload("shot lifespan must be >= 1".into()));
    }
    if !(shots.intensity.is_finite() && shots.intensity > 0.0) {
        return Err(Error::InvalidWorkload("shot intensity must be > 0".into()));
    }
    if !(shots.floor.is_finite() && shots.floor >= 0.0) {
        return Err(Error::InvalidWorkload("floor intensity must be >= 0".into()));
    }
    if shots.floor == 0.0 && shots.rate == 0.0 && shots.initial_shots.is_empty() {
        return Err(Error::InvalidWorkload("all intensities are zero".into()));
    }
    if let Some(&n) = shots.initial_shots.iter().find(|&&n| n >= params.library_size) {
        return Err(Error::InvalidWorkload(format!("initial shot file {n} outside the library")));
    }
    let arrivals = if shots.rate > 0.0 {
        Some(Poisson::new(shots.rate).map_err(|e| Error::InvalidWorkload(e.to_string()))?)
    } else {
        None
    };
    let active = shots
        .initial_shots
        .iter()
        .map(|&n| (n, shots.lifespan))
        .collect();
    Ok(ShotNoiseStream {
        params: shots.clone(),
        library_size: params.library_size,
        num_locations: params.num_locations,
        horizon: params.horizon,
        t: 0,
        arrivals,
        active,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
    })
}

impl Iterator for ShotNoiseStream {
    type Item = Request;

    fn next(&mut self) -> Option<Request> {
        if self.t >= self.horizon {
            return None;
        }
        self.t += 1;
        let t = self.t;
        while self.active.front().is_some_and(|s| s.1 < t) {
            self.active.pop_front();
        }
        // Initial shots occupy slot 1, so new arrivals start from slot 1 too.
        if let Some(poisson) = &self.arrivals {
            let k = poisson.sample(&mut self.rng) as u64;
            for _ in 0..k {
                let file = self.rng.random_range(0..self.library_size);
                self.active.push_back((file, t + self.params.lifespan - 1));
            }
        }
        let floor_mass = self.params.floor * self.library_size as f64;
        let shot_mass = self.params.intensity * self.active.len() as f64;
        let u = self.rng.random::<f64>() * (floor_mass + shot_mass);
        let file = if u < floor_mass || self.active.is_empty() {
            self.rng.random_range(0..self.library_size)
        } else {
            self.active[self.rng.random_range(0..self.active.len())].0
        };
        let location = self.rng.random_range(0..self.num_locations);
        Some(Request::new(t, file, location))
    }
}

/// Column layout of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceColumns {
    pub slot: usize,
    pub file: usize,
    /// Location column; when absent every request comes from the first location.
    pub location: Option<usize>,
}

impl Default for TraceColumns {
    fn default() -> Self {
        Self {
            slot: 0,
            file: 1,
            location: Some(2),
        }
    }
}

/// Options for trace parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceMapping {
    pub columns: TraceColumns,
    /// Reject locations above this (1-based) value.
    pub max_locations: Option<usize>,
}

/// A parsed request trace with densified ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub requests: Vec<Request>,
    /// Raw file id of each dense id.
    pub file_ids: Vec<String>,
    pub num_locations: usize,
}

impl Trace {
    pub fn library_size(&self) -> usize {
        self.file_ids.len()
    }

    pub fn horizon(&self) -> u64 {
        self.requests.len() as u64
    }
}

/// Reads a `slot,file_id[,location_id]` trace from disk.
pub fn parse_trace(path: &Path, mapping: TraceMapping) -> Result<Trace> {
    let text = std::fs::read_to_string(path)?;
    parse_trace_str(&text, mapping)
}

/// Parses trace text. File ids are arbitrary strings densified in order of
/// first appearance; locations are 1-based; slots only order the records,
/// which are renumbered `1..=T`.
pub fn parse_trace_str(text: &str, mapping: TraceMapping) -> Result<Trace> {
    let cols = mapping.columns;
    let mut dense: HashMap<String, usize> = HashMap::new();
    let mut file_ids = Vec::new();
    let mut rows: Vec<(u64, usize, usize)> = Vec::new();
    let mut num_locations = 1;
    let mut seen_record = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        let field = |k: usize, what: &str| {
            fields.get(k).copied().ok_or_else(|| Error::Trace {
                line,
                message: format!("missing {what} column (field {})", k + 1),
            })
        };
        let slot_text = field(cols.slot, "slot")?;
        let slot = match slot_text.parse::<u64>() {
            Ok(s) => s,
            Err(_) if !seen_record => {
                // Header row.
                seen_record = true;
                continue;
            }
            Err(_) => {
                return Err(Error::Trace {
                    line,
                    message: format!("slot {slot_text:?} is not a nonnegative integer"),
                })
            }
        };
        seen_record = true;
        let file_text = field(cols.file, "file_id")?;
        if file_text.is_empty() {
            return Err(Error::Trace {
                line,
                message: "empty file_id".into(),
            });
        }
        let next_id = dense.len();
        let file = *dense.entry(file_text.to_string()).or_insert_with(|| {
            file_ids.push(file_text.to_string());
            next_id
        });
        let location = match cols.location {
            Some(k) if k < fields.len() => {
                let text = fields[k];
                let loc = text.parse::<usize>().map_err(|_| Error::Trace {
                    line,
                    message: format!("location {text:?} is not a positive integer"),
                })?;
                let out_of_range =
                    loc == 0 || mapping.max_locations.is_some_and(|max| loc > max);
                if out_of_range {
                    return Err(Error::Trace {
                        line,
                        message: format!(
                            "location {loc} out of range 1..={}",
                            mapping.max_locations.map_or("inf".into(), |m| m.to_string())
                        ),
                    });
                }
                loc
            }
            _ => 1,
        };
        num_locations = num_locations.max(location);
        rows.push((slot, file, location - 1));
    }
    rows.sort_by_key(|r| r.0);
    let requests = rows
        .into_iter()
        .enumerate()
        .map(|(t, (_, file, loc))| Request::new(t as u64 + 1, file, loc))
        .collect();
    Ok(Trace {
        requests,
        file_ids,
        num_locations,
    })
}

/// Materializes a workload into a request vector.
///
/// `default_weights` feeds the lower-bound adversary when the workload does
/// not list its own weights.
pub fn materialize(
    kind: &WorkloadKind,
    params: &StreamParams,
    default_weights: Option<&[f64]>,
) -> Result<Vec<Request>> {
    match kind {
        WorkloadKind::Zipf { alpha } => Ok(gen_zipf(params, *alpha)?.collect()),
        WorkloadKind::ShotNoise(shots) => Ok(gen_shot_noise(params, shots)?.collect()),
        WorkloadKind::LbAdversary { weights } => {
            let w = weights
                .as_deref()
                .or(default_weights)
                .ok_or_else(|| {
                    Error::InvalidWorkload("lb-adversary needs per-file weights".into())
                })?;
            Ok(gen_lb_adversary(params, w)?.collect())
        }
        WorkloadKind::Trace { path } => {
            let trace = parse_trace(
                path,
                TraceMapping {
                    max_locations: Some(params.num_locations),
                    ..Default::default()
                },
            )?;
            if trace.library_size() > params.library_size {
                return Err(Error::InvalidWorkload(format!(
                    "trace has {} distinct files but the library holds {}",
                    trace.library_size(),
                    params.library_size
                )));
            }
            let mut requests = trace.requests;
            requests.truncate(params.horizon as usize);
            Ok(requests)
        }
    }
}
