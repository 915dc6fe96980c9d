//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::AscentOptions;
use crate::domain::{InitialFill, Topology, TopologySpec, UtilityModel, UtilitySchedule};
use crate::error::{Error, Result};
use crate::policy::{GradientRule, ReconfigCosts, ScheduleMode};
use crate::workloads::WorkloadKind;

/// Which static benchmark the regret is measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretMode {
    /// One configuration, optimal for the whole horizon, evaluated at every slot.
    #[default]
    #[serde(alias = "hindsight-at-T")]
    HindsightAtT,
    /// At each checkpoint `t`, the configuration optimal for slots `1..=t`.
    HindsightUpToT,
}

/// A policy named in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Bsca(Option<ScheduleMode>),
    Lru,
    Lfu,
    Mlru,
    QlruLazy,
    Hindsight,
}

impl PolicyKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "bsca" => Self::Bsca(None),
            "bsca-fixed" => Self::Bsca(Some(ScheduleMode::Fixed)),
            "bsca-diminishing" => Self::Bsca(Some(ScheduleMode::Diminishing)),
            "bsca-doubling" => Self::Bsca(Some(ScheduleMode::Doubling)),
            "lru" => Self::Lru,
            "lfu" => Self::Lfu,
            "mlru" => Self::Mlru,
            "qlru-lazy" => Self::QlruLazy,
            "hindsight" => Self::Hindsight,
            other => return Err(Error::Config(format!("unknown policy {other:?}"))),
        })
    }

    pub fn single_cache_only(self) -> bool {
        matches!(self, Self::Lru | Self::Lfu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub locations: usize,
    pub caches: usize,
    pub library: usize,
    pub capacities: Vec<usize>,
    /// `locations x caches` 0/1 matrix; fully connected when omitted.
    #[serde(default)]
    pub reachable: Option<Vec<Vec<u8>>>,
}

impl TopologySection {
    pub fn to_topology(&self) -> Result<Topology> {
        let reachable = match &self.reachable {
            Some(rows) => rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| match v {
                            0 => Ok(false),
                            1 => Ok(true),
                            other => Err(Error::Config(format!(
                                "reachable entries must be 0 or 1, found {other}"
                            ))),
                        })
                        .collect()
                })
                .collect::<Result<_>>()?,
            None => vec![vec![true; self.caches]; self.locations],
        };
        Topology::new(TopologySpec {
            num_locations: self.locations,
            num_caches: self.caches,
            library_size: self.library,
            capacities: self.capacities.clone(),
            reachable,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactoredWeights {
    /// `library x caches`.
    pub cache: Vec<Vec<f64>>,
    /// `locations x caches`.
    pub routing: Vec<Vec<f64>>,
}

/// One of several weight shorthands; exactly one must be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightForm {
    /// Same vector `(w_1, .., w_J)` for every file and location.
    #[serde(default)]
    pub per_cache: Option<Vec<f64>>,
    /// One weight per file.
    #[serde(default)]
    pub per_file: Option<Vec<f64>>,
    #[serde(default)]
    pub uniform: Option<f64>,
    /// Dense weights in `((n * I) + i) * J + j` order.
    #[serde(default)]
    pub matrix: Option<Vec<f64>>,
    #[serde(default)]
    pub factored: Option<FactoredWeights>,
}

impl WeightForm {
    pub fn to_model(&self, top: &Topology) -> Result<UtilityModel> {
        let (n, i, j) = (top.library_size(), top.num_locations(), top.num_caches());
        let given = [
            self.per_cache.is_some(),
            self.per_file.is_some(),
            self.uniform.is_some(),
            self.matrix.is_some(),
            self.factored.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if given != 1 {
            return Err(Error::Config(format!(
                "utility needs exactly one of per_cache, per_file, uniform, matrix, factored; found {given}"
            )));
        }
        let model = if let Some(w) = &self.per_cache {
            if w.len() != j {
                return Err(Error::Config(format!("per_cache has {} entries, expected {j}", w.len())));
            }
            UtilityModel::per_cache(n, i, w)?
        } else if let Some(w) = &self.per_file {
            if w.len() != n {
                return Err(Error::Config(format!("per_file has {} entries, expected {n}", w.len())));
            }
            UtilityModel::per_file(w, i, j)?
        } else if let Some(w) = self.uniform {
            UtilityModel::uniform(n, i, j, w)?
        } else if let Some(w) = &self.matrix {
            UtilityModel::dense(n, i, j, w.clone())?
        } else {
            let f = self.factored.as_ref().expect("counted above");
            UtilityModel::factored(&f.cache, &f.routing)?
        };
        model.check_against(top)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEpoch {
    /// First slot (1-based) of the epoch.
    pub start: u64,
    #[serde(flatten)]
    pub weights: WeightForm,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UtilitySection {
    #[serde(flatten)]
    pub weights: WeightForm,
    /// Later epochs; the top-level weights cover slot 1 onward.
    #[serde(default)]
    pub schedule: Vec<UtilityEpoch>,
}

impl UtilitySection {
    pub fn to_schedule(&self, top: &Topology) -> Result<UtilitySchedule> {
        let base = self.weights.to_model(top)?;
        if self.schedule.is_empty() {
            return Ok(UtilitySchedule::constant(base));
        }
        let mut epochs = vec![(1, base)];
        for e in &self.schedule {
            epochs.push((e.start, e.weights.to_model(top)?));
        }
        UtilitySchedule::piecewise(epochs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BscaSection {
    #[serde(default)]
    pub schedule: ScheduleMode,
    #[serde(default)]
    pub init: InitialFill,
    #[serde(default)]
    pub gradient: GradientRule,
    /// One reconfiguration cost per cache, or a single value for all caches.
    #[serde(default)]
    pub reconfig_costs: Option<Vec<f64>>,
}

impl BscaSection {
    pub fn reconfig(&self, top: &Topology) -> Result<Option<ReconfigCosts>> {
        let Some(c) = &self.reconfig_costs else {
            return Ok(None);
        };
        let per_cache = match c.len() {
            1 => vec![c[0]; top.num_caches()],
            k if k == top.num_caches() => c.clone(),
            k => {
                return Err(Error::Config(format!(
                    "reconfig_costs has {k} entries, expected 1 or {}",
                    top.num_caches()
                )))
            }
        };
        Ok(Some(ReconfigCosts::per_cache(top.library_size(), &per_cache)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HindsightSection {
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_passes")]
    pub passes: usize,
}

fn default_iters() -> usize {
    AscentOptions::default().iters
}

fn default_passes() -> usize {
    AscentOptions::default().passes
}

impl Default for HindsightSection {
    fn default() -> Self {
        Self {
            iters: default_iters(),
            passes: default_passes(),
        }
    }
}

impl HindsightSection {
    pub fn options(&self) -> AscentOptions {
        AscentOptions {
            iters: self.iters,
            passes: self.passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSection {
    /// Insertion probability of q-LRU with the lazy rule.
    #[serde(default = "default_q")]
    pub q: f64,
}

fn default_q() -> f64 {
    1.0
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self { q: default_q() }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub horizon: u64,
    #[serde(default)]
    pub regret_mode: RegretMode,
    pub policies: Vec<String>,
    /// CSV destination; relative paths resolve against the config file.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub topology: TopologySection,
    pub utility: UtilitySection,
    pub workload: WorkloadKind,
    #[serde(default)]
    pub bsca: BscaSection,
    #[serde(default)]
    pub hindsight: HindsightSection,
    #[serde(default)]
    pub baselines: BaselineSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative trace and output paths are resolved
    /// against the file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let WorkloadKind::Trace { path: trace } = &mut config.workload {
            if trace.is_relative() {
                *trace = base.join(&*trace);
            }
        }
        if let Some(out) = &mut config.out {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(config)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<Validated> {
        let topology = self.topology.to_topology()?;
        let schedule = self.utility.to_schedule(&topology)?;
        if self.policies.is_empty() {
            return Err(Error::Config("no policies listed".into()));
        }
        let mut policies = Vec::with_capacity(self.policies.len());
        for name in &self.policies {
            let kind = PolicyKind::parse(name)?;
            if kind.single_cache_only() && topology.num_caches() > 1 {
                return Err(Error::Config(format!(
                    "policy {name} needs a single cache, topology has {}",
                    topology.num_caches()
                )));
            }
            if self.policies.iter().filter(|p| *p == name).count() > 1 {
                return Err(Error::Config(format!("policy {name} listed twice")));
            }
            policies.push((name.clone(), kind));
        }
        if !(0.0..=1.0).contains(&self.baselines.q) {
            return Err(Error::Config("baselines.q must lie in [0, 1]".into()));
        }
        let reconfig = self.bsca.reconfig(&topology)?;
        Ok(Validated {
            topology,
            schedule,
            policies,
            reconfig,
        })
    }
}

/// Objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Validated {
    pub topology: Topology,
    pub schedule: UtilitySchedule,
    pub policies: Vec<(String, PolicyKind)>,
    pub reconfig: Option<ReconfigCosts>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const BIPARTITE: &str = r#"
seed = 7
horizon = 1000
regret_mode = "hindsight-up-to-t"
policies = ["bsca", "mlru", "qlru-lazy", "hindsight"]

[topology]
locations = 4
caches = 3
library = 100
capacities = [10, 10, 10]
reachable = [[1, 0, 1], [1, 1, 0], [0, 1, 1], [0, 1, 1]]

[utility]
per_cache = [1, 2, 100]

[workload]
kind = "zipf"
alpha = 0.8
"#;

    #[test]
    fn parses_network_config() {
        let c = ExperimentConfig::from_toml_str(BIPARTITE).unwrap();
        assert_eq!(c.regret_mode, RegretMode::HindsightUpToT);
        let v = c.validate().unwrap();
        assert_eq!(v.topology.degree(), 2);
        assert_eq!(v.schedule.max_weight(), 100.0);
        assert_eq!(v.policies.len(), 4);
    }

    #[test]
    fn rejects_single_cache_policies_on_networks() {
        let text = BIPARTITE.replace("\"mlru\"", "\"lru\"");
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_unknown_keys_and_policies() {
        assert!(ExperimentConfig::from_toml_str(&format!("bogus = 1\n{BIPARTITE}")).is_err());
        let text = BIPARTITE.replace("\"mlru\"", "\"belady\"");
        assert!(ExperimentConfig::from_toml_str(&text).unwrap().validate().is_err());
    }

    #[test]
    fn utility_needs_exactly_one_form() {
        let text = BIPARTITE.replace("per_cache = [1, 2, 100]", "per_cache = [1, 2, 100]\nuniform = 1");
        assert!(ExperimentConfig::from_toml_str(&text).unwrap().validate().is_err());
    }

    #[test]
    fn piecewise_schedule() {
        let text = BIPARTITE.replace(
            "per_cache = [1, 2, 100]",
            "per_cache = [1, 2, 100]\n\n[[utility.schedule]]\nstart = 500\nper_cache = [100, 2, 1]",
        );
        let v = ExperimentConfig::from_toml_str(&text).unwrap().validate().unwrap();
        assert_eq!(v.schedule.num_epochs(), 2);
        assert_eq!(v.schedule.at(600).weight(0, 0, 0), 100.0);
    }
}
