//! Experiment runner: one shared request stream, every policy, one benchmark.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    hindsight_network, hindsight_single_cache_model, HindsightSolution, LfuPolicy, LruPolicy,
    MultiLru,
};
use crate::bounds::{lower_bound_weighted, upper_bound_bsca, BoundInputs, PermutationSearch};
use crate::domain::{Request, Topology, UtilitySchedule};
use crate::error::Result;
use crate::harness::config::{ExperimentConfig, PolicyKind, RegretMode, Validated};
use crate::harness::metrics::{checkpoints, Checkpoint, MetricsSeries, PolicySeries};
use crate::policy::{Bsca, BscaConfig, OnlinePolicy, StaticPolicy};
use crate::routing::evaluate_utility;
use crate::workloads::{materialize, StreamParams};

/// Metrics together with the inputs they were computed from.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsSeries,
    pub requests: Vec<Request>,
    /// Benchmark configuration for the whole horizon.
    pub hindsight: HindsightSolution,
}

/// Runs an experiment and returns its metrics.
pub fn run(config: &ExperimentConfig) -> Result<MetricsSeries> {
    Ok(run_detailed(config)?.metrics)
}

/// Per-file weights used by the lower-bound adversary when the workload does
/// not list its own: the best cache weight at the first location.
fn adversary_weights(top: &Topology, schedule: &UtilitySchedule) -> Vec<f64> {
    let w = schedule.epoch(0);
    (0..top.library_size())
        .map(|n| w.weights_for(n, 0).iter().copied().fold(0.0, f64::max))
        .collect()
}

/// Best static configuration for `requests`.
pub fn hindsight_for(
    requests: &[Request],
    top: &Topology,
    schedule: &UtilitySchedule,
    config: &ExperimentConfig,
) -> Result<HindsightSolution> {
    if top.num_caches() == 1 {
        hindsight_single_cache_model(requests, top, schedule)
    } else {
        hindsight_network(requests, top, schedule, config.hindsight.options())
    }
}

fn build_policies(
    config: &ExperimentConfig,
    v: &Validated,
    hindsight: &HindsightSolution,
) -> Result<Vec<Box<dyn OnlinePolicy>>> {
    // Independent generator streams for randomized baselines.
    let mut seeds = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_ba5e_11ae_0001);
    let mut out: Vec<Box<dyn OnlinePolicy>> = Vec::with_capacity(v.policies.len());
    for (name, kind) in &v.policies {
        let seed = seeds.next_u64();
        let top = v.topology.clone();
        let policy: Box<dyn OnlinePolicy> = match *kind {
            PolicyKind::Bsca(mode) => Box::new(Bsca::new(
                top,
                BscaConfig {
                    schedule: mode.unwrap_or(config.bsca.schedule),
                    horizon: Some(config.horizon),
                    init: config.bsca.init,
                    gradient: config.bsca.gradient,
                    reconfig: v.reconfig.clone(),
                    max_weight: v.schedule.max_weight(),
                },
            )?),
            PolicyKind::Lru => Box::new(LruPolicy::new(top)?),
            PolicyKind::Lfu => Box::new(LfuPolicy::new(top)?),
            PolicyKind::Mlru => Box::new(MultiLru::mlru(top, seed)?),
            PolicyKind::QlruLazy => Box::new(MultiLru::qlru_lazy(top, config.baselines.q, seed)?),
            PolicyKind::Hindsight => {
                Box::new(StaticPolicy::new(name.clone(), top, hindsight.y.clone())?)
            }
        };
        out.push(policy);
    }
    Ok(out)
}

fn lower_bound_at(top: &Topology, schedule: &UtilitySchedule, t: u64) -> Option<f64> {
    if top.num_caches() != 1 || !schedule.is_static() {
        return None;
    }
    let w = schedule.epoch(0);
    let per_file: Vec<f64> = (0..top.library_size()).map(|n| w.weight(n, 0, 0)).collect();
    let location_free = (0..top.num_locations())
        .all(|i| top.is_reachable(i, 0) && (0..top.library_size()).all(|n| w.weight(n, i, 0) == per_file[n]));
    if !location_free {
        return None;
    }
    lower_bound_weighted(&per_file, top.capacity(0), t as f64, PermutationSearch::Sorted).ok()
}

/// Runs an experiment, keeping the request log and benchmark.
pub fn run_detailed(config: &ExperimentConfig) -> Result<RunOutput> {
    let v = config.validate()?;
    let top = &v.topology;
    let schedule = &v.schedule;
    let params = StreamParams {
        library_size: top.library_size(),
        num_locations: top.num_locations(),
        horizon: config.horizon,
        seed: config.seed,
    };
    let default_weights = adversary_weights(top, schedule);
    let requests = materialize(&config.workload, &params, Some(&default_weights))?;
    let horizon = requests.len() as u64;
    log::info!("running {} policies over {horizon} slots", v.policies.len());

    let hindsight = hindsight_for(&requests, top, schedule, config)?;
    let mut policies = build_policies(config, &v, &hindsight)?;
    let mut series: Vec<PolicySeries> = v
        .policies
        .iter()
        .map(|(name, _)| PolicySeries::new(name.clone(), requests.len()))
        .collect();

    for req in &requests {
        let w = schedule.at(req.slot);
        for (policy, s) in policies.iter_mut().zip(series.iter_mut()) {
            let served = policy.serve(req, w)?;
            s.utility.push(served.utility);
            s.hit.push(served.hit);
        }
    }

    let hindsight_per_slot: Vec<f64> = requests
        .iter()
        .map(|r| evaluate_utility(r, &hindsight.y, top, schedule.at(r.slot)))
        .collect();

    let bound_inputs = |t: u64| BoundInputs {
        caches: top.num_caches(),
        capacity: top.max_capacity(),
        deg: top.degree(),
        max_weight: schedule.max_weight(),
        horizon: t as f64,
        library: Some(top.library_size()),
        weights: None,
    };
    let mut checkpoint_rows = Vec::new();
    let mut at_t_cumulative = 0.0;
    let mut consumed = 0usize;
    for t in checkpoints(horizon) {
        let value = match config.regret_mode {
            RegretMode::HindsightAtT => {
                at_t_cumulative += hindsight_per_slot[consumed..t as usize].iter().sum::<f64>();
                consumed = t as usize;
                at_t_cumulative
            }
            RegretMode::HindsightUpToT if t == horizon => hindsight.total_utility,
            RegretMode::HindsightUpToT => {
                hindsight_for(&requests[..t as usize], top, schedule, config)?.total_utility
            }
        };
        checkpoint_rows.push(Checkpoint {
            t,
            hindsight: value,
            upper_bound: upper_bound_bsca(&bound_inputs(t)),
            lower_bound: lower_bound_at(top, schedule, t),
        });
    }

    let metrics = MetricsSeries {
        mode: config.regret_mode,
        horizon,
        policies: series,
        hindsight_per_slot: (config.regret_mode == RegretMode::HindsightAtT)
            .then_some(hindsight_per_slot),
        checkpoints: checkpoint_rows,
    };
    Ok(RunOutput {
        metrics,
        requests,
        hindsight,
    })
}
