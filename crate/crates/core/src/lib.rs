//! Online caching and routing for bipartite cache networks.
//!
//! The crate implements projected supergradient ascent over fractional cache
//! configurations ([`policy`]), the per-request routing LP and its duals
//! ([`routing`]), a fast capped-simplex projection ([`projection`]), classic
//! reactive baselines and hindsight benchmarks ([`baselines`]), request
//! generators ([`workloads`]), closed-form regret bounds ([`bounds`]) and an
//! experiment runner that writes CSV metrics ([`harness`]).

pub mod baselines;
pub mod bounds;
pub mod domain;
pub mod error;
pub mod harness;
pub mod policy;
pub mod projection;
pub mod routing;
pub mod workloads;

pub use domain::{
    feasible_initial_cache, reduce_general_graph, validate_topology, CachingVector, GeneralGraph,
    GraphReduction, InitialFill, Request, Topology, TopologySpec, UtilityModel, UtilitySchedule,
    ValidationReport, Violation,
};
pub use baselines::{
    hindsight_network, hindsight_single_cache, HindsightSolution, LfuPolicy, LruPolicy, MultiLru,
};
pub use bounds::{lower_bound_uniform, lower_bound_weighted, upper_bound_bsca, BoundInputs};
pub use error::{Error, Result};
pub use harness::{run, ExperimentConfig, MetricsSeries, RegretMode};
pub use policy::{Bsca, BscaConfig, OnlinePolicy, ScheduleMode, Served};
pub use projection::{project_all, project_cache};
pub use routing::{evaluate_utility, route, RoutingOutcome};
pub use workloads::{StreamParams, WorkloadKind};
