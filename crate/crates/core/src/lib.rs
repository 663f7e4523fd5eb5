//! Joint rate-reliability-lifetime optimization for energy-constrained
//! multihop sensor networks.
//!
//! A network instance (sensors, sinks, single-path routes, radio energy
//! model) is loaded from a TOML document and optimized under per-link
//! capacity, end-to-end reliability, and per-node energy constraints.
//! Two solvers are provided: a distributed subgradient dual-decomposition
//! algorithm ([`sdd`]) executed as synchronous message-passing rounds
//! between node and link agents, and a centralized projected-gradient
//! reference solver ([`oracle`]) used for verification and duality-gap
//! measurement.

pub mod model;
pub mod objective;
pub mod oracle;
pub mod sdd;
pub mod subproblems;

pub use model::{DerivedSets, Link, LinkId, ModelError, NetworkInstance, Node, Radio, SensorId};
pub use objective::{ParamError, PrimalState, TradeoffParams};
pub use oracle::{OracleError, OracleSolution};
pub use sdd::{
    DualState, SddOptions, SddSchedules, SolveStatus, SolveTrace, StepSchedule, StopRule,
};

/// Instance and parameter documents shipped with the crate.
pub mod instances {
    pub const CANONICAL: &str = include_str!("../../../instances/canonical.toml");
    pub const TWO_SOURCE_SYMMETRIC: &str =
        include_str!("../../../instances/two_source_symmetric.toml");
    pub const TWO_SOURCE_ASYMMETRIC: &str =
        include_str!("../../../instances/two_source_asymmetric.toml");
    pub const PARAMS_DEFAULT: &str = include_str!("../../../instances/params_default.toml");
}
