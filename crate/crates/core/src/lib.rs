//! Energy-aware static routing and speed planning for farms of processor-sharing servers.
//!
//! The planner picks a routing matrix and per-server speeds that minimize power
//! while a robust-queueing bound keeps every server's response-time tail under its
//! SLA. A discrete-event simulator validates any such policy.

pub mod error;
pub mod experiment;
pub mod optimizer;
pub mod primitives;
pub mod reference;
pub mod rq;
pub mod simulator;
pub mod worst_case;

pub use error::{Error, Result};
pub use primitives::{
    instant_demand, load_system, ApplicationSpec, DistributionSpec, Family, ServerSpec, StaticPolicy, SystemSpec,
};
