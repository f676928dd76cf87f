//! Robust-queueing math: service levels, uncertainty sets, flow transforms and the SLA bound.

pub mod bound;
pub mod flows;
pub mod normal;
pub mod uncertainty;

pub use bound::{
    feasibility_floor, min_bound_in_box, min_feasible_speed, min_feasible_speed_in, response_time_bound,
    sla_quadratic, sojourn_upper_bound, SlaQuadratic, STABILITY_MARGIN,
};
pub use flows::{superpose, thin, thin_params, ServerAggregate, ThinnedArrivals};
pub use uncertainty::{
    check_membership_arrival, check_membership_workload, gamma_from_epsilon, ConstraintFamily, Membership,
    UncertaintyParams,
};
