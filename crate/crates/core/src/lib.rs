//! Anticipatory buffer control and spectrum allocation for video streaming
//! over a cellular downlink.
//!
//! Given a predicted average channel gain for the next `T` slots, the play-out
//! buffer dynamics of a video client are compiled into a linear program that
//! minimizes the number of resource blocks needed to stream without outage.
//! The crate contains everything needed to evaluate that idea end to end:
//!
//! * [`link_model`]: path loss, correlated shadowing, per-PRB capacity and
//!   channel traces for a user driving between base stations.
//! * [`playout_buffer`]: slot-by-slot play-out buffer simulation.
//! * [`lp_solver`]: a dense two-phase bounded-variable primal simplex.
//! * [`planner`]: the anticipatory LP plan and the slot-local baseline.
//! * [`admission`]: sequential multi-user admission against a residual
//!   spectrum ledger.
//! * [`scenario`]: configuration, experiment drivers and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admission;
pub mod error;
pub mod link_model;
pub mod lp_solver;
pub mod planner;
pub mod playout_buffer;
pub mod scenario;

pub use admission::{AdmissionConfig, AdmissionLog, PlannerKind, RequestRecord, TraceSource};
pub use error::{Error, Result};
pub use link_model::{ChannelTrace, LinkBudget, Point, ShadowingField};
pub use lp_solver::{LpProblem, LpSolution, LpStatus, SolverOptions};
pub use planner::AllocationPlan;
pub use playout_buffer::{BufferTimeline, VideoSpec};
pub use scenario::ScenarioConfig;
