//! Exact reference solver, independent plan verifier and model export.

mod exact;
mod mip;
mod verify;

pub use exact::{exact_solve, ExactSolution, OracleError, OracleLimits};
pub use mip::{export_mip, MipModel};
pub use verify::{verify_plan, verify_trajectories, PlanViolation, Trajectory, VerifyReport};
