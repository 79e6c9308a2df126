//! Dynamic team orienteering with time windows for spatial crowdsourcing:
//! static ALNS solver, event-driven rolling-horizon simulator with
//! scenario-sampling lookahead, exact oracle, instance generator and
//! metrics harness.

pub mod alns;
pub mod dynamics;
pub mod generator;
pub mod harness;
pub mod lookahead;
pub mod model;
pub mod oracle;
pub mod routing;
pub mod simulator;

pub use alns::{alns_solve, AlnsConfig, AlnsError};
pub use model::{Instance, Point, Task, TravelMatrix, Worker};
pub use routing::{retime_route, Plan, Route};
