//! Homogeneous single-depot instances in the style of the dynamic team
//! orienteering benchmark.
//!
//! Every vehicle starts and ends at the depot and shares the depot
//! window. Static customers are known at the window start (release 0
//! relative to the horizon origin); dynamic customers are released at
//! their own window start.

use serde::{Deserialize, Serialize};

use crate::model::{Instance, ModelError, Point, Task, Worker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtopCustomer {
    pub id: u64,
    pub location: Point,
    pub profit: f64,
    pub duration: f64,
    pub open: f64,
    pub close: f64,
    /// Revealed during the run rather than known up front.
    pub dynamic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtopInstance {
    pub depot: Point,
    /// Depot opening and closing times.
    pub window: [f64; 2],
    pub vehicles: usize,
    pub customers: Vec<DtopCustomer>,
}

impl DtopInstance {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let [start, end] = self.window;
        let workers = (0..self.vehicles as u64)
            .map(|id| Worker { id, origin: self.depot, destination: self.depot, start, end })
            .collect();
        let tasks = self
            .customers
            .into_iter()
            .map(|c| Task {
                id: c.id,
                location: c.location,
                profit: c.profit,
                duration: c.duration,
                open: c.open,
                close: c.close,
                release: if c.dynamic { c.open } else { 0.0 },
            })
            .collect();
        Instance::new(tasks, workers, end, 1.0, None)
    }
}
