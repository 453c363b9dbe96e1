//! Ground-truth network model: topology, per-slot AoI dynamics over lossy
//! access and backhaul links, and the averaged AoI metrics.

mod metrics;
mod state;
mod topology;
pub mod trace;

pub use metrics::{action_space_cardinality, average_aoi, binomial};
pub use state::{Action, AoiSnapshot, NetState, StepOutcome};
pub use topology::{Topology, Traffic};
