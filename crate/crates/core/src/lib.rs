//! Online multi-robot trajectory coordination.
//!
//! Robots living in a shared planar workspace receive relocation tasks at
//! arbitrary times. Each robot plans a best-response trajectory against the
//! trajectories already committed by the others, one robot at a time, using
//! an exclusively held token as the shared record of commitments. When the
//! endpoints form a valid infrastructure, every task is guaranteed to
//! complete without collision.

pub mod geometry;
pub mod infrastructure;
pub mod live;
pub mod orca;
pub mod planner;
pub mod protocol;
pub mod scenario;
pub mod sim;
pub mod suite;
pub mod trajectory;

pub use geometry::{Disc, Point2, PolygonRegion, Segment2};
pub use infrastructure::{Infrastructure, Roadmap, ValidityReport};
pub use planner::{best_traj, DynamicObstacles, PlannerConfig};
pub use protocol::{Coordinator, RobotId, Token};
pub use scenario::{Algorithm, PreparedScenario, Scenario};
pub use sim::{run, RunResult, TaskRecord};
pub use trajectory::{Trajectory, Waypoint};
