//! Token-passing coordination: the shared token, the per-robot protocol,
//! the lease server and the invariant monitors.

mod agent;
mod coordinator;
mod log;
pub mod monitors;
mod server;
mod token;

pub use agent::{handle_task, register, AgentState, RobotAgent, TaskAssignment, TaskContext};
pub use coordinator::{task_duration_bound, Coordinator, CoordinatorConfig, RobotSpec};
pub use log::{Event, EventLog};
pub use monitors::{lemma1_bound_holds, token_is_collision_free, token_is_e_terminal, Monitor, Verdict};
pub use server::{LeaseError, Message, ThreadedTokenServer, TokenClient, TokenServer};
pub use token::Token;

use crate::infrastructure::EndpointId;
use crate::planner::PlanError;

pub type RobotId = usize;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("robot {0} is not idle")]
    NotIdle(RobotId),
    #[error("unknown robot {0}")]
    UnknownRobot(RobotId),
    #[error("endpoint {endpoint} is occupied by robot {by}")]
    EndpointOccupied { endpoint: EndpointId, by: RobotId },
    #[error("endpoint {endpoint} is the destination of robot {by}")]
    DestinationConflict { endpoint: EndpointId, by: RobotId },
    #[error("planning failed: {0}")]
    PlanningFailed(PlanError),
    #[error(transparent)]
    Lease(#[from] LeaseError),
}
