use super::{ProtocolError, RobotId, Token};
use crate::geometry::EPS;
use crate::infrastructure::{EndpointId, Infrastructure, Roadmap};
use crate::planner::{best_traj, PlannerConfig};
use crate::trajectory::{Trajectory, Waypoint};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum AgentState {
    Unregistered,
    Idle { at: EndpointId },
    Planning { at: EndpointId },
    Executing { from: EndpointId, to: EndpointId, arrival: f64 },
    Failed { at: EndpointId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotAgent {
    pub id: RobotId,
    pub radius: f64,
    pub v_max: f64,
    pub state: AgentState,
}

impl RobotAgent {
    pub fn new(id: RobotId, radius: f64, v_max: f64) -> Self {
        RobotAgent { id, radius, v_max, state: AgentState::Unregistered }
    }

    /// Endpoint the robot is parked at, if it is idle.
    pub fn idle_at(&self) -> Option<EndpointId> {
        match self.state {
            AgentState::Idle { at } => Some(at),
            _ => None,
        }
    }

    /// Marks an executing robot as arrived once `t` reaches its arrival time.
    pub fn settle(&mut self, t: f64) -> bool {
        if let AgentState::Executing { to, arrival, .. } = self.state {
            if t >= arrival {
                self.state = AgentState::Idle { at: to };
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskAssignment {
    pub robot: RobotId,
    pub goal: EndpointId,
    pub issue_time: f64,
}

/// Adds the robot's stay-at-start trajectory to the token.
pub fn register(
    agent: &mut RobotAgent,
    start: EndpointId,
    token: &mut Token,
    infra: &Infrastructure,
    t: f64,
) -> Result<(), ProtocolError> {
    if agent.state != AgentState::Unregistered {
        return Err(ProtocolError::NotIdle(agent.id));
    }
    let s = infra.endpoint(start);
    if let Some((&other, _)) = token.entries.iter().find(|(_, tr)| tr.terminal_point().dist(s) <= EPS) {
        return Err(ProtocolError::EndpointOccupied { endpoint: start, by: other });
    }
    token.commit(agent.id, Trajectory::stay(s, t));
    agent.state = AgentState::Idle { at: start };
    Ok(())
}

/// Everything `handle_task` needs besides the agent and the token.
pub struct TaskContext<'a> {
    pub infra: &'a Infrastructure,
    pub roadmap: &'a Roadmap,
    pub radii: &'a BTreeMap<RobotId, f64>,
    pub dt: f64,
    pub horizon: f64,
}

/// Plans and commits a trajectory for `task` while the caller holds the
/// token. On planning failure the robot's old entry is put back unchanged
/// and the agent is marked failed.
pub fn handle_task(
    agent: &mut RobotAgent,
    task: &TaskAssignment,
    token: &mut Token,
    ctx: &TaskContext,
    t_now: f64,
    t_planning: f64,
) -> Result<Trajectory, ProtocolError> {
    let Some(s) = agent.idle_at() else {
        return Err(ProtocolError::NotIdle(agent.id));
    };
    let g_pos = ctx.infra.endpoint(task.goal);
    if let Some((&other, _)) =
        token.entries.iter().find(|(&id, tr)| id != agent.id && tr.terminal_point().dist(g_pos) <= EPS)
    {
        return Err(ProtocolError::DestinationConflict { endpoint: task.goal, by: other });
    }
    agent.state = AgentState::Planning { at: s };

    let old = token.entries.remove(&agent.id);
    let obstacles = token.obstacles_for(agent.id, ctx.radii);
    let s_pos = ctx.infra.endpoint(s);
    let t_dep = t_now + t_planning;
    let cfg = PlannerConfig { dt: ctx.dt, horizon: ctx.horizon, v_max: agent.v_max, robot_radius: agent.radius };

    let planned = if obstacles.hold_is_free(s_pos, t_now, t_dep, agent.radius) {
        best_traj(ctx.roadmap.endpoint_vertex[s], t_dep, ctx.roadmap.endpoint_vertex[task.goal], &obstacles, ctx.roadmap, &cfg)
    } else {
        Err(crate::planner::PlanError::StartBlocked)
    };

    match planned {
        Ok(tr) => {
            let tr = with_wait_prefix(tr, s_pos, t_now);
            agent.state = AgentState::Executing { from: s, to: task.goal, arrival: tr.arrival_time() };
            token.commit(agent.id, tr.clone());
            Ok(tr)
        }
        Err(e) => {
            if let Some(old) = old {
                token.entries.insert(agent.id, old);
            }
            agent.state = AgentState::Failed { at: s };
            Err(ProtocolError::PlanningFailed(e))
        }
    }
}

/// Extends `tr` backwards so the robot is defined to stand at `s` from
/// `t_now` until departure.
fn with_wait_prefix(tr: Trajectory, s: crate::geometry::Point2, t_now: f64) -> Trajectory {
    let dep = tr.departure_time();
    let mut w = tr.waypoints().to_vec();
    if w[0].t > t_now {
        if w.len() >= 2 && w[1].pos == s {
            w[0] = Waypoint { pos: s, t: t_now };
        } else {
            w.insert(0, Waypoint { pos: s, t: t_now });
        }
    }
    Trajectory::new(dep, w).expect("prefix precedes planned waypoints")
}
