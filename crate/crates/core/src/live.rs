//! Manual-dispatch session: a COBRA simulation stepped tick by tick that
//! accepts relocation commands from outside and publishes snapshots.
//!
//! Wire messages are JSON objects with a `type` tag and a protocol version
//! `v`. The transport lives in the CLI; everything here is synchronous.

use crate::geometry::Point2;
use crate::infrastructure::EndpointId;
use crate::protocol::{AgentState, Event, Monitor, RobotId, Verdict};
use crate::scenario::{PreparedScenario, ScenarioError};
use crate::sim::{CobraSim, Outcome, RobotView, TaskRecord};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::VecDeque;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchCommand {
    pub robot: RobotId,
    pub goal: EndpointId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    RobotBusy,
    DestinationConflict,
    UnknownRobot,
    UnknownEndpoint,
    RobotFailed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandCheck {
    Accepted,
    Rejected(RejectReason),
}

/// Checks a command against the current world without touching it. A goal
/// is in conflict when it is the terminal point of another robot's
/// committed trajectory, whether that robot is still driving there or
/// already parked on it.
pub fn validate_command(cmd: &DispatchCommand, sim: &CobraSim) -> CommandCheck {
    use CommandCheck::Rejected;
    let coord = sim.coordinator();
    let Some(agent) = coord.agent(cmd.robot) else {
        return Rejected(RejectReason::UnknownRobot);
    };
    let infra = coord.infrastructure();
    if cmd.goal >= infra.endpoints.len() {
        return Rejected(RejectReason::UnknownEndpoint);
    }
    match agent.state {
        AgentState::Failed { .. } => return Rejected(RejectReason::RobotFailed),
        AgentState::Idle { .. } => {}
        _ => return Rejected(RejectReason::RobotBusy),
    }
    let g = infra.endpoint(cmd.goal);
    let taken = coord
        .token()
        .entries
        .iter()
        .any(|(&id, tr)| id != cmd.robot && tr.terminal_point().dist(g) < crate::geometry::EPS);
    if taken {
        return Rejected(RejectReason::DestinationConflict);
    }
    CommandCheck::Accepted
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: RobotId,
    pub radius: f64,
    pub v_max: f64,
    pub start: EndpointId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSnapshot {
    #[serde(flatten)]
    pub view: RobotView,
    pub goal: Option<EndpointId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommittedTrajectory {
    pub robot: RobotId,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointStatus {
    pub id: EndpointId,
    pub position: Point2,
    /// Robot whose disc currently covers the endpoint.
    pub occupied_by: Option<RobotId>,
    /// Robot whose committed trajectory ends here.
    pub assigned_to: Option<RobotId>,
}

/// Consistent view of the world between two ticks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub tick: u64,
    pub robots: Vec<RobotSnapshot>,
    pub trajectories: Vec<CommittedTrajectory>,
    pub endpoints: Vec<EndpointStatus>,
    /// Monitor verdicts produced since the previous snapshot.
    pub verdicts: Vec<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ServerMessage {
    Hello { map: Value, endpoints: Vec<Point2>, robots: Vec<RosterEntry> },
    Snapshot(Snapshot),
    Ack { id: u64, robot: RobotId, goal: EndpointId, outcome: Option<Outcome>, trajectory: Option<Trajectory> },
    Reject { id: u64, reason: RejectReason },
    Alert { monitor: Monitor, t: f64, revision: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClientMessage {
    Dispatch {
        id: u64,
        #[serde(flatten)]
        command: DispatchCommand,
    },
}

/// A message with its protocol version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<M> {
    pub v: u32,
    #[serde(flatten)]
    pub body: M,
}

impl<M> Envelope<M> {
    pub fn new(body: M) -> Self {
        Envelope { v: PROTOCOL_VERSION, body }
    }
}

pub struct LiveSession {
    sim: CobraSim,
    queue: VecDeque<(u64, DispatchCommand)>,
    log_cursor: usize,
    ticks: u64,
}

impl LiveSession {
    pub fn new(prepared: &PreparedScenario) -> Result<Self, ScenarioError> {
        Ok(LiveSession { sim: CobraSim::new(prepared, false)?, queue: VecDeque::new(), log_cursor: 0, ticks: 0 })
    }

    pub fn sim(&self) -> &CobraSim {
        &self.sim
    }

    pub fn time(&self) -> f64 {
        self.sim.time()
    }

    pub fn records(&self) -> &[TaskRecord] {
        self.sim.records()
    }

    pub fn hello(&self) -> ServerMessage {
        let p = self.sim.prepared();
        ServerMessage::Hello {
            map: p.map_json(),
            endpoints: p.infra.endpoints.clone(),
            robots: p
                .robots
                .iter()
                .enumerate()
                .map(|(id, r)| RosterEntry { id, radius: r.radius, v_max: r.v_max, start: r.start })
                .collect(),
        }
    }

    /// Queues a command; it is validated and applied at the next tick boundary.
    pub fn submit(&mut self, id: u64, command: DispatchCommand) {
        self.queue.push_back((id, command));
    }

    /// Applies queued commands, advances one tick and returns the replies,
    /// alerts and the new snapshot, in that order.
    pub fn step(&mut self) -> Vec<ServerMessage> {
        let mut out = self.drain_commands();
        self.sim.tick(false);
        self.ticks += 1;
        let verdicts = self.new_verdicts();
        for v in verdicts.iter().filter(|v| !v.holds) {
            out.push(ServerMessage::Alert { monitor: v.monitor, t: v.t, revision: v.revision });
        }
        out.push(ServerMessage::Snapshot(self.snapshot_with(verdicts)));
        out
    }

    fn drain_commands(&mut self) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        while let Some((id, cmd)) = self.queue.pop_front() {
            match validate_command(&cmd, &self.sim) {
                CommandCheck::Rejected(reason) => out.push(ServerMessage::Reject { id, reason }),
                CommandCheck::Accepted => {
                    let res = self.sim.assign_now(cmd.robot, cmd.goal);
                    let outcome = self.sim.records().last().map(|r| r.outcome).filter(|o| *o != Outcome::Timeout);
                    out.push(ServerMessage::Ack { id, robot: cmd.robot, goal: cmd.goal, outcome, trajectory: res.ok() });
                }
            }
        }
        out
    }

    fn new_verdicts(&mut self) -> Vec<Verdict> {
        let events = self.sim.coordinator().log().events();
        let fresh = events[self.log_cursor..]
            .iter()
            .filter_map(|e| match *e {
                Event::Verdict { t, monitor, holds, revision } => Some(Verdict { monitor, holds, t, revision }),
                _ => None,
            })
            .collect();
        self.log_cursor = events.len();
        fresh
    }

    /// Current view without consuming pending verdicts.
    pub fn snapshot(&self) -> Snapshot {
        self.snapshot_with(Vec::new())
    }

    fn snapshot_with(&self, verdicts: Vec<Verdict>) -> Snapshot {
        let coord = self.sim.coordinator();
        let infra = coord.infrastructure();
        let views = self.sim.robots_view();
        let robots = views
            .into_iter()
            .map(|view| {
                let goal = match view.state {
                    AgentState::Executing { to, .. } => Some(to),
                    _ => None,
                };
                RobotSnapshot { view, goal }
            })
            .collect::<Vec<_>>();
        let trajectories = coord
            .token()
            .entries
            .iter()
            .map(|(&robot, tr)| CommittedTrajectory { robot, trajectory: tr.clone() })
            .collect();
        let endpoints = infra
            .endpoints
            .iter()
            .enumerate()
            .map(|(id, &q)| EndpointStatus {
                id,
                position: q,
                occupied_by: robots.iter().find(|r| r.view.position.dist(q) < r.view.radius).map(|r| r.view.id),
                assigned_to: coord
                    .token()
                    .entries
                    .iter()
                    .find(|(_, tr)| tr.terminal_point().dist(q) < crate::geometry::EPS)
                    .map(|(&id, _)| id),
            })
            .collect();
        Snapshot { t: self.sim.time(), tick: self.ticks, robots, trajectories, endpoints, verdicts }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolygonRegion;
    use crate::scenario::Scenario;

    fn session() -> LiveSession {
        let eps = vec![Point2::new(1.5, 1.5), Point2::new(8.5, 1.5), Point2::new(1.5, 8.5), Point2::new(8.5, 8.5)];
        let sc = Scenario::from_map("square", PolygonRegion::rectangle(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)), eps)
            .with_fleet(2, 3);
        LiveSession::new(&sc.prepare().unwrap()).unwrap()
    }

    #[test]
    fn validation_rules() {
        let s = session();
        let start1 = s.sim().prepared().robots[1].start;
        let free = (0..4).find(|e| s.sim().prepared().robots.iter().all(|r| r.start != *e)).unwrap();
        let check = |robot, goal| validate_command(&DispatchCommand { robot, goal }, s.sim());
        assert_eq!(check(0, free), CommandCheck::Accepted);
        assert_eq!(check(7, free), CommandCheck::Rejected(RejectReason::UnknownRobot));
        assert_eq!(check(0, 99), CommandCheck::Rejected(RejectReason::UnknownEndpoint));
        assert_eq!(check(0, start1), CommandCheck::Rejected(RejectReason::DestinationConflict));
    }

    #[test]
    fn busy_robot_and_conflicting_goal_are_rejected() {
        let mut s = session();
        let starts: Vec<_> = s.sim().prepared().robots.iter().map(|r| r.start).collect();
        let free: Vec<_> = (0..4).filter(|e| !starts.contains(e)).collect();
        s.submit(1, DispatchCommand { robot: 0, goal: free[0] });
        let out = s.step();
        assert!(matches!(&out[0], ServerMessage::Ack { id: 1, trajectory: Some(_), .. }));
        let ServerMessage::Snapshot(snap) = out.last().unwrap() else { panic!() };
        assert_eq!(snap.robots[0].goal, Some(free[0]));

        s.submit(2, DispatchCommand { robot: 0, goal: free[1] });
        s.submit(3, DispatchCommand { robot: 1, goal: free[0] });
        let out = s.step();
        assert_eq!(out[0], ServerMessage::Reject { id: 2, reason: RejectReason::RobotBusy });
        assert_eq!(out[1], ServerMessage::Reject { id: 3, reason: RejectReason::DestinationConflict });
    }

    #[test]
    fn wire_format() {
        let msg: Envelope<ClientMessage> = serde_json::from_str(r#"{"v":1,"type":"DISPATCH","id":4,"robot":2,"goal":7}"#).unwrap();
        assert_eq!(msg.body, ClientMessage::Dispatch { id: 4, command: DispatchCommand { robot: 2, goal: 7 } });
        let rej = serde_json::to_string(&Envelope::new(ServerMessage::Reject { id: 4, reason: RejectReason::RobotBusy })).unwrap();
        assert_eq!(rej, r#"{"v":1,"type":"REJECT","id":4,"reason":"RobotBusy"}"#);
    }
}
