use super::agent::{handle_task, register, RobotAgent, TaskAssignment, TaskContext};
use super::log::{Event, EventLog};
use super::monitors::{lemma1_bound_holds, token_is_collision_free, token_is_e_terminal, Monitor, Verdict};
use super::{ProtocolError, RobotId, Token, TokenServer};
use crate::infrastructure::{discrete_r_bound, step_distances_to, EndpointId, Infrastructure, Roadmap};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorConfig {
    pub dt: f64,
    pub t_planning: f64,
    /// Planner search window; defaults to `n * r + 2 dt`.
    pub horizon: Option<f64>,
}

impl Default for CoordinatorConfig {
    fn default() -> Self {
        CoordinatorConfig { dt: 0.65, t_planning: 3.0, horizon: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub radius: f64,
    pub v_max: f64,
    pub start: EndpointId,
}

/// Runs the protocol for a fleet on one shared timeline: every task goes
/// through request, grant, plan, update and release on the token server,
/// with the monitors evaluated inside the critical section.
pub struct Coordinator {
    infra: Arc<Infrastructure>,
    roadmap: Arc<Roadmap>,
    server: TokenServer,
    agents: BTreeMap<RobotId, RobotAgent>,
    radii: BTreeMap<RobotId, f64>,
    cfg: CoordinatorConfig,
    /// Worst-case duration of one task, planning window and rounding included.
    r_bound: f64,
    horizon: f64,
    infra_valid: bool,
    log: EventLog,
    violations: Vec<Verdict>,
}

/// Longest task duration the planner can need when nothing else moves:
/// the planning window, one step to align with the grid, and the longest
/// endpoint-avoiding path in rounded-up steps.
pub fn task_duration_bound(rm: &Roadmap, v_min: f64, dt: f64, t_planning: f64) -> f64 {
    let travel = discrete_r_bound(rm, v_min, dt).unwrap_or_else(|_| {
        // invalid layout: fall back to unrestricted distances
        (0..rm.endpoint_count())
            .flat_map(|g| {
                let d = step_distances_to(rm, rm.endpoint_vertex[g], v_min, dt);
                rm.endpoint_vertex.iter().filter_map(move |&v| d[v]).collect::<Vec<_>>()
            })
            .max()
            .unwrap_or(0) as f64
            * dt
    });
    t_planning + dt + travel
}

impl Coordinator {
    /// Registers every robot at its start endpoint at time 0.
    pub fn new(
        infra: Arc<Infrastructure>,
        roadmap: Arc<Roadmap>,
        robots: &[RobotSpec],
        cfg: CoordinatorConfig,
        infra_valid: bool,
    ) -> Result<Self, ProtocolError> {
        let v_min = robots.iter().map(|r| r.v_max).fold(f64::INFINITY, f64::min);
        let r_bound = task_duration_bound(&roadmap, v_min, cfg.dt, cfg.t_planning);
        let horizon = cfg.horizon.unwrap_or(robots.len() as f64 * r_bound + 2.0 * cfg.dt);
        let mut token = Token::new();
        let mut agents = BTreeMap::new();
        let mut radii = BTreeMap::new();
        for (id, spec) in robots.iter().enumerate() {
            let mut a = RobotAgent::new(id, spec.radius, spec.v_max);
            register(&mut a, spec.start, &mut token, &infra, 0.0)?;
            agents.insert(id, a);
            radii.insert(id, spec.radius);
        }
        Ok(Coordinator {
            infra,
            roadmap,
            server: TokenServer::new(token),
            agents,
            radii,
            cfg,
            r_bound,
            horizon,
            infra_valid,
            log: EventLog::default(),
            violations: Vec::new(),
        })
    }

    pub fn token(&self) -> &Token {
        self.server.token()
    }

    pub fn agents(&self) -> &BTreeMap<RobotId, RobotAgent> {
        &self.agents
    }

    pub fn agent(&self, id: RobotId) -> Option<&RobotAgent> {
        self.agents.get(&id)
    }

    pub fn radii(&self) -> &BTreeMap<RobotId, f64> {
        &self.radii
    }

    pub fn r_bound(&self) -> f64 {
        self.r_bound
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.cfg
    }

    pub fn infrastructure(&self) -> &Infrastructure {
        &self.infra
    }

    pub fn roadmap(&self) -> &Roadmap {
        &self.roadmap
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Every monitor verdict that came out false.
    pub fn violations(&self) -> &[Verdict] {
        &self.violations
    }

    /// Current trajectory of a robot as recorded in the token.
    pub fn trajectory(&self, id: RobotId) -> Option<&Trajectory> {
        self.server.token().get(id)
    }

    /// Moves robots whose trajectories have ended at `t` back to idle.
    /// Returns the ids that just arrived.
    pub fn settle(&mut self, t: f64) -> Vec<RobotId> {
        self.agents.values_mut().filter_map(|a| a.settle(t).then_some(a.id)).collect()
    }

    fn verdict(&mut self, monitor: Monitor, holds: bool, t: f64, revision: u64) {
        let v = Verdict { monitor, holds, t, revision };
        self.log.push(Event::Verdict { t, monitor, holds, revision });
        if !holds {
            self.violations.push(v);
        }
    }

    fn check_token(&mut self, token: &Token, t: f64) {
        let e = token_is_e_terminal(token, &self.infra);
        let c = token_is_collision_free(token, &self.radii, t);
        self.verdict(Monitor::ETerminal, e, t, token.revision);
        self.verdict(Monitor::CollisionFree, c, t, token.revision);
    }

    /// Handles a relocation task for `robot` to `goal` issued at `t_now`.
    pub fn assign(&mut self, robot: RobotId, goal: EndpointId, t_now: f64) -> Result<Trajectory, ProtocolError> {
        if !self.agents.contains_key(&robot) {
            return Err(ProtocolError::UnknownRobot(robot));
        }
        self.server.request(robot, t_now)?.ok_or(ProtocolError::NotIdle(robot))?;
        let mut lease = self.server.lease_copy();
        self.log.push(Event::Acquire { t: t_now, robot, revision: lease.revision });
        self.check_token(&lease, t_now);

        let task = TaskAssignment { robot, goal, issue_time: t_now };
        let ctx = TaskContext {
            infra: &self.infra,
            roadmap: &self.roadmap,
            radii: &self.radii,
            dt: self.cfg.dt,
            horizon: self.horizon,
        };
        let agent = self.agents.get_mut(&robot).expect("checked above");
        let out = handle_task(agent, &task, &mut lease, &ctx, t_now, self.cfg.t_planning);
        match &out {
            Ok(tr) => {
                self.server.update(robot, lease.clone())?;
                self.log.push(Event::Update { t: t_now, robot, revision: lease.revision, arrival: tr.arrival_time() });
                self.check_token(&lease, t_now);
                let l1 = lemma1_bound_holds(&lease, t_now, self.r_bound);
                self.verdict(Monitor::CompletionBound, l1, t_now, lease.revision);
            }
            Err(ProtocolError::PlanningFailed(e)) => {
                self.log.push(Event::Failure { t: t_now, robot, goal, reason: e.to_string() });
                if self.infra_valid {
                    self.verdict(Monitor::PlanningSucceeds, false, t_now, lease.revision);
                }
            }
            Err(e) => {
                self.log.push(Event::Rejected { t: t_now, robot, goal, reason: e.to_string() });
            }
        }
        self.server.release(robot)?;
        self.log.push(Event::Release { t: t_now, robot });
        out
    }
}
