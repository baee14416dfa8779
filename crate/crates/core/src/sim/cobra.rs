use super::{baseline_time, collision_monitor_tick, Outcome, RunOptions, RunResult, TaskGenerator, TaskRecord, TraceRow};
use crate::geometry::{Point2, EPS};
use crate::infrastructure::EndpointId;
use crate::protocol::{AgentState, Coordinator, CoordinatorConfig, ProtocolError, RobotId};
use crate::scenario::{PreparedScenario, ScenarioError};
use crate::trajectory::{min_distance_over, Trajectory};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::time::Instant;

/// Robot as seen from outside the simulation at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotView {
    pub id: RobotId,
    pub position: Point2,
    pub radius: f64,
    #[serde(flatten)]
    pub state: AgentState,
}

/// Event-driven execution of the token protocol. Tasks are issued and
/// planned at their exact times; ticks of `sim_dt` drive monitoring and
/// tracing. Robots follow their committed trajectories exactly.
pub struct CobraSim {
    prepared: PreparedScenario,
    coord: Coordinator,
    gen: Option<TaskGenerator>,
    remaining: Vec<usize>,
    next_issue: Vec<Option<f64>>,
    history: Vec<Trajectory>,
    open: Vec<Option<usize>>,
    records: Vec<TaskRecord>,
    t: f64,
    tick: u64,
    min_margin: f64,
    planning_times: Vec<f64>,
    trace: Vec<TraceRow>,
    r_max: f64,
}

impl CobraSim {
    /// With `batch`, tasks come from the seeded generator; otherwise only
    /// through [`CobraSim::assign_now`].
    pub fn new(prepared: &PreparedScenario, batch: bool) -> Result<Self, ScenarioError> {
        let sc = &prepared.scenario;
        let cfg = CoordinatorConfig { dt: sc.dt, t_planning: sc.t_planning, horizon: None };
        let coord = Coordinator::new(prepared.infra.clone(), prepared.roadmap.clone(), &prepared.robots, cfg, prepared.validity.valid)
            .map_err(|e| match e {
                ProtocolError::EndpointOccupied { by, endpoint } => {
                    ScenarioError::SharedStart(by, prepared.robots.iter().rposition(|r| r.start == endpoint).unwrap_or(by))
                }
                _ => ScenarioError::NoRobots,
            })?;
        let n = prepared.robots.len();
        let (gen, next_issue, remaining) = if batch {
            let mut g = TaskGenerator::new(sc.seed, prepared.infra.endpoints.len());
            let delays = g.initial_delays(n, sc.initial_delay);
            let next = delays.into_iter().map(|d| (sc.tasks_per_robot > 0).then_some(d)).collect();
            (Some(g), next, vec![sc.tasks_per_robot; n])
        } else {
            (None, vec![None; n], vec![usize::MAX; n])
        };
        let history = prepared.robots.iter().map(|r| Trajectory::stay(prepared.infra.endpoint(r.start), 0.0)).collect();
        Ok(CobraSim {
            prepared: prepared.clone(),
            coord,
            gen,
            remaining,
            next_issue,
            history,
            open: vec![None; n],
            records: Vec::new(),
            t: 0.0,
            tick: 0,
            min_margin: f64::INFINITY,
            planning_times: Vec::new(),
            trace: Vec::new(),
            r_max: prepared.robots.iter().map(|r| r.radius).fold(0.0, f64::max),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn coordinator(&self) -> &Coordinator {
        &self.coord
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn min_margin(&self) -> f64 {
        self.min_margin
    }

    pub fn prepared(&self) -> &PreparedScenario {
        &self.prepared
    }

    /// Executed motion of a robot so far, followed by its committed plan.
    pub fn history(&self, robot: RobotId) -> &Trajectory {
        &self.history[robot]
    }

    pub fn robot_count(&self) -> usize {
        self.history.len()
    }

    pub fn position(&self, robot: RobotId, t: f64) -> Point2 {
        self.history[robot].position(t)
    }

    pub fn robots_view(&self) -> Vec<RobotView> {
        (0..self.robot_count())
            .map(|i| RobotView {
                id: i,
                position: self.position(i, self.t),
                radius: self.prepared.robots[i].radius,
                state: self.coord.agent(i).expect("robot exists").state.clone(),
            })
            .collect()
    }

    /// Endpoints a new task may not target at time `t`: active
    /// destinations and endpoints some robot currently covers.
    pub fn excluded_endpoints(&self, t: f64) -> BTreeSet<EndpointId> {
        let mut ex = BTreeSet::new();
        for (i, agent) in self.coord.agents() {
            if let AgentState::Executing { to, .. } = agent.state {
                ex.insert(to);
            }
            let p = self.position(*i, t);
            let reach = self.prepared.robots[*i].radius + self.r_max + EPS;
            for (e, &q) in self.prepared.infra.endpoints.iter().enumerate() {
                if q.dist(p) < reach {
                    ex.insert(e);
                }
            }
        }
        ex
    }

    /// Issues and plans a task for `robot` to `goal` at the current time.
    pub fn assign_now(&mut self, robot: RobotId, goal: EndpointId) -> Result<Trajectory, ProtocolError> {
        let t = self.t;
        self.start_task(robot, goal, t)
    }

    fn start_task(&mut self, robot: RobotId, goal: EndpointId, t: f64) -> Result<Trajectory, ProtocolError> {
        let agent = self.coord.agent(robot).ok_or(ProtocolError::UnknownRobot(robot))?;
        let s = match agent.state {
            AgentState::Idle { at } => at,
            _ => return Err(ProtocolError::NotIdle(robot)),
        };
        let v_max = self.prepared.robots[robot].v_max;
        let mut rec = TaskRecord::issued(robot, s, goal, t, baseline_time(&self.prepared.roadmap, s, goal, v_max));
        let clock = Instant::now();
        let out = self.coord.assign(robot, goal, t);
        match &out {
            Ok(tr) => {
                self.planning_times.push(clock.elapsed().as_secs_f64());
                rec.start = Some(tr.departure_time());
                self.history[robot] = self.history[robot].then(tr);
                self.open[robot] = Some(self.records.len());
            }
            Err(ProtocolError::PlanningFailed(_)) => {
                self.planning_times.push(clock.elapsed().as_secs_f64());
                rec.outcome = Outcome::PlanningFailure;
                self.remaining[robot] = 0;
            }
            Err(_) => rec.outcome = Outcome::Rejected,
        }
        if self.remaining[robot] != usize::MAX && self.remaining[robot] > 0 {
            self.remaining[robot] -= 1;
        }
        self.records.push(rec);
        out
    }

    fn next_event(&self, until: f64) -> Option<(f64, u8, RobotId)> {
        let mut best: Option<(f64, u8, RobotId)> = None;
        let mut consider = |ev: (f64, u8, RobotId)| {
            if ev.0 <= until && best.is_none_or(|b| (ev.0, ev.1, ev.2) < b) {
                best = Some(ev);
            }
        };
        for (i, agent) in self.coord.agents() {
            if let AgentState::Executing { arrival, .. } = agent.state {
                consider((arrival, 0, *i));
            }
        }
        for (i, t) in self.next_issue.iter().enumerate() {
            if let Some(t) = *t {
                consider((t, 1, i));
            }
        }
        best
    }

    /// Processes every arrival and task issue up to `until`.
    fn process_events(&mut self, until: f64) {
        while let Some((t, kind, robot)) = self.next_event(until) {
            if kind == 0 {
                for id in self.coord.settle(t) {
                    if let Some(k) = self.open[id].take() {
                        let arrival = self.coord.trajectory(id).expect("entry exists").arrival_time();
                        self.records[k].finish(arrival);
                    }
                    if self.gen.is_some() && self.remaining[id] > 0 {
                        self.next_issue[id] = Some(arrival_or(t, &self.coord, id));
                    }
                }
            } else {
                self.next_issue[robot] = None;
                let ex = self.excluded_endpoints(t);
                let goal = self.gen.as_mut().expect("issues only in batch mode").pick_goal(&ex);
                match goal {
                    Some(g) => {
                        let _ = self.start_task(robot, g, t);
                    }
                    // every endpoint taken: try again next tick
                    None => self.next_issue[robot] = Some(t + self.prepared.scenario.sim_dt),
                }
            }
        }
    }

    /// Advances to `t1`, processing events and monitoring the interval.
    pub fn step_to(&mut self, t1: f64, trace: bool) {
        let t0 = self.t;
        self.process_events(t1);
        let n = self.robot_count();
        let radii: Vec<f64> = self.prepared.robots.iter().map(|r| r.radius).collect();
        let at: Vec<(Point2, f64)> = (0..n).map(|i| (self.position(i, t1), radii[i])).collect();
        let mut m = collision_monitor_tick(&at);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = min_distance_over(&self.history[i], &self.history[j], t0, t1);
                m = m.min(d - radii[i] - radii[j]);
            }
        }
        self.min_margin = self.min_margin.min(m);
        if trace {
            self.trace.push(TraceRow { t: t1, positions: at.iter().map(|&(p, _)| p).collect() });
        }
        self.t = t1;
        self.tick += 1;
    }

    /// Advances one tick of `sim_dt`.
    pub fn tick(&mut self, trace: bool) {
        let t1 = (self.tick + 1) as f64 * self.prepared.scenario.sim_dt;
        self.step_to(t1, trace);
    }

    pub fn done(&self) -> bool {
        self.coord.agents().values().all(|a| match a.state {
            AgentState::Failed { .. } => true,
            AgentState::Idle { .. } => self.remaining[a.id] == 0 || self.gen.is_none(),
            _ => false,
        })
    }

    pub fn run_to_end(mut self, opts: &RunOptions) -> RunResult {
        let sc = self.prepared.scenario.clone();
        if opts.trace {
            let at = (0..self.robot_count()).map(|i| self.position(i, 0.0)).collect();
            self.trace.push(TraceRow { t: 0.0, positions: at });
        }
        loop {
            let t1 = ((self.tick + 1) as f64 * sc.sim_dt).min(sc.timeout);
            self.step_to(t1, opts.trace);
            if self.done() || t1 >= sc.timeout {
                break;
            }
        }
        self.into_result()
    }

    pub fn into_result(mut self) -> RunResult {
        let n = self.robot_count();
        if self.gen.is_some() {
            for i in 0..n {
                let s = match self.coord.agent(i).expect("robot exists").state {
                    AgentState::Idle { at } | AgentState::Failed { at } | AgentState::Planning { at } => at,
                    AgentState::Executing { to, .. } => to,
                    AgentState::Unregistered => self.prepared.robots[i].start,
                };
                for _ in 0..self.remaining[i] {
                    self.records.push(TaskRecord::not_issued(i, s));
                }
            }
        }
        let sc = &self.prepared.scenario;
        let tasks_total = n * sc.tasks_per_robot;
        let successes = self.records.iter().filter(|r| r.outcome == Outcome::Success).count();
        RunResult {
            scenario: sc.name.clone(),
            algorithm: sc.algorithm,
            seed: sc.seed,
            robots: n,
            tasks_total,
            success_rate: if tasks_total == 0 { 1.0 } else { successes as f64 / tasks_total as f64 },
            records: self.records,
            min_separation_margin: self.min_margin,
            planning_times: self.planning_times,
            violations: self.coord.violations().to_vec(),
            validity: self.prepared.validity.clone(),
            end_time: self.t,
            trace: self.trace,
            r_bound: Some(self.coord.r_bound()),
            horizon: Some(self.coord.horizon()),
            event_log: Some(self.coord.log().clone()),
        }
    }
}

fn arrival_or(t: f64, coord: &Coordinator, id: RobotId) -> f64 {
    coord.trajectory(id).map(|tr| tr.arrival_time()).unwrap_or(t)
}
