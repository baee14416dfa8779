use super::{baseline_time, collision_monitor_tick, linear_motion_margin, Outcome, RunOptions, RunResult, TaskGenerator, TaskRecord, TraceRow};
use crate::geometry::{point_clearance, Point2, EPS};
use crate::infrastructure::EndpointId;
use crate::orca::{desired_velocity, orca_step, GoalFields, ReactiveAgentState};
use crate::scenario::PreparedScenario;
use std::collections::BTreeSet;

/// Fixed-tick execution of the reactive baseline with Euler integration.
pub struct OrcaSim {
    prepared: PreparedScenario,
    fields: GoalFields,
    gen: TaskGenerator,
    agents: Vec<ReactiveAgentState>,
    moving: Vec<Option<usize>>,
    remaining: Vec<usize>,
    next_issue: Vec<Option<f64>>,
    at_endpoint: Vec<EndpointId>,
    records: Vec<TaskRecord>,
    t: f64,
    tick: u64,
    min_margin: f64,
    trace: Vec<TraceRow>,
}

impl OrcaSim {
    pub fn new(prepared: &PreparedScenario) -> Self {
        let sc = &prepared.scenario;
        let n = prepared.robots.len();
        let mut gen = TaskGenerator::new(sc.seed, prepared.infra.endpoints.len());
        let delays = gen.initial_delays(n, sc.initial_delay);
        let agents = prepared
            .robots
            .iter()
            .map(|r| ReactiveAgentState {
                position: prepared.infra.endpoint(r.start),
                velocity: Point2::ZERO,
                goal: r.start,
                radius: r.radius,
                v_max: r.v_max,
            })
            .collect();
        OrcaSim {
            prepared: prepared.clone(),
            fields: GoalFields::new(&prepared.roadmap),
            gen,
            agents,
            moving: vec![None; n],
            remaining: vec![sc.tasks_per_robot; n],
            next_issue: delays.into_iter().map(|d| (sc.tasks_per_robot > 0).then_some(d)).collect(),
            at_endpoint: prepared.robots.iter().map(|r| r.start).collect(),
            records: Vec::new(),
            t: 0.0,
            tick: 0,
            min_margin: f64::INFINITY,
            trace: Vec::new(),
        }
    }

    fn excluded(&self) -> BTreeSet<EndpointId> {
        let r_max = self.agents.iter().map(|a| a.radius).fold(0.0, f64::max);
        let mut ex = BTreeSet::new();
        for a in &self.agents {
            ex.insert(a.goal);
            for (e, &q) in self.prepared.infra.endpoints.iter().enumerate() {
                if q.dist(a.position) < a.radius + r_max + EPS {
                    ex.insert(e);
                }
            }
        }
        ex
    }

    fn issue_due(&mut self) {
        loop {
            let due = (0..self.agents.len())
                .filter_map(|i| self.next_issue[i].filter(|&t| t <= self.t).map(|t| (t, i)))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let Some((t, i)) = due else { break };
            self.next_issue[i] = None;
            let ex = self.excluded();
            let Some(g) = self.gen.pick_goal(&ex) else {
                self.next_issue[i] = Some(self.t + self.prepared.scenario.orca.dt);
                continue;
            };
            let s = self.at_endpoint[i];
            let mut rec = TaskRecord::issued(i, s, g, t, baseline_time(&self.prepared.roadmap, s, g, self.agents[i].v_max));
            rec.start = Some(self.t);
            self.records.push(rec);
            self.agents[i].goal = g;
            self.moving[i] = Some(self.records.len() - 1);
            self.remaining[i] -= 1;
        }
    }

    fn step(&mut self, trace: bool) {
        let params = self.prepared.scenario.orca;
        let ws = &self.prepared.infra.workspace;
        let rm = &self.prepared.roadmap;
        let snapshot = self.agents.clone();
        let mut next = snapshot.clone();
        for (i, me) in snapshot.iter().enumerate() {
            let desired = desired_velocity(me, rm, &self.fields, ws, &params).unwrap_or(Point2::ZERO);
            let neighbors: Vec<ReactiveAgentState> =
                snapshot.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, a)| *a).collect();
            let v = orca_step(me, desired, &neighbors, &params);
            let cand = me.position + v * params.dt;
            let here = point_clearance(me.position, ws);
            // no static-obstacle avoidance: a move into a wall is refused
            if point_clearance(cand, ws) >= me.radius.min(here) - EPS {
                next[i].position = cand;
                next[i].velocity = v;
            } else {
                next[i].velocity = Point2::ZERO;
            }
        }
        let from: Vec<(Point2, f64)> = snapshot.iter().map(|a| (a.position, a.radius)).collect();
        let to: Vec<Point2> = next.iter().map(|a| a.position).collect();
        let to_r: Vec<(Point2, f64)> = next.iter().map(|a| (a.position, a.radius)).collect();
        self.min_margin = self.min_margin.min(linear_motion_margin(&from, &to)).min(collision_monitor_tick(&to_r));
        self.agents = next;
        self.tick += 1;
        self.t = self.tick as f64 * params.dt;
        if trace {
            self.trace.push(TraceRow { t: self.t, positions: to });
        }
        for i in 0..self.agents.len() {
            if let Some(k) = self.moving[i] {
                let g = self.prepared.infra.endpoint(self.agents[i].goal);
                if self.agents[i].position.dist(g) <= params.arrival_tolerance {
                    self.records[k].finish(self.t);
                    self.moving[i] = None;
                    self.at_endpoint[i] = self.agents[i].goal;
                    if self.remaining[i] > 0 {
                        self.next_issue[i] = Some(self.t);
                    }
                }
            }
        }
    }

    fn done(&self) -> bool {
        self.moving.iter().all(Option::is_none) && self.next_issue.iter().all(Option::is_none)
    }

    pub fn run_to_end(mut self, opts: &RunOptions) -> RunResult {
        let timeout = self.prepared.scenario.timeout;
        if opts.trace {
            self.trace.push(TraceRow { t: 0.0, positions: self.agents.iter().map(|a| a.position).collect() });
        }
        loop {
            self.issue_due();
            if self.done() || self.t >= timeout {
                break;
            }
            self.step(opts.trace);
        }
        let n = self.agents.len();
        for i in 0..n {
            let s = self.moving[i].map(|k| self.records[k].g.expect("issued")).unwrap_or(self.at_endpoint[i]);
            for _ in 0..self.remaining[i] {
                self.records.push(TaskRecord::not_issued(i, s));
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
            planning_times: Vec::new(),
            violations: Vec::new(),
            validity: self.prepared.validity.clone(),
            end_time: self.t,
            trace: self.trace,
            event_log: None,
            r_bound: None,
            horizon: None,
        }
    }
}
