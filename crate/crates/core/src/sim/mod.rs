//! Execution of a scenario: the random workload, robot motion under either
//! algorithm, the collision monitor and the per-task records.

mod cobra;
mod reactive;
mod tasks;

pub use cobra::{CobraSim, RobotView};
pub use reactive::OrcaSim;
pub use tasks::TaskGenerator;

use crate::geometry::{moving_points_closest, Point2};
use crate::infrastructure::{static_shortest_path, EndpointId, Roadmap, ValidityReport};
use crate::protocol::{RobotId, Verdict};
use crate::scenario::{Algorithm, PreparedScenario, ScenarioError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{self, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Timeout,
    PlanningFailure,
    Rejected,
    /// Never issued: the run ended or the robot failed first.
    NotIssued,
}

/// One relocation task. Times in seconds; `p` only for successes, `g` and
/// the times only once the task was issued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub robot: RobotId,
    pub s: EndpointId,
    pub g: Option<EndpointId>,
    pub issue: Option<f64>,
    pub start: Option<f64>,
    pub arrival: Option<f64>,
    /// Shortest roadmap path at full speed, ignoring everyone else.
    pub t_prime: Option<f64>,
    pub p: Option<f64>,
    pub outcome: Outcome,
}

impl TaskRecord {
    pub(crate) fn issued(robot: RobotId, s: EndpointId, g: EndpointId, issue: f64, t_prime: f64) -> Self {
        TaskRecord {
            robot,
            s,
            g: Some(g),
            issue: Some(issue),
            start: None,
            arrival: None,
            t_prime: Some(t_prime),
            p: None,
            outcome: Outcome::Timeout,
        }
    }

    pub(crate) fn not_issued(robot: RobotId, s: EndpointId) -> Self {
        TaskRecord { robot, s, g: None, issue: None, start: None, arrival: None, t_prime: None, p: None, outcome: Outcome::NotIssued }
    }

    fn finish(&mut self, arrival: f64) {
        let (issue, t_prime) = (self.issue.expect("issued"), self.t_prime.expect("issued"));
        self.arrival = Some(arrival);
        self.p = Some(arrival - issue - t_prime);
        self.outcome = Outcome::Success;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub positions: Vec<Point2>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunOptions {
    /// Record positions at every tick.
    pub trace: bool,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub robots: usize,
    pub tasks_total: usize,
    pub records: Vec<TaskRecord>,
    pub success_rate: f64,
    /// Smallest `|p_i - p_j| - r_i - r_j` seen, over ticks and between them.
    pub min_separation_margin: f64,
    /// Wall-clock seconds per planning call; not deterministic, so kept out
    /// of the CSV and summary.
    pub planning_times: Vec<f64>,
    pub violations: Vec<Verdict>,
    pub validity: ValidityReport,
    pub end_time: f64,
    pub trace: Vec<TraceRow>,
    pub event_log: Option<crate::protocol::EventLog>,
    /// Coordinator's per-task duration bound and planner horizon.
    pub r_bound: Option<f64>,
    pub horizon: Option<f64>,
}

/// Deterministic run digest written next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub robots: usize,
    pub tasks_total: usize,
    pub successes: usize,
    pub timeouts: usize,
    pub planning_failures: usize,
    pub rejected: usize,
    pub unissued: usize,
    pub success_rate: f64,
    pub mean_prolongation: Option<f64>,
    pub min_separation_margin: Option<f64>,
    pub monitor_violations: usize,
    pub valid_infrastructure: bool,
    pub failing_pairs: Vec<(EndpointId, EndpointId)>,
    pub end_time: f64,
    pub r_bound: Option<f64>,
    pub horizon: Option<f64>,
    pub destination_rule: String,
    pub orca: Option<crate::scenario::OrcaParams>,
}

pub const DESTINATION_RULE: &str =
    "uniform over endpoints that are neither an active destination nor within reach of any robot's current position";

impl RunResult {
    pub fn count(&self, o: Outcome) -> usize {
        self.records.iter().filter(|r| r.outcome == o).count()
    }

    pub fn summary(&self, orca: Option<crate::scenario::OrcaParams>) -> RunSummary {
        let ps: Vec<f64> = self.records.iter().filter_map(|r| r.p).collect();
        RunSummary {
            scenario: self.scenario.clone(),
            algorithm: self.algorithm,
            seed: self.seed,
            robots: self.robots,
            tasks_total: self.tasks_total,
            successes: self.count(Outcome::Success),
            timeouts: self.count(Outcome::Timeout),
            planning_failures: self.count(Outcome::PlanningFailure),
            rejected: self.count(Outcome::Rejected),
            unissued: self.count(Outcome::NotIssued),
            success_rate: self.success_rate,
            mean_prolongation: (!ps.is_empty()).then(|| ps.iter().sum::<f64>() / ps.len() as f64),
            min_separation_margin: self.min_separation_margin.is_finite().then_some(self.min_separation_margin),
            monitor_violations: self.violations.len(),
            valid_infrastructure: self.validity.valid,
            failing_pairs: self.validity.failing_pairs.clone(),
            end_time: self.end_time,
            r_bound: self.r_bound,
            horizon: self.horizon,
            destination_rule: DESTINATION_RULE.into(),
            orca,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        write_records_csv(&self.records, w)
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn write_trace_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for row in &self.trace {
            serde_json::to_writer(&mut w, row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn write_records_csv<W: Write>(records: &[TaskRecord], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: io::Read>(r: R) -> csv::Result<Vec<TaskRecord>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Smallest pairwise margin `|p_i - p_j| - r_i - r_j` at one instant;
/// infinite with fewer than two robots.
pub fn collision_monitor_tick(positions: &[(Point2, f64)]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let (a, ra) = positions[i];
            let (b, rb) = positions[j];
            m = m.min(a.dist(b) - ra - rb);
        }
    }
    m
}

/// Smallest margin while every robot moves linearly from `from[i]` to
/// `to[i]` over the same interval.
pub fn linear_motion_margin(from: &[(Point2, f64)], to: &[Point2]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..from.len() {
        for j in (i + 1)..from.len() {
            let (_, d) = moving_points_closest(from[i].0, to[i], from[j].0, to[j]);
            m = m.min(d - from[i].1 - from[j].1);
        }
    }
    m
}

/// Static shortest-path time between two endpoints at speed `v_max`.
pub fn baseline_time(rm: &Roadmap, s: EndpointId, g: EndpointId, v_max: f64) -> f64 {
    static_shortest_path(rm, rm.endpoint_vertex[s], rm.endpoint_vertex[g], &BTreeSet::new())
        .map(|p| p.length / v_max)
        .unwrap_or(f64::INFINITY)
}

/// Runs the scenario with its configured algorithm.
pub fn run(prepared: &PreparedScenario, opts: &RunOptions) -> Result<RunResult, ScenarioError> {
    match prepared.scenario.algorithm {
        Algorithm::Cobra => Ok(CobraSim::new(prepared, true)?.run_to_end(opts)),
        Algorithm::Orca => Ok(OrcaSim::new(prepared).run_to_end(opts)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_margin() {
        let r = 0.5;
        assert_eq!(collision_monitor_tick(&[(Point2::new(0.0, 0.0), r), (Point2::new(2.0, 0.0), r)]), 1.0);
        assert_eq!(collision_monitor_tick(&[(Point2::new(0.0, 0.0), r)]), f64::INFINITY);
    }

    #[test]
    fn swap_between_ticks_is_caught() {
        // endpoints of the tick are 2 m apart, but the robots pass through each other
        let from = [(Point2::new(-1.0, 0.0), 0.5), (Point2::new(1.0, 0.0), 0.5)];
        let to = [Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)];
        assert!(collision_monitor_tick(&from) > 0.0);
        assert!((linear_motion_margin(&from, &to) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            TaskRecord { robot: 0, s: 1, g: Some(2), issue: Some(0.5), start: Some(3.5), arrival: Some(9.0), t_prime: Some(4.0), p: Some(4.5), outcome: Outcome::Success },
            TaskRecord { robot: 1, s: 0, g: Some(3), issue: Some(1.0), start: None, arrival: None, t_prime: Some(2.0), p: None, outcome: Outcome::PlanningFailure },
            TaskRecord::not_issued(1, 0),
        ];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("robot,s,g,issue,start,arrival,t_prime,p,outcome\n"));
        assert_eq!(read_records_csv(&buf[..]).unwrap(), recs);
    }
}
