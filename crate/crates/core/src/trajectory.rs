//! Piecewise-linear, goal-terminal trajectories.

use crate::geometry::{moving_points_closest, Point2, EPS};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Waypoint {
    pub pos: Point2,
    pub t: f64,
}

impl From<[f64; 3]> for Waypoint {
    fn from(v: [f64; 3]) -> Self {
        Waypoint { pos: Point2::new(v[0], v[1]), t: v[2] }
    }
}

impl From<Waypoint> for [f64; 3] {
    fn from(w: Waypoint) -> Self {
        [w.pos.x, w.pos.y, w.t]
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one waypoint")]
    Empty,
    #[error("waypoint times must be strictly increasing (index {0})")]
    NonIncreasingTime(usize),
    #[error("non-finite waypoint at index {0}")]
    NonFinite(usize),
}

/// A motion `π: [0, ∞) → ℝ²`. Before the first waypoint the position is the
/// first waypoint, after the last one it is the terminal point forever.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr")]
pub struct Trajectory {
    #[serde(rename = "depart")]
    departure_time: f64,
    waypoints: Vec<Waypoint>,
}

#[derive(Deserialize)]
struct TrajectoryRepr {
    depart: f64,
    waypoints: Vec<Waypoint>,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = TrajectoryError;
    fn try_from(r: TrajectoryRepr) -> Result<Self, Self::Error> {
        Trajectory::new(r.depart, r.waypoints)
    }
}

impl Trajectory {
    pub fn new(departure_time: f64, waypoints: Vec<Waypoint>) -> Result<Self, TrajectoryError> {
        if waypoints.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.pos.is_finite() || !w.t.is_finite() {
                return Err(TrajectoryError::NonFinite(i));
            }
            if i > 0 && w.t <= waypoints[i - 1].t {
                return Err(TrajectoryError::NonIncreasingTime(i));
            }
        }
        Ok(Trajectory { departure_time, waypoints })
    }

    /// Stay at `p` forever, starting at `t`.
    pub fn stay(p: Point2, t: f64) -> Self {
        Trajectory { departure_time: t, waypoints: vec![Waypoint { pos: p, t }] }
    }

    pub fn departure_time(&self) -> f64 {
        self.departure_time
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start_point(&self) -> Point2 {
        self.waypoints[0].pos
    }

    pub fn terminal_point(&self) -> Point2 {
        self.waypoints[self.waypoints.len() - 1].pos
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints[0].t
    }

    /// `f(π)`: the earliest time from which the position stays at the
    /// terminal point.
    pub fn arrival_time(&self) -> f64 {
        let goal = self.terminal_point();
        let mut i = self.waypoints.len() - 1;
        while i > 0 && self.waypoints[i - 1].pos == goal {
            i -= 1;
        }
        self.waypoints[i].t
    }

    pub fn position(&self, t: f64) -> Point2 {
        let w = &self.waypoints;
        if t <= w[0].t {
            return w[0].pos;
        }
        let last = w[w.len() - 1];
        if t >= last.t {
            return last.pos;
        }
        // first index with time > t
        let i = w.partition_point(|wp| wp.t <= t);
        let (a, b) = (w[i - 1], w[i]);
        a.pos.lerp(b.pos, (t - a.t) / (b.t - a.t))
    }

    /// This motion followed by `next`, which starts where this one ends
    /// and no earlier than its last waypoint.
    pub fn then(&self, next: &Trajectory) -> Trajectory {
        debug_assert!(next.start_point().dist(self.terminal_point()) <= EPS);
        let mut waypoints = self.waypoints.clone();
        let last = waypoints[waypoints.len() - 1].t;
        waypoints.extend(next.waypoints.iter().filter(|w| w.t > last));
        Trajectory { departure_time: next.departure_time, waypoints }
    }

    /// Largest speed over all pieces.
    pub fn max_speed(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|p| p[0].pos.dist(p[1].pos) / (p[1].t - p[0].t))
            .fold(0.0, f64::max)
    }

    /// Waypoint times strictly inside `(t0, t1)`.
    pub fn breakpoints_in(&self, t0: f64, t1: f64) -> impl Iterator<Item = f64> + '_ {
        let start = self.waypoints.partition_point(|w| w.t <= t0);
        self.waypoints[start..].iter().map(|w| w.t).take_while(move |&t| t < t1)
    }
}

/// Minimum center distance between two trajectories over `[t0, ∞)`.
/// Exact: the time axis is split at every waypoint of either trajectory so
/// both motions are linear on each piece.
pub fn min_distance_between(a: &Trajectory, b: &Trajectory, t0: f64) -> f64 {
    let end = a.waypoints.last().unwrap().t.max(b.waypoints.last().unwrap().t).max(t0);
    min_distance_over(a, b, t0, end)
}

/// Minimum center distance over the closed interval `[t0, t1]`.
pub fn min_distance_over(a: &Trajectory, b: &Trajectory, t0: f64, t1: f64) -> f64 {
    let mut times: Vec<f64> = vec![t0];
    times.extend(a.breakpoints_in(t0, t1));
    times.extend(b.breakpoints_in(t0, t1));
    if t1 > t0 {
        times.push(t1);
    }
    times.sort_by(|x, y| x.total_cmp(y));
    times.dedup();
    let mut best = a.position(t0).dist(b.position(t0));
    for w in times.windows(2) {
        let (s, e) = (w[0], w[1]);
        let (_, d) = moving_points_closest(a.position(s), a.position(e), b.position(s), b.position(e));
        best = best.min(d);
    }
    best
}

/// True when two robots following `a` and `b` keep `|a(t) - b(t)| >= ra + rb`
/// for all `t >= 0`; touching within [`EPS`] counts as a collision.
pub fn trajectories_collision_free(a: &Trajectory, ra: f64, b: &Trajectory, rb: f64) -> bool {
    min_distance_between(a, b, 0.0) >= ra + rb + EPS
}
