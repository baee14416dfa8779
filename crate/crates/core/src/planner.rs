//! Best-response planning on the time-extended roadmap.
//!
//! Space-time nodes are `(vertex, step)` pairs where `step` counts `dt`
//! increments from the departure time. Traversing a roadmap edge takes the
//! edge length divided by `dt * v_max`, rounded up, steps; waiting in place
//! takes one step. The robot moves at uniform speed along an edge, so a move
//! is a single linear motion and is checked against each dynamic obstacle
//! piecewise in closed form.

use crate::geometry::{moving_points_closest, Point2, Segment2, EPS};
use crate::infrastructure::{edge_steps, step_distances_to, Roadmap, VertexId};
use crate::trajectory::{Trajectory, Waypoint};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Time step `δt`, seconds.
    pub dt: f64,
    /// Search window after departure, seconds.
    pub horizon: f64,
    pub v_max: f64,
    pub robot_radius: f64,
}

impl PlannerConfig {
    /// Horizon large enough for `robots` robots when a single relocation
    /// takes at most `r_bound` seconds, plus two steps of rounding slack.
    pub fn with_bound(dt: f64, v_max: f64, robot_radius: f64, robots: usize, r_bound: f64) -> Self {
        PlannerConfig { dt, horizon: robots as f64 * r_bound + 2.0 * dt, v_max, robot_radius }
    }

    pub fn max_step(&self) -> u32 {
        (self.horizon / self.dt + 1e-9).floor() as u32
    }
}

/// Another robot's body moving along a committed trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstacle {
    pub radius: f64,
    pub trajectory: Trajectory,
    bbox: (Point2, Point2),
    arrival: f64,
}

impl Obstacle {
    pub fn new(radius: f64, trajectory: Trajectory) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for w in trajectory.waypoints() {
            min.x = min.x.min(w.pos.x);
            min.y = min.y.min(w.pos.y);
            max.x = max.x.max(w.pos.x);
            max.y = max.y.max(w.pos.y);
        }
        let arrival = trajectory.arrival_time();
        Obstacle { radius, trajectory, bbox: (min, max), arrival }
    }

    /// Can the obstacle come within `reach` of the box `(lo, hi)` at all?
    fn near_box(&self, lo: Point2, hi: Point2, reach: f64) -> bool {
        let (min, max) = self.bbox;
        !(max.x + reach < lo.x || min.x - reach > hi.x || max.y + reach < lo.y || min.y - reach > hi.y)
    }

    /// True if a disc of radius `radius` moving linearly from `a` at `t0` to
    /// `b` at `t1` comes within `radius + self.radius` (inclusive of
    /// touching) of this obstacle.
    pub fn hits_motion(&self, a: Point2, b: Point2, t0: f64, t1: f64, radius: f64) -> bool {
        let reach = radius + self.radius + EPS;
        let lo = Point2::new(a.x.min(b.x), a.y.min(b.y));
        let hi = Point2::new(a.x.max(b.x), a.y.max(b.y));
        if !self.near_box(lo, hi, reach) {
            return false;
        }
        let tr = &self.trajectory;
        if t0 >= self.arrival {
            return Segment2::new(a, b).distance_to_point(tr.terminal_point()) < reach;
        }
        let mut prev_o = tr.position(t0);
        let span = t1 - t0;
        let pos = |t: f64| if span > 0.0 { a.lerp(b, (t - t0) / span) } else { a };
        let mut prev_r = a;
        for t in tr.breakpoints_in(t0, t1).chain(std::iter::once(t1)) {
            let o = tr.position(t);
            let r = pos(t);
            if moving_points_closest(prev_r, r, prev_o, o).1 < reach {
                return true;
            }
            prev_o = o;
            prev_r = r;
        }
        false
    }

    /// Supremum of the times at which the obstacle is within `reach` of the
    /// fixed point `g`: `NEG_INFINITY` if never, `INFINITY` if it ends there.
    pub fn last_conflict_at(&self, g: Point2, reach: f64) -> f64 {
        let w = self.trajectory.waypoints();
        if w[w.len() - 1].pos.dist(g) < reach {
            return f64::INFINITY;
        }
        let mut last = f64::NEG_INFINITY;
        if w[0].pos.dist(g) < reach {
            last = w[0].t;
        }
        for p in w.windows(2) {
            let (a, b) = (p[0], p[1]);
            let d0 = a.pos - g;
            let v = b.pos - a.pos;
            let qa = v.norm_sq();
            let qb = 2.0 * d0.dot(v);
            let qc = d0.norm_sq() - reach * reach;
            let s_hi = if qa == 0.0 {
                if qc < 0.0 {
                    Some(1.0)
                } else {
                    None
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc <= 0.0 {
                    None
                } else {
                    let sq = disc.sqrt();
                    let s1 = (-qb - sq) / (2.0 * qa);
                    let s2 = (-qb + sq) / (2.0 * qa);
                    if s2 <= 0.0 || s1 >= 1.0 {
                        None
                    } else {
                        Some(s2.min(1.0))
                    }
                }
            };
            if let Some(s) = s_hi {
                last = last.max(a.t + s * (b.t - a.t));
            }
        }
        last
    }
}

/// The dynamic obstacle region `Δ`: union of the space-time volumes of
/// other robots' bodies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DynamicObstacles {
    pub obstacles: Vec<Obstacle>,
}

impl DynamicObstacles {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, radius: f64, trajectory: Trajectory) {
        self.obstacles.push(Obstacle::new(radius, trajectory));
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Latest time any obstacle reaches its terminal point (`F(Δ)`).
    pub fn settle_time(&self) -> f64 {
        self.obstacles.iter().map(|o| o.arrival).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn motion_is_free(&self, a: Point2, b: Point2, t0: f64, t1: f64, radius: f64) -> bool {
        !self.obstacles.iter().any(|o| o.hits_motion(a, b, t0, t1, radius))
    }

    /// Standing at `p` over `[t0, t1]` is free.
    pub fn hold_is_free(&self, p: Point2, t0: f64, t1: f64, radius: f64) -> bool {
        self.motion_is_free(p, p, t0, t1, radius)
    }

    /// Earliest time from which standing at `p` forever is free, or `None`
    /// if some obstacle ends up there.
    pub fn safe_to_park_from(&self, p: Point2, radius: f64) -> Option<f64> {
        let mut t = f64::NEG_INFINITY;
        for o in &self.obstacles {
            let c = o.last_conflict_at(p, radius + o.radius + EPS);
            if c == f64::INFINITY {
                return None;
            }
            t = t.max(c);
        }
        Some(t)
    }
}

/// A node `(vertex, step)` of the time-extended roadmap; its time is
/// `departure + step * dt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpaceTimeNode {
    pub vertex: VertexId,
    pub step: u32,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("goal vertex is not reachable on the roadmap")]
    Disconnected,
    #[error("start position is occupied at departure")]
    StartBlocked,
    #[error("no collision-free goal node within the {horizon:.2} s horizon")]
    HorizonExhausted { horizon: f64 },
    #[error("every space-time node reachable within the horizon was expanded without reaching the goal")]
    Exhausted,
}

/// Time at which an edge entered at `depart` is left: `depart` plus the
/// rounded-up number of steps.
pub fn edge_arrival_time(depart: f64, edge_length: f64, cfg: &PlannerConfig) -> f64 {
    depart + edge_steps(edge_length, cfg.v_max, cfg.dt) as f64 * cfg.dt
}

/// One best-response query: roadmap, obstacles, configuration and the
/// departure time that anchors step 0.
pub struct SpaceTimeGraph<'a> {
    pub roadmap: &'a Roadmap,
    pub obstacles: &'a DynamicObstacles,
    pub cfg: PlannerConfig,
    pub departure: f64,
    steps: Vec<u32>,
}

impl<'a> SpaceTimeGraph<'a> {
    pub fn new(roadmap: &'a Roadmap, obstacles: &'a DynamicObstacles, cfg: PlannerConfig, departure: f64) -> Self {
        let steps = roadmap.edges.iter().map(|e| edge_steps(e.length, cfg.v_max, cfg.dt)).collect();
        SpaceTimeGraph { roadmap, obstacles, cfg, departure, steps }
    }

    #[inline]
    pub fn time_of(&self, step: u32) -> f64 {
        self.departure + step as f64 * self.cfg.dt
    }

    pub fn edge_duration_steps(&self, edge: usize) -> u32 {
        self.steps[edge]
    }

    /// Whether the node itself is outside `Δ` at its instant.
    pub fn node_is_free(&self, node: SpaceTimeNode) -> bool {
        let t = self.time_of(node.step);
        let p = self.roadmap.vertices[node.vertex];
        self.obstacles.hold_is_free(p, t, t, self.cfg.robot_radius)
    }

    /// Moving from `from` to `to` (a neighbor of `from.vertex`, or
    /// `from.vertex` itself for a wait) avoids every obstacle.
    pub fn edge_is_free(&self, from: SpaceTimeNode, to: VertexId) -> bool {
        let steps = if to == from.vertex {
            1
        } else {
            match self.roadmap.neighbors(from.vertex).iter().find(|&&(w, _)| w == to) {
                Some(&(_, e)) => self.steps[e],
                None => return false,
            }
        };
        let (a, b) = (self.roadmap.vertices[from.vertex], self.roadmap.vertices[to]);
        let t0 = self.time_of(from.step);
        let t1 = self.time_of(from.step + steps);
        self.obstacles.motion_is_free(a, b, t0, t1, self.cfg.robot_radius)
    }

    /// Least-arrival search from `(start, 0)` to a node at `goal` from which
    /// the robot can stay at `goal` forever.
    pub fn search(&self, start: VertexId, goal: VertexId) -> Result<Vec<SpaceTimeNode>, PlanError> {
        let h = step_distances_to(self.roadmap, goal, self.cfg.v_max, self.cfg.dt);
        if h[start].is_none() {
            return Err(PlanError::Disconnected);
        }
        let start_node = SpaceTimeNode { vertex: start, step: 0 };
        if !self.node_is_free(start_node) {
            return Err(PlanError::StartBlocked);
        }
        let goal_pos = self.roadmap.vertices[goal];
        let park_from = self.obstacles.safe_to_park_from(goal_pos, self.cfg.robot_radius);
        let max_step = self.cfg.max_step();

        // (f, waits, vertex, step)
        let mut open: BinaryHeap<Reverse<(u32, u32, VertexId, u32)>> = BinaryHeap::new();
        let mut parent: HashMap<SpaceTimeNode, SpaceTimeNode> = HashMap::new();
        let mut closed: std::collections::HashSet<SpaceTimeNode> = std::collections::HashSet::new();
        let mut best_waits: HashMap<SpaceTimeNode, u32> = HashMap::new();
        open.push(Reverse((h[start].unwrap(), 0, start, 0)));
        best_waits.insert(start_node, 0);
        let mut pruned = false;

        while let Some(Reverse((_, waits, v, step))) = open.pop() {
            let node = SpaceTimeNode { vertex: v, step };
            if !closed.insert(node) {
                continue;
            }
            if v == goal {
                if let Some(pf) = park_from {
                    if self.time_of(step) >= pf {
                        let mut path = vec![node];
                        let mut cur = node;
                        while let Some(&p) = parent.get(&cur) {
                            path.push(p);
                            cur = p;
                        }
                        path.reverse();
                        return Ok(path);
                    }
                }
            }
            // wait in place, then every roadmap edge
            let moves = std::iter::once((v, 1u32, true))
                .chain(self.roadmap.neighbors(v).iter().map(|&(w, e)| (w, self.steps[e], false)));
            for (w, d, is_wait) in moves {
                let Some(hw) = h[w] else { continue };
                let nstep = step + d;
                if nstep > max_step {
                    pruned = true;
                    continue;
                }
                let next = SpaceTimeNode { vertex: w, step: nstep };
                if closed.contains(&next) {
                    continue;
                }
                let nwaits = waits + is_wait as u32;
                if best_waits.get(&next).is_some_and(|&bw| bw <= nwaits) {
                    continue;
                }
                let (a, b) = (self.roadmap.vertices[v], self.roadmap.vertices[w]);
                if !self.obstacles.motion_is_free(a, b, self.time_of(step), self.time_of(nstep), self.cfg.robot_radius) {
                    continue;
                }
                best_waits.insert(next, nwaits);
                parent.insert(next, node);
                open.push(Reverse((nstep + hw, nwaits, w, nstep)));
            }
        }
        if pruned {
            Err(PlanError::HorizonExhausted { horizon: self.cfg.horizon })
        } else {
            Err(PlanError::Exhausted)
        }
    }

    /// Turns a node path into a trajectory, keeping only the first and last
    /// waypoint of each run of waits.
    pub fn to_trajectory(&self, path: &[SpaceTimeNode]) -> Trajectory {
        let mut waypoints: Vec<Waypoint> = Vec::with_capacity(path.len());
        for n in path {
            let wp = Waypoint { pos: self.roadmap.vertices[n.vertex], t: self.time_of(n.step) };
            let len = waypoints.len();
            if len >= 2 && waypoints[len - 1].pos == wp.pos && waypoints[len - 2].pos == wp.pos {
                waypoints[len - 1] = wp;
            } else {
                waypoints.push(wp);
            }
        }
        Trajectory::new(self.departure, waypoints).expect("search produces increasing times")
    }
}

/// Minimal-arrival trajectory from `s` (at `t_s`) to `g`, collision-free
/// against `obstacles`, that stays at `g` forever once it arrives.
pub fn best_traj(
    s: VertexId,
    t_s: f64,
    g: VertexId,
    obstacles: &DynamicObstacles,
    roadmap: &Roadmap,
    cfg: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    let graph = SpaceTimeGraph::new(roadmap, obstacles, *cfg, t_s);
    let path = graph.search(s, g)?;
    Ok(graph.to_trajectory(&path))
}
