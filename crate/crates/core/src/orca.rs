//! Reactive baseline: each robot heads along the roadmap toward its goal
//! and, every control tick, picks the velocity closest to that heading
//! among those satisfying one reciprocal half-plane per neighbor.

use crate::geometry::{segment_clearance, point_clearance, Point2, PolygonRegion, Segment2};
use crate::infrastructure::{EndpointId, Roadmap, VertexId};
use crate::scenario::OrcaParams;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LP_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactiveAgentState {
    pub position: Point2,
    pub velocity: Point2,
    pub goal: EndpointId,
    pub radius: f64,
    pub v_max: f64,
}

/// Feasible side is `(v - point) · normal >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlaneConstraint {
    pub point: Point2,
    pub normal: Point2,
}

impl HalfPlaneConstraint {
    /// Boundary direction with the feasible side on its left.
    fn direction(&self) -> Point2 {
        Point2::new(self.normal.y, -self.normal.x)
    }

    fn from_direction(point: Point2, dir: Point2) -> Self {
        HalfPlaneConstraint { point, normal: Point2::new(-dir.y, dir.x) }
    }

    pub fn violation(&self, v: Point2) -> f64 {
        -(v - self.point).dot(self.normal)
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum OrcaError {
    #[error("goal endpoint {0} is unreachable on the roadmap")]
    Unreachable(EndpointId),
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Roadmap distance from every vertex to each endpoint, computed once and
/// reused every tick.
#[derive(Clone, Debug)]
pub struct GoalFields {
    dist: Vec<Vec<f64>>,
    vertices: Vec<Point2>,
    lookahead: f64,
}

impl GoalFields {
    pub fn new(rm: &Roadmap) -> Self {
        let dist = rm.endpoint_vertex.iter().map(|&g| distances_from(rm, g)).collect();
        let lookahead = 2.0 * rm.cell.unwrap_or(1.3);
        GoalFields { dist, vertices: rm.vertices.clone(), lookahead }
    }

    pub fn distance(&self, goal: EndpointId, v: VertexId) -> f64 {
        self.dist[goal][v]
    }
}

fn distances_from(rm: &Roadmap, src: VertexId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; rm.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in rm.neighbors(v) {
            let nd = d + rm.edges[e].length;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

/// Velocity toward the roadmap shortest path to the goal at full speed,
/// slowed only to land exactly on the goal within one tick.
///
/// The lookahead point is the nearby vertex, visible from the robot, that
/// minimizes straight-line distance plus remaining roadmap distance.
pub fn desired_velocity(
    state: &ReactiveAgentState,
    rm: &Roadmap,
    fields: &GoalFields,
    ws: &PolygonRegion,
    params: &OrcaParams,
) -> Result<Point2, OrcaError> {
    let goal_pos = rm.vertices[rm.endpoint_vertex[state.goal]];
    let to_goal = goal_pos - state.position;
    if to_goal.norm() <= params.arrival_tolerance {
        return Ok(Point2::ZERO);
    }
    let field = &fields.dist[state.goal];
    let mut cands: Vec<(f64, f64, VertexId)> = fields
        .vertices
        .iter()
        .enumerate()
        .filter(|(v, p)| field[*v].is_finite() && p.dist(state.position) <= fields.lookahead)
        .map(|(v, p)| (p.dist(state.position) + field[v], field[v], v))
        .collect();
    // cheapest first, then furthest along
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    let here = point_clearance(state.position, ws);
    let need = state.radius.min(here) - 1e-6;
    let target = cands
        .iter()
        .find(|&&(_, _, v)| segment_clearance(&Segment2::new(state.position, fields.vertices[v]), ws) >= need)
        .map(|&(_, _, v)| fields.vertices[v]);
    let target = match target {
        Some(t) => t,
        None => {
            // lost: head for the nearest reachable vertex
            let nearest = (0..fields.vertices.len())
                .filter(|&v| field[v].is_finite())
                .min_by(|&a, &b| fields.vertices[a].dist(state.position).total_cmp(&fields.vertices[b].dist(state.position)))
                .ok_or(OrcaError::Unreachable(state.goal))?;
            fields.vertices[nearest]
        }
    };
    let d = target - state.position;
    let len = d.norm();
    if len <= 1e-12 {
        return Ok(Point2::ZERO);
    }
    let speed = if target == goal_pos { state.v_max.min(len / params.dt) } else { state.v_max };
    Ok(d * (speed / len))
}

/// The reciprocal half-plane `self` must respect to avoid `other` for `τ`
/// seconds, taking `responsibility` of the needed change.
pub fn orca_constraint(me: &ReactiveAgentState, other: &ReactiveAgentState, params: &OrcaParams) -> HalfPlaneConstraint {
    let inv_tau = 1.0 / params.tau;
    let rel_pos = other.position - me.position;
    let rel_vel = me.velocity - other.velocity;
    let dist_sq = rel_pos.norm_sq();
    let r = me.radius + other.radius;
    let r_sq = r * r;
    let (dir, u);
    if dist_sq > r_sq {
        let w = rel_vel - rel_pos * inv_tau;
        let w_len_sq = w.norm_sq();
        let dot1 = w.dot(rel_pos);
        if dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq {
            // cut-off circle
            let w_len = w_len_sq.sqrt();
            let unit_w = w * (1.0 / w_len);
            dir = Point2::new(unit_w.y, -unit_w.x);
            u = unit_w * (r * inv_tau - w_len);
        } else {
            let leg = (dist_sq - r_sq).sqrt();
            if rel_pos.cross(w) > 0.0 {
                dir = Point2::new(rel_pos.x * leg - rel_pos.y * r, rel_pos.x * r + rel_pos.y * leg) * (1.0 / dist_sq);
            } else {
                dir = -Point2::new(rel_pos.x * leg + rel_pos.y * r, -rel_pos.x * r + rel_pos.y * leg) * (1.0 / dist_sq);
            }
            u = dir * rel_vel.dot(dir) - rel_vel;
        }
    } else {
        // already overlapping: resolve within one tick
        let inv_dt = 1.0 / params.dt;
        let w = rel_vel - rel_pos * inv_dt;
        let w_len = w.norm();
        let unit_w = if w_len > 0.0 { w * (1.0 / w_len) } else { (-rel_pos).normalized_or_zero() };
        dir = Point2::new(unit_w.y, -unit_w.x);
        u = unit_w * (r * inv_dt - w_len);
    }
    HalfPlaneConstraint::from_direction(me.velocity + u * params.responsibility, dir)
}

fn det(a: Point2, b: Point2) -> f64 {
    a.cross(b)
}

fn lp1(lines: &[HalfPlaneConstraint], no: usize, radius: f64, opt: Point2, dir_opt: bool, result: &mut Point2) -> bool {
    let (p, d) = (lines[no].point, lines[no].direction());
    let dot = p.dot(d);
    let disc = dot * dot + radius * radius - p.norm_sq();
    if disc < 0.0 {
        return false;
    }
    let sq = disc.sqrt();
    let (mut t_left, mut t_right) = (-dot - sq, -dot + sq);
    for l in &lines[..no] {
        let denom = det(d, l.direction());
        let numer = det(l.direction(), p - l.point);
        if denom.abs() <= LP_EPS {
            if numer < 0.0 {
                return false;
            }
            continue;
        }
        let t = numer / denom;
        if denom >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return false;
        }
    }
    *result = if dir_opt {
        if opt.dot(d) > 0.0 {
            p + d * t_right
        } else {
            p + d * t_left
        }
    } else {
        let t = d.dot(opt - p);
        p + d * t.clamp(t_left, t_right)
    };
    true
}

fn lp2(lines: &[HalfPlaneConstraint], radius: f64, opt: Point2, dir_opt: bool, result: &mut Point2) -> usize {
    *result = if dir_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        opt.normalized_or_zero() * radius
    } else {
        opt
    };
    for i in 0..lines.len() {
        if det(lines[i].direction(), lines[i].point - *result) > 0.0 {
            let prev = *result;
            if !lp1(lines, i, radius, opt, dir_opt, result) {
                *result = prev;
                return i;
            }
        }
    }
    lines.len()
}

/// Infeasible case: minimizes the largest constraint violation.
fn lp3(lines: &[HalfPlaneConstraint], begin: usize, radius: f64, result: &mut Point2) {
    let mut distance = 0.0;
    for i in begin..lines.len() {
        let di = lines[i].direction();
        if det(di, lines[i].point - *result) > distance {
            let mut proj = Vec::with_capacity(i);
            for l in &lines[..i] {
                let dj = l.direction();
                let determinant = det(di, dj);
                let point = if determinant.abs() <= LP_EPS {
                    if di.dot(dj) > 0.0 {
                        continue;
                    }
                    (lines[i].point + l.point) * 0.5
                } else {
                    lines[i].point + di * (det(dj, lines[i].point - l.point) / determinant)
                };
                proj.push(HalfPlaneConstraint::from_direction(point, (dj - di).normalized_or_zero()));
            }
            let prev = *result;
            if lp2(&proj, radius, Point2::new(-di.y, di.x), true, result) < proj.len() {
                *result = prev;
            }
            distance = det(di, lines[i].point - *result);
        }
    }
}

/// Velocity closest to `preferred` within speed `v_max` that satisfies
/// every constraint, or the least-violating one when none does.
pub fn solve_velocity(lines: &[HalfPlaneConstraint], preferred: Point2, v_max: f64) -> Point2 {
    let mut v = Point2::ZERO;
    let fail = lp2(lines, v_max, preferred, false, &mut v);
    if fail < lines.len() {
        lp3(lines, fail, v_max, &mut v);
    }
    v
}

/// New velocity for `me` given its desired velocity and the neighbors in
/// sensing range.
pub fn orca_step(me: &ReactiveAgentState, desired: Point2, neighbors: &[ReactiveAgentState], params: &OrcaParams) -> Point2 {
    let mut lines = Vec::new();
    let mut degenerate = false;
    for o in neighbors {
        let rel = o.position - me.position;
        if rel.norm() > params.sensing {
            continue;
        }
        let w = me.velocity - o.velocity - rel * (1.0 / params.tau);
        if rel.cross(w).abs() <= 1e-12 && desired.cross(rel).abs() <= 1e-12 {
            degenerate = true;
        }
        lines.push(orca_constraint(me, o, params));
    }
    let mut preferred = desired;
    if degenerate {
        // rotate slightly clockwise; symmetric pairs both turn the same way
        preferred = preferred + Point2::new(desired.y, -desired.x) * params.lateral_bias;
    }
    let v = solve_velocity(&lines, preferred, me.v_max);
    let speed = v.norm();
    if speed > me.v_max {
        v * (me.v_max / speed)
    } else {
        v
    }
}
