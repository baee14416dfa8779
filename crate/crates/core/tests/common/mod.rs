//! Brute-force reference implementations and instance generators shared by
//! the integration tests. Nothing here calls into the code under test except
//! to build inputs.

#![allow(dead_code)]

use cobra_core::geometry::Point2;
use cobra_core::infrastructure::Roadmap;
use cobra_core::planner::DynamicObstacles;
use cobra_core::trajectory::{Trajectory, Waypoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

pub const EPS: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Steps needed to cover `len` at `v` with step `dt`, at least one.
pub fn oracle_steps(len: f64, v: f64, dt: f64) -> u32 {
    let q = len / (v * dt);
    let mut k = q.floor() as u32;
    if (k as f64) < q - 1e-9 {
        k += 1;
    }
    k.max(1)
}

/// Piecewise-linear position with clamping, written out independently.
pub fn oracle_position(wps: &[(Point2, f64)], t: f64) -> Point2 {
    if t <= wps[0].1 {
        return wps[0].0;
    }
    for w in wps.windows(2) {
        let ((p0, t0), (p1, t1)) = (w[0], w[1]);
        if t <= t1 {
            if t1 == t0 {
                return p1;
            }
            let s = (t - t0) / (t1 - t0);
            return Point2::new(p0.x + (p1.x - p0.x) * s, p0.y + (p1.y - p0.y) * s);
        }
    }
    wps[wps.len() - 1].0
}

fn closest_linear(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> f64 {
    let (dx0, dy0) = (a0.x - b0.x, a0.y - b0.y);
    let (vx, vy) = ((a1.x - b1.x) - dx0, (a1.y - b1.y) - dy0);
    let vv = vx * vx + vy * vy;
    let s = if vv > 0.0 { (-(dx0 * vx + dy0 * vy) / vv).clamp(0.0, 1.0) } else { 0.0 };
    ((dx0 + vx * s).powi(2) + (dy0 + vy * s).powi(2)).sqrt()
}

/// A moving disc in the oracle's own representation.
#[derive(Clone, Debug)]
pub struct OracleObstacle {
    pub radius: f64,
    pub wps: Vec<(Point2, f64)>,
}

impl OracleObstacle {
    pub fn from_trajectory(radius: f64, tr: &Trajectory) -> Self {
        OracleObstacle { radius, wps: tr.waypoints().iter().map(|w| (w.pos, w.t)).collect() }
    }

    /// Minimum distance to a point moving linearly from `a` at `t0` to `b`
    /// at `t1`.
    pub fn min_distance(&self, a: Point2, b: Point2, t0: f64, t1: f64) -> f64 {
        let mut ts = vec![t0, t1];
        ts.extend(self.wps.iter().map(|w| w.1).filter(|&t| t > t0 && t < t1));
        ts.sort_by(f64::total_cmp);
        let me = |t: f64| {
            if t1 > t0 {
                let s = (t - t0) / (t1 - t0);
                Point2::new(a.x + (b.x - a.x) * s, a.y + (b.y - a.y) * s)
            } else {
                a
            }
        };
        let mut best = f64::INFINITY;
        for w in ts.windows(2) {
            let d = closest_linear(me(w[0]), me(w[1]), oracle_position(&self.wps, w[0]), oracle_position(&self.wps, w[1]));
            best = best.min(d);
        }
        best
    }

    pub fn end(&self) -> (Point2, f64) {
        self.wps[self.wps.len() - 1]
    }
}

pub fn motion_clear(obs: &[OracleObstacle], a: Point2, b: Point2, t0: f64, t1: f64, r: f64) -> bool {
    obs.iter().all(|o| o.min_distance(a, b, t0, t1) >= r + o.radius + EPS)
}

/// Standing at `p` from `t` on forever is clear.
pub fn park_clear(obs: &[OracleObstacle], p: Point2, t: f64, r: f64) -> bool {
    obs.iter().all(|o| {
        let (q, te) = o.end();
        q.dist(p) >= r + o.radius + EPS && o.min_distance(p, p, t, te.max(t)) >= r + o.radius + EPS
    })
}

/// Least arrival step by exhaustive layer-by-layer search of the
/// time-expanded graph with steps `0..=max_step`.
pub fn brute_force_arrival(
    rm: &Roadmap,
    obs: &[OracleObstacle],
    s: usize,
    g: usize,
    t_s: f64,
    dt: f64,
    v: f64,
    r: f64,
    max_step: u32,
) -> Option<u32> {
    let n = rm.vertices.len();
    let k_max = max_step as usize;
    let time = |k: usize| t_s + k as f64 * dt;
    let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    for e in &rm.edges {
        let d = oracle_steps(rm.vertices[e.a].dist(rm.vertices[e.b]), v, dt);
        adj[e.a].push((e.b, d));
        adj[e.b].push((e.a, d));
    }
    let mut reach = vec![vec![false; n]; k_max + 1];
    let sp = rm.vertices[s];
    if !motion_clear(obs, sp, sp, t_s, t_s, r) {
        return None;
    }
    reach[0][s] = true;
    for k in 0..=k_max {
        if reach[k][g] && park_clear(obs, rm.vertices[g], time(k), r) {
            return Some(k as u32);
        }
        for u in 0..n {
            if !reach[k][u] {
                continue;
            }
            let moves = std::iter::once((u, 1)).chain(adj[u].iter().copied());
            for (w, d) in moves {
                let k2 = k + d as usize;
                if k2 > k_max || reach[k2][w] {
                    continue;
                }
                if motion_clear(obs, rm.vertices[u], rm.vertices[w], time(k), time(k2), r) {
                    reach[k2][w] = true;
                }
            }
        }
    }
    None
}

/// 8-connected `w` by `h` grid with spacing `cell`.
pub fn grid(w: usize, h: usize, cell: f64) -> (Vec<Point2>, Vec<(usize, usize)>) {
    let id = |x: usize, y: usize| y * w + x;
    let mut vs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            vs.push(Point2::new(x as f64 * cell, y as f64 * cell));
        }
    }
    let mut es = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                es.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < h {
                es.push((id(x, y), id(x, y + 1)));
            }
            if x + 1 < w && y + 1 < h {
                es.push((id(x, y), id(x + 1, y + 1)));
                es.push((id(x + 1, y), id(x, y + 1)));
            }
        }
    }
    (vs, es)
}

/// A random walk on the roadmap with random waits and speeds up to
/// `v_max`, parked at its last vertex.
pub fn random_walk(rm: &Roadmap, rng: &mut impl Rng, t0: f64, moves: usize, v_max: f64) -> Trajectory {
    let mut v = rng.random_range(0..rm.vertices.len());
    let mut t = t0;
    let mut wps = vec![Waypoint { pos: rm.vertices[v], t }];
    for _ in 0..moves {
        if rng.random_bool(0.3) {
            t += rng.random_range(0.2..3.0);
        } else {
            let nb = rm.neighbors(v);
            let (w, _) = nb[rng.random_range(0..nb.len())];
            let len = rm.vertices[v].dist(rm.vertices[w]);
            t += len / (v_max * rng.random_range(0.3..1.0));
            v = w;
        }
        wps.push(Waypoint { pos: rm.vertices[v], t });
    }
    Trajectory::new(t0, wps).expect("increasing times")
}

pub struct PlannerInstance {
    pub roadmap: Roadmap,
    pub obstacles: DynamicObstacles,
    pub oracle: Vec<OracleObstacle>,
    pub s: usize,
    pub g: usize,
    pub t_s: f64,
}

/// Small grid, one to three wandering obstacles, random start and goal.
pub fn planner_instance(seed: u64) -> PlannerInstance {
    let mut r = rng(seed);
    let (w, h) = (r.random_range(2..=4), r.random_range(2..=4));
    let (vs, es) = grid(w, h, 1.3);
    let n = vs.len();
    let s = r.random_range(0..n);
    let mut g = r.random_range(0..n);
    if g == s {
        g = (g + 1) % n;
    }
    let roadmap = Roadmap::from_parts(vs, &es, vec![s, g], 0.5);
    let t_s = r.random_range(0.0..3.0);
    let mut obstacles = DynamicObstacles::new();
    let mut oracle = Vec::new();
    for _ in 0..r.random_range(1..=3) {
        let moves = r.random_range(1..=6);
        let t0 = t_s + r.random_range(-2.0..2.0);
        let tr = random_walk(&roadmap, &mut r, t0, moves, 1.0);
        oracle.push(OracleObstacle::from_trajectory(0.5, &tr));
        obstacles.push(0.5, tr);
    }
    PlannerInstance { roadmap, obstacles, oracle, s, g, t_s }
}

pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let l2 = abx * abx + aby * aby;
    let s = if l2 == 0.0 { 0.0 } else { (((p.x - a.x) * abx + (p.y - a.y) * aby) / l2).clamp(0.0, 1.0) };
    ((a.x + abx * s - p.x).powi(2) + (a.y + aby * s - p.y).powi(2)).sqrt()
}

/// Pairs of endpoints with no path whose edges all stay `2 r̄` away from
/// every other endpoint, by a separate BFS per pair.
pub fn brute_force_failing_pairs(rm: &Roadmap, r_bar: f64) -> Vec<(usize, usize)> {
    let k = rm.endpoint_vertex.len();
    let pts: Vec<Point2> = rm.endpoint_vertex.iter().map(|&v| rm.vertices[v]).collect();
    let mut failing = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let allowed: Vec<bool> = rm
                .edges
                .iter()
                .map(|e| {
                    (0..k).filter(|&c| c != a && c != b).all(|c| {
                        point_segment_distance(pts[c], rm.vertices[e.a], rm.vertices[e.b]) >= 2.0 * r_bar + EPS
                    })
                })
                .collect();
            let (src, dst) = (rm.endpoint_vertex[a], rm.endpoint_vertex[b]);
            let mut seen = BTreeSet::from([src]);
            let mut q = VecDeque::from([src]);
            while let Some(u) = q.pop_front() {
                for (i, e) in rm.edges.iter().enumerate() {
                    if !allowed[i] {
                        continue;
                    }
                    let w = if e.a == u {
                        e.b
                    } else if e.b == u {
                        e.a
                    } else {
                        continue;
                    };
                    if seen.insert(w) {
                        q.push_back(w);
                    }
                }
            }
            if !seen.contains(&dst) {
                failing.push((a, b));
            }
        }
    }
    failing
}

/// Random geometric graph in a 10 m square; the first `k` vertices are
/// endpoints.
pub fn validity_instance(seed: u64, r_bar: f64) -> Roadmap {
    let mut r = rng(seed);
    let n = r.random_range(6..=18);
    let k = r.random_range(2..=5).min(n);
    let mut vs: Vec<Point2> = Vec::new();
    while vs.len() < n {
        let p = Point2::new(r.random_range(0.0..10.0), r.random_range(0.0..10.0));
        // keep endpoints apart so each can hold a robot
        if vs.len() < k && vs.iter().any(|q| q.dist(p) < 2.0 * r_bar) {
            continue;
        }
        vs.push(p);
    }
    let reach = r.random_range(2.5..4.5);
    let mut es = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if vs[i].dist(vs[j]) < reach {
                es.push((i, j));
            }
        }
    }
    Roadmap::from_parts(vs, &es, (0..k).collect(), r_bar)
}

/// Dijkstra over `weight(edge index)` from `src`, written without the
/// library's heap entry type.
pub fn dijkstra<W: Copy + PartialOrd + std::ops::Add<Output = W> + Default>(
    rm: &Roadmap,
    src: usize,
    weight: impl Fn(usize) -> W,
) -> Vec<Option<W>> {
    #[derive(PartialEq)]
    struct Item<W>(W, usize);
    impl<W: PartialOrd> Eq for Item<W> {}
    impl<W: PartialOrd> PartialOrd for Item<W> {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl<W: PartialOrd> Ord for Item<W> {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.partial_cmp(&self.0).unwrap().then(o.1.cmp(&self.1))
        }
    }
    let mut dist = vec![None; rm.vertices.len()];
    let mut heap = BinaryHeap::from([Item(W::default(), src)]);
    while let Some(Item(d, u)) = heap.pop() {
        if dist[u].is_some() {
            continue;
        }
        dist[u] = Some(d);
        for (i, e) in rm.edges.iter().enumerate() {
            let w = if e.a == u {
                e.b
            } else if e.b == u {
                e.a
            } else {
                continue;
            };
            if dist[w].is_none() {
                heap.push(Item(d + weight(i), w));
            }
        }
    }
    dist
}

/// Three endpoints in alcoves beside a corridor: every pair is connected
/// by going along the corridor, which keeps 2 r̄ from the third alcove.
pub fn alcoves() -> Roadmap {
    let mut vs: Vec<Point2> = (0..7).map(|i| Point2::new(i as f64 * 1.5, 0.0)).collect();
    let mut es: Vec<(usize, usize)> = (0..6).map(|i| (i, i + 1)).collect();
    for (k, &x) in [1usize, 3, 5].iter().enumerate() {
        vs.push(Point2::new(x as f64 * 1.5, 1.5));
        es.push((x, 7 + k));
    }
    Roadmap::from_parts(vs, &es, vec![7, 8, 9], 0.5)
}

/// The same endpoints placed on the corridor itself: the middle one cuts
/// the outer two apart.
pub fn in_corridor() -> Roadmap {
    let vs: Vec<Point2> = (0..7).map(|i| Point2::new(i as f64 * 1.5, 0.0)).collect();
    let es: Vec<(usize, usize)> = (0..6).map(|i| (i, i + 1)).collect();
    Roadmap::from_parts(vs, &es, vec![1, 3, 5], 0.5)
}
