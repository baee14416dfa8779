//! Bridges for narrow passages that the base grid misses.
//!
//! A fine lattice (spacing `cell / 8`) is laid over the free space. When two
//! roadmap components can reach each other through the lattice, the
//! clearance-weighted shortest lattice path between them (which hugs the
//! passage centerline) is resampled at `cell / 2` and inserted as a chain of
//! new vertices.

use super::roadmap::GraphBuilder;
use super::VertexId;
use crate::geometry::{clear_of, point_clearance, Point2, EPS};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

struct Lattice {
    points: Vec<Point2>,
    adj: Vec<Vec<(usize, f64)>>,
    index: BTreeMap<(i64, i64), usize>,
    origin: Point2,
    h: f64,
}

impl Lattice {
    fn build(b: &GraphBuilder, h: f64) -> Self {
        let (min, max) = b.ws.bounds();
        let nx = ((max.x - min.x) / h).floor() as i64 + 1;
        let ny = ((max.y - min.y) / h).floor() as i64 + 1;
        let mut points = Vec::new();
        let mut clearance = Vec::new();
        let mut index = BTreeMap::new();
        for j in 0..ny {
            for i in 0..nx {
                let p = Point2::new(min.x + i as f64 * h, min.y + j as f64 * h);
                let c = point_clearance(p, b.ws);
                if clear_of(c, b.r_bar) {
                    index.insert((i, j), points.len());
                    points.push(p);
                    clearance.push(c);
                }
            }
        }
        let mut adj = vec![Vec::new(); points.len()];
        for (&(i, j), &u) in &index {
            for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let Some(&w) = index.get(&(i + di, j + dj)) {
                    if b.segment_ok(points[u], points[w]) {
                        // cheaper near the middle of a passage
                        let c = 0.5 * (clearance[u] + clearance[w]) - b.r_bar;
                        let cost = points[u].dist(points[w]) * (1.0 + h / (c + 0.05 * h));
                        adj[u].push((w, cost));
                        adj[w].push((u, cost));
                    }
                }
            }
        }
        Lattice { points, adj, index, origin: min, h }
    }

    /// Lattice nodes within `1.5 h` of `p` that `p` sees through a clear
    /// segment.
    fn attach(&self, b: &GraphBuilder, p: Point2) -> Vec<(usize, f64)> {
        let ci = ((p.x - self.origin.x) / self.h).round() as i64;
        let cj = ((p.y - self.origin.y) / self.h).round() as i64;
        let mut out = Vec::new();
        for dj in -2..=2 {
            for di in -2..=2 {
                if let Some(&n) = self.index.get(&(ci + di, cj + dj)) {
                    let d = self.points[n].dist(p);
                    if d <= 1.5 * self.h + EPS && b.segment_ok(p, self.points[n]) {
                        out.push((n, d));
                    }
                }
            }
        }
        out
    }
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

/// Connects roadmap components that the fine lattice shows to be mutually
/// reachable. Returns the number of bridges inserted.
pub(crate) fn augment_components(b: &mut GraphBuilder, cell: f64, endpoint_vertex: &[VertexId]) -> usize {
    let comp = b.components();
    let distinct: std::collections::BTreeSet<usize> = comp.iter().copied().collect();
    if distinct.len() <= 1 {
        return 0;
    }
    let lattice = Lattice::build(b, cell / 8.0);
    if lattice.points.is_empty() {
        return 0;
    }

    // roadmap vertex attachments to the lattice
    let mut attached: Vec<Vec<(usize, f64)>> = (0..b.vertices.len()).map(|v| lattice.attach(b, b.vertices[v])).collect();
    let mut owner: Vec<Vec<VertexId>> = vec![Vec::new(); lattice.points.len()];
    for (v, att) in attached.iter().enumerate() {
        for &(n, _) in att {
            owner[n].push(v);
        }
    }

    let mut bridges = 0;
    // endpoint components are bridged first
    let mut order: Vec<VertexId> = endpoint_vertex.to_vec();
    order.extend(0..b.vertices.len());
    let mut exhausted = std::collections::BTreeSet::new();
    loop {
        let comp = b.components();
        let Some(seed) = order.iter().copied().find(|&v| !exhausted.contains(&comp[v]) && !attached[v].is_empty()) else {
            break;
        };
        let c = comp[seed];
        match bridge_from(b, &lattice, &attached, &owner, &comp, c) {
            Some(path) => {
                let new = insert_chain(b, &lattice, path, cell);
                for v in new {
                    let att = lattice.attach(b, b.vertices[v]);
                    for &(n, _) in &att {
                        owner[n].push(v);
                    }
                    attached.push(att);
                }
                bridges += 1;
            }
            None => {
                exhausted.insert(c);
            }
        }
        // components renumber after merges, so map exhausted ones by root
        let comp = b.components();
        exhausted = exhausted.into_iter().map(|r| comp[r]).collect();
    }
    bridges
}

/// Polyline from a vertex of component `c` through the lattice to a vertex
/// of another component: `(start vertex, lattice nodes, end vertex)`.
fn bridge_from(
    b: &GraphBuilder,
    lattice: &Lattice,
    attached: &[Vec<(usize, f64)>],
    owner: &[Vec<VertexId>],
    comp: &[usize],
    c: usize,
) -> Option<(VertexId, Vec<usize>, VertexId)> {
    let n = lattice.points.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut source = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for v in 0..b.vertices.len() {
        if comp[v] != c {
            continue;
        }
        for &(node, d) in &attached[v] {
            if d < dist[node] {
                dist[node] = d;
                source[node] = v;
                heap.push(Item(d, node));
            }
        }
    }
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if let Some(&target) = owner[u].iter().find(|&&v| comp[v] != c) {
            let mut nodes = vec![u];
            let mut x = u;
            while prev[x] != usize::MAX {
                x = prev[x];
                nodes.push(x);
            }
            nodes.reverse();
            return Some((source[x], nodes, target));
        }
        for &(w, cost) in &lattice.adj[u] {
            let nd = d + cost;
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = u;
                source[w] = source[u];
                heap.push(Item(nd, w));
            }
        }
    }
    None
}

/// Resamples the bridge polyline at roughly `cell / 2` and inserts it.
/// Returns the ids of the new vertices.
fn insert_chain(b: &mut GraphBuilder, lattice: &Lattice, path: (VertexId, Vec<usize>, VertexId), cell: f64) -> Vec<VertexId> {
    let (from, nodes, to) = path;
    let mut pts = Vec::with_capacity(nodes.len() + 2);
    pts.push(b.vertices[from]);
    pts.extend(nodes.iter().map(|&n| lattice.points[n]));
    pts.push(b.vertices[to]);
    let mut arc = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        arc[i] = arc[i - 1] + pts[i - 1].dist(pts[i]);
    }

    let step = 0.5 * cell;
    let mut keep = vec![0usize];
    let mut i = 0;
    while i < pts.len() - 1 {
        let mut j = i + 1;
        let mut k = i + 1;
        while k < pts.len() && arc[k] - arc[i] <= step + EPS {
            if b.segment_ok(pts[i], pts[k]) {
                j = k;
            }
            k += 1;
        }
        keep.push(j);
        i = j;
    }

    let mut ids = Vec::new();
    let mut prev = from;
    for &k in &keep[1..] {
        let id = if k == pts.len() - 1 {
            to
        } else {
            let id = b.vertices.len();
            b.vertices.push(pts[k]);
            ids.push(id);
            id
        };
        b.add_edge(prev, id);
        prev = id;
    }
    for &v in &ids {
        b.link_nearby(v, cell);
    }
    ids
}

#[cfg(test)]
mod tests {
    use crate::geometry::{Point2, PolygonRegion};
    use crate::infrastructure::build_grid_roadmap;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn corridor_gets_a_centerline_chain() {
        // two rooms joined by a 1.2 m wide corridor centered at y = 5.3
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(20.0, 10.0))
            .with_hole(PolygonRegion::rect_ring(p(7.0, 0.3), p(13.0, 4.7)))
            .with_hole(PolygonRegion::rect_ring(p(7.0, 5.9), p(13.0, 9.7)));
        let rm = build_grid_roadmap(&ws, 1.3, 0.5, &[p(2.0, 5.0), p(18.0, 5.0)]).unwrap();
        let inside: Vec<&Point2> = rm.vertices.iter().filter(|v| v.x > 7.5 && v.x < 12.5).collect();
        assert!(!inside.is_empty());
        for v in inside {
            assert!((v.y - 5.3).abs() < 0.1 + 1e-9, "{v:?}");
        }
    }
}
