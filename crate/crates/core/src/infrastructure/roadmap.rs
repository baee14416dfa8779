use super::augment::augment_components;
use super::{EndpointId, InfraError, Infrastructure, VertexId};
use crate::geometry::{clear_of, point_clearance, segment_clearance, segment_disc_min_distance, Disc, Point2, PolygonRegion, Segment2, EPS};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Endpoints are linked to grid vertices within this many cells.
pub const ENDPOINT_SNAP_FACTOR: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadmapEdge {
    pub a: VertexId,
    pub b: VertexId,
    pub length: f64,
    /// Endpoints whose `2 r̄` disc the edge segment enters (sorted).
    pub blocking: Vec<EndpointId>,
}

impl RoadmapEdge {
    /// Usable on a path between endpoints `a` and `b` when nothing but those
    /// two endpoints blocks it.
    #[inline]
    pub fn usable_between(&self, a: EndpointId, b: EndpointId) -> bool {
        self.blocking.iter().all(|&e| e == a || e == b)
    }

    #[inline]
    pub fn other(&self, v: VertexId) -> VertexId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Undirected roadmap `G = (V, L)` over a workspace. Every endpoint is a
/// vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Roadmap {
    pub vertices: Vec<Point2>,
    pub edges: Vec<RoadmapEdge>,
    /// `endpoint_vertex[e]` is the vertex standing for endpoint `e`.
    pub endpoint_vertex: Vec<VertexId>,
    pub r_bar: f64,
    /// Grid cell used to build the roadmap, if it came from a grid.
    pub cell: Option<f64>,
    adjacency: Vec<Vec<(VertexId, usize)>>,
}

impl Roadmap {
    /// Assembles a roadmap from explicit vertices and edges, computing edge
    /// lengths and blocking sets against `endpoints` and `r_bar`.
    /// `endpoint_vertex[e]` must be the vertex located at endpoint `e`.
    pub fn from_parts(
        vertices: Vec<Point2>,
        edge_pairs: &[(VertexId, VertexId)],
        endpoint_vertex: Vec<VertexId>,
        r_bar: f64,
    ) -> Self {
        let endpoints: Vec<Point2> = endpoint_vertex.iter().map(|&v| vertices[v]).collect();
        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(edge_pairs.len());
        for &(a, b) in edge_pairs {
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            let seg = Segment2::new(vertices[a], vertices[b]);
            edges.push(RoadmapEdge { a, b, length: seg.length(), blocking: blocking_set(&seg, &endpoints, r_bar) });
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, i));
            adjacency[e.b].push((e.a, i));
        }
        Roadmap { vertices, edges, endpoint_vertex, r_bar, cell: None, adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// `(neighbor, edge index)` pairs of `v`, in insertion order.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, usize)] {
        &self.adjacency[v]
    }

    pub fn endpoint_count(&self) -> usize {
        self.endpoint_vertex.len()
    }

    /// Endpoint that `v` stands for, if any.
    pub fn endpoint_of(&self, v: VertexId) -> Option<EndpointId> {
        self.endpoint_vertex.iter().position(|&x| x == v)
    }

    pub fn segment(&self, edge: usize) -> Segment2 {
        let e = &self.edges[edge];
        Segment2::new(self.vertices[e.a], self.vertices[e.b])
    }

    /// Vertex closest to `p`.
    pub fn nearest_vertex(&self, p: Point2) -> VertexId {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.dist(p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Connected components as a component id per vertex.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            comp[s] = next;
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

pub(crate) fn blocking_set(seg: &Segment2, endpoints: &[Point2], r_bar: f64) -> Vec<EndpointId> {
    endpoints
        .iter()
        .enumerate()
        .filter(|(_, &e)| segment_disc_min_distance(seg, &Disc::new(e, 2.0 * r_bar)) < EPS)
        .map(|(i, _)| i)
        .collect()
}

/// Mutable graph used while building.
pub(crate) struct GraphBuilder<'a> {
    pub ws: &'a PolygonRegion,
    pub r_bar: f64,
    pub vertices: Vec<Point2>,
    pub edges: BTreeSet<(VertexId, VertexId)>,
}

impl<'a> GraphBuilder<'a> {
    pub fn segment_ok(&self, a: Point2, b: Point2) -> bool {
        clear_of(segment_clearance(&Segment2::new(a, b), self.ws), self.r_bar)
    }

    pub fn add_edge(&mut self, a: VertexId, b: VertexId) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn components(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        (0..n).map(|v| find(&mut parent, v)).collect()
    }

    /// Links `v` to every existing vertex within `radius` through a clear
    /// segment.
    pub fn link_nearby(&mut self, v: VertexId, radius: f64) {
        let p = self.vertices[v];
        let candidates: Vec<VertexId> = (0..self.vertices.len())
            .filter(|&w| w != v && self.vertices[w].dist(p) <= radius + EPS)
            .collect();
        for w in candidates {
            if self.segment_ok(p, self.vertices[w]) {
                self.add_edge(v, w);
            }
        }
    }
}

/// Builds an 8-connected grid roadmap with spacing `cell` over `ws`, keeping
/// vertices and edges with more than `r_bar` clearance, snaps the endpoints
/// in, bridges narrow passages the base grid misses, and keeps only the
/// component holding the endpoints.
pub fn build_grid_roadmap(
    ws: &PolygonRegion,
    cell: f64,
    r_bar: f64,
    endpoints: &[Point2],
) -> Result<Roadmap, InfraError> {
    if !(cell > 0.0) {
        return Err(InfraError::BadCell);
    }
    let infra = Infrastructure::new(ws.clone(), endpoints.to_vec())?;
    infra.check_standable(r_bar)?;

    let (min, max) = ws.bounds();
    let nx = ((max.x - min.x) / cell).floor() as usize + 1;
    let ny = ((max.y - min.y) / cell).floor() as usize + 1;
    let mut b = GraphBuilder { ws, r_bar, vertices: Vec::new(), edges: BTreeSet::new() };
    let mut grid: BTreeMap<(usize, usize), VertexId> = BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            let p = Point2::new(min.x + i as f64 * cell, min.y + j as f64 * cell);
            if clear_of(point_clearance(p, ws), r_bar) {
                grid.insert((i, j), b.vertices.len());
                b.vertices.push(p);
            }
        }
    }
    let grid_cells: Vec<((usize, usize), VertexId)> = grid.iter().map(|(&k, &v)| (k, v)).collect();
    for &((i, j), v) in &grid_cells {
        for (di, dj) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 {
                continue;
            }
            if let Some(&w) = grid.get(&(ni as usize, nj as usize)) {
                if b.segment_ok(b.vertices[v], b.vertices[w]) {
                    b.add_edge(v, w);
                }
            }
        }
    }

    let grid_count = b.vertices.len();
    let mut endpoint_vertex = Vec::with_capacity(endpoints.len());
    for &e in endpoints {
        if let Some(v) = (0..grid_count).find(|&v| b.vertices[v].dist(e) <= EPS) {
            endpoint_vertex.push(v);
            continue;
        }
        let v = b.vertices.len();
        b.vertices.push(e);
        for w in 0..grid_count {
            if b.vertices[w].dist(e) <= ENDPOINT_SNAP_FACTOR * cell + EPS && b.segment_ok(e, b.vertices[w]) {
                b.add_edge(v, w);
            }
        }
        endpoint_vertex.push(v);
    }

    augment_components(&mut b, cell, &endpoint_vertex);

    // keep the component of the first endpoint
    let comp = b.components();
    let keep = comp[endpoint_vertex[0]];
    let stray: Vec<EndpointId> = endpoint_vertex
        .iter()
        .enumerate()
        .filter(|(_, &v)| comp[v] != keep)
        .map(|(i, _)| i)
        .collect();
    if !stray.is_empty() {
        return Err(InfraError::EndpointDisconnected(stray));
    }
    let mut remap = vec![usize::MAX; b.vertices.len()];
    let mut vertices = Vec::new();
    for (v, &p) in b.vertices.iter().enumerate() {
        if comp[v] == keep {
            remap[v] = vertices.len();
            vertices.push(p);
        }
    }
    let pairs: Vec<(VertexId, VertexId)> = b
        .edges
        .iter()
        .filter(|(a, _)| comp[*a] == keep)
        .map(|&(a, c)| (remap[a], remap[c]))
        .collect();
    let endpoint_vertex = endpoint_vertex.iter().map(|&v| remap[v]).collect();
    let mut rm = Roadmap::from_parts(vertices, &pairs, endpoint_vertex, r_bar);
    rm.cell = Some(cell);
    Ok(rm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn open_square_grid_lengths() {
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(10.0, 10.0));
        let rm = build_grid_roadmap(&ws, 1.3, 0.5, &[p(1.3, 1.3), p(7.8, 7.8)]).unwrap();
        // grid points 1.3, 2.6, ..., 9.1 on both axes
        assert_eq!(rm.vertex_count(), 49);
        for e in &rm.edges {
            assert!((e.length - 1.3).abs() < 1e-9 || (e.length - 1.3 * 2f64.sqrt()).abs() < 1e-9);
        }
        let diag = rm.edges.iter().map(|e| e.length).fold(0.0, f64::max);
        assert!((diag - 1.838).abs() < 1e-3);
        // full 8-connectivity of a 7x7 lattice
        assert_eq!(rm.edges.len(), 2 * 7 * 6 + 2 * 6 * 6);
        // endpoints coincide with grid points and are reused
        assert_eq!(rm.vertices[rm.endpoint_vertex[0]], p(1.3, 1.3));
    }

    #[test]
    fn corridor_too_narrow_has_no_vertices() {
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(10.0, 10.0))
            .with_hole(PolygonRegion::rect_ring(p(2.0, 2.0), p(8.0, 4.55)))
            .with_hole(PolygonRegion::rect_ring(p(2.0, 5.45), p(8.0, 8.0)));
        let rm = build_grid_roadmap(&ws, 1.3, 0.5, &[p(1.0, 1.0), p(9.0, 9.0)]).unwrap();
        for v in &rm.vertices {
            assert!(!(v.x > 2.0 && v.x < 8.0 && v.y > 4.55 && v.y < 5.45), "vertex {v:?} inside corridor");
        }
    }

    #[test]
    fn blocking_sets_follow_endpoint_discs() {
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(12.0, 12.0));
        let eps = [p(2.0, 2.0), p(6.0, 6.2), p(10.0, 10.0)];
        let rm = build_grid_roadmap(&ws, 1.3, 0.5, &eps).unwrap();
        for (i, e) in rm.edges.iter().enumerate() {
            let seg = rm.segment(i);
            for (k, &ep) in eps.iter().enumerate() {
                let d = segment_disc_min_distance(&seg, &Disc::new(ep, 1.0));
                if d.abs() > EPS {
                    assert_eq!(e.blocking.contains(&k), d < 0.0, "edge {i} endpoint {k} d={d}");
                } else {
                    // tangent to the 2r̄ disc: touching counts as blocked
                    assert!(e.blocking.contains(&k));
                }
            }
        }
    }

    #[test]
    fn endpoint_outside_free_space_rejected() {
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(10.0, 10.0));
        let err = build_grid_roadmap(&ws, 1.3, 0.5, &[p(0.2, 5.0), p(5.0, 5.0)]).unwrap_err();
        assert!(matches!(err, InfraError::EndpointNotStandable(0, _, _)));
    }

    #[test]
    fn sealed_room_endpoint_is_disconnected() {
        // the gaps above and below the wall are narrower than a robot
        let ws = PolygonRegion::rectangle(p(0.0, 0.0), p(10.0, 10.0))
            .with_hole(PolygonRegion::rect_ring(p(4.0, 0.3), p(6.0, 9.7)));
        let err = build_grid_roadmap(&ws, 1.3, 0.5, &[p(2.0, 5.0), p(8.0, 5.0)]).unwrap_err();
        assert_eq!(err, InfraError::EndpointDisconnected(vec![1]));
    }
}
