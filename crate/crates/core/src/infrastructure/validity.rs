use super::{build_grid_roadmap, EndpointId, InfraError, Infrastructure, Roadmap, VertexId};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

/// Outcome of checking a roadmap against the valid-infrastructure property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    /// Endpoint pairs `(a, b)`, `a < b`, with no qualifying path.
    pub failing_pairs: Vec<(EndpointId, EndpointId)>,
    pub r_bar: f64,
    /// Grid spacing of the roadmap the verdict was computed on.
    pub resolution: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub vertices: Vec<VertexId>,
    pub length: f64,
}

/// Number of `dt` steps needed to cover `length` at speed `v_max`; at least
/// one, so waiting in place also takes a step.
pub fn edge_steps(length: f64, v_max: f64, dt: f64) -> u32 {
    let raw = length / (dt * v_max);
    // 1.3 / 0.65 must be exactly two steps despite rounding noise
    let steps = (raw - 1e-9).ceil();
    steps.max(1.0) as u32
}

#[derive(PartialEq)]
struct Entry<W> {
    cost: W,
    v: VertexId,
}

impl<W: PartialOrd> Eq for Entry<W> where W: PartialEq {}

impl<W: PartialOrd + PartialEq> Ord for Entry<W> {
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal).then_with(|| o.v.cmp(&self.v))
    }
}

impl<W: PartialOrd + PartialEq> PartialOrd for Entry<W> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Single-source Dijkstra over the edges accepted by `usable`, weighted by
/// `weight`. Returns distances and predecessors.
fn dijkstra<W, F, U>(rm: &Roadmap, src: VertexId, weight: F, usable: U) -> (Vec<Option<W>>, Vec<usize>)
where
    W: Copy + PartialOrd + std::ops::Add<Output = W> + Default,
    F: Fn(usize) -> W,
    U: Fn(usize) -> bool,
{
    let n = rm.vertex_count();
    let mut dist: Vec<Option<W>> = vec![None; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src] = Some(W::default());
    heap.push(Entry { cost: W::default(), v: src });
    while let Some(Entry { cost, v }) = heap.pop() {
        if dist[v].is_some_and(|d| cost > d) {
            continue;
        }
        for &(w, e) in rm.neighbors(v) {
            if !usable(e) {
                continue;
            }
            let nd = cost + weight(e);
            if dist[w].is_none_or(|d| nd < d) {
                dist[w] = Some(nd);
                prev[w] = v;
                heap.push(Entry { cost: nd, v: w });
            }
        }
    }
    (dist, prev)
}

/// Minimum-length path from `from` to `to` that avoids every edge blocked by
/// an endpoint in `forbidden`.
pub fn static_shortest_path(
    rm: &Roadmap,
    from: VertexId,
    to: VertexId,
    forbidden: &BTreeSet<EndpointId>,
) -> Option<PathResult> {
    if from == to {
        return Some(PathResult { vertices: Vec::new(), length: 0.0 });
    }
    let (dist, prev) = dijkstra(
        rm,
        from,
        |e| rm.edges[e].length,
        |e| rm.edges[e].blocking.iter().all(|b| !forbidden.contains(b)),
    );
    let length = dist[to]?;
    let mut vertices = vec![to];
    let mut v = to;
    while v != from {
        v = prev[v];
        vertices.push(v);
    }
    vertices.reverse();
    Some(PathResult { vertices, length })
}

/// Step distance (in `dt` units at `v_max`) from every vertex to `goal`,
/// ignoring endpoint blocking. `None` for vertices that cannot reach it.
pub fn step_distances_to(rm: &Roadmap, goal: VertexId, v_max: f64, dt: f64) -> Vec<Option<u32>> {
    let steps: Vec<u32> = rm.edges.iter().map(|e| edge_steps(e.length, v_max, dt)).collect();
    dijkstra(rm, goal, |e| steps[e], |_| true).0
}

fn pair_reachable(rm: &Roadmap, a: EndpointId, b: EndpointId) -> bool {
    let (src, dst) = (rm.endpoint_vertex[a], rm.endpoint_vertex[b]);
    let mut seen = vec![false; rm.vertex_count()];
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(v) = queue.pop_front() {
        if v == dst {
            return true;
        }
        for &(w, e) in rm.neighbors(v) {
            if !seen[w] && rm.edges[e].usable_between(a, b) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Checks that every pair of endpoints is joined by a roadmap path whose
/// edges keep `r̄` from obstacles (guaranteed by construction) and `2 r̄`
/// from every other endpoint.
pub fn check_valid_roadmap(rm: &Roadmap, infra: &Infrastructure, r_bar: f64) -> ValidityReport {
    debug_assert!((rm.r_bar - r_bar).abs() < 1e-12, "roadmap built for a different radius");
    debug_assert_eq!(rm.endpoint_count(), infra.endpoints.len());
    let k = rm.endpoint_count();
    let mut failing_pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if !pair_reachable(rm, a, b) {
                failing_pairs.push((a, b));
            }
        }
    }
    ValidityReport { valid: failing_pairs.is_empty(), failing_pairs, r_bar, resolution: rm.cell }
}

/// Decides validity of the infrastructure itself on an auxiliary grid a
/// quarter of `cell` wide. Sound but resolution-limited: a `valid` verdict
/// exhibits real paths, an `invalid` one may be a resolution artifact.
pub fn check_valid_infrastructure(infra: &Infrastructure, r_bar: f64, cell: f64) -> Result<ValidityReport, InfraError> {
    let fine = build_grid_roadmap(&infra.workspace, cell / 4.0, r_bar, &infra.endpoints)?;
    Ok(check_valid_roadmap(&fine, infra, r_bar))
}

fn pair_forbidden(k: usize, a: EndpointId, b: EndpointId) -> BTreeSet<EndpointId> {
    (0..k).filter(|&e| e != a && e != b).collect()
}

/// `r`: longest endpoint-to-endpoint shortest path (avoiding all other
/// endpoints) divided by the slowest robot's speed.
pub fn compute_r_bound(rm: &Roadmap, infra: &Infrastructure, v_min: f64) -> Result<f64, InfraError> {
    debug_assert_eq!(rm.endpoint_count(), infra.endpoints.len());
    let k = rm.endpoint_count();
    let mut longest = 0.0f64;
    let mut failing = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let path = static_shortest_path(rm, rm.endpoint_vertex[a], rm.endpoint_vertex[b], &pair_forbidden(k, a, b));
            match path {
                Some(p) => longest = longest.max(p.length),
                None => failing.push((a, b)),
            }
        }
    }
    if !failing.is_empty() {
        return Err(InfraError::InvalidInfrastructure(failing));
    }
    Ok(longest / v_min)
}

/// Like [`compute_r_bound`] but in the discretized time the planner
/// actually needs: the longest endpoint-avoiding path measured in rounded-up
/// edge steps, times `dt`.
pub fn discrete_r_bound(rm: &Roadmap, v_min: f64, dt: f64) -> Result<f64, InfraError> {
    let k = rm.endpoint_count();
    let steps: Vec<u32> = rm.edges.iter().map(|e| edge_steps(e.length, v_min, dt)).collect();
    let mut longest = 0u32;
    let mut failing = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let (d, _) = dijkstra(rm, rm.endpoint_vertex[a], |e| steps[e], |e| rm.edges[e].usable_between(a, b));
            match d[rm.endpoint_vertex[b]] {
                Some(s) => longest = longest.max(s),
                None => failing.push((a, b)),
            }
        }
    }
    if !failing.is_empty() {
        return Err(InfraError::InvalidInfrastructure(failing));
    }
    Ok(longest as f64 * dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, PolygonRegion};

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn discretization_constants() {
        assert_eq!(edge_steps(1.3, 1.0, 0.65), 2);
        assert_eq!(edge_steps(1.83, 1.0, 0.65), 3);
        assert_eq!(edge_steps(1.3 * 2f64.sqrt(), 1.0, 0.65), 3);
        assert_eq!(edge_steps(0.0, 1.0, 0.65), 1);
    }

    /// Straight chain of `n` vertices spaced `gap` apart, endpoints at the
    /// given vertex indices.
    fn chain(n: usize, gap: f64, ends: Vec<usize>) -> Roadmap {
        let vertices = (0..n).map(|i| p(i as f64 * gap, 0.0)).collect();
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Roadmap::from_parts(vertices, &edges, ends, 0.5)
    }

    #[test]
    fn identity_path_is_empty() {
        let rm = chain(5, 1.3, vec![0, 4]);
        let path = static_shortest_path(&rm, 2, 2, &BTreeSet::new()).unwrap();
        assert!(path.vertices.is_empty());
        assert_eq!(path.length, 0.0);
    }

    #[test]
    fn chain_path_is_the_chain() {
        let rm = chain(5, 1.3, vec![0, 4]);
        let path = static_shortest_path(&rm, 0, 4, &BTreeSet::new()).unwrap();
        assert_eq!(path.vertices, vec![0, 1, 2, 3, 4]);
        assert!((path.length - 5.2).abs() < 1e-12);
    }

    #[test]
    fn r_bound_on_straight_chain() {
        let rm = chain(11, 1.3, vec![0, 10]);
        let infra = Infrastructure::new(PolygonRegion::rectangle(p(-1.0, -1.0), p(14.0, 1.0)), vec![p(0.0, 0.0), p(13.0, 0.0)]).unwrap();
        assert!((compute_r_bound(&rm, &infra, 1.0).unwrap() - 13.0).abs() < 1e-9);
        assert!((discrete_r_bound(&rm, 1.0, 0.65).unwrap() - 13.0).abs() < 1e-9);
    }

    #[test]
    fn middle_endpoint_on_chain_is_invalid() {
        let rm = chain(11, 1.3, vec![0, 5, 10]);
        let infra = Infrastructure::new(
            PolygonRegion::rectangle(p(-1.0, -1.0), p(14.0, 1.0)),
            vec![p(0.0, 0.0), p(6.5, 0.0), p(13.0, 0.0)],
        )
        .unwrap();
        let report = check_valid_roadmap(&rm, &infra, 0.5);
        assert!(!report.valid);
        assert_eq!(report.failing_pairs, vec![(0, 2)]);
        assert_eq!(compute_r_bound(&rm, &infra, 1.0), Err(InfraError::InvalidInfrastructure(vec![(0, 2)])));
    }
}
