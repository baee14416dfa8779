mod common;

use cobra_core::geometry::{Point2, PolygonRegion};
use cobra_core::infrastructure::{check_valid_roadmap, edge_steps, Infrastructure, Roadmap};
use common::*;
use proptest::prelude::*;

fn infra_for(rm: &Roadmap) -> Infrastructure {
    let eps = rm.endpoint_vertex.iter().map(|&v| rm.vertices[v]).collect();
    Infrastructure::new(PolygonRegion::rectangle(Point2::new(-50.0, -50.0), Point2::new(50.0, 50.0)), eps).unwrap()
}

#[test]
fn matches_per_pair_bfs_on_random_roadmaps() {
    let (mut valid, mut invalid) = (0, 0);
    for seed in 0..200u64 {
        let r_bar = 0.3 + (seed % 7) as f64 * 0.1;
        let rm = validity_instance(seed, r_bar);
        let report = check_valid_roadmap(&rm, &infra_for(&rm), r_bar);
        let want = brute_force_failing_pairs(&rm, r_bar);
        assert_eq!(report.failing_pairs, want, "seed {seed}");
        assert_eq!(report.valid, want.is_empty());
        if report.valid {
            valid += 1;
        } else {
            invalid += 1;
        }
    }
    assert!(valid >= 20 && invalid >= 20, "valid {valid} invalid {invalid}");
}

#[test]
fn endpoints_beside_corridor_are_valid() {
    let rm = alcoves();
    let report = check_valid_roadmap(&rm, &infra_for(&rm), 0.5);
    assert!(report.valid, "{report:?}");
    assert!(brute_force_failing_pairs(&rm, 0.5).is_empty());
}

#[test]
fn endpoints_in_corridor_are_invalid() {
    let rm = in_corridor();
    let report = check_valid_roadmap(&rm, &infra_for(&rm), 0.5);
    assert_eq!(report.failing_pairs, vec![(0, 2)]);
    assert_eq!(brute_force_failing_pairs(&rm, 0.5), vec![(0, 2)]);
}

#[test]
fn grid_edges_take_two_and_three_steps() {
    assert_eq!(edge_steps(1.3, 1.0, 0.65), 2);
    assert_eq!(edge_steps(1.3 * 2f64.sqrt(), 1.0, 0.65), 3);
    assert_eq!(edge_steps(1.83, 1.0, 0.65), 3);
    assert_eq!(oracle_steps(1.3, 1.0, 0.65), 2);
}

fn rebuild(rm: &Roadmap, r_bar: f64) -> Roadmap {
    let pairs: Vec<_> = rm.edges.iter().map(|e| (e.a, e.b)).collect();
    Roadmap::from_parts(rm.vertices.clone(), &pairs, rm.endpoint_vertex.clone(), r_bar)
}

proptest! {
    /// Shrinking the robots can only help: pairs failing at the smaller
    /// radius also fail at the larger.
    #[test]
    fn validity_is_monotone_in_radius(seed in any::<u64>(), r1 in 0.1..0.8f64, dr in 0.0..0.6f64) {
        let small = validity_instance(seed, r1);
        let large = rebuild(&small, r1 + dr);
        let infra = infra_for(&small);
        let fs = check_valid_roadmap(&small, &infra, r1).failing_pairs;
        let fl = check_valid_roadmap(&large, &infra, r1 + dr).failing_pairs;
        for p in &fs {
            prop_assert!(fl.contains(p), "{p:?} fails at {r1} but not at {}", r1 + dr);
        }
    }

    /// Failing pairs are sorted, unique and agree with the oracle.
    #[test]
    fn report_shape(seed in any::<u64>(), r in 0.2..1.0f64) {
        let rm = validity_instance(seed, r);
        let report = check_valid_roadmap(&rm, &infra_for(&rm), r);
        prop_assert!(report.failing_pairs.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(report.failing_pairs.iter().all(|&(a, b)| a < b));
        prop_assert_eq!(report.failing_pairs, brute_force_failing_pairs(&rm, r));
    }
}
