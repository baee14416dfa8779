mod common;

use cobra_core::sim::{run, CobraSim, Outcome, RunOptions};
use cobra_core::{Algorithm, Scenario};
use std::path::Path;

fn load(name: &str) -> Scenario {
    Scenario::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))).unwrap()
}

#[test]
fn runs_are_byte_identical() {
    for alg in [Algorithm::Cobra, Algorithm::Orca] {
        let mut sc = load("warehouse").with_fleet(5, 77);
        sc.algorithm = alg;
        let p = sc.prepare().unwrap();
        let a = run(&p, &RunOptions { trace: true }).unwrap();
        let b = run(&p, &RunOptions { trace: true }).unwrap();
        assert_eq!(a.csv_string(), b.csv_string());
        assert_eq!(serde_json::to_string(&a.summary(None)).unwrap(), serde_json::to_string(&b.summary(None)).unwrap());
        let (mut ta, mut tb) = (Vec::new(), Vec::new());
        a.write_trace_jsonl(&mut ta).unwrap();
        b.write_trace_jsonl(&mut tb).unwrap();
        assert_eq!(ta, tb);
    }
}

/// Executed motion, sampled every millisecond, never brings two robots
/// into contact.
#[test]
fn cobra_motion_is_separated_at_one_millisecond() {
    let p = load("office").with_fleet(6, 4).prepare().unwrap();
    let mut sim = CobraSim::new(&p, true).unwrap();
    while !sim.done() && sim.time() < p.scenario.timeout {
        sim.tick(false);
    }
    let end = sim.time();
    let n = sim.robot_count();
    let mut worst = f64::INFINITY;
    let steps = (end / 1e-3) as usize;
    for k in 0..=steps {
        let t = k as f64 * 1e-3;
        let pos: Vec<_> = (0..n).map(|i| sim.position(i, t)).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.min(pos[i].dist(pos[j]) - p.robots[i].radius - p.robots[j].radius);
            }
        }
    }
    assert!(worst >= -1e-9, "margin {worst}");
    assert!(sim.min_margin() <= worst + 1e-9, "monitor {} missed {worst}", sim.min_margin());
}

#[test]
fn baseline_time_is_the_static_shortest_path() {
    let p = load("hall").with_fleet(3, 12).prepare().unwrap();
    let r = run(&p, &RunOptions::default()).unwrap();
    for rec in &r.records {
        let (Some(g), Some(tp)) = (rec.g, rec.t_prime) else { continue };
        let rm = &p.roadmap;
        let d = common::dijkstra(rm, rm.endpoint_vertex[rec.s], |e| rm.edges[e].length)[rm.endpoint_vertex[g]].unwrap();
        assert!((tp - d / p.robots[rec.robot].v_max).abs() < 1e-9);
        if rec.outcome == Outcome::Success {
            let want = rec.arrival.unwrap() - rec.issue.unwrap() - tp;
            assert!((rec.p.unwrap() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn every_task_has_a_row_even_when_orca_stalls() {
    let mut sc = load("office").with_fleet(8, 3);
    sc.algorithm = Algorithm::Orca;
    sc.timeout = 120.0;
    let r = run(&sc.prepare().unwrap(), &RunOptions::default()).unwrap();
    assert_eq!(r.records.len(), 8 * sc.tasks_per_robot);
    let per_robot = |i| r.records.iter().filter(|x| x.robot == i).count();
    assert!((0..8).all(|i| per_robot(i) == sc.tasks_per_robot));
    assert!(r.records.iter().any(|x| matches!(x.outcome, Outcome::Timeout | Outcome::NotIssued)));
}
