//! Command implementations behind the `bench` and `serve` binaries.

pub mod serve;

use anyhow::{bail, Context, Result};
use cobra_core::sim::{self, RunOptions};
use cobra_core::suite::{self, BenchmarkSuite, ScalingReport, SuiteReport};
use cobra_core::{Algorithm, Scenario, ValidityReport};
use std::fs;
use std::path::Path;

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading {}", path.display()))
}

/// Runs a suite file. `jobs` bounds the worker threads.
pub fn run_suite(path: &Path, out: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<SuiteReport> {
    let mut s = BenchmarkSuite::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        s.master_seed = seed;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let specs = suite::expand(&s, base)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    Ok(pool.install(|| suite::run_suite(specs, out))?)
}

pub fn validate(path: &Path) -> Result<ValidityReport> {
    let p = load_scenario(path)?.prepare().with_context(|| format!("preparing {}", path.display()))?;
    Ok(p.validity)
}

pub fn scaling(path: &Path, ns: &[usize], repetitions: usize, seed: u64) -> Result<ScalingReport> {
    let sc = load_scenario(path)?;
    Ok(suite::scaling_probe(&sc, ns, repetitions, seed)?)
}

/// Options for a single run written to a directory.
pub struct SingleRun<'a> {
    pub scenario: &'a Path,
    pub out: &'a Path,
    pub robots: Option<usize>,
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub trace: bool,
}

/// Runs one scenario, writing `records.csv`, `summary.json` and optionally
/// `trace.jsonl` and `events.jsonl`. Returns the number of monitor violations.
pub fn run_single(opts: &SingleRun) -> Result<usize> {
    let mut sc = load_scenario(opts.scenario)?;
    if opts.robots.is_some() || opts.seed.is_some() {
        let n = match opts.robots {
            Some(n) => n,
            None => sc.resolve_robots()?.len(),
        };
        sc = sc.with_fleet(n, opts.seed.unwrap_or(sc.seed));
    }
    if let Some(a) = opts.algorithm {
        sc.algorithm = a;
    }
    let p = sc.prepare()?;
    let r = sim::run(&p, &RunOptions { trace: opts.trace })?;
    fs::create_dir_all(opts.out)?;
    r.write_csv(fs::File::create(opts.out.join("records.csv"))?)?;
    let orca = (sc.algorithm == Algorithm::Orca).then_some(sc.orca);
    fs::write(opts.out.join("summary.json"), serde_json::to_string_pretty(&r.summary(orca))?)?;
    if opts.trace {
        r.write_trace_jsonl(fs::File::create(opts.out.join("trace.jsonl"))?)?;
        if let Some(log) = &r.event_log {
            log.write_jsonl(fs::File::create(opts.out.join("events.jsonl"))?)?;
        }
    }
    Ok(r.violations.len())
}

pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    let ns = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().with_context(|| format!("bad robot count {x:?}")))
        .collect::<Result<Vec<_>>>()?;
    if ns.is_empty() || ns.contains(&0) {
        bail!("robot counts must be positive");
    }
    Ok(ns)
}

pub fn format_aggregate(report: &SuiteReport) -> String {
    let mut s = format!(
        "{:<14} {:<6} {:>4} {:>5} {:>9} {:>9} {:>10} {:>10}\n",
        "map", "alg", "n", "runs", "run_ok", "task_ok", "mean_p", "std_p"
    );
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
    for r in &report.aggregate {
        s += &format!(
            "{:<14} {:<6} {:>4} {:>5} {:>9.3} {:>9.3} {:>10} {:>10}\n",
            r.map,
            r.algorithm.to_string(),
            r.robots,
            r.runs,
            r.run_success_rate,
            r.task_success_rate,
            opt(r.mean_prolongation),
            opt(r.std_prolongation)
        );
    }
    for (map, n, ratio) in report.speed_ratios() {
        s += &format!("prolongation cobra/orca {map} n={n}: {ratio:.3}\n");
    }
    s
}
