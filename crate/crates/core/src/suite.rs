//! Batch experiments: many seeded runs across maps, fleet sizes and
//! algorithms, raw per-task CSVs and the aggregate table built from them.

use crate::scenario::{Algorithm, Scenario, ScenarioError};
use crate::sim::{self, read_records_csv, Outcome, RunOptions, RunResult, RunSummary, TaskRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteMap {
    /// Scenario file, relative to the suite file.
    pub file: PathBuf,
    /// Overrides the scenario's own name in output file names.
    #[serde(default)]
    pub name: Option<String>,
    pub robot_counts: Vec<usize>,
    pub repetitions: usize,
    /// Explicit per-repetition seeds; derived from the master seed if absent.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSuite {
    pub maps: Vec<SuiteMap>,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    #[serde(default)]
    pub tasks_per_robot: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl BenchmarkSuite {
    pub fn load(path: &Path) -> Result<Self, SuiteError> {
        let s: BenchmarkSuite = serde_json::from_str(&fs::read_to_string(path)?)?;
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), SuiteError> {
        for m in &self.maps {
            if m.repetitions == 0 {
                return Err(SuiteError::Invalid(format!("{}: repetitions must be at least 1", m.file.display())));
            }
            if let Some(seeds) = &m.seeds {
                if seeds.len() < m.repetitions {
                    return Err(SuiteError::Invalid(format!("{}: fewer seeds than repetitions", m.file.display())));
                }
            }
        }
        if self.algorithms.is_empty() {
            return Err(SuiteError::Invalid("no algorithms".into()));
        }
        Ok(())
    }
}

/// One run of the suite.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub map: String,
    pub algorithm: Algorithm,
    pub robots: usize,
    pub rep: usize,
    pub seed: u64,
    pub scenario: Scenario,
}

impl RunSpec {
    pub fn file_stem(&self) -> String {
        run_file_stem(&self.map, self.algorithm, self.robots, self.rep)
    }
}

pub fn run_file_stem(map: &str, alg: Algorithm, n: usize, rep: usize) -> String {
    format!("{map}__{alg}__n{n}__rep{rep}")
}

fn parse_file_stem(stem: &str) -> Option<(String, Algorithm, usize, usize)> {
    let parts: Vec<&str> = stem.split("__").collect();
    let [map, alg, n, rep] = parts[..] else { return None };
    let alg = match alg {
        "cobra" => Algorithm::Cobra,
        "orca" => Algorithm::Orca,
        _ => return None,
    };
    Some((map.to_string(), alg, n.strip_prefix('n')?.parse().ok()?, rep.strip_prefix("rep")?.parse().ok()?))
}

/// Expands the suite into runs. Seeds come from one stream seeded by
/// `master_seed`, drawn per (map, robot count, repetition) in file order, so
/// every algorithm sees the same workloads.
pub fn expand(suite: &BenchmarkSuite, base: &Path) -> Result<Vec<RunSpec>, SuiteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(suite.master_seed);
    let mut specs = Vec::new();
    for m in &suite.maps {
        let path = base.join(&m.file);
        let sc = Scenario::load(&path).map_err(|source| SuiteError::Scenario { path: path.clone(), source })?;
        let name = m.name.clone().unwrap_or_else(|| sc.name.clone());
        for &n in &m.robot_counts {
            for rep in 0..m.repetitions {
                let drawn: u64 = rng.random();
                let seed = m.seeds.as_ref().map_or(drawn, |s| s[rep]);
                for &alg in &suite.algorithms {
                    let mut s = sc.with_fleet(n, seed);
                    s.algorithm = alg;
                    if let Some(k) = suite.tasks_per_robot {
                        s.tasks_per_robot = k;
                    }
                    specs.push(RunSpec { map: name.clone(), algorithm: alg, robots: n, rep, seed, scenario: s });
                }
            }
        }
    }
    Ok(specs)
}

pub fn run_spec(spec: &RunSpec) -> Result<RunResult, SuiteError> {
    let prepared = spec
        .scenario
        .prepare()
        .map_err(|source| SuiteError::Scenario { path: PathBuf::from(&spec.map), source })?;
    sim::run(&prepared, &RunOptions::default()).map_err(|source| SuiteError::Scenario { path: PathBuf::from(&spec.map), source })
}

/// One row of the aggregate table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub map: String,
    pub algorithm: Algorithm,
    pub robots: usize,
    pub runs: usize,
    pub tasks: usize,
    pub successes: usize,
    /// Fraction of runs in which every task succeeded.
    pub run_success_rate: f64,
    pub task_success_rate: f64,
    /// Over successful tasks; population standard deviation.
    pub mean_prolongation: Option<f64>,
    pub std_prolongation: Option<f64>,
}

type GroupKey = (String, Algorithm, usize);

/// Builds the table from raw records grouped by run. Runs are visited in key
/// order so the floating-point sums do not depend on completion order.
pub fn aggregate<'a, I>(runs: I) -> Vec<AggregateRow>
where
    I: IntoIterator<Item = ((String, Algorithm, usize, usize), &'a [TaskRecord])>,
{
    let mut sorted: BTreeMap<(String, Algorithm, usize, usize), &[TaskRecord]> = BTreeMap::new();
    for (k, recs) in runs {
        sorted.insert(k, recs);
    }
    let mut groups: BTreeMap<GroupKey, (usize, usize, usize, usize, Vec<f64>)> = BTreeMap::new();
    for ((map, alg, n, _), recs) in sorted {
        let g = groups.entry((map, alg, n)).or_default();
        let ok = recs.iter().filter(|r| r.outcome == Outcome::Success).count();
        g.0 += 1;
        g.1 += recs.len();
        g.2 += ok;
        g.3 += usize::from(ok == recs.len());
        g.4.extend(recs.iter().filter(|r| r.outcome == Outcome::Success).filter_map(|r| r.p));
    }
    groups
        .into_iter()
        .map(|((map, algorithm, robots), (runs, tasks, successes, clean, ps))| {
            let (mean, std) = mean_std(&ps).unzip();
            AggregateRow {
                map,
                algorithm,
                robots,
                runs,
                tasks,
                successes,
                run_success_rate: clean as f64 / runs as f64,
                task_success_rate: if tasks == 0 { 1.0 } else { successes as f64 / tasks as f64 },
                mean_prolongation: mean,
                std_prolongation: std,
            }
        })
        .collect()
}

pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Recomputes the aggregate table from the raw CSVs in `dir`.
pub fn aggregate_from_dir(dir: &Path) -> Result<Vec<AggregateRow>, SuiteError> {
    let mut runs = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(key) = path.file_stem().and_then(|s| s.to_str()).and_then(parse_file_stem) else { continue };
        runs.push((key, read_records_csv(fs::File::open(&path)?)?));
    }
    Ok(aggregate(runs.iter().map(|(k, r)| (k.clone(), r.as_slice()))))
}

pub fn write_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<(), SuiteError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub struct SuiteRun {
    pub spec: RunSpec,
    pub result: RunResult,
}

pub struct SuiteReport {
    pub runs: Vec<SuiteRun>,
    pub aggregate: Vec<AggregateRow>,
}

impl SuiteReport {
    pub fn monitor_violations(&self) -> usize {
        self.runs.iter().map(|r| r.result.violations.len()).sum()
    }

    /// Mean prolongation of COBRA over ORCA per (map, n), where both have one.
    pub fn speed_ratios(&self) -> Vec<(String, usize, f64)> {
        let mut out = Vec::new();
        for a in self.aggregate.iter().filter(|r| r.algorithm == Algorithm::Cobra) {
            let b = self.aggregate.iter().find(|r| r.algorithm == Algorithm::Orca && r.map == a.map && r.robots == a.robots);
            if let (Some(pa), Some(pb)) = (a.mean_prolongation, b.and_then(|b| b.mean_prolongation)) {
                out.push((a.map.clone(), a.robots, pa / pb));
            }
        }
        out
    }
}

/// Runs every spec in parallel and writes, under `out`:
/// `raw/<stem>.csv`, `raw/<stem>.summary.json`, `aggregate.csv` and
/// `planning_times.csv` (wall clock, so not reproducible).
pub fn run_suite(specs: Vec<RunSpec>, out: &Path) -> Result<SuiteReport, SuiteError> {
    let raw = out.join("raw");
    fs::create_dir_all(&raw)?;
    let results: Vec<Result<SuiteRun, SuiteError>> = specs
        .into_par_iter()
        .map(|spec| {
            let result = run_spec(&spec)?;
            let stem = spec.file_stem();
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            fs::write(raw.join(format!("{stem}.csv")), buf)?;
            let orca = (spec.algorithm == Algorithm::Orca).then_some(spec.scenario.orca);
            let summary: RunSummary = result.summary(orca);
            fs::write(raw.join(format!("{stem}.summary.json")), serde_json::to_string_pretty(&summary)?)?;
            Ok(SuiteRun { spec, result })
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(runs.iter().map(|r| {
        ((r.spec.map.clone(), r.spec.algorithm, r.spec.robots, r.spec.rep), r.result.records.as_slice())
    }));
    write_aggregate_csv(&aggregate, &out.join("aggregate.csv"))?;
    let mut w = csv::Writer::from_path(out.join("planning_times.csv"))?;
    w.write_record(["map", "algorithm", "robots", "rep", "seconds"])?;
    for r in &runs {
        for t in &r.result.planning_times {
            let s = &r.spec;
            w.write_record([s.map.clone(), s.algorithm.to_string(), s.robots.to_string(), s.rep.to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(SuiteReport { runs, aggregate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub robots: usize,
    pub calls: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log(mean time) against log(n).
    pub slope: Option<f64>,
}

/// Wall-clock planning time of COBRA per fleet size. Runs are sequential so
/// they do not compete for cores.
pub fn scaling_probe(template: &Scenario, ns: &[usize], repetitions: usize, master_seed: u64) -> Result<ScalingReport, SuiteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let mut rows = Vec::new();
    for &n in ns {
        let mut times = Vec::new();
        for _ in 0..repetitions.max(1) {
            let mut s = template.with_fleet(n, rng.random());
            s.algorithm = Algorithm::Cobra;
            let prepared = s.prepare().map_err(|source| SuiteError::Scenario { path: PathBuf::from(&s.name), source })?;
            let r = sim::run(&prepared, &RunOptions::default()).map_err(|source| SuiteError::Scenario { path: PathBuf::from(&s.name), source })?;
            times.extend(r.planning_times);
        }
        let (mean, std) = mean_std(&times).unwrap_or((0.0, 0.0));
        rows.push(ScalingRow { robots: n, calls: times.len(), mean_seconds: mean, std_seconds: std, max_seconds: times.iter().copied().fold(0.0, f64::max) });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.mean_seconds > 0.0).map(|r| ((r.robots as f64).ln(), r.mean_seconds.ln())).collect();
    Ok(ScalingReport { slope: fit_slope(&pts), rows })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct x.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (pts.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0].iter().map(|&n| (n.ln(), (3.0 * n * n).ln())).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }

    #[test]
    fn file_stem_round_trip() {
        let stem = run_file_stem("office_b", Algorithm::Orca, 8, 3);
        assert_eq!(parse_file_stem(&stem), Some(("office_b".into(), Algorithm::Orca, 8, 3)));
        assert_eq!(parse_file_stem("aggregate"), None);
    }

    #[test]
    fn aggregate_counts() {
        let ok = |p| TaskRecord { robot: 0, s: 0, g: Some(1), issue: Some(0.0), start: Some(0.0), arrival: Some(1.0), t_prime: Some(1.0), p: Some(p), outcome: Outcome::Success };
        let a = vec![ok(1.0), ok(3.0)];
        let b = vec![ok(2.0), TaskRecord::not_issued(0, 0)];
        let rows = aggregate([(("m".to_string(), Algorithm::Cobra, 2, 0), a.as_slice()), (("m".to_string(), Algorithm::Cobra, 2, 1), b.as_slice())]);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.runs, r.tasks, r.successes), (2, 4, 3));
        assert_eq!(r.run_success_rate, 0.5);
        assert_eq!(r.mean_prolongation, Some(2.0));
        assert!((r.std_prolongation.unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
