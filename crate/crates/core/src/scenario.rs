//! Scenario files: a map (workspace plus endpoints) with fleet and workload
//! settings, and the prepared form the simulator runs on.

use crate::geometry::{Point2, PolygonRegion, RegionError};
use crate::infrastructure::{build_grid_roadmap, check_valid_roadmap, InfraError, Infrastructure, Roadmap, ValidityReport};
use crate::protocol::RobotSpec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cobra,
    Orca,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Cobra => "cobra",
            Algorithm::Orca => "orca",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadmapParams {
    pub cell: f64,
    pub r_bar: f64,
}

impl Default for RoadmapParams {
    fn default() -> Self {
        RoadmapParams { cell: 1.3, r_bar: 0.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrcaParams {
    /// Velocity-obstacle time horizon `τ`, seconds.
    pub tau: f64,
    pub sensing: f64,
    pub dt: f64,
    /// Share of the avoidance effort each robot takes on.
    pub responsibility: f64,
    /// Lateral nudge to the desired velocity that breaks exact head-on
    /// symmetry.
    pub lateral_bias: f64,
    /// Distance at which a robot counts as arrived.
    pub arrival_tolerance: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams { tau: 2.0, sensing: 10.0, dt: 0.1, responsibility: 0.5, lateral_bias: 1e-6, arrival_tolerance: 0.05 }
    }
}

/// Fleet given by size: robots share radius and speed and start at
/// distinct endpoints drawn from the run seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub count: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_speed")]
    pub v_max: f64,
}

fn default_radius() -> f64 {
    0.5
}
fn default_speed() -> f64 {
    1.0
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("units must be \"meters\", got {0:?}")]
    Units(String),
    #[error("workspace: {0}")]
    Region(#[from] RegionError),
    #[error(transparent)]
    Infra(#[from] InfraError),
    #[error("scenario has no robots")]
    NoRobots,
    #[error("start endpoint {0} is out of range")]
    BadStart(usize),
    #[error("robots {0} and {1} share a start endpoint")]
    SharedStart(usize, usize),
    #[error("{robots} robots need more than {robots} endpoints, map has {endpoints}")]
    TooManyRobots { robots: usize, endpoints: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

fn default_units() -> String {
    "meters".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_units")]
    pub units: String,
    pub workspace: PolygonRegion,
    pub endpoints: Vec<Point2>,
    #[serde(default)]
    pub roadmap_params: RoadmapParams,
    /// Explicit robots; takes precedence over `fleet`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub robots: Vec<RobotSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet: Option<Fleet>,
    #[serde(default = "d_tasks")]
    pub tasks_per_robot: usize,
    #[serde(default = "d_delay")]
    pub initial_delay: [f64; 2],
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_alg")]
    pub algorithm: Algorithm,
    #[serde(default = "d_sim_dt")]
    pub sim_dt: f64,
    #[serde(default = "d_timeout")]
    pub timeout: f64,
    /// Time step of the time-extended roadmap.
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_tp")]
    pub t_planning: f64,
    #[serde(default)]
    pub orca: OrcaParams,
}

fn d_tasks() -> usize {
    4
}
fn d_delay() -> [f64; 2] {
    [0.0, 30.0]
}
fn d_alg() -> Algorithm {
    Algorithm::Cobra
}
fn d_sim_dt() -> f64 {
    0.05
}
fn d_timeout() -> f64 {
    600.0
}
fn d_dt() -> f64 {
    0.65
}
fn d_tp() -> f64 {
    3.0
}

impl Scenario {
    /// A scenario over a map with every setting at its default.
    pub fn from_map(name: &str, workspace: PolygonRegion, endpoints: Vec<Point2>) -> Self {
        Scenario {
            name: name.into(),
            units: default_units(),
            workspace,
            endpoints,
            roadmap_params: RoadmapParams::default(),
            robots: Vec::new(),
            fleet: None,
            tasks_per_robot: d_tasks(),
            initial_delay: d_delay(),
            seed: 0,
            algorithm: d_alg(),
            sim_dt: d_sim_dt(),
            timeout: d_timeout(),
            dt: d_dt(),
            t_planning: d_tp(),
            orca: OrcaParams::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let mut s: Scenario = serde_json::from_str(text)?;
        if s.units != "meters" {
            return Err(ScenarioError::Units(s.units));
        }
        s.workspace.normalize()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Same map and settings with a fleet of `n` default robots.
    pub fn with_fleet(&self, n: usize, seed: u64) -> Self {
        let mut s = self.clone();
        let (radius, v_max) = self.fleet.map(|f| (f.radius, f.v_max)).unwrap_or((default_radius(), default_speed()));
        s.robots.clear();
        s.fleet = Some(Fleet { count: n, radius, v_max });
        s.seed = seed;
        s
    }

    /// Robot roster: the explicit list, or the fleet placed on endpoints
    /// shuffled by the scenario seed.
    pub fn resolve_robots(&self) -> Result<Vec<RobotSpec>, ScenarioError> {
        let robots = if !self.robots.is_empty() {
            self.robots.clone()
        } else if let Some(f) = self.fleet {
            let mut ids: Vec<usize> = (0..self.endpoints.len()).collect();
            // separate stream from the task generator
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_57a7);
            ids.shuffle(&mut rng);
            ids.into_iter().take(f.count).map(|start| RobotSpec { radius: f.radius, v_max: f.v_max, start }).collect()
        } else {
            Vec::new()
        };
        if robots.is_empty() {
            return Err(ScenarioError::NoRobots);
        }
        if robots.len() >= self.endpoints.len() {
            return Err(ScenarioError::TooManyRobots { robots: robots.len(), endpoints: self.endpoints.len() });
        }
        for (i, r) in robots.iter().enumerate() {
            if r.start >= self.endpoints.len() {
                return Err(ScenarioError::BadStart(r.start));
            }
            if let Some(j) = robots[..i].iter().position(|o| o.start == r.start) {
                return Err(ScenarioError::SharedStart(j, i));
            }
            if !(r.radius > 0.0) {
                return Err(ScenarioError::NonPositive("robot radius"));
            }
            if !(r.v_max > 0.0) {
                return Err(ScenarioError::NonPositive("robot speed"));
            }
        }
        Ok(robots)
    }

    /// Builds the roadmap and checks validity.
    pub fn prepare(&self) -> Result<PreparedScenario, ScenarioError> {
        for (name, v) in [("dt", self.dt), ("sim_dt", self.sim_dt), ("timeout", self.timeout), ("cell", self.roadmap_params.cell)] {
            if !(v > 0.0) {
                return Err(ScenarioError::NonPositive(name));
            }
        }
        let robots = self.resolve_robots()?;
        let infra = Infrastructure::new(self.workspace.clone(), self.endpoints.clone())?;
        let r_bar = self.roadmap_params.r_bar.max(robots.iter().map(|r| r.radius).fold(0.0, f64::max));
        infra.check_standable(r_bar)?;
        let roadmap = build_grid_roadmap(&self.workspace, self.roadmap_params.cell, r_bar, &self.endpoints)?;
        let validity = check_valid_roadmap(&roadmap, &infra, r_bar);
        Ok(PreparedScenario {
            scenario: self.clone(),
            robots,
            infra: Arc::new(infra),
            roadmap: Arc::new(roadmap),
            validity,
        })
    }
}

/// A scenario with its roadmap built and validity decided.
#[derive(Clone, Debug)]
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub robots: Vec<RobotSpec>,
    pub infra: Arc<Infrastructure>,
    pub roadmap: Arc<Roadmap>,
    pub validity: ValidityReport,
}

impl PreparedScenario {
    /// Map document for viewers: workspace, endpoints and the roadmap.
    pub fn map_json(&self) -> Value {
        map_json(&self.scenario, &self.roadmap)
    }
}

/// The map schema plus a `roadmap` section with vertices and edges.
pub fn map_json(s: &Scenario, rm: &Roadmap) -> Value {
    let edges: Vec<[usize; 2]> = rm.edges.iter().map(|e| [e.a, e.b]).collect();
    json!({
        "name": s.name,
        "units": s.units,
        "workspace": s.workspace,
        "endpoints": s.endpoints,
        "roadmap": {
            "cell": rm.cell,
            "r_bar": rm.r_bar,
            "vertices": rm.vertices,
            "edges": edges,
            "endpoint_vertex": rm.endpoint_vertex,
        }
    })
}
