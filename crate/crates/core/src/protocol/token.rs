use super::RobotId;
use crate::planner::DynamicObstacles;
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The shared record `Φ` of committed trajectories, at most one per robot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub entries: BTreeMap<RobotId, Trajectory>,
    pub revision: u64,
}

impl Token {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, robot: RobotId) -> Option<&Trajectory> {
        self.entries.get(&robot)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replaces the robot's entry and bumps the revision.
    pub fn commit(&mut self, robot: RobotId, trajectory: Trajectory) {
        self.entries.insert(robot, trajectory);
        self.revision += 1;
    }

    /// `Δ` for `robot`: every other entry as a moving disc.
    pub fn obstacles_for(&self, robot: RobotId, radii: &BTreeMap<RobotId, f64>) -> DynamicObstacles {
        let mut d = DynamicObstacles::new();
        for (&id, tr) in &self.entries {
            if id != robot {
                d.push(radii[&id], tr.clone());
            }
        }
        d
    }

    /// `A(Φ, t)`: entries whose arrival time is at least `t`.
    pub fn active_at(&self, t: f64) -> impl Iterator<Item = (RobotId, &Trajectory)> {
        self.entries.iter().filter(move |(_, tr)| tr.arrival_time() >= t).map(|(&id, tr)| (id, tr))
    }

    /// `F(Φ)`: the latest arrival time, 0 for an empty token.
    pub fn settle_time(&self) -> f64 {
        self.entries.values().map(|tr| tr.arrival_time()).fold(0.0, f64::max)
    }
}
