//! Runtime checks of the token invariants.

use super::{RobotId, Token};
use crate::geometry::EPS;
use crate::infrastructure::Infrastructure;
use crate::trajectory::min_distance_between;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Every pair of entries keeps its bodies apart from time `from` on.
///
/// Entries are only meaningful from the moment they were committed; before
/// that they extrapolate the robot as parked at its first waypoint, which
/// need not match where the robot actually was.
pub fn token_is_collision_free(token: &Token, radii: &BTreeMap<RobotId, f64>, from: f64) -> bool {
    let entries: Vec<_> = token.entries.iter().collect();
    for (i, (a, ta)) in entries.iter().enumerate() {
        for (b, tb) in &entries[i + 1..] {
            let d = min_distance_between(ta, tb, from);
            if d < radii[a] + radii[b] + EPS {
                return false;
            }
        }
    }
    true
}

/// Every entry ends at some endpoint.
pub fn token_is_e_terminal(token: &Token, infra: &Infrastructure) -> bool {
    token.entries.values().all(|tr| infra.endpoint_at(tr.terminal_point(), EPS).is_some())
}

/// `F(A(Φ, t)) <= t + |A(Φ, t)| * r`, with `F(∅) = 0`.
pub fn lemma1_bound_holds(token: &Token, t: f64, r: f64) -> bool {
    let mut count = 0usize;
    let mut latest = 0.0f64;
    for (_, tr) in token.active_at(t) {
        count += 1;
        latest = latest.max(tr.arrival_time());
    }
    latest <= t + count as f64 * r + EPS
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    CollisionFree,
    ETerminal,
    CompletionBound,
    PlanningSucceeds,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub monitor: Monitor,
    pub holds: bool,
    pub t: f64,
    pub revision: u64,
}
