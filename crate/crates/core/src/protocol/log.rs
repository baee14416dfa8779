use super::{monitors::Monitor, RobotId};
use crate::infrastructure::EndpointId;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Acquire { t: f64, robot: RobotId, revision: u64 },
    Update { t: f64, robot: RobotId, revision: u64, arrival: f64 },
    Release { t: f64, robot: RobotId },
    Verdict { t: f64, monitor: Monitor, holds: bool, revision: u64 },
    Failure { t: f64, robot: RobotId, goal: EndpointId, reason: String },
    Rejected { t: f64, robot: RobotId, goal: EndpointId, reason: String },
}

/// Append-only record of token traffic and monitor verdicts.
#[derive(Clone, Debug, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
