//! Token transport: a server holding the token and leasing it to one robot
//! at a time, FIFO by request time with ties broken by robot id.

use super::{RobotId, Token};
use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::mpsc;
use std::thread;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Message {
    Request { robot: RobotId },
    Grant { revision: u64, entries: BTreeMap<RobotId, Trajectory> },
    Update { revision: u64, entries: BTreeMap<RobotId, Trajectory> },
    Release { robot: RobotId },
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LeaseError {
    #[error("robot {0} does not hold the token")]
    NotHolder(RobotId),
    #[error("stale update: based on revision {got}, token is at {current}")]
    Stale { got: u64, current: u64 },
    #[error("robot {0} already has a pending request")]
    AlreadyQueued(RobotId),
}

#[derive(Clone, Debug, Default)]
pub struct TokenServer {
    token: Token,
    holder: Option<RobotId>,
    queue: Vec<(f64, RobotId)>,
}

impl TokenServer {
    pub fn new(token: Token) -> Self {
        TokenServer { token, holder: None, queue: Vec::new() }
    }

    pub fn holder(&self) -> Option<RobotId> {
        self.holder
    }

    /// Read-only view for observers outside the protocol (monitors, UI).
    pub fn token(&self) -> &Token {
        &self.token
    }

    /// Queues a request made at time `t`. Returns the grant if the token is
    /// free and this robot is first in line.
    pub fn request(&mut self, robot: RobotId, t: f64) -> Result<Option<Message>, LeaseError> {
        if self.holder == Some(robot) || self.queue.iter().any(|&(_, r)| r == robot) {
            return Err(LeaseError::AlreadyQueued(robot));
        }
        let pos = self.queue.partition_point(|&(qt, qr)| qt < t || (qt == t && qr < robot));
        self.queue.insert(pos, (t, robot));
        Ok(self.grant_next().map(|(_, m)| m))
    }

    fn grant_next(&mut self) -> Option<(RobotId, Message)> {
        if self.holder.is_some() || self.queue.is_empty() {
            return None;
        }
        let (_, robot) = self.queue.remove(0);
        self.holder = Some(robot);
        Some((robot, Message::Grant { revision: self.token.revision, entries: self.token.entries.clone() }))
    }

    /// Installs the holder's new token contents. The update must be based on
    /// the current revision and carries the next one.
    pub fn update(&mut self, robot: RobotId, token: Token) -> Result<(), LeaseError> {
        if self.holder != Some(robot) {
            return Err(LeaseError::NotHolder(robot));
        }
        if token.revision != self.token.revision + 1 && token.revision != self.token.revision {
            return Err(LeaseError::Stale { got: token.revision, current: self.token.revision });
        }
        self.token = token;
        Ok(())
    }

    /// Ends the lease; returns the next grant, if anyone is waiting.
    pub fn release(&mut self, robot: RobotId) -> Result<Option<(RobotId, Message)>, LeaseError> {
        if self.holder != Some(robot) {
            return Err(LeaseError::NotHolder(robot));
        }
        self.holder = None;
        Ok(self.grant_next())
    }

    /// Copy of the token as granted to the current holder.
    pub fn lease_copy(&self) -> Token {
        self.token.clone()
    }
}

enum Envelope {
    Request { robot: RobotId, t: f64, reply: mpsc::Sender<Message> },
    Update { robot: RobotId, token: Token, reply: mpsc::Sender<Result<(), LeaseError>> },
    Release { robot: RobotId },
    Shutdown { reply: mpsc::Sender<Token> },
}

/// Handle to a token server running on its own thread.
pub struct ThreadedTokenServer {
    tx: mpsc::Sender<Envelope>,
    join: Option<thread::JoinHandle<()>>,
}

/// One robot's connection to a [`ThreadedTokenServer`].
#[derive(Clone)]
pub struct TokenClient {
    robot: RobotId,
    tx: mpsc::Sender<Envelope>,
}

impl ThreadedTokenServer {
    pub fn spawn(token: Token) -> Self {
        let (tx, rx) = mpsc::channel::<Envelope>();
        let join = thread::spawn(move || {
            let mut server = TokenServer::new(token);
            let mut waiting: BTreeMap<RobotId, mpsc::Sender<Message>> = BTreeMap::new();
            for env in rx {
                match env {
                    Envelope::Request { robot, t, reply } => match server.request(robot, t) {
                        Ok(Some(grant)) => {
                            let _ = reply.send(grant);
                        }
                        Ok(None) => {
                            waiting.insert(robot, reply);
                        }
                        Err(_) => drop(reply),
                    },
                    Envelope::Update { robot, token, reply } => {
                        let _ = reply.send(server.update(robot, token));
                    }
                    Envelope::Release { robot } => {
                        if let Ok(Some((next, grant))) = server.release(robot) {
                            if let Some(reply) = waiting.remove(&next) {
                                let _ = reply.send(grant);
                            }
                        }
                    }
                    Envelope::Shutdown { reply } => {
                        let _ = reply.send(server.token.clone());
                        break;
                    }
                }
            }
        });
        ThreadedTokenServer { tx, join: Some(join) }
    }

    pub fn client(&self, robot: RobotId) -> TokenClient {
        TokenClient { robot, tx: self.tx.clone() }
    }

    /// Stops the server and returns the final token.
    pub fn shutdown(mut self) -> Token {
        let (reply, rx) = mpsc::channel();
        self.tx.send(Envelope::Shutdown { reply }).expect("server thread alive");
        let token = rx.recv().expect("server replies before exiting");
        if let Some(j) = self.join.take() {
            j.join().expect("server thread panicked");
        }
        token
    }
}

impl TokenClient {
    /// Blocks until the lease is granted; returns the granted token.
    pub fn acquire(&self, t: f64) -> Option<Token> {
        let (reply, rx) = mpsc::channel();
        self.tx.send(Envelope::Request { robot: self.robot, t, reply }).ok()?;
        match rx.recv().ok()? {
            Message::Grant { revision, entries } => Some(Token { entries, revision }),
            _ => None,
        }
    }

    pub fn update(&self, token: Token) -> Result<(), LeaseError> {
        let (reply, rx) = mpsc::channel();
        self.tx.send(Envelope::Update { robot: self.robot, token, reply }).map_err(|_| LeaseError::NotHolder(self.robot))?;
        rx.recv().unwrap_or(Err(LeaseError::NotHolder(self.robot)))
    }

    pub fn release(&self) {
        let _ = self.tx.send(Envelope::Release { robot: self.robot });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn fifo_with_id_tiebreak() {
        let mut s = TokenServer::new(Token::new());
        assert!(s.request(3, 1.0).unwrap().is_some());
        assert!(s.request(2, 2.0).unwrap().is_none());
        assert!(s.request(1, 2.0).unwrap().is_none());
        assert!(s.request(0, 1.5).unwrap().is_none());
        let mut order = vec![];
        let mut cur = 3;
        while let Some((next, _)) = s.release(cur).unwrap() {
            order.push(next);
            cur = next;
        }
        assert_eq!(order, vec![0, 1, 2]);
    }

    #[test]
    fn only_holder_may_update() {
        let mut s = TokenServer::new(Token::new());
        s.request(0, 0.0).unwrap();
        let mut t = s.lease_copy();
        t.commit(1, Trajectory::stay(Point2::new(0.0, 0.0), 0.0));
        assert_eq!(s.update(1, t.clone()), Err(LeaseError::NotHolder(1)));
        s.update(0, t).unwrap();
        assert_eq!(s.token().revision, 1);
        let mut stale = Token::new();
        stale.revision = 5;
        assert!(matches!(s.update(0, stale), Err(LeaseError::Stale { .. })));
    }

    #[test]
    fn messages_round_trip() {
        let m = Message::Request { robot: 4 };
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(j, r#"{"type":"REQUEST","robot":4}"#);
        assert_eq!(serde_json::from_str::<Message>(&j).unwrap(), m);
    }
}
