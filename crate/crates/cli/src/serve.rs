//! WebSocket front end for a manual-dispatch session.
//!
//! One thread owns the session and steps it at `sim_dt / speed` of wall
//! time. Each client gets a thread that forwards its DISPATCH messages to
//! the owner and writes whatever the owner sends back.

use anyhow::Result;
use cobra_core::live::{ClientMessage, Envelope, LiveSession, ServerMessage};
use cobra_core::PreparedScenario;
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};
use tungstenite::{Message, WebSocket};

#[derive(Clone, Debug)]
pub struct ServeOptions {
    /// Simulated seconds per wall-clock second.
    pub speed: f64,
    pub stop: Arc<AtomicBool>,
}

enum Inbound {
    Join(usize, Sender<String>),
    Leave(usize),
    Command(usize, ClientMessage),
}

fn encode(msg: ServerMessage) -> String {
    serde_json::to_string(&Envelope::new(msg)).expect("messages serialize")
}

/// Accepts clients on `listener` until `opts.stop` is set.
pub fn serve(listener: TcpListener, prepared: &PreparedScenario, opts: ServeOptions) -> Result<()> {
    let session = LiveSession::new(prepared)?;
    let hello = encode(session.hello());
    let sim_dt = prepared.scenario.sim_dt;
    let (tx, rx) = mpsc::channel();
    let stop = opts.stop.clone();
    let owner = thread::spawn(move || drive(session, rx, sim_dt, opts));
    listener.set_nonblocking(true)?;
    let mut next_id = 0;
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                let (id, tx, hello, stop) = (next_id, tx.clone(), hello.clone(), stop.clone());
                next_id += 1;
                thread::spawn(move || {
                    let _ = client(stream, id, tx.clone(), hello, stop);
                    let _ = tx.send(Inbound::Leave(id));
                });
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(e.into()),
        }
    }
    drop(tx);
    let _ = owner.join();
    Ok(())
}

fn drive(mut session: LiveSession, rx: Receiver<Inbound>, sim_dt: f64, opts: ServeOptions) {
    let period = Duration::from_secs_f64(sim_dt / opts.speed.max(1e-6));
    let mut clients: Vec<(usize, Sender<String>)> = Vec::new();
    let mut origin = std::collections::BTreeMap::new();
    let mut serial = 0u64;
    let mut next = Instant::now();
    while !opts.stop.load(Ordering::Relaxed) {
        loop {
            match rx.try_recv() {
                Ok(Inbound::Join(id, out)) => clients.push((id, out)),
                Ok(Inbound::Leave(id)) => clients.retain(|c| c.0 != id),
                Ok(Inbound::Command(from, ClientMessage::Dispatch { id, command })) => {
                    // client ids are only unique per connection
                    serial += 1;
                    origin.insert(serial, (from, id));
                    session.submit(serial, command);
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => return,
            }
        }
        for msg in session.step() {
            let target = match &msg {
                ServerMessage::Ack { id, .. } | ServerMessage::Reject { id, .. } => origin.remove(id),
                _ => None,
            };
            match (target, msg) {
                (Some((to, cid)), mut m) => {
                    match &mut m {
                        ServerMessage::Ack { id, .. } | ServerMessage::Reject { id, .. } => *id = cid,
                        _ => {}
                    }
                    let text = encode(m);
                    clients.iter().filter(|c| c.0 == to).for_each(|c| drop(c.1.send(text.clone())));
                }
                (None, m) => {
                    let text = encode(m);
                    clients.retain(|c| c.1.send(text.clone()).is_ok());
                }
            }
        }
        next += period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

fn client(stream: TcpStream, id: usize, tx: Sender<Inbound>, hello: String, stop: Arc<AtomicBool>) -> Result<()> {
    stream.set_read_timeout(Some(Duration::from_millis(5)))?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| anyhow::anyhow!("handshake: {e}"))?;
    ws.send(Message::text(hello))?;
    let (out_tx, out_rx) = mpsc::channel();
    tx.send(Inbound::Join(id, out_tx))?;
    while !stop.load(Ordering::Relaxed) {
        while let Ok(text) = out_rx.try_recv() {
            ws.send(Message::text(text))?;
        }
        match ws.read() {
            Ok(Message::Text(t)) => match serde_json::from_str::<Envelope<ClientMessage>>(t.as_str()) {
                Ok(env) => tx.send(Inbound::Command(id, env.body))?,
                Err(e) => eprintln!("client {id}: ignoring message: {e}"),
            },
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
