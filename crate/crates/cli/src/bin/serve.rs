use anyhow::{Context, Result};
use clap::Parser;
use cobra_cli::serve::{serve, ServeOptions};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

/// Live manual-dispatch session over WebSocket.
#[derive(Parser)]
#[command(name = "serve")]
struct Args {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let prepared = cobra_cli::load_scenario(&args.scenario)?.prepare()?;
    if !prepared.validity.valid {
        eprintln!("warning: infrastructure is not valid; planning may fail");
    }
    let listener = TcpListener::bind(("0.0.0.0", args.port)).with_context(|| format!("binding port {}", args.port))?;
    eprintln!("serving {} on ws://0.0.0.0:{}", prepared.scenario.name, args.port);
    serve(listener, &prepared, ServeOptions { speed: args.speed, stop: Arc::new(AtomicBool::new(false)) })
}
