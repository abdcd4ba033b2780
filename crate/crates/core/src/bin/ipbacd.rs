//! Decision service daemon.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use ipbac::service::{serve, AppState, DaemonConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(version, about = "Access decision service")]
struct Args {
    /// JSON config file: {"engine": {...}, "policy_path": "..."}
    #[arg(long, env = "IPBAC_CONFIG")]
    config: Option<PathBuf>,
    /// Directory holding the chains and the runtime config override.
    #[arg(long, env = "IPBAC_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let config = match &args.config {
        Some(path) => DaemonConfig::load(path)?,
        None => DaemonConfig::default(),
    };
    let state = AppState::open(config, &args.data_dir)
        .with_context(|| format!("opening {}", args.data_dir.display()))?;
    let state = Arc::new(state);

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .with_context(|| format!("binding {}", args.listen))?;
        // Tests and scripts read the bound port from this line.
        println!("ipbacd listening on {}", listener.local_addr()?);
        serve(listener, state, shutdown_signal()).await?;
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = tokio::signal::ctrl_c();
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("signal handler");
        tokio::select! {
            _ = ctrl_c => {},
            _ = term.recv() => {},
        }
    }
    #[cfg(not(unix))]
    let _ = ctrl_c.await;
}
