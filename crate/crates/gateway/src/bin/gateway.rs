use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use hdlt_gateway::{serve, EndorsementPolicy, Gateway, GatewayConfig, ServerConfig, SystemClock};
use hdlt_net::{load_topology, TopologyConfig};

#[derive(Parser)]
#[command(about = "Run the healthcare network in-process and serve its REST API")]
struct Args {
    /// Topology file; the built-in three-org deployment when omitted.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Listen address; defaults to the topology's internal gateway port.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Password for the admin@<org> logins.
    #[arg(long, env = "HDLT_ADMIN_PASSWORD")]
    admin_password: String,
    #[arg(long, value_enum, default_value = "invoker-org")]
    policy: Policy,
    #[arg(long, default_value_t = hdlt_gateway::server::DEFAULT_TICKS_PER_MS)]
    ticks_per_ms: u64,
    #[arg(long, default_value_t = 10_000)]
    commit_timeout_ms: u64,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Policy {
    InvokerOrg,
    AllOrgs,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let topology = match &args.topology {
        Some(p) => load_topology(p)?,
        None => TopologyConfig::paper(),
    };
    let listen = args
        .listen
        .unwrap_or_else(|| SocketAddr::from(([0, 0, 0, 0], topology.gateway_internal_port)));
    let mut config = GatewayConfig::new(topology, &args.admin_password);
    config.policy = match args.policy {
        Policy::InvokerOrg => EndorsementPolicy::InvokerOrg,
        Policy::AllOrgs => EndorsementPolicy::AllOrgs,
    };
    let gateway = Gateway::start(config)?;
    let server = ServerConfig {
        ticks_per_ms: args.ticks_per_ms,
        commit_timeout: Duration::from_millis(args.commit_timeout_ms),
        ..ServerConfig::default()
    };
    let running = serve(gateway, listen, Arc::new(SystemClock), server).await?;
    tracing::info!("gateway listening on {}", running.url());
    tokio::signal::ctrl_c().await?;
    Ok(())
}
