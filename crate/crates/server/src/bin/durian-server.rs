use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use durian_server::config::Settings;
use durian_server::formats::{questions, roads};
use durian_server::gate::{provider_router, FileProvider, HttpProvider, LandmarkProvider};
use durian_server::service::{serve, AppState};
use durian_server::store::{PlayerStore, StoreOptions};
use tracing::info;

#[derive(Parser)]
#[command(version, about = "Durian game server")]
struct Cli {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// GeoJSON road network used to pull durians out of unreachable areas.
    #[arg(long)]
    roads: Option<PathBuf>,
    /// Question bank JSON; a bundled bank is used otherwise.
    #[arg(long)]
    questions: Option<PathBuf>,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// TOML or JSON settings. DURIAN_CONFIG takes precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of landmark fixtures served as a local provider.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Fixed seed for spawn and question randomness.
    #[arg(long)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Serve a directory of landmark fixtures at POST /landmarks.
    LandmarkStub {
        #[arg(long, default_value = "127.0.0.1:9090")]
        listen: String,
        #[arg(long)]
        fixtures: PathBuf,
    },
}

#[tokio::main]
async fn main() -> std::process::ExitCode {
    match run().await {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}

async fn run() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let cli = Cli::parse();

    if let Some(Command::LandmarkStub { listen, fixtures }) = cli.command {
        let listener = tokio::net::TcpListener::bind(&listen).await?;
        info!("landmark stub on {}", listener.local_addr()?);
        axum::serve(listener, provider_router(Arc::new(FileProvider::new(fixtures)))).await?;
        return Ok(());
    }

    let settings = Settings::resolve(cli.config.as_deref())?;
    let network = match &cli.roads {
        Some(p) => Some(Arc::new(roads::load_roads(p, settings.reach_epsilon)?)),
        None => None,
    };
    let bank = match &cli.questions {
        Some(p) => questions::load_questions(p)?,
        None => questions::builtin_bank(),
    };
    let provider: Option<Arc<dyn LandmarkProvider>> = match (&cli.fixtures, &settings.landmark_provider) {
        (Some(dir), _) => Some(Arc::new(FileProvider::new(dir))),
        (None, Some(url)) => Some(Arc::new(HttpProvider::new(url))),
        (None, None) => None,
    };
    let store = Arc::new(PlayerStore::open(&cli.data_dir, StoreOptions::default())?);
    info!(
        players = store.player_count(),
        questions = bank.len(),
        roads = network.as_ref().map_or(0, |n| n.segments().len()),
        "loaded"
    );
    let state = AppState::new(settings, store, network, bank, provider, cli.seed);
    let listener = tokio::net::TcpListener::bind(&cli.listen).await?;
    info!("listening on {}", listener.local_addr()?);
    serve(listener, state).await?;
    Ok(())
}
