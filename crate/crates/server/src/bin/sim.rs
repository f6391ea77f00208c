use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use durian_core::GeoPoint;
use durian_server::config::Settings;
use durian_server::formats::{questions, roads, trace};
use durian_server::sim::dist::{self, DistParams, Sampler};
use durian_server::sim::{self, remote, Policy, ReplayOptions};

#[derive(Parser)]
#[command(version, about = "Headless durian game driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_point(s: &str) -> Result<GeoPoint, String> {
    let (lat, lon) = s.split_once(',').ok_or("expected lat,lon")?;
    let lat = lat.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lon = lon.trim().parse::<f64>().map_err(|e| e.to_string())?;
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Spawn many rounds and write scatter and uniformity statistics.
    Dist {
        #[arg(long, value_parser = parse_point)]
        center: Option<GeoPoint>,
        #[arg(long, value_delimiter = ',', default_value = "6,12,24,48")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 500)]
        rounds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "area")]
        sampler: Sampler,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feed a GPS trace through a round and write a JSON transcript.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "always-correct")]
        policy: Policy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Play against a running server, e.g. ws://127.0.0.1:8080.
        #[arg(long)]
        remote: Option<String>,
        #[arg(long)]
        roads: Option<PathBuf>,
        #[arg(long)]
        questions: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Transcript path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a walking trace that visits every durian of the round `replay`
    /// would spawn with the same seed.
    Tour {
        #[arg(long, value_parser = parse_point)]
        center: Option<GeoPoint>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        roads: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        #[arg(long, default_value_t = 5.0)]
        dt: f64,
        #[arg(long, default_value_t = 1_700_000_000.0)]
        t0: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Dist { center, counts, rounds, seed, sampler, config, out } => {
            let s = Settings::resolve(config.as_deref())?;
            let params = DistParams {
                center: center.unwrap_or_else(sim::default_center),
                counts,
                rounds,
                seed,
                sampler,
                r_min: s.r_min,
                r_max: s.r_max,
                d_min: s.d_min,
                max_attempts: s.max_attempts,
            };
            let run = dist::run(&params)?;
            dist::write(&run, &out)?;
            for c in &run.report.per_count {
                println!(
                    "count {:>3}: angular p={:.4} radial p={:.4} r=[{:.2}, {:.2}] min sep {:.2}",
                    c.count, c.angular_p, c.radial_p, c.min_radius, c.max_radius, c.min_separation
                );
            }
        }
        Command::Replay { trace: path, policy, seed, remote: url, roads: roads_path, questions: q, config, out } => {
            let s = Settings::resolve(config.as_deref())?;
            let points = trace::read_trace(File::open(&path)?)?;
            let bank = match q {
                Some(p) => questions::load_questions(p)?,
                None => questions::builtin_bank(),
            };
            let transcript = match url {
                Some(base) => {
                    let rt = tokio::runtime::Runtime::new()?;
                    let opts = remote::RemoteOptions {
                        base,
                        policy,
                        seed,
                        email: None,
                        password: "sim-password".into(),
                    };
                    rt.block_on(remote::replay(&points, &bank, &opts))?
                }
                None => {
                    let network = match roads_path {
                        Some(p) => Some(roads::load_roads(p, s.reach_epsilon)?),
                        None => None,
                    };
                    let opts = ReplayOptions { config: s.game(), thresholds: s.thresholds(), seed, policy };
                    sim::replay(&points, &bank, network.as_ref(), &opts)?
                }
            };
            match out {
                Some(p) => serde_json::to_writer_pretty(BufWriter::new(File::create(p)?), &transcript)?,
                None => println!("{}", serde_json::to_string_pretty(&transcript)?),
            }
        }
        Command::Tour { center, seed, roads: roads_path, config, step, dt, t0, out } => {
            let s = Settings::resolve(config.as_deref())?;
            let network = match roads_path {
                Some(p) => Some(roads::load_roads(p, s.reach_epsilon)?),
                None => None,
            };
            let center = center.unwrap_or_else(sim::default_center);
            let set = sim::plan_round(center, &s.game(), network.as_ref(), seed)?;
            let targets: Vec<GeoPoint> = set.durians.iter().map(|d| d.position).collect();
            let points = sim::tour(center, &targets, step, dt, t0);
            trace::write_trace(BufWriter::new(File::create(out)?), &points)?;
        }
    }
    Ok(())
}
