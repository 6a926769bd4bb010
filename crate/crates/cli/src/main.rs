use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use preload_core::scenario::{
    fmt_sig, run_buffer_sweep, run_multiuser, run_single_user, write_service_csv, write_sweep_csv,
    write_trace_csv,
};
use preload_core::{Error, PlannerKind, ScenarioConfig};

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

/// Anticipatory buffer and spectrum planning for cellular video streaming.
#[derive(Parser)]
#[command(name = "preload", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the shadowing standard deviation (dB).
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_db: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one user with and without a buffer; writes trace.csv.
    SingleUser {
        #[command(flatten)]
        common: Common,
    },
    /// Total spectrum versus buffer limit; writes sweep.csv.
    BufferSweep {
        #[command(flatten)]
        common: Common,
        /// Buffer limits in multiples of V, comma separated.
        #[arg(long, value_delimiter = ',')]
        z_values: Option<Vec<f64>>,
    },
    /// Served users versus offered requests; writes service_curve.csv.
    MultiUser {
        #[command(flatten)]
        common: Common,
        /// Request counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        requests: Option<Vec<usize>>,
        /// Seeds per point, counting up from the base seed.
        #[arg(long)]
        seeds: Option<u64>,
        /// PRBs available to video users.
        #[arg(long)]
        available_prbs: Option<f64>,
    },
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(sigma) = common.sigma_db {
        cfg.shadowing.sigma_db = sigma;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::SingleUser { common } => {
            let cfg = load_config(&common)?;
            let report = run_single_user(&cfg)?;
            write_trace_csv(&report, create(&common.out, "trace.csv")?)?;
            let summary = report.summary();
            fs::write(common.out.join("summary.txt"), &summary)?;
            print!("{summary}");
            if !report.feasible() {
                eprintln!("scenario infeasible: no outage-free plan fits the spectrum");
                return Ok(EXIT_INFEASIBLE);
            }
        }
        Command::BufferSweep { common, z_values } => {
            let cfg = load_config(&common)?;
            let z = z_values.unwrap_or_else(|| cfg.sweep.z_values_v.clone());
            let rows = run_buffer_sweep(&cfg, &z)?;
            write_sweep_csv(&rows, create(&common.out, "sweep.csv")?)?;
            println!("{:>8}  {:>16}  {:>10}", "Z/V", "total_prb_slots", "of system");
            for r in &rows {
                println!(
                    "{:>8}  {:>16}  {:>10}",
                    fmt_sig(r.z_v),
                    fmt_sig(r.total_prb_slots),
                    fmt_sig(r.fraction_of_system)
                );
            }
            if rows.iter().any(|r| !r.feasible) {
                eprintln!("scenario infeasible for at least one buffer limit");
                return Ok(EXIT_INFEASIBLE);
            }
        }
        Command::MultiUser {
            common,
            requests,
            seeds,
            available_prbs,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(prbs) = available_prbs {
                cfg.admission.available_prbs = prbs;
                cfg.validate()?;
            }
            let counts = requests.unwrap_or_else(|| cfg.admission.request_counts.clone());
            let curve = run_multiuser(&cfg, &counts, seeds.unwrap_or(cfg.admission.num_seeds))?;
            write_service_csv(&curve, create(&common.out, "service_curve.csv")?)?;
            println!("{:>8}  {:>14}  {:>14}", "requests", "anticipatory", "baseline");
            for &kv in &counts {
                let mean = |k| curve.mean(kv, k).map(|m| m.mean_served).unwrap_or(f64::NAN);
                println!(
                    "{:>8}  {:>14}  {:>14}",
                    kv,
                    fmt_sig(mean(PlannerKind::Anticipatory)),
                    fmt_sig(mean(PlannerKind::Baseline))
                );
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the config exit code; 2 means infeasible.
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
