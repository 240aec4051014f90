//! Command line harness for the simulation stack.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use usvsim::config::Config;
use usvsim::experiment::{compare, run_experiment, write_csv, write_json, RunMode};
use usvsim::trajectory::Reference;

#[derive(Parser)]
#[command(
    name = "usvsim",
    version,
    about = "Desk-scale twin-thruster surface vehicle simulator with supervised behavior switching"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Pbssc,
    Transit,
    Stationkeep,
    Reverse,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> RunMode {
        match m {
            ModeArg::Pbssc => RunMode::Pbssc,
            ModeArg::Transit => RunMode::TransitOnly,
            ModeArg::Stationkeep => RunMode::StationKeepOnly,
            ModeArg::Reverse => RunMode::ReverseOnly,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one closed-loop experiment and write the trace.
    Run {
        /// Settings file; omitted means built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Controller arrangement.
        #[arg(long, value_enum, default_value_t = ModeArg::Pbssc)]
        mode: ModeArg,
        /// Disturbance seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Run every mode over a batch of seeds and tabulate the metrics.
    /// Exits nonzero if the switched mode does not come out ahead.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of seeds, used as 0..n.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Optional path for the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the reference trajectory samples as CSV.
    Trajectory {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; omitted prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, usvsim::SimError> {
    match path {
        Some(p) => Config::load(p),
        None => {
            let cfg = Config::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn cmd_run(
    config: &Option<PathBuf>,
    mode: ModeArg,
    seed: u64,
    out: &Path,
    format: FormatArg,
) -> Result<(), usvsim::SimError> {
    let cfg = load_config(config)?;
    let record = run_experiment(&cfg, mode.into(), seed)?;
    std::fs::create_dir_all(out)?;
    let ext = match format {
        FormatArg::Csv => "csv",
        FormatArg::Json => "json",
    };
    let path = out.join(format!("{}_seed{}.{}", record.meta.mode, seed, ext));
    match format {
        FormatArg::Csv => write_csv(&record, &path)?,
        FormatArg::Json => write_json(&record, &path)?,
    }
    println!(
        "{} seed {}: pi_r {:.3} m^2 s, pi_psi {:.1} deg^2 s, {} switches -> {}",
        record.meta.mode,
        seed,
        record.metrics.pi_r,
        record.metrics.pi_psi,
        record.switches,
        path.display()
    );
    Ok(())
}

fn cmd_compare(
    config: &Option<PathBuf>,
    seeds: u64,
    out: &Option<PathBuf>,
) -> Result<bool, usvsim::SimError> {
    let cfg = load_config(config)?;
    let seed_list: Vec<u64> = (0..seeds).collect();
    let report = compare(&cfg, &seed_list)?;
    print!("{}", report.render());
    if let Some(path) = out {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
        std::fs::write(path, bytes)?;
        println!("report -> {}", path.display());
    }
    Ok(report.ordering_holds())
}

fn cmd_trajectory(config: &Option<PathBuf>, out: &Option<PathBuf>) -> Result<(), usvsim::SimError> {
    let cfg = load_config(config)?;
    let traj = Reference::build(&cfg.trajectory, cfg.run.dt)?;
    let mut text = String::from("t,x_d,y_d,psi_d,xdot_d,ydot_d,psidot_d,t_next,x_next,y_next\n");
    let steps = (traj.duration() / cfg.run.dt).round() as usize;
    for k in 0..=steps {
        let s = traj.sample(k as f64 * cfg.run.dt);
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.t,
            s.eta_d.x,
            s.eta_d.y,
            s.eta_d.z,
            s.etad_dot.x,
            s.etad_dot.y,
            s.etad_dot.z,
            s.t_next,
            s.eta_d_next.x,
            s.eta_d_next.y
        ));
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run { config, mode, seed, out, format } => {
            cmd_run(config, *mode, *seed, out, *format).map(|()| true)
        }
        Cmd::Compare { config, seeds, out } => cmd_compare(config, *seeds, out),
        Cmd::Trajectory { config, out } => cmd_trajectory(config, out).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
