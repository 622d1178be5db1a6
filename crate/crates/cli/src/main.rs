use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke_cli::analysis::{peak_scaling_analysis, SliceSeries};
use dicke_cli::config::{Mode, ScanConfig};
use dicke_cli::ensemble::run_trajectory_ensemble;
use dicke_cli::scan::{run_simplex_scan, run_slice, ScanOutcome};
use dicke_cli::table::Table;

#[derive(Parser)]
#[command(name = "dicke", version, about = "Ground-state scans and trajectory ensembles for the Dicke-Ising chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-diagram scan over the h + J + g = 1 simplex.
    Scan(RunArgs),
    /// One-parameter slice with warm-start chaining.
    Slice(RunArgs),
    /// Homodyne trajectory ensemble from the ground state.
    Trajectory(RunArgs),
    /// Peak heights, locations and finite-size exponents from slice tables.
    Analyze {
        /// Slice tables, one per chain length.
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        #[arg(long, default_value = "var_over_n")]
        column: String,
        /// Reference point for the peak-location exponent.
        #[arg(long, default_value_t = 0.312)]
        critical: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(short, long)]
    workers: Option<usize>,
    #[arg(long)]
    resume: bool,
    #[arg(long)]
    seed_base: Option<u64>,
}

impl RunArgs {
    fn load(&self, mode: Mode) -> dicke_cli::Result<ScanConfig> {
        let mut cfg = ScanConfig::load(&self.config)?;
        cfg.mode = mode;
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(s) = self.seed_base {
            cfg.seed_base = s;
        }
        cfg.resume |= self.resume;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(out: &ScanOutcome) {
    let flags = out.table.text("converged").unwrap_or_default();
    let bad = flags.iter().filter(|f| **f != "1").count();
    eprintln!(
        "{}: {} rows ({} computed now), {} not converged",
        out.path.display(),
        out.table.rows.len(),
        out.computed,
        bad
    );
}

fn run(cli: Cli) -> dicke_cli::Result<()> {
    match cli.command {
        Command::Scan(a) => report(&run_simplex_scan(&a.load(Mode::Simplex)?)?),
        Command::Slice(a) => report(&run_slice(&a.load(Mode::Slice)?)?),
        Command::Trajectory(a) => {
            let out = run_trajectory_ensemble(&a.load(Mode::Trajectory)?)?;
            eprintln!(
                "{}: {} trajectories finished, {} failed, ground state E = {} ({})",
                out.dir.display(),
                out.records.len(),
                out.failed.len(),
                out.ground.energy,
                if out.ground.converged() { "converged" } else { "NOT converged" }
            );
        }
        Command::Analyze { tables, column, critical } => {
            let series = tables
                .iter()
                .map(|p| SliceSeries::from_table(&Table::read(p)?, &column))
                .collect::<dicke_cli::Result<Vec<_>>>()?;
            let res = peak_scaling_analysis(&series, critical)?;
            println!("L\tpeak_location\tpeak_height");
            for p in &res.peaks {
                match p {
                    Ok(p) => println!("{}\t{}\t{}", p.l, p.location, p.height),
                    Err(e) => println!("# {e}"),
                }
            }
            for (name, fit) in [("height", res.height), ("location", res.location)] {
                match fit {
                    Some(f) => println!("# {name} exponent: {} ± {} ({} sizes)", f.exponent, f.exponent_se, f.points),
                    None => println!("# {name} exponent: not enough peaks"),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
