//! Command-line front end for `ptycho-wdd`.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod format;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, ReconstructConfig, Settings};
use error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "ptycho",
    version,
    about = "Ptychographic reconstruction by Wigner distribution deconvolution"
)]
pub struct Cli {
    /// Settings file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate object, window, background, clean and noisy grids.
    Simulate(Flags),
    /// Reconstruct from a simulated or stored dataset directory.
    Reconstruct(Flags),
    /// Aligned relative error between two stored arrays.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Run a scripted scenario and print its result table.
    Experiment {
        /// table-general, table-phase, noise-sweep or ambiguity-demo
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the CSV copy of the table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub d: Option<String>,
    /// Second image side; enables 2D and must equal `d`.
    #[arg(long)]
    pub d2: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub all_diagonals: bool,
    /// vanilla, general or phase
    #[arg(long)]
    pub method: Option<String>,
    /// ones, random, random-phase, modulation:M or type2:M:RHO
    #[arg(long)]
    pub object: Option<String>,
    /// none, constant, random or image-file
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long)]
    pub bg_amp: Option<String>,
    #[arg(long)]
    pub bg_file: Option<String>,
    /// Rescale the background to this relative noise level.
    #[arg(long)]
    pub noise_level: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long = "in")]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// bin or csv
    #[arg(long)]
    pub format: Option<String>,
    /// Accept the phase method without a phase-type object.
    #[arg(long)]
    pub assume_phase: bool,
    /// noisy or clean
    #[arg(long)]
    pub grid: Option<String>,
}

impl Flags {
    pub fn settings(&self) -> Settings {
        let mut s = Settings::default();
        let pairs = [
            ("d", &self.d),
            ("d2", &self.d2),
            ("delta", &self.delta),
            ("gamma", &self.gamma),
            ("method", &self.method),
            ("object", &self.object),
            ("background", &self.background),
            ("bg-amp", &self.bg_amp),
            ("bg-file", &self.bg_file),
            ("noise-level", &self.noise_level),
            ("seed", &self.seed),
            ("in", &self.input),
            ("out", &self.out),
            ("format", &self.format),
            ("grid", &self.grid),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v).expect("known key");
            }
        }
        if self.all_diagonals {
            s.set("all-diagonals", "true").expect("known key");
        }
        if self.assume_phase {
            s.set("assume-phase", "true").expect("known key");
        }
        s
    }
}

/// Caps the rayon pool from `PTYCHO_THREADS` (0 or unset: automatic).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PTYCHO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::usage("PTYCHO_THREADS", format!("{v:?} is not a thread count")))?;
    if n > 0 {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn merged(cli_config: &Option<PathBuf>, flags: &Flags) -> Result<Settings, CliError> {
    let mut s = match cli_config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    s.merge(&flags.settings());
    Ok(s)
}

/// Runs one invocation, writing human output to `out`; returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    configure_threads()?;
    let io = |e| CliError::io(std::path::Path::new("<stdout>"), e);
    match &cli.command {
        Command::Simulate(flags) => {
            let cfg = ExperimentConfig::from_settings(&merged(&cli.config, flags)?)?;
            let res = commands::simulate(&cfg)?;
            for f in &res.files {
                writeln!(out, "wrote {}", f.display()).map_err(io)?;
            }
            writeln!(out, "noise_level={:.6}", res.noise_level).map_err(io)?;
            Ok(exit::SUCCESS)
        }
        Command::Reconstruct(flags) => {
            let cfg = ReconstructConfig::from_settings(&merged(&cli.config, flags)?)?;
            let res = commands::reconstruct(&cfg)?;
            write!(out, "{}", res.report).map_err(io)?;
            Ok(res.status)
        }
        Command::Evaluate { truth, estimate } => {
            let e = commands::evaluate(truth, estimate)?;
            writeln!(out, "aligned_error={e:e}").map_err(io)?;
            Ok(exit::SUCCESS)
        }
        Command::Experiment { name, seed, out: dir } => {
            let table = experiments::run(name, *seed)?;
            write!(out, "{}", table.to_text()).map_err(io)?;
            if let Some(dir) = dir {
                let p = dir.join(format!("{name}.csv"));
                format::write_atomic(&p, table.to_csv().as_bytes())?;
                writeln!(out, "wrote {}", p.display()).map_err(io)?;
            }
            Ok(exit::SUCCESS)
        }
    }
}
