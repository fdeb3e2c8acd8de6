//! Command-line driver for the trimerlab pipelines.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::ConfigError;

#[derive(Parser, Debug)]
#[command(name = "trimerlab", version, about = "Three-body hyperspherical spectra for inverse-square pair interactions")]
pub struct Cli {
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Result cache directory.
    #[arg(long, global = true, env = "TRIMERLAB_CACHE")]
    pub cache_dir: Option<PathBuf>,
    /// Compute everything afresh and leave the cache untouched.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// JSON object of option values; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha2: Option<f64>,
    /// sech2 | gaussian | constant | none
    #[arg(long)]
    pub cutoff: Option<String>,
    #[arg(long)]
    pub r0: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Adiabatic channel potentials on a log grid -> channels.csv + channels.json
    Channels {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        per_decade: Option<usize>,
        #[arg(long)]
        nchan: Option<usize>,
        /// B-spline order of the angular basis.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        max_spacing: Option<f64>,
        /// boson | fermion
        #[arg(long)]
        statistics: Option<String>,
        #[arg(long = "J")]
        j: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        parity: Option<i32>,
    },
    /// Two-body radial levels -> twobody.csv
    Twobody {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        nlevels: Option<usize>,
        #[arg(long)]
        rmax: Option<f64>,
    },
    /// Hyperradial bound states of one channel -> bound.csv + bound.json
    Bound {
        /// channels.csv to read W from; omit to use the tail model alone.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        channel: Option<usize>,
        #[arg(long)]
        wall: Option<f64>,
        /// fit.json whose model continues the table.
        #[arg(long)]
        splice_tail: Option<PathBuf>,
        #[arg(long)]
        splice_radius: Option<f64>,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Tail or trend fits -> fit.json / trend.json
    Fit {
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        channel: Option<usize>,
        /// subcritical-log | supercritical-threshold | fermion-log | trend
        #[arg(long)]
        form: Option<String>,
        #[arg(long)]
        rlo: Option<f64>,
        #[arg(long)]
        rhi: Option<f64>,
        /// CSV `alpha2,beta,delta[,beta_sigma,delta_sigma]` for trend fits.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Lowest energies across pair strengths -> scan.csv + scan.json
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        /// `start:stop:step` or a comma list.
        #[arg(long = "alpha2-list", allow_hyphen_values = true)]
        alpha2_list: Option<String>,
        #[arg(long)]
        wall: Option<f64>,
        #[arg(long)]
        nstates: Option<usize>,
        #[arg(long)]
        per_decade: Option<usize>,
        #[arg(long)]
        rmax: Option<f64>,
    },
    /// Recursive ladder prediction -> prediction.json
    Predict {
        #[arg(long)]
        beta: Option<f64>,
        /// Ground-state mean hyperradius in units of r0.
        #[arg(long)]
        rmean0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        e0: Option<f64>,
        #[arg(long)]
        nmax: Option<usize>,
        /// Take beta from a subcritical fit.json.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Take E0 and <R>0 from the first state of a bound.csv.
        #[arg(long)]
        bound: Option<PathBuf>,
    },
    /// Heavy/light mass ratio for a pair strength, or the inverse
    Massratio {
        #[arg(long)]
        alpha2: Option<f64>,
        #[arg(long)]
        ratio: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Channels { .. } => "channels",
            Command::Twobody { .. } => "twobody",
            Command::Bound { .. } => "bound",
            Command::Fit { .. } => "fit",
            Command::Scan { .. } => "scan",
            Command::Predict { .. } => "predict",
            Command::Massratio { .. } => "massratio",
        }
    }
}

/// 2: bad input, 3: numerical failure (with diagnostics.json), 4: unsupported sector.
fn exit_code(err: &anyhow::Error) -> u8 {
    use trimerlab::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<trimerlab::Error>() {
            return match e.root() {
                E::UnsupportedSector { .. } => 4,
                E::Convergence(_)
                | E::Relabel { .. }
                | E::MeshResolution { .. }
                | E::DomainTooSmall { .. }
                | E::Singular(_) => 3,
                E::InvalidConfig(_) | E::Precondition(_) | E::OutOfRange { .. } | E::IllConditioned(_) => 2,
                E::Io(_) | E::Json(_) | E::Csv(_) | E::AtRadius { .. } => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err:#}");
            if code == 3 {
                let diag = serde_json::json!({
                    "subcommand": cli.cmd.name(),
                    "error": format!("{err:#}"),
                    "chain": err.chain().map(|c| c.to_string()).collect::<Vec<_>>(),
                });
                let p = cli.out.join("diagnostics.json");
                let bytes = serde_json::to_vec_pretty(&diag).unwrap_or_default();
                if trimerlab::io::write_atomic(&p, &bytes).is_ok() {
                    eprintln!("diagnostics written to {}", p.display());
                }
            }
            ExitCode::from(code)
        }
    }
}
