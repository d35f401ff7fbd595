//! Command-line flags, the TOML run configuration, and how the two merge.
//!
//! Flags override the file. Relative paths in the file resolve against the
//! file's directory; relative paths given as flags resolve against the
//! working directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pqflex::methods::{EliminationOrder, Method, DEFAULT_K_CAP, DEFAULT_K_CUR, DEFAULT_MC_SAMPLES};
use pqflex::uncertainty::MarginMethod;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "pqflex", version, about = "Aggregated PQ flexibility regions at the PCC of a radial feeder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the flexibility region with one or more methods.
    Compute(CommonArgs),
    /// Compare methods against a reference region.
    Compare(CommonArgs),
    /// Recompute the region for several violation probabilities.
    Sweep(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Compute(a) | Command::Compare(a) | Command::Sweep(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UncertaintyArg {
    None,
    Quantile,
    Scenario,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// Network case file (TOML).
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Method to run; repeat or separate with commas.
    #[arg(long = "method", short = 'm', value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Reference method for `compare`.
    #[arg(long)]
    pub reference: Option<Method>,
    /// Edges of the inscribed polygon for each capability circle
    #[arg(long)]
    pub k_cap: Option<usize>,
    /// Edges of the polygon approximating each line-current circle
    #[arg(long)]
    pub k_cur: Option<usize>,
    /// Elimination order: topological, min-product or as-listed.
    #[arg(long)]
    pub order: Option<EliminationOrder>,
    /// `capacity` or a CSV file with `unit_id,g_p,g_q`.
    #[arg(long)]
    pub gsk: Option<String>,
    /// PV chance-constraint margins
    #[arg(long, value_enum)]
    pub uncertainty: Option<UncertaintyArg>,
    /// Violation probability of the PV margins (default 0.05)
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Confidence parameter of the scenario margins (default 0.05)
    #[arg(long)]
    pub beta: Option<f64>,
    /// Seed of the scenario draw.
    #[arg(long)]
    pub uncertainty_seed: Option<u64>,
    /// PV output history (`unit_id,timestamp,p_kw`).
    #[arg(long)]
    pub pv_data: Option<PathBuf>,
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Violation probabilities for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
    /// Output directory (default: current directory)
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    /// Output formats; repeat or separate with commas.
    #[arg(long = "format", value_enum, value_delimiter = ',')]
    pub formats: Vec<Format>,
    /// Write wall-clock times into the artifacts (they differ run to run).
    #[arg(long)]
    pub record_timings: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    network: Option<PathBuf>,
    methods: Option<Vec<Method>>,
    reference: Option<Method>,
    k_cap: Option<usize>,
    k_cur: Option<usize>,
    order: Option<EliminationOrder>,
    gsk: Option<String>,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    record_timings: Option<bool>,
    uncertainty: Option<UncertaintyFile>,
    monte_carlo: Option<MonteCarloFile>,
    sweep: Option<SweepFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UncertaintyFile {
    method: Option<MarginMethod>,
    epsilon: Option<f64>,
    beta: Option<f64>,
    seed: Option<u64>,
    data: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MonteCarloFile {
    n: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GskChoice {
    Capacity,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyConfig {
    pub method: MarginMethod,
    pub epsilon: f64,
    pub beta: f64,
    pub seed: u64,
    pub data: PathBuf,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: PathBuf,
    pub methods: Vec<Method>,
    pub reference: Method,
    pub k_cap: usize,
    pub k_cur: usize,
    pub order: EliminationOrder,
    pub gsk: GskChoice,
    pub uncertainty: Option<UncertaintyConfig>,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub epsilons: Vec<f64>,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub record_timings: bool,
}

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_BETA: f64 = 0.05;
pub const DEFAULT_MC_SEED: u64 = 42;
pub const DEFAULT_SWEEP: [f64; 4] = [0.01, 0.05, 0.1, 0.2];

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::config(msg)
}

fn in_unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(config_error(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn must_exist(what: &str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::parse(format!("{what} `{}` does not exist", path.display())))
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::parse(format!("cannot read config `{}`: {e}", path.display())))?;
                let file: FileConfig =
                    toml::from_str(&text).map_err(|e| CliError::parse(format!("config `{}`: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let network = args
            .network
            .clone()
            .or_else(|| file.network.map(rel))
            .ok_or_else(|| config_error("no network given (use --network or `network` in the config)"))?;
        must_exist("network file", &network)?;

        let mut methods = if args.methods.is_empty() {
            file.methods.unwrap_or_else(|| vec![Method::Fme])
        } else {
            args.methods.clone()
        };
        dedup_in_order(&mut methods);
        if methods.is_empty() {
            return Err(config_error("method list is empty"));
        }
        let reference = args.reference.or(file.reference).unwrap_or(Method::MonteCarlo);

        let k_cap = args.k_cap.or(file.k_cap).unwrap_or(DEFAULT_K_CAP);
        let k_cur = args.k_cur.or(file.k_cur).unwrap_or(DEFAULT_K_CUR);
        for (name, k) in [("k_cap", k_cap), ("k_cur", k_cur)] {
            if k < 3 {
                return Err(config_error(format!("{name} must be at least 3, got {k}")));
            }
        }

        let gsk = match args.gsk.clone().or(file.gsk) {
            None => GskChoice::Capacity,
            Some(s) if s == "capacity" => GskChoice::Capacity,
            Some(s) => {
                let path = if args.gsk.is_some() { PathBuf::from(s) } else { rel(PathBuf::from(s)) };
                must_exist("GSK file", &path)?;
                GskChoice::File(path)
            }
        };

        let uf = file.uncertainty.unwrap_or_default();
        let method = match args.uncertainty {
            Some(UncertaintyArg::None) => None,
            Some(UncertaintyArg::Quantile) => Some(MarginMethod::Quantile),
            Some(UncertaintyArg::Scenario) => Some(MarginMethod::Scenario),
            None => uf.method,
        };
        let data = args.pv_data.clone().or_else(|| uf.data.map(rel));
        let epsilon = args.epsilon.or(uf.epsilon).unwrap_or(DEFAULT_EPSILON);
        let beta = args.beta.or(uf.beta).unwrap_or(DEFAULT_BETA);
        let uncertainty = match method {
            None => None,
            Some(method) => {
                in_unit_interval("epsilon", epsilon)?;
                in_unit_interval("beta", beta)?;
                let data = data.ok_or_else(|| config_error("uncertainty needs PV data (--pv-data)"))?;
                must_exist("PV data file", &data)?;
                Some(UncertaintyConfig { method, epsilon, beta, seed: args.uncertainty_seed.or(uf.seed).unwrap_or(0), data })
            }
        };

        let mc = file.monte_carlo.unwrap_or_default();
        let epsilons = if args.epsilons.is_empty() {
            file.sweep.and_then(|s| s.epsilons).unwrap_or_else(|| DEFAULT_SWEEP.to_vec())
        } else {
            args.epsilons.clone()
        };
        for &e in &epsilons {
            in_unit_interval("epsilon", e)?;
        }

        let mut formats = if args.formats.is_empty() {
            file.formats.unwrap_or_else(|| vec![Format::Json, Format::Csv])
        } else {
            args.formats.clone()
        };
        formats.sort();
        formats.dedup();

        Ok(RunConfig {
            network,
            methods,
            reference,
            k_cap,
            k_cur,
            order: args.order.or(file.order).unwrap_or_default(),
            gsk,
            uncertainty,
            mc_samples: args.samples.or(mc.n).unwrap_or(DEFAULT_MC_SAMPLES),
            mc_seed: args.seed.or(mc.seed).unwrap_or(DEFAULT_MC_SEED),
            epsilons,
            output_dir: args.out.clone().or_else(|| file.output_dir.map(rel)).unwrap_or_else(|| PathBuf::from(".")),
            formats,
            record_timings: args.record_timings || file.record_timings.unwrap_or(false),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn dedup_in_order(v: &mut Vec<Method>) {
    let mut seen = Vec::new();
    v.retain(|m| {
        let fresh = !seen.contains(m);
        seen.push(*m);
        fresh
    });
}
