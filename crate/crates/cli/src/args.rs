use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use endspin_core::{Anisotropy, ChainSpec, Engine};

#[derive(Debug, Parser)]
#[command(
    name = "endspin",
    version,
    about = "End-spin entanglement after anisotropy quenches in XXZ chains"
)]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Time series of the end-spin state for one chain.
    Quench(QuenchArgs),
    /// First-peak entanglement over a list of chain lengths.
    ScanN(ScanArgs),
    /// Disorder-averaged time series and peak statistics.
    Disorder(DisorderArgs),
    /// Compare the free-fermion and exact-diagonalization engines.
    EdCompare(EdCompareArgs),
    /// Recurrence purification schedule for a source fidelity.
    Purify(PurifyArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Auto,
    Ff,
    Ed,
}

impl EngineChoice {
    pub fn resolve(self, spec: &ChainSpec) -> Engine {
        match self {
            EngineChoice::Auto => Engine::auto(spec),
            EngineChoice::Ff => Engine::FreeFermion,
            EngineChoice::Ed => Engine::ExactDiag,
        }
    }
}

fn parse_anisotropy(s: &str) -> Result<Anisotropy, String> {
    s.parse().map_err(|e: endspin_core::Error| e.to_string())
}

/// Parameters shared by every chain-level command.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ChainArgs {
    /// Pre-quench anisotropy; a number or "inf".
    #[arg(long, default_value = "inf", value_parser = parse_anisotropy)]
    pub delta1: Anisotropy,
    /// Post-quench anisotropy.
    #[arg(long, default_value_t = 0.0)]
    pub delta2: f64,
    /// Base coupling J.
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Standard deviation of the relative coupling noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EngineChoice::Auto)]
    pub engine: EngineChoice,
    /// End of the time window (units of 1/J); defaults to 2N/(πJ).
    #[arg(long = "t-max-horizon")]
    pub horizon: Option<f64>,
}

impl ChainArgs {
    pub fn spec(&self, n: usize) -> ChainSpec {
        ChainSpec {
            n,
            j: self.j,
            delta1: self.delta1,
            delta2: self.delta2,
            disorder_sigma: self.sigma,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QuenchArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Time step of the output grid (units of 1/J).
    #[arg(long, default_value_t = 0.02)]
    pub grid_step: f64,
    /// Explicit comma-separated times; overrides the uniform grid.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    /// Chain lengths: a comma list and/or ranges `start..end[:step]`.
    /// Defaults to odd 3..49 followed by 51, 61, ..., 241.
    #[arg(long = "n")]
    pub n_list: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Accept even chain lengths (their end spins never entangle).
    #[arg(long)]
    pub allow_even: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DisorderArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Disorder strengths to compare.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    #[arg(long, default_value_t = 0.02)]
    pub grid_step: f64,
    /// Time series file; the peak summary goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EdCompareArgs {
    /// Chain lengths (at most 13).
    #[arg(long = "n", default_value = "3,5,7,9,11")]
    pub n_list: String,
    /// Number of uniformly spaced times.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// End of the time window; defaults to 2N.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PurifyArgs {
    /// Source fully entangled fraction.
    #[arg(long, conflicts_with = "scan")]
    pub fef: Option<f64>,
    /// Scan table to take the source fidelity from (with --n).
    #[arg(long, requires = "n")]
    pub scan: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.99)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output path; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `3,5,7`, `3..49:2` or mixtures of both; ranges are inclusive.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((range, step)) = part.split_once("..").map(|(a, rest)| {
            let (b, step) = rest.split_once(':').unwrap_or((rest, "1"));
            ((a, b), step)
        }) {
            let start: usize = range
                .0
                .parse()
                .map_err(|_| format!("bad range start in {part:?}"))?;
            let end: usize = range
                .1
                .parse()
                .map_err(|_| format!("bad range end in {part:?}"))?;
            let step: usize = step
                .parse()
                .map_err(|_| format!("bad range step in {part:?}"))?;
            if step == 0 {
                return Err(format!("zero step in {part:?}"));
            }
            out.extend((start..=end).step_by(step));
        } else {
            out.push(
                part.parse()
                    .map_err(|_| format!("bad chain length {part:?}"))?,
            );
        }
    }
    if out.is_empty() {
        return Err("empty chain-length list".into());
    }
    Ok(out)
}

/// Odd 3..=49, then every tenth length from 51 to 241.
pub fn default_n_list() -> Vec<usize> {
    (3..=49).step_by(2).chain((51..=241).step_by(10)).collect()
}
