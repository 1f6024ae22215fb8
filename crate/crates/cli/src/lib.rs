//! Batch front end for the agenda pipeline.
//!
//! Every command reads upstream output directories, writes its files into
//! `--out` together with a `manifest.json`, and exits with 0 on success, 2 on
//! bad input, 3 when a model cannot be fitted and 64 on a usage error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pages;
pub mod svg;

pub use error::{CliError, EXIT_INPUT, EXIT_MODEL, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "agenda",
    version,
    about = "Topic models and event regressions for parliamentary records"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file of settings; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed (falls back to the config file, then AGENDA_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Use upstream directories even when their manifests are stale.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflow tagged page files and split them into speaker turns.
    Parse(ParseArgs),
    /// Tokenise a tidy corpus into a day-level document-term matrix.
    Preprocess(PreprocessArgs),
    /// Fit an LDA or correlated topic model.
    FitTopics(FitTopicsArgs),
    /// Score topic models over a grid of topic counts.
    Diagnostics(DiagnosticsArgs),
    /// Aggregate topic shares into CAP groups and attach the timeline.
    MapCap(MapCapArgs),
    /// Fit the event model to a topic-share panel.
    FitEvents(FitEventsArgs),
    /// Compare neighbouring governments and elections.
    Compare(PosteriorArgs),
    /// List days whose topic shares are far from their sitting-period mean.
    Outliers(PosteriorArgs),
    /// Write figure data as CSV and SVG.
    Figures(FiguresArgs),
    /// Generate synthetic pages, corpora or panels.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[command(flatten)]
    pub common: Common,
    /// Directory of `<chamber>_<YYYY-MM-DD>.txt` page files.
    #[arg(long)]
    pub input: PathBuf,
    /// Speaker pattern file, one regular expression per line.
    #[arg(long)]
    pub speaker_patterns: Option<PathBuf>,
    /// Skip unparseable pages with a warning instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory of `parse`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub min_term_count: Option<u64>,
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub multiword: Option<PathBuf>,
    #[arg(long)]
    pub substitutions: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Lda,
    Ctm,
}

/// Gibbs sampler settings shared by topic-model commands.
#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitTopicsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory of `preprocess` (or `simulate topics`).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Number of topics.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args)]
pub struct DiagnosticsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Topic counts to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    #[arg(long)]
    pub heldout_fraction: Option<f64>,
    #[arg(long)]
    pub top_words: Option<usize>,
    /// Sampler settings; `--alpha` applies to the first topic count and is rescaled for the others.
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args)]
pub struct MapCapArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory of `fit-topics`.
    #[arg(long)]
    pub topics: PathBuf,
    /// Scheme CSV `topic_id,cap_code,cap_name`; defaults to the bundled 80-topic scheme.
    #[arg(long)]
    pub scheme: Option<PathBuf>,
    /// Governments CSV; defaults to the bundled Australian timeline.
    #[arg(long)]
    pub governments: Option<PathBuf>,
    #[arg(long)]
    pub elections: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitEventsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory of `map-cap` (or `simulate events`).
    #[arg(long)]
    pub panel: PathBuf,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub prior_sd_alpha: Option<f64>,
    #[arg(long)]
    pub prior_sd_beta: Option<f64>,
    #[arg(long)]
    pub prior_sd_mu: Option<f64>,
    #[arg(long)]
    pub sigma_upper: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory of `fit-events`.
    #[arg(long)]
    pub events: PathBuf,
    /// The panel directory the events were fitted to.
    #[arg(long)]
    pub panel: PathBuf,
    /// Credible-interval level for comparisons.
    #[arg(long)]
    pub credibility: Option<f64>,
    /// Outlier threshold in standard deviations.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub panel: PathBuf,
    /// Output directory of `diagnostics`, for the held-out likelihood figure.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    #[arg(long)]
    pub credibility: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimulateKind {
    /// Tagged transcript pages for both chambers.
    Pages,
    /// A document-term matrix drawn from LDA.
    Topics,
    /// A topic-share panel drawn from the event model.
    Events,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(value_enum)]
    pub kind: SimulateKind,
    /// Sitting periods (pages, events).
    #[arg(long)]
    pub periods: Option<usize>,
    /// Sitting days per period (pages, events).
    #[arg(long)]
    pub days_per_period: Option<usize>,
    /// Words per page (pages).
    #[arg(long)]
    pub words_per_day: Option<usize>,
    /// Topics (topics).
    #[arg(long)]
    pub k: Option<usize>,
    /// Vocabulary size (topics).
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Documents (topics).
    #[arg(long)]
    pub docs: Option<usize>,
    /// Tokens per document (topics).
    #[arg(long)]
    pub doc_len: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Governments (events).
    #[arg(long)]
    pub n_governments: Option<usize>,
    /// Elections (events).
    #[arg(long)]
    pub n_elections: Option<usize>,
    /// Topic groups (events).
    #[arg(long)]
    pub p: Option<usize>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
