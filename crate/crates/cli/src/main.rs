//! `cohortnet` — corpus-to-cohort pipeline driver.
//!
//! Subcommands mirror the pipeline order: ingest → match → graph →
//! backbone → cohort → report, with `ego` and `synth` as side entries and
//! `pipeline` composing the whole sequence. Configuration comes from an
//! optional JSON file plus per-field flags; every run writes a manifest
//! so outputs are attributable to exact inputs and configuration.

mod config;
mod error;
mod manifest;
mod stages;

use clap::{Parser, Subcommand};

use config::{resolve, Effective, Overrides, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "cohortnet",
    version,
    about = "Term co-occurrence graphs, metric backbones, and cohort selection from user posts",
    propagate_version = true
)]
struct Cli {
    /// JSON config file; every field can be overridden by a flag
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<std::path::PathBuf>,

    /// Bound worker threads for matching and closure; never changes
    /// output bytes [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a JSON Lines corpus into the canonical artifact, applying
    /// exclusions and time bounds
    Ingest(Overrides),
    /// Match dictionary terms against the ingested corpus (optionally
    /// seed-selecting users first)
    Match(Overrides),
    /// Build the Jaccard proximity graph from match counts
    Graph(Overrides),
    /// Compute the exact metric closure and classify edges
    /// metric/semi-metric
    Backbone(Overrides),
    /// Compute engagement statistics, filters, and backbone contributors
    Cohort(Overrides),
    /// Render summaries, overlaps, the validation test, and graph exports
    Report(Overrides),
    /// Export the radius-1 neighborhood of a term as GraphML
    Ego {
        /// Center term (canonical name as it appears in the graph)
        #[arg(long, value_name = "TERM")]
        term: String,
        /// Keep only backbone edges
        #[arg(long)]
        backbone: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate a reproducible synthetic corpus from a profile
    Synth(Overrides),
    /// Run ingest, match, graph, backbone, cohort, and report in sequence
    Pipeline(Overrides),
}

impl Command {
    fn overrides(&self) -> &Overrides {
        match self {
            Command::Ingest(o)
            | Command::Match(o)
            | Command::Graph(o)
            | Command::Backbone(o)
            | Command::Cohort(o)
            | Command::Report(o)
            | Command::Synth(o)
            | Command::Pipeline(o) => o,
            Command::Ego { overrides, .. } => overrides,
        }
    }
}

fn dispatch(command: &Command, eff: &Effective) -> Result<(), CliError> {
    match command {
        Command::Ingest(_) => stages::stage_ingest(eff),
        Command::Match(_) => stages::stage_match(eff),
        Command::Graph(_) => stages::stage_graph(eff),
        Command::Backbone(_) => stages::stage_backbone(eff),
        Command::Cohort(_) => stages::stage_cohort(eff),
        Command::Report(_) => stages::stage_report(eff),
        Command::Ego { term, backbone, .. } => stages::stage_ego(eff, term, *backbone),
        Command::Synth(_) => stages::stage_synth(eff),
        Command::Pipeline(_) => stages::stage_pipeline(eff),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let file_config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let eff = resolve(file_config, cli.command.overrides())?;
    match cli.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot build worker pool: {e}")))?;
            pool.install(|| dispatch(&cli.command, &eff))
        }
        None => dispatch(&cli.command, &eff),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        let payload = serde_json::json!({
            "error": { "category": e.category(), "message": e.to_string() }
        });
        eprintln!("{payload}");
        std::process::exit(1);
    }
}
