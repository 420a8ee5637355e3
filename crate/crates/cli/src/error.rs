//! CLI error type: every failure carries a machine-readable category that
//! is emitted as JSON on stderr alongside a nonzero exit status.

use cohortnet::{
    backbone::BackboneError, cohort::CohortError, corpus::CorpusError, dictionary::DictionaryError,
    graph::GraphError, matcher::MatcherError, report::ReportError, synth::SynthError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String },
    #[error("missing artifact {path}: {hint}")]
    MissingArtifact { path: String, hint: String },
    #[error(transparent)]
    Dictionary(#[from] DictionaryError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(message: impl Into<String>) -> CliError {
        CliError::Config {
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable category string for machine consumption.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config { .. } | CliError::MissingArtifact { .. } => "config",
            CliError::Dictionary(_) => "dictionary",
            CliError::Corpus(_) => "corpus",
            CliError::Matcher(_) => "matcher",
            CliError::Graph(_) => "graph",
            CliError::Backbone(_) => "backbone",
            CliError::Cohort(_) => "cohort",
            CliError::Report(_) => "report",
            CliError::Synth(_) => "synth",
            CliError::Io { .. } => "io",
        }
    }
}
