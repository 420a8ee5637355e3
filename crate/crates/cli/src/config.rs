//! Run configuration: a JSON config file, per-field command-line
//! overrides, and the resolved effective settings every stage consumes.
//!
//! Precedence is flag > config file > built-in default. The effective
//! settings (minus the output directory, which only decides where
//! artifacts land) are hashed into every manifest so reruns are
//! attributable to an exact configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use clap::Args;
use cohortnet::report::Format;
use cohortnet::Rational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Backbone arithmetic mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Exact rationals; classification is exact equality.
    Exact,
    /// IEEE doubles; classification uses a 1e-9 relative tolerance.
    F64,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::Exact => "exact",
            WeightMode::F64 => "f64",
        }
    }
}

impl FromStr for WeightMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "exact" => Ok(WeightMode::Exact),
            "f64" => Ok(WeightMode::F64),
            other => Err(CliError::config(format!(
                "unknown weight mode {other:?} (expected exact or f64)"
            ))),
        }
    }
}

/// JSON config file: every field optional; flags override.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dictionary: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub min_cooccur: Option<u64>,
    pub min_support: Option<u64>,
    pub lenient_percentile: Option<String>,
    pub aggressive_percentile: Option<String>,
    pub min_unique_terms: Option<u64>,
    pub seed_terms: Option<Vec<String>>,
    pub window: Option<usize>,
    pub strict: Option<bool>,
    pub min_timestamp: Option<String>,
    pub max_timestamp: Option<String>,
    pub format: Option<String>,
    pub weights: Option<String>,
    pub profile: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        serde_json::from_slice(&bytes).map_err(|e| {
            CliError::config(format!("invalid config file {}: {e}", path.display()))
        })
    }
}

/// Per-field overrides, shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    /// Dictionary TSV path (columns: parent, synonym, category)
    #[arg(long, value_name = "PATH")]
    pub dictionary: Option<PathBuf>,

    /// Corpus JSON Lines path (post_id, user_id, timestamp, platform, text)
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<PathBuf>,

    /// User exclusion list: one user_id per line, '#' starts a comment
    #[arg(long, value_name = "PATH")]
    pub exclusions: Option<PathBuf>,

    /// Annotation CSV (user_id,label) for the validation test
    #[arg(long, value_name = "PATH")]
    pub annotations: Option<PathBuf>,

    /// Directory for artifacts and manifests [default: out]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Minimum co-occurrence count n_ij for a graph edge [default: 3]
    #[arg(long, value_name = "N")]
    pub min_cooccur: Option<u64>,

    /// Edges require union size n_i + n_j - n_ij strictly greater than
    /// this [default: 10]
    #[arg(long, value_name = "N")]
    pub min_support: Option<u64>,

    /// Lenient engagement percentile, rational or decimal [default: 0.25]
    #[arg(long, value_name = "P")]
    pub lenient_percentile: Option<String>,

    /// Aggressive engagement percentile [default: 0.75]
    #[arg(long, value_name = "P")]
    pub aggressive_percentile: Option<String>,

    /// Unique matched terms required by the engagement filters [default: 2]
    #[arg(long, value_name = "N")]
    pub min_unique_terms: Option<u64>,

    /// Seed term for drug-mention selection; repeat for several terms
    #[arg(long = "seed-term", value_name = "TERM")]
    pub seed_terms: Vec<String>,

    /// Posts per matching window [default: 1]
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,

    /// Abort ingestion on the first malformed line [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub strict: Option<bool>,

    /// Keep only posts at or after this RFC 3339 timestamp
    #[arg(long, value_name = "TS")]
    pub min_timestamp: Option<String>,

    /// Keep only posts at or before this RFC 3339 timestamp
    #[arg(long, value_name = "TS")]
    pub max_timestamp: Option<String>,

    /// Graph export format: csv, graphml, or json [default: graphml]
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,

    /// Backbone arithmetic: exact or f64 [default: exact]
    #[arg(long, value_name = "MODE")]
    pub weights: Option<String>,

    /// Synthesis profile JSON path (synth subcommand)
    #[arg(long, value_name = "PATH")]
    pub profile: Option<PathBuf>,
}

/// Fully resolved settings.
#[derive(Clone, Debug)]
pub struct Effective {
    pub dictionary: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub min_cooccur: u64,
    pub min_support: u64,
    pub lenient_percentile: Rational,
    pub aggressive_percentile: Rational,
    pub min_unique_terms: u64,
    pub seed_terms: Vec<String>,
    pub window: usize,
    pub strict: bool,
    pub min_timestamp: Option<DateTime<Utc>>,
    pub max_timestamp: Option<DateTime<Utc>>,
    pub format: Format,
    pub weights: WeightMode,
    pub profile: Option<PathBuf>,
}

fn parse_percentile(label: &str, raw: &str) -> Result<Rational, CliError> {
    let value = Rational::parse(raw)
        .map_err(|e| CliError::config(format!("invalid {label} percentile {raw:?}: {e}")))?;
    if value < Rational::from_integer(0) || value > Rational::from_integer(1) {
        return Err(CliError::config(format!(
            "{label} percentile must lie in [0, 1], got {value}"
        )));
    }
    Ok(value)
}

fn parse_timestamp(label: &str, raw: &str) -> Result<DateTime<Utc>, CliError> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CliError::config(format!("invalid {label} timestamp {raw:?}: {e}")))
}

pub fn resolve(config: RunConfig, flags: &Overrides) -> Result<Effective, CliError> {
    let path = |flag: &Option<PathBuf>, file: Option<PathBuf>| flag.clone().or(file);
    let lenient_raw = flags
        .lenient_percentile
        .clone()
        .or(config.lenient_percentile)
        .unwrap_or_else(|| "1/4".to_string());
    let aggressive_raw = flags
        .aggressive_percentile
        .clone()
        .or(config.aggressive_percentile)
        .unwrap_or_else(|| "3/4".to_string());
    let lenient_percentile = parse_percentile("lenient", &lenient_raw)?;
    let aggressive_percentile = parse_percentile("aggressive", &aggressive_raw)?;

    let seed_terms = if flags.seed_terms.is_empty() {
        config.seed_terms.unwrap_or_default()
    } else {
        flags.seed_terms.clone()
    };

    let window = flags.window.or(config.window).unwrap_or(1);
    if window == 0 {
        return Err(CliError::config("window must be at least 1"));
    }

    let min_timestamp = flags
        .min_timestamp
        .clone()
        .or(config.min_timestamp)
        .map(|raw| parse_timestamp("min", &raw))
        .transpose()?;
    let max_timestamp = flags
        .max_timestamp
        .clone()
        .or(config.max_timestamp)
        .map(|raw| parse_timestamp("max", &raw))
        .transpose()?;

    let format: Format = flags
        .format
        .clone()
        .or(config.format)
        .unwrap_or_else(|| "graphml".to_string())
        .parse()
        .map_err(CliError::Report)?;
    let weights: WeightMode = flags
        .weights
        .clone()
        .or(config.weights)
        .unwrap_or_else(|| "exact".to_string())
        .parse()?;

    Ok(Effective {
        dictionary: path(&flags.dictionary, config.dictionary),
        corpus: path(&flags.corpus, config.corpus),
        exclusions: path(&flags.exclusions, config.exclusions),
        annotations: path(&flags.annotations, config.annotations),
        out_dir: path(&flags.out_dir, config.out_dir).unwrap_or_else(|| PathBuf::from("out")),
        min_cooccur: flags.min_cooccur.or(config.min_cooccur).unwrap_or(3),
        min_support: flags.min_support.or(config.min_support).unwrap_or(10),
        lenient_percentile,
        aggressive_percentile,
        min_unique_terms: flags.min_unique_terms.or(config.min_unique_terms).unwrap_or(2),
        seed_terms,
        window,
        strict: flags.strict.or(config.strict).unwrap_or(false),
        min_timestamp,
        max_timestamp,
        format,
        weights,
        profile: path(&flags.profile, config.profile),
    })
}

/// The hashed view excludes `out_dir` (and the worker count, which is not
/// a config field at all): neither changes any output byte, so runs that
/// differ only in artifact location share a config hash.
#[derive(Serialize)]
struct HashedConfig<'a> {
    dictionary: Option<String>,
    corpus: Option<String>,
    exclusions: Option<String>,
    annotations: Option<String>,
    min_cooccur: u64,
    min_support: u64,
    lenient_percentile: String,
    aggressive_percentile: String,
    min_unique_terms: u64,
    seed_terms: &'a [String],
    window: usize,
    strict: bool,
    min_timestamp: Option<String>,
    max_timestamp: Option<String>,
    format: &'a str,
    weights: &'a str,
    profile: Option<String>,
}

impl Effective {
    pub fn config_sha256(&self) -> String {
        let display = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let hashed = HashedConfig {
            dictionary: display(&self.dictionary),
            corpus: display(&self.corpus),
            exclusions: display(&self.exclusions),
            annotations: display(&self.annotations),
            min_cooccur: self.min_cooccur,
            min_support: self.min_support,
            lenient_percentile: self.lenient_percentile.to_string(),
            aggressive_percentile: self.aggressive_percentile.to_string(),
            min_unique_terms: self.min_unique_terms,
            seed_terms: &self.seed_terms,
            window: self.window,
            strict: self.strict,
            min_timestamp: self.min_timestamp.map(|t| t.to_rfc3339()),
            max_timestamp: self.max_timestamp.map(|t| t.to_rfc3339()),
            format: match self.format {
                Format::Csv => "csv",
                Format::Graphml => "graphml",
                Format::Json => "json",
            },
            weights: self.weights.as_str(),
            profile: display(&self.profile),
        };
        let json = serde_json::to_vec(&hashed).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
