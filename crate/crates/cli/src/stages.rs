//! Stage implementations. Every stage reads files, calls the library, and
//! writes fixed-name artifacts plus a manifest into the output directory;
//! `pipeline` is literally the other stages composed in order.

use std::collections::BTreeSet;
use std::io::BufRead;

use cohortnet::backbone::ClassifiedGraph;
use cohortnet::cohort::{
    engagement_filter, engagement_stats, users_covering_pairs, CohortReport, FilterSpec,
};
use cohortnet::corpus::{ingest, read_exclusions, seed_select, Corpus, IngestMode, SeedSpec};
use cohortnet::dictionary::Dictionary;
use cohortnet::graph::{build_proximity, read_graph_csv, to_distance, write_graph_csv};
use cohortnet::matcher::{MatchTable, Matcher};
use cohortnet::report::{
    export_graph, read_annotations, validation_from_annotations, write_graphml,
    write_overlap_json, write_validation_json, Format, SummaryDoc,
};
use cohortnet::synth::{demo_dictionary, generate, SynthProfile, DEMO_DICTIONARY_TSV};
use cohortnet::weight::EdgeWeight;
use cohortnet::{extract_backbone, read_backbone_csv, write_backbone_csv, Rational};
use serde::Serialize;

use crate::config::{Effective, WeightMode};
use crate::error::CliError;
use crate::manifest::StageContext;

const HINT_INGEST: &str = "run `cohortnet ingest` first";
const HINT_MATCH: &str = "run `cohortnet match` first";
const HINT_GRAPH: &str = "run `cohortnet graph` first";
const HINT_BACKBONE: &str = "run `cohortnet backbone` first";
const HINT_COHORT: &str = "run `cohortnet cohort` first";

fn load_dictionary(ctx: &mut StageContext) -> Result<Dictionary, CliError> {
    let path = ctx
        .eff
        .dictionary
        .clone()
        .ok_or_else(|| CliError::config("a dictionary path is required (--dictionary or config)"))?;
    let bytes = ctx.read_input(&path)?;
    Ok(Dictionary::load(&bytes[..])?)
}

/// Canonical corpus artifact, re-restricted to seed users when the match
/// stage performed seed selection.
fn load_pipeline_corpus(
    ctx: &mut StageContext,
) -> Result<(Corpus, Option<BTreeSet<String>>), CliError> {
    let bytes = ctx.read_artifact("corpus.jsonl", HINT_INGEST)?;
    let (corpus, _) = ingest(&bytes[..], IngestMode::Strict)?;
    match ctx.read_artifact_optional("seed_users.txt")? {
        Some(seed_bytes) => {
            let users: BTreeSet<String> = seed_bytes
                .lines()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::io("seed_users.txt".to_string(), e))?
                .into_iter()
                .filter(|l| !l.is_empty())
                .collect();
            Ok((corpus.restrict_to_users(&users), Some(users)))
        }
        None => Ok((corpus, None)),
    }
}

#[derive(Serialize)]
struct IngestReportDoc<'a> {
    parsed: u64,
    skipped: u64,
    sample_errors: &'a [String],
}

fn json_artifact<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

pub fn stage_ingest(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let corpus_path = eff
        .corpus
        .clone()
        .ok_or_else(|| CliError::config("a corpus path is required (--corpus or config)"))?;
    let bytes = ctx.read_input(&corpus_path)?;
    let mode = if eff.strict {
        IngestMode::Strict
    } else {
        IngestMode::Lenient
    };
    let (mut corpus, report) = ingest(&bytes[..], mode)?;
    if let Some(path) = &eff.exclusions {
        let excl_bytes = ctx.read_input(path)?;
        let ids = read_exclusions(&excl_bytes[..])?;
        corpus = corpus.apply_exclusions(&ids);
    }
    if eff.min_timestamp.is_some() || eff.max_timestamp.is_some() {
        corpus = corpus.filter_by_time(eff.min_timestamp, eff.max_timestamp);
    }
    let mut out = Vec::new();
    corpus
        .write_jsonl(&mut out)
        .map_err(|e| CliError::io("corpus.jsonl".to_string(), e))?;
    ctx.write_artifact("corpus.jsonl", &out)?;
    ctx.write_artifact(
        "ingest_report.json",
        &json_artifact(&IngestReportDoc {
            parsed: report.parsed,
            skipped: report.skipped,
            sample_errors: &report.sample_errors,
        }),
    )?;
    ctx.finish("ingest")
}

pub fn stage_match(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let dict = load_dictionary(&mut ctx)?;
    let bytes = ctx.read_artifact("corpus.jsonl", HINT_INGEST)?;
    let (corpus, _) = ingest(&bytes[..], IngestMode::Strict)?;
    let matcher = Matcher::new(&dict)?;
    let corpus = if eff.seed_terms.is_empty() {
        corpus
    } else {
        let spec = SeedSpec::resolve(&eff.seed_terms, &dict)?;
        let users = seed_select(&corpus, &matcher, &spec);
        let mut listing = users.iter().cloned().collect::<Vec<_>>().join("\n");
        listing.push('\n');
        ctx.write_artifact("seed_users.txt", listing.as_bytes())?;
        corpus.restrict_to_users(&users)
    };
    let table = matcher.match_corpus(&corpus, &dict, eff.window)?;
    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    ctx.write_artifact("matches.csv", &out)?;
    ctx.finish("match")
}

pub fn stage_graph(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let (corpus, _) = load_pipeline_corpus(&mut ctx)?;
    let match_bytes = ctx.read_artifact("matches.csv", HINT_MATCH)?;
    let table = MatchTable::read_csv(&corpus, eff.window, &match_bytes[..])?;
    let graph = build_proximity(&table, eff.min_cooccur, eff.min_support);
    let mut out = Vec::new();
    write_graph_csv(&graph, &mut out)?;
    ctx.write_artifact("graph.csv", &out)?;
    ctx.finish("graph")
}

#[derive(Serialize)]
struct RationalDoc {
    num: String,
    den: String,
}

#[derive(Serialize)]
struct BackboneSummaryDoc {
    nodes: u64,
    edges: u64,
    backbone_edges: u64,
    tau: Option<RationalDoc>,
}

fn classify<W: EdgeWeight>(
    graph: &cohortnet::graph::ProximityGraph,
    dist: &cohortnet::graph::DistanceGraph<W>,
) -> ClassifiedGraph<W> {
    let bb = extract_backbone(dist);
    ClassifiedGraph::new(graph, dist, &bb)
}

pub fn stage_backbone(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let graph_bytes = ctx.read_artifact("graph.csv", HINT_GRAPH)?;
    let graph = read_graph_csv(&graph_bytes[..])?;
    let dist = to_distance(&graph)?;
    let (csv, summary) = match eff.weights {
        WeightMode::Exact => {
            let cg = classify(&graph, &dist);
            let mut out = Vec::new();
            write_backbone_csv(&cg, &mut out)?;
            (out, cg.summary())
        }
        WeightMode::F64 => {
            let cg = classify(&graph, &dist.map_weights::<f64>());
            let mut out = Vec::new();
            write_backbone_csv(&cg, &mut out)?;
            (out, cg.summary())
        }
    };
    ctx.write_artifact("backbone.csv", &csv)?;
    let tau_text = summary
        .tau
        .as_ref()
        .map_or_else(|| "n/a".to_string(), |t| t.to_string());
    ctx.write_artifact(
        "backbone_summary.json",
        &json_artifact(&BackboneSummaryDoc {
            nodes: summary.nodes,
            edges: summary.edges,
            backbone_edges: summary.backbone_edges,
            tau: summary.tau.as_ref().map(|t| RationalDoc {
                num: t.numer_string(),
                den: t.denom_string(),
            }),
        }),
    )?;
    println!(
        "nodes={} edges={} backbone_edges={} tau={}",
        summary.nodes, summary.edges, summary.backbone_edges, tau_text
    );
    ctx.finish("backbone")
}

pub fn stage_cohort(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let (corpus, seed_users) = load_pipeline_corpus(&mut ctx)?;
    let match_bytes = ctx.read_artifact("matches.csv", HINT_MATCH)?;
    let table = MatchTable::read_csv(&corpus, eff.window, &match_bytes[..])?;
    let graph_bytes = ctx.read_artifact("graph.csv", HINT_GRAPH)?;
    let graph = read_graph_csv(&graph_bytes[..])?;
    let backbone_bytes = ctx.read_artifact("backbone.csv", HINT_BACKBONE)?;
    let classified: ClassifiedGraph<Rational> = read_backbone_csv(&backbone_bytes[..])?;

    let contributors = users_covering_pairs(&table, &classified.backbone_name_pairs());
    let full = users_covering_pairs(&table, &graph.edge_name_pairs());
    let stats = engagement_stats(&corpus, &table);
    let (lenient, aggressive) = if stats.is_empty() {
        (BTreeSet::new(), BTreeSet::new())
    } else {
        let filter = |percentile: &Rational| {
            engagement_filter(
                &stats,
                &FilterSpec {
                    percentile: percentile.clone(),
                    min_unique_terms: eff.min_unique_terms,
                },
            )
        };
        (
            filter(&eff.lenient_percentile)?,
            filter(&eff.aggressive_percentile)?,
        )
    };
    let report = CohortReport::assemble(
        &stats,
        seed_users.as_ref(),
        &full,
        &contributors,
        &lenient,
        &aggressive,
        &corpus,
    );
    let mut out = Vec::new();
    report.write_csv(&mut out)?;
    ctx.write_artifact("cohort.csv", &out)?;
    ctx.finish("cohort")
}

fn export_name(format: Format) -> &'static str {
    match format {
        Format::Csv => "graph_export.csv",
        Format::Graphml => "graph_export.graphml",
        Format::Json => "graph_export.json",
    }
}

pub fn stage_report(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let cohort_bytes = ctx.read_artifact("cohort.csv", HINT_COHORT)?;
    let cohort = CohortReport::read_csv(&cohort_bytes[..])?;
    let backbone_bytes = ctx.read_artifact("backbone.csv", HINT_BACKBONE)?;
    let classified: ClassifiedGraph<Rational> = read_backbone_csv(&backbone_bytes[..])?;

    let doc = SummaryDoc::build(&cohort, &classified.summary());
    let mut summary_json = Vec::new();
    doc.write_json(&mut summary_json)?;
    ctx.write_artifact("summary.json", &summary_json)?;
    ctx.write_artifact("summary.txt", doc.render_text().as_bytes())?;

    let mut overlap_json = Vec::new();
    write_overlap_json(&cohortnet::cohort::overlap(&cohort), &mut overlap_json)?;
    ctx.write_artifact("overlap.json", &overlap_json)?;

    let mut export = Vec::new();
    export_graph(&classified, eff.format, &mut export)?;
    ctx.write_artifact(export_name(eff.format), &export)?;

    if let Some(path) = &eff.annotations {
        let bytes = ctx.read_input(path)?;
        let annotations = read_annotations(&bytes[..])?;
        let result = validation_from_annotations(&cohort, &annotations)?;
        let mut validation = Vec::new();
        write_validation_json(&result, &mut validation)?;
        ctx.write_artifact("validation.json", &validation)?;
    }
    ctx.finish("report")
}

fn ego_artifact_name(term: &str) -> String {
    let slug: String = term
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    format!("ego-{slug}.graphml")
}

pub fn stage_ego(eff: &Effective, term: &str, backbone_only: bool) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let backbone_bytes = ctx.read_artifact("backbone.csv", HINT_BACKBONE)?;
    let classified: ClassifiedGraph<Rational> = read_backbone_csv(&backbone_bytes[..])?;
    let sub = classified.ego(term, backbone_only)?;
    let mut out = Vec::new();
    write_graphml(&sub, &mut out)?;
    ctx.write_artifact(&ego_artifact_name(term), &out)?;
    ctx.finish("ego")
}

pub fn stage_synth(eff: &Effective) -> Result<(), CliError> {
    let mut ctx = StageContext::new(eff)?;
    let profile_path = eff
        .profile
        .clone()
        .ok_or_else(|| CliError::config("a profile path is required (--profile or config)"))?;
    let bytes = ctx.read_input(&profile_path)?;
    let profile: SynthProfile = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::config(format!(
            "invalid synthesis profile {}: {e}",
            profile_path.display()
        ))
    })?;
    let dict = match &eff.dictionary {
        Some(path) => {
            let dict_bytes = ctx.read_input(path)?;
            Dictionary::load(&dict_bytes[..])?
        }
        None => demo_dictionary(),
    };
    let corpus = generate(&profile, &dict)?;
    let mut out = Vec::new();
    corpus
        .write_jsonl(&mut out)
        .map_err(|e| CliError::io("synthetic.jsonl".to_string(), e))?;
    ctx.write_artifact("synthetic.jsonl", &out)?;
    if eff.dictionary.is_none() {
        ctx.write_artifact("demo-dictionary.tsv", DEMO_DICTIONARY_TSV.as_bytes())?;
    }
    ctx.finish("synth")
}

/// All artifacts the pipeline stages can produce, in production order.
const PIPELINE_ARTIFACTS: [&str; 12] = [
    "corpus.jsonl",
    "ingest_report.json",
    "seed_users.txt",
    "matches.csv",
    "graph.csv",
    "backbone.csv",
    "backbone_summary.json",
    "cohort.csv",
    "summary.json",
    "summary.txt",
    "overlap.json",
    "validation.json",
];

pub fn stage_pipeline(eff: &Effective) -> Result<(), CliError> {
    stage_ingest(eff)?;
    stage_match(eff)?;
    stage_graph(eff)?;
    stage_backbone(eff)?;
    stage_cohort(eff)?;
    stage_report(eff)?;

    let mut ctx = StageContext::new(eff)?;
    if let Some(path) = &eff.corpus {
        ctx.read_input(path)?;
    }
    if let Some(path) = &eff.dictionary {
        ctx.read_input(path)?;
    }
    if let Some(path) = &eff.exclusions {
        ctx.read_input(path)?;
    }
    if let Some(path) = &eff.annotations {
        ctx.read_input(path)?;
    }
    for name in PIPELINE_ARTIFACTS {
        if ctx.has_artifact(name) {
            ctx.record_output(name)?;
        }
    }
    if ctx.has_artifact(export_name(eff.format)) {
        ctx.record_output(export_name(eff.format))?;
    }
    ctx.finish("pipeline")
}
