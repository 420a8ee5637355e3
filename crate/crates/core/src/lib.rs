//! Co-occurrence knowledge graphs from user posts, exact metric backbones,
//! and digital cohort selection.
//!
//! The pipeline: a term [`dictionary`](crate::dictionary) resolves surface
//! forms to canonical parents; the [`matcher`](crate::matcher) scans a
//! [`corpus`](crate::corpus) of posts and produces per-post term sets; the
//! [`graph`](crate::graph) module turns co-occurrence counts into a Jaccard
//! proximity graph and its isomorphic distance graph (d = 1/p − 1); the
//! [`backbone`](crate::backbone) module computes the exact metric closure
//! and classifies each edge as metric (kept) or semi-metric (redundant);
//! the [`cohort`](crate::cohort) module selects backbone contributors and
//! engagement-filter baselines; [`report`](crate::report) renders
//! summaries, runs the annotation validation test, and exports artifacts;
//! [`synth`](crate::synth) generates reproducible synthetic corpora for
//! controlled experiments.
//!
//! # Exactness
//!
//! All proximity and distance weights are exact rationals by default
//! ([`Weight`]); backbone classification compares `d_ij` with the closure
//! distance `d^C_ij` with no tolerance. Graph algorithms are generic over
//! the [`weight::EdgeWeight`] scalar, so the same code runs in `f64` or
//! `f32` mode (with small relative tolerances for classification) when
//! exactness is traded for speed; see [`FloatDistanceGraph`].
//!
//! # Determinism
//!
//! Every artifact writer produces byte-identical output for identical
//! inputs, independent of worker count; synthetic generation is a pure
//! function of its seed.

pub mod backbone;
pub mod cohort;
pub mod corpus;
pub mod dictionary;
pub mod graph;
pub mod matcher;
pub mod rational;
pub mod report;
pub mod synth;
pub mod weight;

pub use backbone::{
    extract_backbone, metric_closure, read_backbone_csv, shortest_paths_from, write_backbone_csv,
    BackboneError, BackboneResult, BackboneSummary, ClassifiedGraph, ClosureDistances,
};
pub use cohort::{
    backbone_contributors, engagement_filter, engagement_stats, full_cohort, overlap, CohortError,
    CohortReport, CohortRow, EngagementStats, FilterSpec,
};
pub use corpus::{
    ingest, read_exclusions, seed_select, Corpus, CorpusError, IngestMode, IngestReport, Post,
    SeedSpec,
};
pub use dictionary::{normalize, Dictionary, DictionaryError, TermCategory, TermId};
pub use graph::{
    build_proximity, jaccard, read_graph_csv, to_distance, to_proximity, write_graph_csv,
    DistanceEdge, DistanceGraph, GraphError, ProximityEdge, ProximityGraph,
};
pub use matcher::{tokenize, MatchRecord, MatchTable, Matcher, MatcherError};
pub use rational::Rational;
pub use report::{
    erfc, export_cohort, export_graph, normal_two_sided_p, read_annotations, two_proportion_test,
    write_graphml, AnnotationLabel, AnnotationRecord, Format, ReportError, SummaryDoc,
    ValidationResult,
};
pub use synth::{demo_dictionary, generate, SynthError, SynthProfile, DEMO_DICTIONARY_TSV};
pub use weight::EdgeWeight;

/// Default exact scalar for distances and proximities.
pub type Weight = Rational;

/// Distance graph in the default exact mode.
pub type ExactDistanceGraph = graph::DistanceGraph<Rational>;

/// Distance graph in `f64` mode (1e-9 relative tolerance for backbone
/// classification).
pub type FloatDistanceGraph = graph::DistanceGraph<f64>;

/// Backbone classification result in the default exact mode.
pub type ExactBackbone = backbone::BackboneResult<Rational>;

/// Fully classified graph (counts, p, d, closure distance, backbone flag)
/// in the default exact mode.
pub type ExactClassifiedGraph = backbone::ClassifiedGraph<Rational>;
