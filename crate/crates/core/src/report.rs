//! Summary documents, annotation-based validation statistics, and
//! graph/cohort exports (CSV, GraphML, JSON).
//!
//! The validation statistic is a pooled two-proportion z-test over
//! annotation labels, with the two-sided p-value computed from a
//! complementary-error-function routine accurate to well under 1e-9
//! absolute across the tested range.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::backbone::{BackboneSummary, ClassifiedGraph};
use crate::cohort::CohortReport;
use crate::rational::Rational;
use crate::weight::EdgeWeight;

/// Annotation outcome for one sampled user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnnotationLabel {
    TruePositive,
    FalsePositive,
}

impl FromStr for AnnotationLabel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "true_positive" => Ok(AnnotationLabel::TruePositive),
            "false_positive" => Ok(AnnotationLabel::FalsePositive),
            _ => Err(()),
        }
    }
}

/// One manually annotated user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub user_id: String,
    pub label: AnnotationLabel,
}

/// Two-proportion z-test outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationResult {
    pub x1: u64,
    pub n1: u64,
    pub x2: u64,
    pub n2: u64,
    pub rate1: f64,
    pub rate2: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid test inputs: {message}")]
    DomainError { message: String },
    #[error("unsupported export format {format:?} for {target}")]
    UnsupportedFormat { format: String, target: String },
    #[error("unknown annotation label {label:?} (expected true_positive or false_positive)")]
    UnknownLabel { label: String },
    #[error("user {user_id:?} is annotated more than once")]
    DuplicateAnnotation { user_id: String },
    #[error("malformed annotation CSV: {message}")]
    Malformed { message: String },
    #[error("malformed CSV input: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to read or write report artifact: {0}")]
    Io(#[from] std::io::Error),
}

/// Annotation CSV: header `user_id,label`, one row per annotated user.
pub fn read_annotations<R: Read>(input: R) -> Result<Vec<AnnotationRecord>, ReportError> {
    let mut reader = csv::Reader::from_reader(input);
    {
        let headers = reader.headers()?;
        if headers.iter().collect::<Vec<_>>() != ["user_id", "label"] {
            return Err(ReportError::Malformed {
                message: format!("expected header user_id,label, found {headers:?}"),
            });
        }
    }
    let mut records: Vec<AnnotationRecord> = Vec::new();
    for row in reader.records() {
        let row = row?;
        if row.len() != 2 {
            return Err(ReportError::Malformed {
                message: format!("expected 2 columns, found {}", row.len()),
            });
        }
        let user_id = row.get(0).unwrap_or("").to_string();
        if user_id.is_empty() {
            return Err(ReportError::Malformed {
                message: "empty user_id".to_string(),
            });
        }
        let raw_label = row.get(1).unwrap_or("");
        let label = raw_label
            .parse()
            .map_err(|()| ReportError::UnknownLabel {
                label: raw_label.to_string(),
            })?;
        if records.iter().any(|r| r.user_id == user_id) {
            return Err(ReportError::DuplicateAnnotation { user_id });
        }
        records.push(AnnotationRecord { user_id, label });
    }
    Ok(records)
}

/// Complementary error function, absolute error well below 1e-10.
///
/// Small arguments use the cancellation-free scaled power series; large
/// arguments use the continued-fraction expansion evaluated by the
/// modified Lentz method.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 3.0 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// erf(x) = (2/√π)·e^{−x²}·Σ_{n≥0} (2x²)^n·x / (2n+1)!! — all terms
/// positive, so no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = term;
    for n in 1..500 {
        term *= 2.0 * x2 / (2.0 * n as f64 + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// erfc(x) = e^{−x²}/(√π · f) with f = x + (1/2)/(x + 1/(x + (3/2)/(x + …))).
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0_f64;
    for n in 1..300 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Two-sided tail probability of the standard normal: P(|Z| ≥ z).
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / 2.0_f64.sqrt())
}

/// Pooled two-proportion z-test; two-sided p-value.
pub fn two_proportion_test(
    x1: u64,
    n1: u64,
    x2: u64,
    n2: u64,
) -> Result<ValidationResult, ReportError> {
    if n1 == 0 || n2 == 0 {
        return Err(ReportError::DomainError {
            message: "group sizes must be positive".to_string(),
        });
    }
    if x1 > n1 || x2 > n2 {
        return Err(ReportError::DomainError {
            message: format!("counts exceed group sizes: {x1}/{n1}, {x2}/{n2}"),
        });
    }
    let rate1 = x1 as f64 / n1 as f64;
    let rate2 = x2 as f64 / n2 as f64;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    // se = 0 only when the pooled rate is 0 or 1, which forces
    // rate1 = rate2; define z = 0 there rather than 0/0.
    let z = if se == 0.0 { 0.0 } else { (rate1 - rate2) / se };
    Ok(ValidationResult {
        x1,
        n1,
        x2,
        n2,
        rate1,
        rate2,
        z,
        p_value: normal_two_sided_p(z),
    })
}

/// Split annotated users by backbone-contributor membership and compare
/// false-positive rates: group 1 = contributors, group 2 = the rest.
pub fn validation_from_annotations(
    report: &CohortReport,
    annotations: &[AnnotationRecord],
) -> Result<ValidationResult, ReportError> {
    let contributors = report.users_where(|r| r.backbone_contributor);
    let known = report.users_where(|_| true);
    let (mut x1, mut n1, mut x2, mut n2) = (0u64, 0u64, 0u64, 0u64);
    for a in annotations {
        if !known.contains(&a.user_id) {
            return Err(ReportError::DomainError {
                message: format!("annotated user {:?} does not appear in the cohort", a.user_id),
            });
        }
        let fp = u64::from(a.label == AnnotationLabel::FalsePositive);
        if contributors.contains(&a.user_id) {
            n1 += 1;
            x1 += fp;
        } else {
            n2 += 1;
            x2 += fp;
        }
    }
    two_proportion_test(x1, n1, x2, n2)
}

/// Rational serialized as numerator/denominator strings (arbitrary
/// precision survives JSON).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalDto {
    pub num: String,
    pub den: String,
}

impl RationalDto {
    fn from_rational(r: &Rational) -> RationalDto {
        RationalDto {
            num: r.numer_string(),
            den: r.denom_string(),
        }
    }
}

/// One run's summary: graph sizes, backbone relative size, cohort sizes,
/// and retention, with exact fractions where defined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryDoc {
    pub nodes: u64,
    pub edges: u64,
    pub backbone_edges: u64,
    pub tau: Option<RationalDto>,
    pub raw_cohort: u64,
    pub full_cohort: u64,
    pub full_cohort_fraction: Option<RationalDto>,
    pub backbone_contributors: u64,
    pub backbone_contributor_fraction_raw: Option<RationalDto>,
    pub backbone_contributor_fraction_full: Option<RationalDto>,
    pub lenient: u64,
    pub aggressive: u64,
    pub drug_mention: u64,
    pub retained_posts: u64,
    pub total_posts: u64,
    pub retained_post_fraction: Option<RationalDto>,
}

fn fraction(num: u64, den: u64) -> Option<Rational> {
    (den > 0).then(|| Rational::new(num as i128, den as i128))
}

/// "66.7%" for a defined fraction, "n/a" otherwise.
fn pct(r: &Option<Rational>) -> String {
    match r {
        Some(r) => format!("{:.1}%", r.to_f64() * 100.0),
        None => "n/a".to_string(),
    }
}

impl SummaryDoc {
    pub fn build(cohort: &CohortReport, bb: &BackboneSummary) -> SummaryDoc {
        let dto = |r: &Option<Rational>| r.as_ref().map(RationalDto::from_rational);
        let full_fraction = fraction(cohort.full_cohort_count, cohort.raw_cohort);
        let retained_fraction = fraction(cohort.retained_posts, cohort.total_posts);
        SummaryDoc {
            nodes: bb.nodes,
            edges: bb.edges,
            backbone_edges: bb.backbone_edges,
            tau: dto(&bb.tau),
            raw_cohort: cohort.raw_cohort,
            full_cohort: cohort.full_cohort_count,
            full_cohort_fraction: dto(&full_fraction),
            backbone_contributors: cohort.backbone_contributor_count,
            backbone_contributor_fraction_raw: dto(&cohort.r_raw),
            backbone_contributor_fraction_full: dto(&cohort.r_full),
            lenient: cohort.lenient_count,
            aggressive: cohort.aggressive_count,
            drug_mention: cohort.drug_mention_count,
            retained_posts: cohort.retained_posts,
            total_posts: cohort.total_posts,
            retained_post_fraction: dto(&retained_fraction),
        }
    }

    /// Human-readable rows; undefined ratios render as "n/a".
    pub fn render_text(&self) -> String {
        let rational = |dto: &Option<RationalDto>| -> Option<Rational> {
            dto.as_ref()
                .map(|d| Rational::from_parts(&d.num, &d.den).expect("stored rational is valid"))
        };
        let tau = rational(&self.tau);
        let tau_text = match &tau {
            Some(t) => format!("{t} ({})", pct(&tau)),
            None => "n/a".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("nodes: {}\n", self.nodes));
        out.push_str(&format!("edges: {}\n", self.edges));
        out.push_str(&format!("backbone_edges: {}\n", self.backbone_edges));
        out.push_str(&format!("tau: {tau_text}\n"));
        out.push_str(&format!("raw_cohort: {}\n", self.raw_cohort));
        out.push_str(&format!(
            "full_cohort: {} ({})\n",
            self.full_cohort,
            pct(&rational(&self.full_cohort_fraction))
        ));
        out.push_str(&format!(
            "backbone_contributors: {} ({})\n",
            self.backbone_contributors,
            pct(&rational(&self.backbone_contributor_fraction_raw))
        ));
        out.push_str(&format!(
            "lenient: {}\naggressive: {}\ndrug_mention: {}\n",
            self.lenient, self.aggressive, self.drug_mention
        ));
        out.push_str(&format!(
            "retained_posts: {} / {} ({})\n",
            self.retained_posts,
            self.total_posts,
            pct(&rational(&self.retained_post_fraction))
        ));
        out
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), ReportError> {
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| ReportError::Malformed {
            message: e.to_string(),
        })?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Export format selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Graphml,
    Json,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "graphml" => Ok(Format::Graphml),
            "json" => Ok(Format::Json),
            other => Err(ReportError::UnsupportedFormat {
                format: other.to_string(),
                target: "export".to_string(),
            }),
        }
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Undirected GraphML with `p`, `d` (exact rational strings) and
/// `is_backbone` edge attributes.
pub fn write_graphml<W: EdgeWeight, O: Write>(
    g: &ClassifiedGraph<W>,
    mut out: O,
) -> Result<(), ReportError> {
    out.write_all(b"<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n")?;
    out.write_all(b"<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n")?;
    out.write_all(b"  <key id=\"p\" for=\"edge\" attr.name=\"p\" attr.type=\"string\"/>\n")?;
    out.write_all(b"  <key id=\"d\" for=\"edge\" attr.name=\"d\" attr.type=\"string\"/>\n")?;
    out.write_all(
        b"  <key id=\"is_backbone\" for=\"edge\" attr.name=\"is_backbone\" attr.type=\"boolean\"/>\n",
    )?;
    out.write_all(b"  <graph edgedefault=\"undirected\">\n")?;
    for node in &g.nodes {
        writeln!(out, "    <node id=\"{}\"/>", escape_xml(node))?;
    }
    for e in &g.edges {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            escape_xml(&g.nodes[e.a as usize]),
            escape_xml(&g.nodes[e.b as usize])
        )?;
        writeln!(out, "      <data key=\"p\">{}</data>", e.p)?;
        writeln!(out, "      <data key=\"d\">{}</data>", e.d.to_exact())?;
        writeln!(out, "      <data key=\"is_backbone\">{}</data>", e.is_backbone)?;
        out.write_all(b"    </edge>\n")?;
    }
    out.write_all(b"  </graph>\n</graphml>\n")?;
    Ok(())
}

#[derive(Serialize)]
struct GraphJsonEdge<'a> {
    term_i: &'a str,
    term_j: &'a str,
    n_i: u64,
    n_j: u64,
    n_ij: u64,
    p_num: String,
    p_den: String,
    d_num: String,
    d_den: String,
    d_closure_num: String,
    d_closure_den: String,
    is_backbone: bool,
}

#[derive(Serialize)]
struct GraphJson<'a> {
    nodes: &'a [String],
    edges: Vec<GraphJsonEdge<'a>>,
}

fn write_graph_json<W: EdgeWeight, O: Write>(
    g: &ClassifiedGraph<W>,
    mut out: O,
) -> Result<(), ReportError> {
    let edges = g
        .edges
        .iter()
        .map(|e| {
            let d = e.d.to_exact();
            let dc = e.d_closure.to_exact();
            GraphJsonEdge {
                term_i: &g.nodes[e.a as usize],
                term_j: &g.nodes[e.b as usize],
                n_i: e.n_i,
                n_j: e.n_j,
                n_ij: e.n_ij,
                p_num: e.p.numer_string(),
                p_den: e.p.denom_string(),
                d_num: d.numer_string(),
                d_den: d.denom_string(),
                d_closure_num: dc.numer_string(),
                d_closure_den: dc.denom_string(),
                is_backbone: e.is_backbone,
            }
        })
        .collect();
    let doc = GraphJson {
        nodes: &g.nodes,
        edges,
    };
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| ReportError::Malformed {
        message: e.to_string(),
    })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Export a classified graph as CSV (the backbone edge list), GraphML, or
/// JSON. All three are bit-stable for identical inputs.
pub fn export_graph<W: EdgeWeight, O: Write>(
    g: &ClassifiedGraph<W>,
    format: Format,
    out: O,
) -> Result<(), ReportError> {
    match format {
        Format::Csv => crate::backbone::write_backbone_csv(g, out).map_err(|e| {
            ReportError::Malformed {
                message: e.to_string(),
            }
        }),
        Format::Graphml => write_graphml(g, out),
        Format::Json => write_graph_json(g, out),
    }
}

#[derive(Serialize)]
struct CohortJsonRow<'a> {
    user_id: &'a str,
    days_active: u64,
    post_count: u64,
    word_count: u64,
    unique_matches: u64,
    drug_mention: bool,
    full_cohort: bool,
    backbone_contributor: bool,
    lenient: bool,
    aggressive: bool,
}

/// Export a cohort as CSV or JSON (rows mirror the CSV fields); GraphML
/// does not apply to cohorts.
pub fn export_cohort<O: Write>(
    report: &CohortReport,
    format: Format,
    mut out: O,
) -> Result<(), ReportError> {
    match format {
        Format::Csv => report.write_csv(out).map_err(|e| ReportError::Malformed {
            message: e.to_string(),
        }),
        Format::Graphml => Err(ReportError::UnsupportedFormat {
            format: "graphml".to_string(),
            target: "cohort".to_string(),
        }),
        Format::Json => {
            let rows: Vec<CohortJsonRow> = report
                .rows
                .iter()
                .map(|r| CohortJsonRow {
                    user_id: &r.user_id,
                    days_active: r.days_active,
                    post_count: r.post_count,
                    word_count: r.word_count,
                    unique_matches: r.unique_matches,
                    drug_mention: r.drug_mention,
                    full_cohort: r.full_cohort,
                    backbone_contributor: r.backbone_contributor,
                    lenient: r.lenient,
                    aggressive: r.aggressive,
                })
                .collect();
            serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| ReportError::Malformed {
                message: e.to_string(),
            })?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

/// Overlap matrix serialized as a JSON array.
pub fn write_overlap_json<O: Write>(
    cells: &[crate::cohort::OverlapCell],
    mut out: O,
) -> Result<(), ReportError> {
    #[derive(Serialize)]
    struct Cell<'a> {
        set_a: &'a str,
        set_b: &'a str,
        size_a: u64,
        size_b: u64,
        intersection: u64,
        frac_of_a: Option<RationalDto>,
        frac_of_b: Option<RationalDto>,
    }
    let rows: Vec<Cell> = cells
        .iter()
        .map(|c| Cell {
            set_a: &c.set_a,
            set_b: &c.set_b,
            size_a: c.size_a,
            size_b: c.size_b,
            intersection: c.intersection,
            frac_of_a: c.frac_of_a.as_ref().map(RationalDto::from_rational),
            frac_of_b: c.frac_of_b.as_ref().map(RationalDto::from_rational),
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| ReportError::Malformed {
        message: e.to_string(),
    })?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Validation result serialized as JSON.
pub fn write_validation_json<O: Write>(
    result: &ValidationResult,
    mut out: O,
) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut out, result).map_err(|e| ReportError::Malformed {
        message: e.to_string(),
    })?;
    out.write_all(b"\n")?;
    Ok(())
}
