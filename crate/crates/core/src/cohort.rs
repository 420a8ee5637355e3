//! Per-user engagement statistics, engagement filters, backbone-contributor
//! selection, and cohort reporting.
//!
//! The engagement filter retains users strictly exceeding a nearest-rank
//! percentile on activity duration, post count, and word count, with a
//! floor on unique matched terms. The backbone-contributor filter retains
//! users with at least one post co-mentioning both endpoints of a backbone
//! edge. Both operate on the same post-exclusion, post-seed population, so
//! the reported ratios compare like with like.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::backbone::BackboneResult;
use crate::corpus::Corpus;
use crate::graph::ProximityGraph;
use crate::matcher::MatchTable;
use crate::rational::Rational;
use crate::weight::EdgeWeight;

/// Volume and matching statistics for one user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngagementStats {
    pub user_id: String,
    /// Whole days between first and most recent post (0 for one post).
    pub days_active: u64,
    pub post_count: u64,
    pub word_count: u64,
    /// Distinct parent terms matched across all the user's posts.
    pub unique_matches: u64,
}

/// Engagement filter parameters.
#[derive(Clone, Debug)]
pub struct FilterSpec {
    /// Nearest-rank percentile in [0, 1] that users must strictly exceed
    /// on every volume axis.
    pub percentile: Rational,
    pub min_unique_terms: u64,
}

impl FilterSpec {
    /// 25th percentile, ≥ 2 unique terms.
    pub fn lenient() -> Self {
        FilterSpec { percentile: Rational::new(1, 4), min_unique_terms: 2 }
    }

    /// 75th percentile, ≥ 2 unique terms.
    pub fn aggressive() -> Self {
        FilterSpec { percentile: Rational::new(3, 4), min_unique_terms: 2 }
    }
}

/// Per-user flags plus aggregate ratios.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CohortReport {
    pub rows: Vec<CohortRow>,
    pub raw_cohort: u64,
    pub full_cohort_count: u64,
    pub backbone_contributor_count: u64,
    pub lenient_count: u64,
    pub aggressive_count: u64,
    pub drug_mention_count: u64,
    /// contributors / raw cohort; `None` when the raw cohort is empty.
    pub r_raw: Option<Rational>,
    /// contributors / full cohort; `None` when the full cohort is empty.
    pub r_full: Option<Rational>,
    /// Posts authored by backbone contributors.
    pub retained_posts: u64,
    pub total_posts: u64,
}

/// One user's line in the cohort artifact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohortRow {
    pub user_id: String,
    pub days_active: u64,
    pub post_count: u64,
    pub word_count: u64,
    pub unique_matches: u64,
    pub drug_mention: bool,
    pub full_cohort: bool,
    pub backbone_contributor: bool,
    pub lenient: bool,
    pub aggressive: bool,
}

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("cannot filter an empty statistics collection")]
    EmptyStats,
    #[error("malformed cohort CSV: {message}")]
    Malformed { message: String },
    #[error("malformed cohort CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to read or write cohort artifact: {0}")]
    Io(#[from] std::io::Error),
}

/// One record per user, sorted by user id.
pub fn engagement_stats(corpus: &Corpus, table: &MatchTable) -> Vec<EngagementStats> {
    let mut matches_by_user: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for record in &table.records {
        let entry = matches_by_user.entry(record.user_id.as_str()).or_default();
        entry.extend(record.terms.iter().map(|t| t.0));
    }
    corpus
        .timelines()
        .iter()
        .map(|(user, indices)| {
            let posts = || indices.iter().map(|&i| &corpus.posts()[i]);
            let first = posts().map(|p| p.timestamp).min().expect("timeline non-empty");
            let last = posts().map(|p| p.timestamp).max().expect("timeline non-empty");
            let days_active = (last - first).num_days().max(0) as u64;
            let word_count = posts()
                .map(|p| p.text.split_whitespace().count() as u64)
                .sum();
            EngagementStats {
                user_id: user.clone(),
                days_active,
                post_count: indices.len() as u64,
                word_count,
                unique_matches: matches_by_user
                    .get(user.as_str())
                    .map_or(0, |s| s.len() as u64),
            }
        })
        .collect()
}

/// Nearest-rank percentile: the ⌈P·N⌉-th smallest value (1-indexed),
/// clamped into the sample.
fn nearest_rank(sorted: &[u64], percentile: &Rational) -> u64 {
    let n = sorted.len() as i64;
    let rank = (&Rational::from(n) * percentile).ceil_i64().clamp(1, n);
    sorted[(rank - 1) as usize]
}

/// Users strictly exceeding the percentile threshold on days active, post
/// count, AND word count, with at least `min_unique_terms` matched terms.
pub fn engagement_filter(
    stats: &[EngagementStats],
    spec: &FilterSpec,
) -> Result<BTreeSet<String>, CohortError> {
    if stats.is_empty() {
        return Err(CohortError::EmptyStats);
    }
    let mut days: Vec<u64> = stats.iter().map(|s| s.days_active).collect();
    let mut posts: Vec<u64> = stats.iter().map(|s| s.post_count).collect();
    let mut words: Vec<u64> = stats.iter().map(|s| s.word_count).collect();
    days.sort_unstable();
    posts.sort_unstable();
    words.sort_unstable();
    let day_cut = nearest_rank(&days, &spec.percentile);
    let post_cut = nearest_rank(&posts, &spec.percentile);
    let word_cut = nearest_rank(&words, &spec.percentile);
    Ok(stats
        .iter()
        .filter(|s| {
            s.days_active > day_cut
                && s.post_count > post_cut
                && s.word_count > word_cut
                && s.unique_matches >= spec.min_unique_terms
        })
        .map(|s| s.user_id.clone())
        .collect())
}

/// Users with ≥ 1 record whose term set covers both endpoints of some
/// pair. Pairs must be (lexicographically lower, higher) name tuples.
pub fn users_covering_pairs(table: &MatchTable, pairs: &BTreeSet<(&str, &str)>) -> BTreeSet<String> {
    let mut users = BTreeSet::new();
    for record in &table.records {
        if users.contains(&record.user_id) {
            continue;
        }
        let names: Vec<&str> = record.terms.iter().map(|&t| table.term_name(t)).collect();
        'outer: for (i, &x) in names.iter().enumerate() {
            for &y in &names[i + 1..] {
                let key = if x <= y { (x, y) } else { (y, x) };
                if pairs.contains(&key) {
                    users.insert(record.user_id.clone());
                    break 'outer;
                }
            }
        }
    }
    users
}

/// Users with ≥ 1 post whose term set covers both endpoints of a backbone
/// edge. Co-occurrence is within a single post: terms split across two
/// posts never qualify.
pub fn backbone_contributors<W: EdgeWeight>(
    table: &MatchTable,
    bb: &BackboneResult<W>,
) -> BTreeSet<String> {
    users_covering_pairs(table, &bb.backbone_name_pairs())
}

/// Users with ≥ 1 post covering both endpoints of any knowledge-graph edge.
pub fn full_cohort(table: &MatchTable, g: &ProximityGraph) -> BTreeSet<String> {
    users_covering_pairs(table, &g.edge_name_pairs())
}

impl CohortReport {
    /// Combine the per-user signals into flags and aggregates.
    ///
    /// `drug_mention` is `None` when no seed selection was configured; all
    /// flags then read false and the count is zero.
    pub fn assemble(
        stats: &[EngagementStats],
        drug_mention: Option<&BTreeSet<String>>,
        full: &BTreeSet<String>,
        contributors: &BTreeSet<String>,
        lenient: &BTreeSet<String>,
        aggressive: &BTreeSet<String>,
        corpus: &Corpus,
    ) -> CohortReport {
        let rows: Vec<CohortRow> = stats
            .iter()
            .map(|s| CohortRow {
                user_id: s.user_id.clone(),
                days_active: s.days_active,
                post_count: s.post_count,
                word_count: s.word_count,
                unique_matches: s.unique_matches,
                drug_mention: drug_mention.is_some_and(|d| d.contains(&s.user_id)),
                full_cohort: full.contains(&s.user_id),
                backbone_contributor: contributors.contains(&s.user_id),
                lenient: lenient.contains(&s.user_id),
                aggressive: aggressive.contains(&s.user_id),
            })
            .collect();
        let retained_posts = corpus
            .posts()
            .iter()
            .filter(|p| contributors.contains(&p.user_id))
            .count() as u64;
        CohortReport::from_rows(rows, retained_posts, corpus.len() as u64)
    }

    fn from_rows(rows: Vec<CohortRow>, retained_posts: u64, total_posts: u64) -> CohortReport {
        let count = |f: fn(&CohortRow) -> bool| rows.iter().filter(|r| f(r)).count() as u64;
        let raw_cohort = rows.len() as u64;
        let full_cohort_count = count(|r| r.full_cohort);
        let backbone_contributor_count = count(|r| r.backbone_contributor);
        let ratio = |num: u64, den: u64| {
            (den > 0).then(|| Rational::new(num as i128, den as i128))
        };
        CohortReport {
            raw_cohort,
            full_cohort_count,
            backbone_contributor_count,
            lenient_count: count(|r| r.lenient),
            aggressive_count: count(|r| r.aggressive),
            drug_mention_count: count(|r| r.drug_mention),
            r_raw: ratio(backbone_contributor_count, raw_cohort),
            r_full: ratio(backbone_contributor_count, full_cohort_count),
            retained_posts,
            total_posts,
            rows,
        }
    }

    pub fn users_where(&self, f: impl Fn(&CohortRow) -> bool) -> BTreeSet<String> {
        self.rows
            .iter()
            .filter(|r| f(r))
            .map(|r| r.user_id.clone())
            .collect()
    }

    /// Cohort CSV: one row per user with stats and flags.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CohortError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record([
            "user_id",
            "days_active",
            "post_count",
            "word_count",
            "unique_matches",
            "drug_mention",
            "full_cohort",
            "backbone_contributor",
            "lenient",
            "aggressive",
        ])?;
        let b = |v: bool| if v { "true" } else { "false" };
        for r in &self.rows {
            writer.write_record([
                r.user_id.as_str(),
                &r.days_active.to_string(),
                &r.post_count.to_string(),
                &r.word_count.to_string(),
                &r.unique_matches.to_string(),
                b(r.drug_mention),
                b(r.full_cohort),
                b(r.backbone_contributor),
                b(r.lenient),
                b(r.aggressive),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reload a cohort CSV. Post totals are recomputed from the row stats
    /// (retained = posts of contributors), matching `assemble`'s arithmetic.
    pub fn read_csv<R: Read>(input: R) -> Result<CohortReport, CohortError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        let parse_bool = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(CohortError::Malformed {
                message: format!("bad boolean {other:?}"),
            }),
        };
        for record in reader.records() {
            let record = record?;
            if record.len() != 10 {
                return Err(CohortError::Malformed {
                    message: format!("expected 10 columns, found {}", record.len()),
                });
            }
            let field = |i: usize| record.get(i).unwrap_or("");
            let num = |i: usize| -> Result<u64, CohortError> {
                field(i).parse().map_err(|_| CohortError::Malformed {
                    message: format!("bad count {:?}", field(i)),
                })
            };
            rows.push(CohortRow {
                user_id: field(0).to_string(),
                days_active: num(1)?,
                post_count: num(2)?,
                word_count: num(3)?,
                unique_matches: num(4)?,
                drug_mention: parse_bool(field(5))?,
                full_cohort: parse_bool(field(6))?,
                backbone_contributor: parse_bool(field(7))?,
                lenient: parse_bool(field(8))?,
                aggressive: parse_bool(field(9))?,
            });
        }
        let retained = rows
            .iter()
            .filter(|r| r.backbone_contributor)
            .map(|r| r.post_count)
            .sum();
        let total = rows.iter().map(|r| r.post_count).sum();
        Ok(CohortReport::from_rows(rows, retained, total))
    }
}

/// Pairwise overlap between two named user sets.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapCell {
    pub set_a: String,
    pub set_b: String,
    pub size_a: u64,
    pub size_b: u64,
    pub intersection: u64,
    /// |A∩B| / |A|, `None` when A is empty.
    pub frac_of_a: Option<Rational>,
    /// |A∩B| / |B|, `None` when B is empty.
    pub frac_of_b: Option<Rational>,
}

/// Overlap matrix across the report's filter sets (every unordered pair of
/// backbone_contributor / lenient / aggressive / full_cohort /
/// drug_mention).
pub fn overlap(report: &CohortReport) -> Vec<OverlapCell> {
    let sets: [(&str, BTreeSet<String>); 5] = [
        ("backbone_contributor", report.users_where(|r| r.backbone_contributor)),
        ("lenient", report.users_where(|r| r.lenient)),
        ("aggressive", report.users_where(|r| r.aggressive)),
        ("full_cohort", report.users_where(|r| r.full_cohort)),
        ("drug_mention", report.users_where(|r| r.drug_mention)),
    ];
    let mut cells = Vec::new();
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            let (name_a, a) = (&sets[i].0, &sets[i].1);
            let (name_b, b) = (&sets[j].0, &sets[j].1);
            let intersection = a.intersection(b).count() as u64;
            let frac = |num: u64, den: usize| {
                (den > 0).then(|| Rational::new(num as i128, den as i128))
            };
            cells.push(OverlapCell {
                set_a: name_a.to_string(),
                set_b: name_b.to_string(),
                size_a: a.len() as u64,
                size_b: b.len() as u64,
                intersection,
                frac_of_a: frac(intersection, a.len()),
                frac_of_b: frac(intersection, b.len()),
            });
        }
    }
    cells
}
