//! Post ingestion, per-user timelines, account exclusions, and
//! drug-mention seed selection.
//!
//! A corpus is an immutable, canonically ordered collection of posts:
//! sorted by (user, timestamp, post id), with per-user timelines in
//! chronological order. Canonical ordering makes every downstream artifact
//! independent of the order records arrived in.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Deserialize;
use thiserror::Error;

use crate::dictionary::{Dictionary, TermId};
use crate::matcher::Matcher;

/// One user-generated post.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub platform: String,
    pub text: String,
}

/// Immutable post collection with timelines and an exclusion record.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    posts: Vec<Post>,
    timelines: BTreeMap<String, Vec<usize>>,
    exclusions: BTreeSet<String>,
}

/// Ingestion mode: lenient skips malformed lines, strict aborts on the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IngestMode {
    Lenient,
    Strict,
}

/// What ingestion saw: line counts plus a small sample of skip reasons.
#[derive(Clone, Debug, Default)]
pub struct IngestReport {
    pub parsed: u64,
    pub skipped: u64,
    pub sample_errors: Vec<String>,
}

/// Seed terms (already resolved to parent ids) for drug-mention selection.
#[derive(Clone, Debug)]
pub struct SeedSpec {
    pub seed_terms: BTreeSet<TermId>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    FatalParse { line: u64, message: String },
    #[error("corpus contains no posts")]
    EmptyCorpus,
    #[error("duplicate post_id {post_id:?}")]
    DuplicatePostId { post_id: String },
    #[error("seed term {term:?} does not resolve in the dictionary")]
    UnresolvedSeedTerm { term: String },
    #[error("seed specification is empty")]
    EmptySeedSpec,
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct RawPost {
    post_id: String,
    user_id: String,
    timestamp: String,
    platform: String,
    text: String,
}

const ERROR_SAMPLE_CAP: usize = 5;

fn parse_line(line: &str) -> Result<Post, String> {
    let raw: RawPost = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.post_id.is_empty() {
        return Err("empty post_id".to_string());
    }
    if raw.user_id.is_empty() {
        return Err("empty user_id".to_string());
    }
    let timestamp = DateTime::parse_from_rfc3339(&raw.timestamp)
        .map_err(|e| format!("bad timestamp {:?}: {e}", raw.timestamp))?
        .with_timezone(&Utc);
    Ok(Post {
        post_id: raw.post_id,
        user_id: raw.user_id,
        timestamp,
        platform: raw.platform,
        text: raw.text,
    })
}

/// Ingest a JSON Lines stream (one post object per line).
///
/// Malformed lines and duplicate post ids are counted and skipped in
/// lenient mode, fatal in strict mode. Wholly empty input is an error.
pub fn ingest<R: BufRead>(reader: R, mode: IngestMode) -> Result<(Corpus, IngestReport), CorpusError> {
    let mut posts = Vec::new();
    let mut seen_ids = HashSet::new();
    let mut report = IngestReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = parse_line(&line).and_then(|post| {
            if seen_ids.contains(&post.post_id) {
                Err(format!("duplicate post_id {:?}", post.post_id))
            } else {
                Ok(post)
            }
        });
        match outcome {
            Ok(post) => {
                seen_ids.insert(post.post_id.clone());
                posts.push(post);
                report.parsed += 1;
            }
            Err(message) => {
                if mode == IngestMode::Strict {
                    return Err(CorpusError::FatalParse { line: line_no, message });
                }
                report.skipped += 1;
                if report.sample_errors.len() < ERROR_SAMPLE_CAP {
                    report.sample_errors.push(format!("line {line_no}: {message}"));
                }
            }
        }
    }
    if posts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok((Corpus::assemble(posts, BTreeSet::new()), report))
}

impl Corpus {
    fn assemble(mut posts: Vec<Post>, exclusions: BTreeSet<String>) -> Self {
        posts.sort_by(|a, b| {
            (&a.user_id, a.timestamp, &a.post_id).cmp(&(&b.user_id, b.timestamp, &b.post_id))
        });
        let mut timelines: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, post) in posts.iter().enumerate() {
            timelines.entry(post.user_id.clone()).or_default().push(idx);
        }
        Corpus { posts, timelines, exclusions }
    }

    /// Build directly from posts (e.g. synthetic generation).
    pub fn from_posts(posts: Vec<Post>) -> Result<Self, CorpusError> {
        if posts.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut ids = HashSet::new();
        for post in &posts {
            if !ids.insert(post.post_id.as_str()) {
                return Err(CorpusError::DuplicatePostId { post_id: post.post_id.clone() });
            }
        }
        drop(ids);
        Ok(Corpus::assemble(posts, BTreeSet::new()))
    }

    /// Remove every post authored by the listed users; timelines rebuilt.
    /// Idempotent, and disjoint exclusion sets commute.
    pub fn apply_exclusions(&self, excluded: &BTreeSet<String>) -> Corpus {
        let posts: Vec<Post> = self
            .posts
            .iter()
            .filter(|p| !excluded.contains(&p.user_id))
            .cloned()
            .collect();
        let mut exclusions = self.exclusions.clone();
        exclusions.extend(excluded.iter().cloned());
        Corpus::assemble(posts, exclusions)
    }

    /// Keep posts with `min ≤ timestamp ≤ max` (inclusive bounds).
    pub fn filter_by_time(&self, min: Option<DateTime<Utc>>, max: Option<DateTime<Utc>>) -> Corpus {
        let posts: Vec<Post> = self
            .posts
            .iter()
            .filter(|p| {
                min.map_or(true, |m| p.timestamp >= m) && max.map_or(true, |m| p.timestamp <= m)
            })
            .cloned()
            .collect();
        Corpus::assemble(posts, self.exclusions.clone())
    }

    /// Keep only posts authored by the listed users.
    pub fn restrict_to_users(&self, users: &BTreeSet<String>) -> Corpus {
        let posts: Vec<Post> = self
            .posts
            .iter()
            .filter(|p| users.contains(&p.user_id))
            .cloned()
            .collect();
        Corpus::assemble(posts, self.exclusions.clone())
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    /// user → chronologically sorted indices into [`Corpus::posts`]
    /// (timestamp order, ties broken by post id).
    pub fn timelines(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.timelines
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.timelines.keys().map(String::as_str)
    }

    pub fn user_count(&self) -> usize {
        self.timelines.len()
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn exclusions(&self) -> &BTreeSet<String> {
        &self.exclusions
    }

    /// Canonical JSON Lines serialization: posts in corpus order, stable
    /// field order, RFC 3339 timestamps, LF line endings.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(serde::Serialize)]
        struct Line<'a> {
            post_id: &'a str,
            user_id: &'a str,
            timestamp: String,
            platform: &'a str,
            text: &'a str,
        }
        for post in &self.posts {
            let line = serde_json::to_string(&Line {
                post_id: &post.post_id,
                user_id: &post.user_id,
                timestamp: post.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
                platform: &post.platform,
                text: &post.text,
            })
            .expect("post serialization cannot fail");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Parse an exclusion file: one user_id per line, `#` comment lines allowed.
pub fn read_exclusions<R: BufRead>(reader: R) -> Result<BTreeSet<String>, CorpusError> {
    let mut users = BTreeSet::new();
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        users.insert(trimmed.to_string());
    }
    Ok(users)
}

impl SeedSpec {
    /// Resolve seed term names through the dictionary.
    pub fn resolve<S: AsRef<str>>(names: &[S], dict: &Dictionary) -> Result<Self, CorpusError> {
        if names.is_empty() {
            return Err(CorpusError::EmptySeedSpec);
        }
        let mut seed_terms = BTreeSet::new();
        for name in names {
            let name = name.as_ref();
            match dict.resolve(name) {
                Some(id) => {
                    seed_terms.insert(id);
                }
                None => {
                    return Err(CorpusError::UnresolvedSeedTerm { term: name.to_string() })
                }
            }
        }
        Ok(SeedSpec { seed_terms })
    }
}

/// Users with at least one post matching a seed term: the drug-mention
/// cohort. Matching follows the matcher's whole-word, longest-match rules.
pub fn seed_select(corpus: &Corpus, matcher: &Matcher, seed: &SeedSpec) -> BTreeSet<String> {
    let mut selected = BTreeSet::new();
    for post in corpus.posts() {
        if selected.contains(&post.user_id) {
            continue;
        }
        let record = matcher.match_post(post);
        if record.terms.iter().any(|t| seed.seed_terms.contains(t)) {
            selected.insert(post.user_id.clone());
        }
    }
    selected
}
