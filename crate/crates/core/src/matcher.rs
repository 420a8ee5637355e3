//! Whole-word, longest-match extraction of dictionary terms from post text.
//!
//! Posts and surface forms are tokenized the same way — unicode
//! alphanumeric runs, case-folded, hyphens split, apostrophes kept inside
//! tokens — and matching walks a token-level trie over all surface forms in
//! a single left-to-right pass. At each position the longest surface wins
//! and overlapping shorter matches are suppressed, so `"flu syndrome"`
//! never also reports `"flu"`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{Corpus, Post};
use crate::dictionary::{Dictionary, TermId};

/// Matched parent terms of one post (or one multi-post window).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchRecord {
    pub post_id: String,
    pub user_id: String,
    /// Deduplicated parent term ids — presence-based, not occurrence counts.
    pub terms: BTreeSet<TermId>,
}

/// Per-post match records plus the co-occurrence counts derived from them.
#[derive(Clone, Debug, Default)]
pub struct MatchTable {
    /// One record per post (window), empty term sets retained.
    pub records: Vec<MatchRecord>,
    /// n_i: posts containing term i.
    pub per_term_post_counts: BTreeMap<TermId, u64>,
    /// n_ij: posts containing both terms, keyed by (lower id, higher id).
    pub per_pair_post_counts: BTreeMap<(TermId, TermId), u64>,
    /// Canonical name of every term appearing in any record.
    pub term_names: BTreeMap<TermId, String>,
}

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("surfaces {surface_a:?} (parent {parent_a:?}) and {surface_b:?} (parent {parent_b:?}) tokenize identically; matching would be ambiguous")]
    AmbiguousSurfaces {
        surface_a: String,
        parent_a: String,
        surface_b: String,
        parent_b: String,
    },
    #[error("surface {surface:?} contains no matchable tokens")]
    EmptySurfaceTokens { surface: String },
    #[error("window size must be at least 1")]
    InvalidWindow,
    #[error("match record references unknown post_id {post_id:?}")]
    UnknownPostId { post_id: String },
    #[error("malformed match CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to read or write matches: {0}")]
    Io(#[from] std::io::Error),
}

/// Split text into matchable tokens: maximal runs of unicode alphanumerics,
/// case-folded, with apostrophes retained between alphanumerics. Hyphens,
/// `#`, and all other punctuation act as boundaries.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if (c == '\'' || c == '\u{2019}')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<u32, u32>,
    terminal: Option<TermId>,
}

/// Token-trie automaton over all dictionary surface forms.
///
/// Built once per dictionary; matching is a single pass per post. Immutable
/// after construction, safe to share across worker threads.
#[derive(Debug)]
pub struct Matcher {
    vocab: HashMap<String, u32>,
    nodes: Vec<TrieNode>,
    /// Surface that claimed each terminal, for ambiguity diagnostics.
    claimed: HashMap<u32, String>,
}

impl Matcher {
    pub fn new(dict: &Dictionary) -> Result<Self, MatcherError> {
        let mut matcher = Matcher {
            vocab: HashMap::new(),
            nodes: vec![TrieNode::default()],
            claimed: HashMap::new(),
        };
        for (surface, id) in dict.surfaces() {
            matcher.insert(surface, id, dict)?;
        }
        Ok(matcher)
    }

    fn insert(&mut self, surface: &str, id: TermId, dict: &Dictionary) -> Result<(), MatcherError> {
        let tokens = tokenize(surface);
        if tokens.is_empty() {
            return Err(MatcherError::EmptySurfaceTokens { surface: surface.to_string() });
        }
        let mut node = 0u32;
        for token in tokens {
            let next_vocab = self.vocab.len() as u32;
            let token_id = *self.vocab.entry(token).or_insert(next_vocab);
            let next_node = self.nodes.len() as u32;
            node = *self.nodes[node as usize]
                .children
                .entry(token_id)
                .or_insert(next_node);
            if node as usize == self.nodes.len() {
                self.nodes.push(TrieNode::default());
            }
        }
        match self.nodes[node as usize].terminal {
            Some(existing) if existing != id => Err(MatcherError::AmbiguousSurfaces {
                surface_a: self.claimed[&node].clone(),
                parent_a: dict.canonical_name(existing).to_string(),
                surface_b: surface.to_string(),
                parent_b: dict.canonical_name(id).to_string(),
            }),
            Some(_) => Ok(()), // same parent via punctuation variants
            None => {
                self.nodes[node as usize].terminal = Some(id);
                self.claimed.insert(node, surface.to_string());
                Ok(())
            }
        }
    }

    /// Greedy longest-match over a token sequence.
    pub fn match_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeSet<TermId> {
        let ids: Vec<Option<u32>> = tokens
            .iter()
            .map(|t| self.vocab.get(t.as_ref()).copied())
            .collect();
        let mut out = BTreeSet::new();
        let mut i = 0;
        while i < ids.len() {
            let mut node = 0u32;
            let mut best: Option<(usize, TermId)> = None;
            let mut j = i;
            while j < ids.len() {
                let Some(token_id) = ids[j] else { break };
                let Some(&next) = self.nodes[node as usize].children.get(&token_id) else {
                    break;
                };
                node = next;
                if let Some(term) = self.nodes[node as usize].terminal {
                    best = Some((j - i + 1, term));
                }
                j += 1;
            }
            match best {
                Some((len, term)) => {
                    out.insert(term);
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }

    pub fn match_text(&self, text: &str) -> BTreeSet<TermId> {
        self.match_tokens(&tokenize(text))
    }

    /// Match one post into a deduplicated parent-term set.
    pub fn match_post(&self, post: &Post) -> MatchRecord {
        MatchRecord {
            post_id: post.post_id.clone(),
            user_id: post.user_id.clone(),
            terms: self.match_text(&post.text),
        }
    }

    /// Match the whole corpus, producing one record per post — or per
    /// window of `window` consecutive timeline posts when `window > 1`,
    /// in which case windows play the role of posts in every count.
    pub fn match_corpus(
        &self,
        corpus: &Corpus,
        dict: &Dictionary,
        window: usize,
    ) -> Result<MatchTable, MatcherError> {
        let units = window_units(corpus, window)?;
        let term_sets: Vec<BTreeSet<TermId>> = units
            .par_iter()
            .map(|unit| {
                let mut tokens = Vec::new();
                for &idx in &unit.post_indices {
                    tokens.extend(tokenize(&corpus.posts()[idx].text));
                    // Separate posts with an unmatchable sentinel position so
                    // phrases never straddle a post boundary inside a window.
                    tokens.push(String::new());
                }
                self.match_tokens(&tokens)
            })
            .collect();

        let records: Vec<MatchRecord> = units
            .into_iter()
            .zip(term_sets)
            .map(|(unit, terms)| MatchRecord {
                post_id: unit.post_id,
                user_id: unit.user_id,
                terms,
            })
            .collect();
        Ok(MatchTable::from_records(records, dict))
    }
}

struct WindowUnit {
    post_id: String,
    user_id: String,
    post_indices: Vec<usize>,
}

/// Deterministic unit skeleton: one unit per post for `window == 1`,
/// otherwise chunks of `window` consecutive posts per user timeline
/// (identified by the first post id of the chunk).
fn window_units(corpus: &Corpus, window: usize) -> Result<Vec<WindowUnit>, MatcherError> {
    if window == 0 {
        return Err(MatcherError::InvalidWindow);
    }
    if window == 1 {
        return Ok(corpus
            .posts()
            .iter()
            .enumerate()
            .map(|(idx, p)| WindowUnit {
                post_id: p.post_id.clone(),
                user_id: p.user_id.clone(),
                post_indices: vec![idx],
            })
            .collect());
    }
    let mut units = Vec::new();
    for (user, indices) in corpus.timelines() {
        for chunk in indices.chunks(window) {
            units.push(WindowUnit {
                post_id: corpus.posts()[chunk[0]].post_id.clone(),
                user_id: user.clone(),
                post_indices: chunk.to_vec(),
            });
        }
    }
    Ok(units)
}

impl MatchTable {
    fn from_records(records: Vec<MatchRecord>, dict: &Dictionary) -> Self {
        let mut term_names = BTreeMap::new();
        for record in &records {
            for &term in &record.terms {
                term_names
                    .entry(term)
                    .or_insert_with(|| dict.canonical_name(term).to_string());
            }
        }
        Self::with_names(records, term_names)
    }

    fn with_names(records: Vec<MatchRecord>, term_names: BTreeMap<TermId, String>) -> Self {
        let mut per_term_post_counts: BTreeMap<TermId, u64> = BTreeMap::new();
        let mut per_pair_post_counts: BTreeMap<(TermId, TermId), u64> = BTreeMap::new();
        for record in &records {
            let terms: Vec<TermId> = record.terms.iter().copied().collect();
            for &a in &terms {
                *per_term_post_counts.entry(a).or_default() += 1;
            }
            for (pos, &a) in terms.iter().enumerate() {
                for &b in &terms[pos + 1..] {
                    *per_pair_post_counts.entry((a, b)).or_default() += 1;
                }
            }
        }
        MatchTable {
            records,
            per_term_post_counts,
            per_pair_post_counts,
            term_names,
        }
    }

    pub fn term_name(&self, id: TermId) -> &str {
        &self.term_names[&id]
    }

    /// Audit CSV: one row per (post, matched term), term by canonical name.
    /// Posts with empty term sets produce no rows; they are reconstructed
    /// from the corpus on reload.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MatcherError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["post_id", "user_id", "term"])?;
        for record in &self.records {
            for &term in &record.terms {
                writer.write_record([
                    record.post_id.as_str(),
                    record.user_id.as_str(),
                    self.term_name(term),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    /// Rebuild a table from the audit CSV plus the corpus it was matched
    /// from (and the same window size). Term ids are reassigned by sorted
    /// canonical name; every downstream artifact keys on names, not ids.
    pub fn read_csv<R: Read>(corpus: &Corpus, window: usize, input: R) -> Result<Self, MatcherError> {
        #[derive(Deserialize)]
        struct Row {
            post_id: String,
            user_id: String,
            term: String,
        }
        let mut rows: Vec<Row> = Vec::new();
        let mut reader = csv::Reader::from_reader(input);
        for row in reader.deserialize() {
            rows.push(row?);
        }
        let names: BTreeSet<&str> = rows.iter().map(|r| r.term.as_str()).collect();
        let ids: BTreeMap<String, TermId> = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| (name.to_string(), TermId(i as u32)))
            .collect();

        let units = window_units(corpus, window)?;
        let mut by_post: BTreeMap<&str, usize> = BTreeMap::new();
        let mut records: Vec<MatchRecord> = units
            .iter()
            .enumerate()
            .map(|(idx, unit)| {
                by_post.insert(unit.post_id.as_str(), idx);
                MatchRecord {
                    post_id: unit.post_id.clone(),
                    user_id: unit.user_id.clone(),
                    terms: BTreeSet::new(),
                }
            })
            .collect();
        for row in &rows {
            let &idx = by_post
                .get(row.post_id.as_str())
                .filter(|&&idx| records[idx].user_id == row.user_id)
                .ok_or_else(|| MatcherError::UnknownPostId { post_id: row.post_id.clone() })?;
            records[idx].terms.insert(ids[&row.term]);
        }
        let term_names = ids.into_iter().map(|(name, id)| (id, name)).collect();
        Ok(MatchTable::with_names(records, term_names))
    }
}
