//! Reproducible synthetic corpora with controllable topical focus.
//!
//! Each user is assigned a home topic cluster; `focus` is the probability
//! that a term mention is drawn from that cluster rather than uniformly
//! from the whole dictionary. Post and term counts follow a negative
//! binomial (sampled as Gamma–Poisson) so volume is overdispersed like
//! real posting behaviour, and volume parameters are independent of
//! focus, which isolates topicality as the experimental variable.

use chrono::{DateTime, TimeZone, Utc};
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Post};
use crate::dictionary::Dictionary;

/// Bundled demonstration dictionary: 100 synthetic terms across the four
/// categories, with synonyms and a few multi-word surfaces.
pub const DEMO_DICTIONARY_TSV: &str = include_str!("demo_dictionary.tsv");

/// Load the bundled demonstration dictionary.
pub fn demo_dictionary() -> Dictionary {
    Dictionary::load(DEMO_DICTIONARY_TSV.as_bytes())
        .expect("bundled demo dictionary is well-formed")
}

/// Mean/dispersion pair for a negative binomial count distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionParams {
    pub mean: f64,
    pub dispersion: f64,
}

/// Generation parameters. `focus` ∈ [0, 1] is the probability a term
/// mention stays within the author's home cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub n_users: u64,
    pub posts_per_user: DistributionParams,
    pub focus: f64,
    pub n_topic_clusters: u64,
    pub terms_per_post: DistributionParams,
    pub rng_seed: u64,
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis profile: {message}")]
    InvalidProfile { message: String },
    #[error("generated corpus failed to assemble: {0}")]
    Corpus(#[from] CorpusError),
}

fn validate(profile: &SynthProfile, dict: &Dictionary) -> Result<(), SynthError> {
    let fail = |message: String| Err(SynthError::InvalidProfile { message });
    if profile.n_users == 0 {
        return fail("n_users must be positive".into());
    }
    if profile.n_topic_clusters == 0 {
        return fail("n_topic_clusters must be positive".into());
    }
    if dict.is_empty() {
        return fail("dictionary is empty".into());
    }
    if profile.n_topic_clusters > dict.len() as u64 {
        return fail(format!(
            "n_topic_clusters ({}) exceeds dictionary size ({})",
            profile.n_topic_clusters,
            dict.len()
        ));
    }
    if !(profile.focus >= 0.0 && profile.focus <= 1.0) {
        return fail(format!("focus must lie in [0, 1], got {}", profile.focus));
    }
    for (name, params) in [
        ("posts_per_user", &profile.posts_per_user),
        ("terms_per_post", &profile.terms_per_post),
    ] {
        if !(params.mean > 0.0) || !(params.dispersion > 0.0) {
            return fail(format!(
                "{name} mean and dispersion must be positive, got ({}, {})",
                params.mean, params.dispersion
            ));
        }
    }
    Ok(())
}

/// Round-robin cluster assignment over parents sorted by canonical name;
/// deterministic for a fixed dictionary and cluster count.
pub fn cluster_assignment(dict: &Dictionary, n_clusters: u64) -> Vec<Vec<String>> {
    let mut names: Vec<String> = dict.entries().iter().map(|e| e.canonical.clone()).collect();
    names.sort();
    let mut clusters = vec![Vec::new(); n_clusters as usize];
    for (i, name) in names.into_iter().enumerate() {
        clusters[i % n_clusters as usize].push(name);
    }
    clusters
}

/// Negative binomial count via Gamma–Poisson mixture, floored at 1.
fn sample_count(rng: &mut ChaCha8Rng, params: &DistributionParams) -> u64 {
    let gamma = Gamma::new(params.dispersion, params.mean / params.dispersion)
        .expect("profile validated");
    let lambda: f64 = gamma.sample(rng).max(1e-9);
    let poisson = Poisson::new(lambda).expect("lambda positive");
    let draw: f64 = poisson.sample(rng);
    (draw as u64).max(1)
}

/// Filler words surrounding term mentions. Kept disjoint (as token
/// sequences) from every demo-dictionary surface so filler can never
/// produce a match; a test enforces the invariant.
const FILLER: &[&str] = &[
    "today", "really", "feeling", "better", "worse", "after", "started", "taking", "morning",
    "evening", "dose", "again", "doctor", "visit", "asked", "about", "helped", "sleep", "finally",
    "weekend", "update", "sharing", "experience", "anyone", "else", "tried", "this", "combo",
    "still", "tired", "but", "hopeful", "week", "three", "months", "since", "switch", "plan",
    "next", "checkup", "notes", "tracking", "journal", "entry", "coffee", "walk", "rain",
];

fn push_filler(rng: &mut ChaCha8Rng, words: &mut Vec<String>, min: u64, max: u64) {
    let count = rng.gen_range(min..=max);
    for _ in 0..count {
        let mut word = FILLER[rng.gen_range(0..FILLER.len())].to_string();
        if rng.gen_bool(0.08) {
            word.push(if rng.gen_bool(0.5) { '.' } else { ',' });
        }
        words.push(word);
    }
}

/// Render a surface with synthetic casing/hashtag noise; the matcher must
/// see through all of it.
fn mangle_surface(rng: &mut ChaCha8Rng, surface: &str) -> String {
    let mut s = surface.to_string();
    let style = rng.gen_range(0..10);
    if style < 2 {
        // Capitalize the first letter of each word.
        s = s
            .split(' ')
            .map(|w| {
                let mut chars = w.chars();
                match chars.next() {
                    Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
                    None => String::new(),
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
    } else if style == 2 {
        s = s.to_uppercase();
    }
    if rng.gen_bool(0.15) {
        s.insert(0, '#');
    }
    s
}

/// Generate a corpus. Deterministic for a fixed profile (the RNG stream
/// is a pure function of `rng_seed`); generation is sequential by design.
pub fn generate(profile: &SynthProfile, dict: &Dictionary) -> Result<Corpus, SynthError> {
    validate(profile, dict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.rng_seed);

    // Surfaces grouped per cluster and flat over the whole dictionary.
    let clusters = cluster_assignment(dict, profile.n_topic_clusters);
    let surfaces_of = |canonical: &str| -> Vec<String> {
        let id = dict
            .resolve(canonical)
            .expect("cluster names come from the dictionary");
        dict.get(id)
            .expect("resolved id is valid")
            .synonyms
            .iter()
            .cloned()
            .collect()
    };
    let cluster_surfaces: Vec<Vec<Vec<String>>> = clusters
        .iter()
        .map(|names| names.iter().map(|n| surfaces_of(n)).collect())
        .collect();
    let all_surfaces: Vec<Vec<String>> = cluster_surfaces.iter().flatten().cloned().collect();

    let base: DateTime<Utc> = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
    let mut posts = Vec::new();
    for u in 0..profile.n_users {
        let user_id = format!("user{u:05}");
        let home = (u % profile.n_topic_clusters) as usize;
        let n_posts = sample_count(&mut rng, &profile.posts_per_user);
        for p in 0..n_posts {
            let offset_secs =
                rng.gen_range(0..365u64 * 86_400) as i64;
            let timestamp = base + chrono::Duration::seconds(offset_secs);
            let n_terms = sample_count(&mut rng, &profile.terms_per_post);
            let mut words = Vec::new();
            push_filler(&mut rng, &mut words, 1, 3);
            for _ in 0..n_terms {
                let pool = if rng.gen_bool(profile.focus) {
                    &cluster_surfaces[home]
                } else {
                    &all_surfaces
                };
                let entry = &pool[rng.gen_range(0..pool.len())];
                let surface = &entry[rng.gen_range(0..entry.len())];
                words.push(mangle_surface(&mut rng, surface));
                push_filler(&mut rng, &mut words, 1, 2);
            }
            posts.push(Post {
                post_id: format!("s{u:05}-{p:03}"),
                user_id: user_id.clone(),
                timestamp,
                platform: "synthetic".to_string(),
                text: words.join(" "),
            });
        }
    }
    Ok(Corpus::from_posts(posts)?)
}
