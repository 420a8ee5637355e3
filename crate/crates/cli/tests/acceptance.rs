//! End-to-end acceptance suite. Each test checks one numbered criterion and
//! prints a single `[PASS]` line (visible with `--nocapture`); a failed
//! assertion fails the test instead.
//!
//! Oracles are implemented here, independently of the library: all-pairs
//! shortest distances by cubic relaxation (Floyd–Warshall), dictionary
//! matching by direct scan over surface token sequences, and the normal
//! tail by Simpson integration of the density.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::{TimeZone, Utc};
use cohortnet::backbone::extract_backbone;
use cohortnet::cohort::{
    engagement_filter, engagement_stats, full_cohort, users_covering_pairs, CohortReport,
    FilterSpec,
};
use cohortnet::corpus::{Corpus, Post};
use cohortnet::graph::{
    build_proximity, jaccard, to_distance, to_proximity, DistanceEdge, DistanceGraph,
    ProximityEdge, ProximityGraph,
};
use cohortnet::report::{normal_two_sided_p, two_proportion_test};
use cohortnet::synth::{demo_dictionary, generate, DistributionParams, SynthProfile};
use cohortnet::{write_backbone_csv, ClassifiedGraph, Dictionary, Matcher, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

// ---------------------------------------------------------------------------
// Shared generators and oracles
// ---------------------------------------------------------------------------

/// Random connected distance graph: a random spanning tree plus `extra`
/// random chords, with small positive rational weights (occasionally zero).
fn random_distance_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> DistanceGraph<Rational> {
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for b in 1..n as u32 {
        let a = rng.gen_range(0..b);
        pairs.insert((a, b));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(a, b)| DistanceEdge {
            a,
            b,
            n_i: 1,
            n_j: 1,
            n_ij: 1,
            d: if rng.gen_ratio(1, 25) {
                Rational::zero()
            } else {
                Rational::new(rng.gen_range(1..=12), rng.gen_range(1..=12))
            },
        })
        .collect();
    DistanceGraph {
        nodes: (0..n).map(|i| format!("v{i:03}")).collect(),
        edges,
    }
}

/// The fixed 200-graph suite shared by the backbone criteria.
fn backbone_graph_suite() -> Vec<DistanceGraph<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    (0..200usize)
        .map(|i| {
            let n = if i % 10 == 9 { 100 } else { 2 + (i % 98) };
            let max_extra = (n * (n - 1) / 2).saturating_sub(n - 1);
            let extra = rng.gen_range(0..=(2 * n).min(max_extra));
            random_distance_graph(&mut rng, n, extra)
        })
        .collect()
}

/// Independent all-pairs shortest distances: cubic relaxation over the full
/// n×n matrix, no heap, no shared code with the library's Dijkstra sweep.
fn oracle_all_pairs(n: usize, edges: &[DistanceEdge<Rational>]) -> Vec<Vec<Option<Rational>>> {
    let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        dist[i][i] = Some(Rational::zero());
    }
    for e in edges {
        let (a, b) = (e.a as usize, e.b as usize);
        if dist[a][b].as_ref().is_none_or(|cur| e.d < *cur) {
            dist[a][b] = Some(e.d.clone());
            dist[b][a] = Some(e.d.clone());
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = dist[i][k].clone() else {
                continue;
            };
            for j in 0..n {
                let Some(dkj) = dist[k][j].as_ref() else {
                    continue;
                };
                let cand = dik.clone() + dkj.clone();
                if dist[i][j].as_ref().is_none_or(|cur| cand < *cur) {
                    dist[i][j] = Some(cand);
                }
            }
        }
    }
    dist
}

/// Random proximity graph with consistent counts; roughly one edge in eight
/// is a perfect overlap (p = 1).
fn random_proximity_graph(rng: &mut ChaCha8Rng) -> ProximityGraph {
    let m = rng.gen_range(2..=18usize);
    let k = rng.gen_range(1..=24usize);
    let mut raw: BTreeMap<(u32, u32), (u64, u64, u64)> = BTreeMap::new();
    for _ in 0..k {
        let a = rng.gen_range(0..m as u32);
        let b = rng.gen_range(0..m as u32);
        if a == b {
            continue;
        }
        let n_ij = rng.gen_range(1..=40u64);
        let (n_a, n_b) = if rng.gen_ratio(1, 8) {
            (n_ij, n_ij)
        } else {
            (n_ij + rng.gen_range(0..=40u64), n_ij + rng.gen_range(0..=40u64))
        };
        let key = (a.min(b), a.max(b));
        let counts = if a <= b { (n_a, n_b, n_ij) } else { (n_b, n_a, n_ij) };
        raw.entry(key).or_insert(counts);
    }
    // Nodes are the endpoints of retained edges only, sorted by name;
    // indices are remapped accordingly.
    let used: BTreeSet<u32> = raw.keys().flat_map(|&(a, b)| [a, b]).collect();
    let nodes: Vec<String> = used.iter().map(|i| format!("t{i:02}")).collect();
    let remap: BTreeMap<u32, u32> = used
        .into_iter()
        .enumerate()
        .map(|(new, old)| (old, new as u32))
        .collect();
    let edges = raw
        .into_iter()
        .map(|((a, b), (n_i, n_j, n_ij))| ProximityEdge {
            a: remap[&a],
            b: remap[&b],
            n_i,
            n_j,
            n_ij,
            p: jaccard(n_ij, n_i, n_j).unwrap(),
        })
        .collect();
    ProximityGraph { nodes, edges }
}

// ---------------------------------------------------------------------------
// Criteria 1–3: backbone vs oracle, idempotence, triangle fixtures
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_backbone_closure_matches_all_pairs_oracle() {
    let start = Instant::now();
    let suite = backbone_graph_suite();
    let mut removed_edges = 0u64;
    for g in &suite {
        let n = g.nodes.len();
        let bb = extract_backbone(g);
        let oracle_full = oracle_all_pairs(n, &g.edges);

        // Library closure agrees with the independent relaxation, exactly.
        for i in 0..n {
            for j in i..n {
                assert_eq!(
                    bb.closure.get(i, j),
                    oracle_full[i][j].as_ref(),
                    "closure mismatch at ({i}, {j}) in a graph with {n} nodes"
                );
            }
        }

        // The backbone's own closure equals the full closure on every pair.
        let sub = bb.backbone_subgraph(g);
        let oracle_sub = oracle_all_pairs(n, &sub.edges);
        assert_eq!(
            oracle_sub, oracle_full,
            "backbone closure diverged from full closure ({n} nodes)"
        );

        // Every removed edge is strictly longer than its indirect path;
        // every kept edge attains the closure distance exactly.
        for (e, &metric) in g.edges.iter().zip(&bb.metric_flags) {
            let indirect = oracle_full[e.a as usize][e.b as usize]
                .as_ref()
                .expect("edge endpoints are connected");
            if metric {
                assert_eq!(&e.d, indirect);
            } else {
                assert!(&e.d > indirect, "removed edge is not strictly semi-metric");
                removed_edges += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 took {elapsed:?}, budget is 60 s");
    println!(
        "[PASS] criterion 1: backbone preserves the exact closure on 200 random connected graphs \
         ({removed_edges} removed edges all strictly semi-metric, oracle = cubic relaxation, {elapsed:?})"
    );
}

#[test]
fn criterion_02_backbone_extraction_is_idempotent() {
    let suite = backbone_graph_suite();
    for g in &suite {
        let bb = extract_backbone(g);
        let sub = bb.backbone_subgraph(g);
        let again = extract_backbone(&sub);
        assert!(
            again.metric_flags.iter().all(|&m| m),
            "a backbone edge reclassified as semi-metric"
        );
        assert!(again.semi_metric_pairs.is_empty());
        assert_eq!(again.tau, Some(Rational::one()), "tau must be exactly 1");
    }
    println!(
        "[PASS] criterion 2: re-extraction on 200 backbone subgraphs classifies every edge metric (tau = 1)"
    );
}

#[test]
fn criterion_03_triangle_fixtures() {
    let triangle = |d_bc: i128| DistanceGraph::<Rational> {
        nodes: vec!["a".into(), "b".into(), "c".into()],
        edges: vec![
            DistanceEdge { a: 0, b: 1, n_i: 1, n_j: 1, n_ij: 1, d: Rational::one() },
            DistanceEdge { a: 0, b: 2, n_i: 1, n_j: 1, n_ij: 1, d: Rational::one() },
            DistanceEdge { a: 1, b: 2, n_i: 1, n_j: 1, n_ij: 1, d: Rational::from_integer(d_bc) },
        ],
    };

    // d = (1, 1, 3): the indirect b–c path has length 2 < 3, so the long
    // edge is semi-metric and the backbone keeps 2 of 3 edges.
    let bb = extract_backbone(&triangle(3));
    assert_eq!(bb.backbone_pairs, BTreeSet::from([(0, 1), (0, 2)]));
    assert_eq!(bb.semi_metric_pairs, BTreeSet::from([(1, 2)]));
    assert_eq!(bb.tau, Some(Rational::new(2, 3)));

    // d = (1, 1, 2): the indirect path ties the direct edge exactly; a tie
    // is metric, so all 3 edges are retained.
    let bb = extract_backbone(&triangle(2));
    assert_eq!(bb.backbone_pairs.len(), 3);
    assert!(bb.semi_metric_pairs.is_empty());
    assert_eq!(bb.tau, Some(Rational::one()));

    println!(
        "[PASS] criterion 3: triangle d=(1,1,3) keeps 2 edges; d=(1,1,2) keeps all 3 (tie is metric)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: proximity ↔ distance isomorphism
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_proximity_distance_roundtrip_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    let mut perfect_overlaps = 0u64;
    for _ in 0..1000 {
        let g = random_proximity_graph(&mut rng);
        let d = to_distance(&g).expect("generated proximities are positive");
        for (pe, de) in g.edges.iter().zip(&d.edges) {
            // p = 1 ↔ d = 0, exactly.
            assert_eq!(pe.p.is_one(), de.d.is_zero());
            if pe.p.is_one() {
                perfect_overlaps += 1;
            }
        }
        let back = to_proximity(&d);
        assert_eq!(back, g, "roundtrip changed the graph");
    }
    assert!(perfect_overlaps > 0, "suite never exercised the p = 1 endpoint");
    println!(
        "[PASS] criterion 4: to_proximity(to_distance(g)) is the identity on 1000 random graphs \
         (p=1 ↔ d=0 on {perfect_overlaps} perfect-overlap edges)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: edge retention thresholds
// ---------------------------------------------------------------------------

/// One single-author post per text, distinct users, minute-spaced timestamps.
fn corpus_of(texts: &[&str]) -> Corpus {
    let posts = texts
        .iter()
        .enumerate()
        .map(|(i, text)| Post {
            post_id: format!("p{i:03}"),
            user_id: format!("u{i:03}"),
            timestamp: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
                + chrono::Duration::minutes(i as i64),
            platform: "demo".to_string(),
            text: text.to_string(),
        })
        .collect();
    Corpus::from_posts(posts).unwrap()
}

#[test]
fn criterion_05_cooccurrence_and_support_thresholds() {
    let dict = Dictionary::load(Cursor::new(
        "parent\tsynonym\tcategory\n\
         t1a\tt1a\tmedical_term\n\
         t1b\tt1b\tmedical_term\n\
         t2a\tt2a\tmedical_term\n\
         t2b\tt2b\tmedical_term\n\
         t3a\tt3a\tmedical_term\n\
         t3b\tt3b\tmedical_term\n",
    ))
    .unwrap();

    // Pair 1: n_ij = 2, n = (8, 8), union 14  → fails the co-occurrence floor.
    // Pair 2: n_ij = 3, n = (6, 7), union 10  → fails support (10 is not > 10).
    // Pair 3: n_ij = 3, n = (7, 7), union 11  → retained, p = 3/11.
    let mut texts = vec!["t1a t1b"; 2];
    texts.extend(vec!["t1a"; 6]);
    texts.extend(vec!["t1b"; 6]);
    texts.extend(vec!["t2a t2b"; 3]);
    texts.extend(vec!["t2a"; 3]);
    texts.extend(vec!["t2b"; 4]);
    texts.extend(vec!["t3a t3b"; 3]);
    texts.extend(vec!["t3a"; 4]);
    texts.extend(vec!["t3b"; 4]);
    let corpus = corpus_of(&texts);
    let matcher = Matcher::new(&dict).unwrap();
    let table = matcher.match_corpus(&corpus, &dict, 1).unwrap();

    // The counts themselves are present — exclusion below is the thresholds'
    // doing, not missing data.
    let id_of = |name: &str| {
        *table
            .term_names
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| id)
            .unwrap()
    };
    let pair_count = |x: &str, y: &str| {
        let (a, b) = (id_of(x).min(id_of(y)), id_of(x).max(id_of(y)));
        table.per_pair_post_counts[&(a, b)]
    };
    assert_eq!(pair_count("t1a", "t1b"), 2);
    assert_eq!(pair_count("t2a", "t2b"), 3);
    assert_eq!(pair_count("t3a", "t3b"), 3);

    let g = build_proximity(&table, 3, 10);
    assert_eq!(g.edge_name_pairs(), BTreeSet::from([("t3a", "t3b")]));
    assert_eq!(g.nodes, vec!["t3a".to_string(), "t3b".to_string()]);
    assert_eq!(g.edges[0].p, Rational::new(3, 11));

    // Lowering the co-occurrence floor to 2 admits pair 1; pair 2 is still
    // excluded by the support threshold alone.
    let g2 = build_proximity(&table, 2, 10);
    assert_eq!(
        g2.edge_name_pairs(),
        BTreeSet::from([("t1a", "t1b"), ("t3a", "t3b")])
    );

    println!(
        "[PASS] criterion 5: n_ij=2 excluded, union=10 excluded, n_ij=3/union=11 retained with p = 3/11"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: five-user fixture end-to-end through the CLI
// ---------------------------------------------------------------------------

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Run the CLI binary; panic with its stderr on failure.
fn run_cli(args: &[&str]) -> String {
    let output = Command::new(env!("CARGO_BIN_EXE_cohortnet"))
        .args(args)
        .output()
        .expect("failed to spawn the CLI binary");
    assert!(
        output.status.success(),
        "cohortnet {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("CLI stdout is UTF-8")
}

#[test]
fn criterion_06_five_user_fixture_through_the_cli() {
    let dict = fixture("dictionary.tsv");
    let corpus = fixture("posts.jsonl");
    let config = fixture("config.json");
    let dict = dict.to_str().unwrap();
    let corpus = corpus.to_str().unwrap();
    let config = config.to_str().unwrap();

    // One-shot pipeline.
    let dir_pipeline = TempDir::new().unwrap();
    let out1 = dir_pipeline.path().to_str().unwrap();
    let stdout = run_cli(&[
        "--config", config, "pipeline",
        "--dictionary", dict, "--corpus", corpus, "--out-dir", out1,
    ]);
    assert!(
        stdout.contains("nodes=3 edges=3 backbone_edges=2 tau=2/3"),
        "unexpected backbone summary line:\n{stdout}"
    );

    let report =
        CohortReport::read_csv(std::fs::File::open(dir_pipeline.path().join("cohort.csv")).unwrap())
            .unwrap();
    let contributors = report.users_where(|r| r.backbone_contributor);
    assert_eq!(
        contributors,
        BTreeSet::from(["A".to_string(), "D".to_string(), "E".to_string()])
    );
    assert_eq!(report.raw_cohort, 5);
    assert_eq!(report.r_raw, Some(Rational::new(3, 5)));

    let summary = std::fs::read_to_string(dir_pipeline.path().join("summary.txt")).unwrap();
    assert!(
        summary.contains("backbone_contributors: 3 (60.0%)"),
        "summary does not report the 60% contributor share:\n{summary}"
    );

    // The pipeline subcommand is literally the composition of its stages:
    // running them one by one with identical flags reproduces every
    // artifact byte-for-byte.
    let dir_stages = TempDir::new().unwrap();
    let out2 = dir_stages.path().to_str().unwrap();
    for stage in ["ingest", "match", "graph", "backbone", "cohort", "report"] {
        run_cli(&[
            "--config", config, stage,
            "--dictionary", dict, "--corpus", corpus, "--out-dir", out2,
        ]);
    }
    let names = |dir: &Path| -> BTreeSet<String> {
        std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect()
    };
    let mut pipeline_names = names(dir_pipeline.path());
    assert!(pipeline_names.remove("manifest-pipeline.json"));
    assert_eq!(pipeline_names, names(dir_stages.path()));
    for name in &pipeline_names {
        let a = std::fs::read(dir_pipeline.path().join(name)).unwrap();
        let b = std::fs::read(dir_stages.path().join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between pipeline and stage-by-stage runs");
    }

    println!(
        "[PASS] criterion 6: five-user fixture yields contributors {{A, D, E}} = 60% via the CLI; \
         pipeline output equals stage-by-stage composition on {} artifacts",
        pipeline_names.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: matching rules vs a direct-scan oracle
// ---------------------------------------------------------------------------

/// Greedy longest-match by direct scan over literal surface sequences —
/// no trie, no shared code with the matcher.
fn oracle_match(words: &[&str], surfaces: &[(&[&str], &str)]) -> BTreeSet<String> {
    let mut by_len: Vec<&(&[&str], &str)> = surfaces.iter().collect();
    by_len.sort_by_key(|(tokens, _)| std::cmp::Reverse(tokens.len()));
    let mut out = BTreeSet::new();
    let mut i = 0;
    while i < words.len() {
        let hit = by_len
            .iter()
            .find(|(tokens, _)| words[i..].starts_with(tokens));
        match hit {
            Some((tokens, parent)) => {
                out.insert(parent.to_string());
                i += tokens.len();
            }
            None => i += 1,
        }
    }
    out
}

#[test]
fn criterion_07_matching_rules_vs_direct_scan_oracle() {
    let dict = Dictionary::load(Cursor::new(
        "parent\tsynonym\tcategory\n\
         levetiracetam\tkeppra\tdrug\n\
         seizure\tseizure\tmedical_term\n\
         seizure meds\tseizure meds\tdrug\n\
         tonic\ttonic\tnatural_product\n\
         tonic clonic seizure\ttonic clonic seizure\tmedical_term\n\
         epilepsy\tepilepsy\tmedical_term\n\
         epilepsy care plan\tepilepsy care plan\tmedical_term\n\
         care\tcare\tmedical_term\n",
    ))
    .unwrap();
    let matcher = Matcher::new(&dict).unwrap();
    let names = |terms: &BTreeSet<cohortnet::TermId>| -> BTreeSet<String> {
        terms.iter().map(|&t| dict.canonical_name(t).to_string()).collect()
    };

    // Case folding and hashtag stripping: "#Keppra" ≡ "keppra".
    let tagged = names(&matcher.match_text("#Keppra is helping"));
    assert_eq!(tagged, BTreeSet::from(["levetiracetam".to_string()]));
    assert_eq!(tagged, names(&matcher.match_text("keppra is helping")));

    // Token boundaries are real: the run-together form matches nothing.
    assert!(matcher.match_text("i hate seizuremeds").is_empty());
    assert_eq!(
        names(&matcher.match_text("took my seizure meds today")),
        BTreeSet::from(["seizure meds".to_string()])
    );

    // Longest match suppresses nested shorter terms.
    assert_eq!(
        names(&matcher.match_text("tonic clonic seizure warning")),
        BTreeSet::from(["tonic clonic seizure".to_string()])
    );
    assert_eq!(
        names(&matcher.match_text("epilepsy care plan review")),
        BTreeSet::from(["epilepsy care plan".to_string()])
    );
    // ...but unconsumed occurrences still match on their own.
    assert_eq!(
        names(&matcher.match_text("epilepsy care, epilepsy care plan")),
        BTreeSet::from([
            "epilepsy".to_string(),
            "care".to_string(),
            "epilepsy care plan".to_string()
        ])
    );

    // 50 constructed posts vs the direct-scan oracle. The pool is plain
    // lowercase alphanumeric words, so the oracle may split on whitespace.
    let surfaces: &[(&[&str], &str)] = &[
        (&["levetiracetam"], "levetiracetam"),
        (&["keppra"], "levetiracetam"),
        (&["seizure"], "seizure"),
        (&["seizure", "meds"], "seizure meds"),
        (&["tonic"], "tonic"),
        (&["tonic", "clonic", "seizure"], "tonic clonic seizure"),
        (&["epilepsy"], "epilepsy"),
        (&["epilepsy", "care", "plan"], "epilepsy care plan"),
        (&["care"], "care"),
    ];
    let pool = [
        "keppra", "levetiracetam", "seizure", "meds", "seizuremeds", "tonic", "clonic",
        "epilepsy", "care", "plan", "the", "and", "my", "doctor", "update", "keppra500", "x2y",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(702);
    for post in 0..50 {
        let len = rng.gen_range(8..=20);
        let words: Vec<&str> = (0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        let text = words.join(" ");
        let expected = oracle_match(&words, surfaces);
        let got = names(&matcher.match_text(&text));
        assert_eq!(got, expected, "post {post} diverged from the oracle: {text:?}");
    }

    println!(
        "[PASS] criterion 7: #Keppra ≡ keppra → levetiracetam, seizuremeds ≠ seizure meds, \
         longest match suppresses nested terms; 50 posts agree with the direct-scan oracle"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: cohort set inclusions on synthetic corpora
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_cohort_set_inclusions() {
    let dict = demo_dictionary();
    let matcher = Matcher::new(&dict).unwrap();
    let mut nonempty_graphs = 0u64;
    for s in 0..50u64 {
        let profile = SynthProfile {
            n_users: 80 + (s % 5) * 20,
            posts_per_user: DistributionParams { mean: 6.0, dispersion: 2.0 },
            focus: 0.5 + s as f64 * 0.008,
            n_topic_clusters: 4,
            terms_per_post: DistributionParams { mean: 2.2, dispersion: 2.0 },
            rng_seed: 100 + s,
        };
        let corpus = generate(&profile, &dict).unwrap();
        let table = matcher.match_corpus(&corpus, &dict, 1).unwrap();
        let stats = engagement_stats(&corpus, &table);
        let g = build_proximity(&table, 2, 8);
        let d = to_distance(&g).unwrap();
        let bb = extract_backbone(&d);
        if !g.edges.is_empty() {
            nonempty_graphs += 1;
        }

        let contributors = users_covering_pairs(&table, &bb.backbone_name_pairs());
        let full = full_cohort(&table, &g);
        let lenient = engagement_filter(&stats, &FilterSpec::lenient()).unwrap();
        let aggressive = engagement_filter(&stats, &FilterSpec::aggressive()).unwrap();

        assert!(contributors.is_subset(&full), "seed {s}: contributors ⊄ full cohort");
        assert!(aggressive.is_subset(&lenient), "seed {s}: aggressive ⊄ lenient");

        let report = CohortReport::assemble(
            &stats,
            None,
            &full,
            &contributors,
            &lenient,
            &aggressive,
            &corpus,
        );
        // The raw cohort is every user; full ⊆ raw is a row-level fact.
        assert_eq!(report.raw_cohort as usize, corpus.user_count());
        assert!(report.full_cohort_count <= report.raw_cohort);
        for row in &report.rows {
            assert!(!row.backbone_contributor || row.full_cohort);
            assert!(!row.aggressive || row.lenient);
        }
        if let (Some(r_full), Some(r_raw)) = (&report.r_full, &report.r_raw) {
            assert!(r_full >= r_raw, "seed {s}: r_full < r_raw");
        }
    }
    assert!(
        nonempty_graphs >= 40,
        "only {nonempty_graphs}/50 corpora produced edges; the check would be vacuous"
    );
    println!(
        "[PASS] criterion 8: contributors ⊆ full ⊆ raw, aggressive ⊆ lenient, r_full ≥ r_raw \
         on 50 synthetic corpora ({nonempty_graphs} with non-empty graphs)"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: validation statistic vs integrated normal-tail oracle
// ---------------------------------------------------------------------------

/// Two-sided normal p-value by Simpson integration of the density over
/// [|z|, |z| + 16] — independent of the erfc implementation under test.
fn oracle_two_sided_p(z: f64) -> f64 {
    let z = z.abs();
    let (lo, hi) = (z, z + 16.0);
    let steps = 32_000usize; // even
    let h = (hi - lo) / steps as f64;
    let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = phi(lo) + phi(hi);
    for k in 1..steps {
        acc += phi(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * acc * h / 3.0
}

#[test]
fn criterion_09_two_proportion_test_and_normal_tail() {
    // 130 of 937 vs 23 of 73: a highly significant difference, two-sided
    // p ≈ 4.7e-5.
    let result = two_proportion_test(130, 937, 23, 73).unwrap();
    assert!(
        (3e-5..=7e-5).contains(&result.p_value),
        "p = {} outside [3e-5, 7e-5]",
        result.p_value
    );
    assert!(result.z < 0.0, "group 1 has the lower rate, so z < 0");

    let mut worst = 0.0f64;
    for k in 0..=32 {
        let z = k as f64 * 0.25;
        let diff = (normal_two_sided_p(z) - oracle_two_sided_p(z)).abs();
        worst = worst.max(diff);
    }
    assert!(worst <= 1e-9, "normal tail differs from the integrated oracle by {worst:e}");

    println!(
        "[PASS] criterion 9: two_proportion_test(130, 937, 23, 73) → p = {:.3e} ∈ [3e-5, 7e-5]; \
         normal tail within {worst:.1e} of the integrated oracle on z ∈ [0, 8]",
        result.p_value
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: focused vs diffuse synthetic contrast
// ---------------------------------------------------------------------------

/// Backbone-contributor fraction of a 2000-user synthetic corpus.
fn contributor_fraction(focus: f64, seed: u64, dict: &Dictionary, matcher: &Matcher) -> f64 {
    let profile = SynthProfile {
        n_users: 2000,
        posts_per_user: DistributionParams { mean: 4.0, dispersion: 2.0 },
        focus,
        n_topic_clusters: 10,
        terms_per_post: DistributionParams { mean: 1.8, dispersion: 1.5 },
        rng_seed: seed,
    };
    let corpus = generate(&profile, dict).unwrap();
    let table = matcher.match_corpus(&corpus, dict, 1).unwrap();
    // A corpus this size supports a high co-occurrence floor; it is the
    // floor that separates concentrated from scattered term use.
    let g = build_proximity(&table, 12, 10);
    let d = to_distance(&g).unwrap();
    let bb = extract_backbone(&d);
    let contributors = users_covering_pairs(&table, &bb.backbone_name_pairs());
    contributors.len() as f64 / profile.n_users as f64
}

#[test]
fn criterion_10_focused_vs_diffuse_contrast() {
    let start = Instant::now();
    let dict = demo_dictionary();
    let matcher = Matcher::new(&dict).unwrap();
    let mut wins = 0u32;
    let mut gap_sum = 0.0f64;
    for seed in 9001..=9020u64 {
        let focused = contributor_fraction(0.9, seed, &dict, &matcher);
        let diffuse = contributor_fraction(0.2, seed, &dict, &matcher);
        if focused > diffuse {
            wins += 1;
        }
        gap_sum += focused - diffuse;
    }
    let mean_gap = gap_sum / 20.0;
    let elapsed = start.elapsed();
    assert!(wins >= 18, "focused won only {wins}/20 pairs");
    assert!(
        mean_gap >= 0.10,
        "mean contributor-fraction gap {mean_gap:.3} is below 10 percentage points"
    );
    assert!(elapsed.as_secs() < 300, "criterion 10 took {elapsed:?}, budget is 5 min");
    println!(
        "[PASS] criterion 10: focused (0.9) beats diffuse (0.2) in {wins}/20 seed pairs, \
         mean gap {:.1} percentage points ({elapsed:?})",
        mean_gap * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: performance envelope and worker-count determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_scale_performance_and_worker_determinism() {
    // Random connected proximity graph at the largest catalogued scale:
    // 1686 nodes, 25235 edges, with realistic small-count Jaccard weights.
    let n = 1686usize;
    let target_edges = 25235usize;
    let mut rng = ChaCha8Rng::seed_from_u64(1106);
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for b in 1..n as u32 {
        let a = rng.gen_range(0..b);
        pairs.insert((a, b));
    }
    while pairs.len() < target_edges {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<ProximityEdge> = pairs
        .into_iter()
        .map(|(a, b)| {
            let n_ij = rng.gen_range(3..=10u64);
            let mut extra_i = rng.gen_range(1..=8u64);
            let extra_j = rng.gen_range(1..=8u64);
            while n_ij + extra_i + extra_j <= 10 {
                extra_i += 3;
            }
            let (n_i, n_j) = (n_ij + extra_i, n_ij + extra_j);
            ProximityEdge { a, b, n_i, n_j, n_ij, p: jaccard(n_ij, n_i, n_j).unwrap() }
        })
        .collect();
    let g = ProximityGraph {
        nodes: (0..n).map(|i| format!("t{i:04}")).collect(),
        edges,
    };
    assert_eq!(g.edges.len(), target_edges);
    let d = to_distance(&g).unwrap();

    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let bb1 = single.install(|| extract_backbone(&d));
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "single-worker closure + backbone took {elapsed:?}, budget is 60 s"
    );

    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let bb8 = eight.install(|| extract_backbone(&d));

    let mut bytes1 = Vec::new();
    write_backbone_csv(&ClassifiedGraph::new(&g, &d, &bb1), &mut bytes1).unwrap();
    let mut bytes8 = Vec::new();
    write_backbone_csv(&ClassifiedGraph::new(&g, &d, &bb8), &mut bytes8).unwrap();
    assert_eq!(bytes1, bytes8, "backbone CSV differs between 1 and 8 workers");

    println!(
        "[PASS] criterion 11: exact closure + backbone on {n} nodes / {target_edges} edges in \
         {elapsed:?} single-worker; output bytes identical for 1 vs 8 workers \
         (backbone {} edges)",
        bb1.backbone_pairs.len()
    );
}
