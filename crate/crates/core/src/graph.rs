//! Proximity knowledge graph from co-occurrence counts, and the exact
//! proximity↔distance conversion.
//!
//! Edge weights are Jaccard proximities p = n_ij / (n_i + n_j − n_ij) over
//! post counts, kept as exact rationals. Distances are the isomorphic image
//! d = 1/p − 1, so p = 1 ↔ d = 0 and p → 0 ↔ no edge (infinite distance).
//! Nodes are canonical term names; node indices are graph-local.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::matcher::MatchTable;
use crate::rational::Rational;
use crate::weight::EdgeWeight;

/// Co-occurrence edge: counts plus the exact Jaccard proximity.
///
/// `a < b` index into the graph's node list; `n_i` belongs to node `a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProximityEdge {
    pub a: u32,
    pub b: u32,
    pub n_i: u64,
    pub n_j: u64,
    pub n_ij: u64,
    pub p: Rational,
}

/// Undirected proximity graph; nodes are exactly the endpoints of retained
/// edges, sorted by name, with edges sorted by (a, b).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProximityGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<ProximityEdge>,
}

/// Distance edge; counts travel along so the proximity graph can be
/// reconstructed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceEdge<W> {
    pub a: u32,
    pub b: u32,
    pub n_i: u64,
    pub n_j: u64,
    pub n_ij: u64,
    pub d: W,
}

/// Undirected distance graph over the same nodes as its proximity source.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DistanceGraph<W> {
    pub nodes: Vec<String>,
    pub edges: Vec<DistanceEdge<W>>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid counts: n_ij={n_ij} must satisfy 0 ≤ n_ij ≤ min(n_i={n_i}, n_j={n_j}) with a positive union")]
    DomainError { n_ij: u64, n_i: u64, n_j: u64 },
    #[error("edge ({i}, {j}) has zero proximity; it has no finite distance image")]
    ZeroProximityEdge { i: String, j: String },
    #[error("edge ({i}, {j}): {message}")]
    InconsistentEdge { i: String, j: String, message: String },
    #[error("malformed edge-list CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed edge-list CSV: {message}")]
    Malformed { message: String },
    #[error("failed to read or write edge list: {0}")]
    Io(#[from] std::io::Error),
}

/// Exact Jaccard proximity p = n_ij / (n_i + n_j − n_ij).
pub fn jaccard(n_ij: u64, n_i: u64, n_j: u64) -> Result<Rational, GraphError> {
    let union = (n_i + n_j).checked_sub(n_ij);
    match union {
        Some(u) if n_ij <= n_i.min(n_j) && u > 0 => {
            Ok(Rational::new(n_ij as i128, u as i128))
        }
        _ => Err(GraphError::DomainError { n_ij, n_i, n_j }),
    }
}

/// Build the proximity graph, retaining pair (i, j) iff
/// `n_ij ≥ min_cooccur` AND `(n_i + n_j − n_ij) > min_support` AND `p > 0`.
pub fn build_proximity(table: &MatchTable, min_cooccur: u64, min_support: u64) -> ProximityGraph {
    let mut retained: Vec<(&str, &str, u64, u64, u64)> = Vec::new();
    for (&(i, j), &n_ij) in &table.per_pair_post_counts {
        let n_i = table.per_term_post_counts[&i];
        let n_j = table.per_term_post_counts[&j];
        let union = n_i + n_j - n_ij;
        if n_ij >= min_cooccur && n_ij > 0 && union > min_support {
            retained.push((table.term_name(i), table.term_name(j), n_i, n_j, n_ij));
        }
    }
    let names: BTreeSet<&str> = retained
        .iter()
        .flat_map(|&(i, j, ..)| [i, j])
        .collect();
    let nodes: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, u32> = names
        .into_iter()
        .enumerate()
        .map(|(idx, name)| (name, idx as u32))
        .collect();
    let mut edges: Vec<ProximityEdge> = retained
        .into_iter()
        .map(|(i, j, n_i, n_j, n_ij)| {
            let (mut a, mut b) = (index[i], index[j]);
            let (mut n_a, mut n_b) = (n_i, n_j);
            if a > b {
                std::mem::swap(&mut a, &mut b);
                std::mem::swap(&mut n_a, &mut n_b);
            }
            let p = jaccard(n_ij, n_a, n_b).expect("counts from a match table are consistent");
            ProximityEdge { a, b, n_i: n_a, n_j: n_b, n_ij, p }
        })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    ProximityGraph { nodes, edges }
}

/// Map each edge to its exact distance d = 1/p − 1.
pub fn to_distance(g: &ProximityGraph) -> Result<DistanceGraph<Rational>, GraphError> {
    let mut edges = Vec::with_capacity(g.edges.len());
    for e in &g.edges {
        if e.p.is_zero() {
            return Err(GraphError::ZeroProximityEdge {
                i: g.nodes[e.a as usize].clone(),
                j: g.nodes[e.b as usize].clone(),
            });
        }
        edges.push(DistanceEdge {
            a: e.a,
            b: e.b,
            n_i: e.n_i,
            n_j: e.n_j,
            n_ij: e.n_ij,
            d: &e.p.recip() - &Rational::one(),
        });
    }
    Ok(DistanceGraph { nodes: g.nodes.clone(), edges })
}

/// Inverse of [`to_distance`]: p = 1/(d + 1), exactly.
pub fn to_proximity(g: &DistanceGraph<Rational>) -> ProximityGraph {
    let edges = g
        .edges
        .iter()
        .map(|e| ProximityEdge {
            a: e.a,
            b: e.b,
            n_i: e.n_i,
            n_j: e.n_j,
            n_ij: e.n_ij,
            p: (&e.d + &Rational::one()).recip(),
        })
        .collect();
    ProximityGraph { nodes: g.nodes.clone(), edges }
}

impl<W: EdgeWeight> DistanceGraph<W> {
    /// Convert edge weights into another scalar type (e.g. exact → f64 for
    /// the opt-in float mode).
    pub fn map_weights<T: EdgeWeight>(&self) -> DistanceGraph<T> {
        DistanceGraph {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| DistanceEdge {
                    a: e.a,
                    b: e.b,
                    n_i: e.n_i,
                    n_j: e.n_j,
                    n_ij: e.n_ij,
                    d: T::from_exact(&e.d.to_exact()),
                })
                .collect(),
        }
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }
}

impl ProximityGraph {
    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    /// Unordered edge name pairs, each sorted internally.
    pub fn edge_name_pairs(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|e| (self.nodes[e.a as usize].as_str(), self.nodes[e.b as usize].as_str()))
            .collect()
    }
}

const EDGE_CSV_HEADER: [&str; 9] = [
    "term_i", "term_j", "n_i", "n_j", "n_ij", "p_num", "p_den", "d_num", "d_den",
];

/// Edge-list CSV with exact rationals as numerator/denominator columns.
pub fn write_graph_csv<W: Write>(g: &ProximityGraph, out: W) -> Result<(), GraphError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(EDGE_CSV_HEADER)?;
    for e in &g.edges {
        let d = &e.p.recip() - &Rational::one();
        writer.write_record([
            g.nodes[e.a as usize].as_str(),
            g.nodes[e.b as usize].as_str(),
            &e.n_i.to_string(),
            &e.n_j.to_string(),
            &e.n_ij.to_string(),
            &e.p.numer_string(),
            &e.p.denom_string(),
            &d.numer_string(),
            &d.denom_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reload an edge-list CSV, validating that p and d agree with the counts.
pub fn read_graph_csv<R: Read>(input: R) -> Result<ProximityGraph, GraphError> {
    let mut reader = csv::Reader::from_reader(input);
    {
        let headers = reader.headers()?;
        if headers.iter().collect::<Vec<_>>() != EDGE_CSV_HEADER {
            return Err(GraphError::Malformed {
                message: format!("unexpected header {:?}", headers),
            });
        }
    }
    struct RawEdge {
        i: String,
        j: String,
        n_i: u64,
        n_j: u64,
        n_ij: u64,
        p: Rational,
        d: Rational,
    }
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |idx: usize| -> &str { record.get(idx).unwrap_or("") };
        let count = |idx: usize| -> Result<u64, GraphError> {
            field(idx).parse::<u64>().map_err(|_| GraphError::Malformed {
                message: format!("bad count {:?} in column {}", field(idx), EDGE_CSV_HEADER[idx]),
            })
        };
        let rational = |n: usize, d: usize| -> Result<Rational, GraphError> {
            Rational::from_parts(field(n), field(d)).map_err(|e| GraphError::Malformed {
                message: e.to_string(),
            })
        };
        raw.push(RawEdge {
            i: field(0).to_string(),
            j: field(1).to_string(),
            n_i: count(2)?,
            n_j: count(3)?,
            n_ij: count(4)?,
            p: rational(5, 6)?,
            d: rational(7, 8)?,
        });
    }
    let names: BTreeSet<&str> = raw.iter().flat_map(|e| [e.i.as_str(), e.j.as_str()]).collect();
    let nodes: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, u32> = names
        .into_iter()
        .enumerate()
        .map(|(idx, name)| (name, idx as u32))
        .collect();
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(raw.len());
    for e in &raw {
        if e.i == e.j {
            return Err(GraphError::InconsistentEdge {
                i: e.i.clone(),
                j: e.j.clone(),
                message: "self-loop".to_string(),
            });
        }
        let inconsistent = |message: String| GraphError::InconsistentEdge {
            i: e.i.clone(),
            j: e.j.clone(),
            message,
        };
        let expected_p = jaccard(e.n_ij, e.n_i, e.n_j)
            .map_err(|err| inconsistent(err.to_string()))?;
        if expected_p != e.p {
            return Err(inconsistent(format!(
                "stored p = {} but counts give {}",
                e.p, expected_p
            )));
        }
        if e.p.is_zero() {
            return Err(GraphError::ZeroProximityEdge { i: e.i.clone(), j: e.j.clone() });
        }
        let expected_d = &e.p.recip() - &Rational::one();
        if expected_d != e.d {
            return Err(inconsistent(format!(
                "stored d = {} but p gives {}",
                e.d, expected_d
            )));
        }
        let (mut a, mut b) = (index[e.i.as_str()], index[e.j.as_str()]);
        let (mut n_a, mut n_b) = (e.n_i, e.n_j);
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut n_a, &mut n_b);
        }
        if !seen.insert((a, b)) {
            return Err(inconsistent("duplicate unordered pair".to_string()));
        }
        edges.push(ProximityEdge { a, b, n_i: n_a, n_j: n_b, n_ij: e.n_ij, p: e.p.clone() });
    }
    edges.sort_by_key(|e| (e.a, e.b));
    Ok(ProximityGraph { nodes, edges })
}
