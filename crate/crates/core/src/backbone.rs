//! Metric closure, metric/semi-metric edge classification, backbone
//! extraction, and ego subgraphs.
//!
//! The closure runs Dijkstra from every node (worst case cubic in the node
//! count). An edge is metric — on the backbone — iff its direct distance
//! equals its closure distance; ties via alternate equal-length paths count
//! as metric. With exact rational weights the test is exact; the float mode
//! substitutes a relative-tolerance comparison.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::io::{Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{DistanceEdge, DistanceGraph, ProximityGraph};
use crate::rational::Rational;
use crate::weight::EdgeWeight;

/// Path-length aggregation seam. The metric backbone uses additive lengths;
/// generalized operators can slot in here provided `combine` is monotone
/// non-decreasing in its arguments (Dijkstra's correctness condition).
pub trait PathLength<W>: Sync {
    fn combine(&self, path: &W, edge: &W) -> W;
}

/// Standard additive path length: ℓ(i..k, k→j) = ℓ(i..k) + d_kj.
pub struct Additive;

impl<W: EdgeWeight> PathLength<W> for Additive {
    fn combine(&self, path: &W, edge: &W) -> W {
        path.clone() + edge.clone()
    }
}

/// All-pairs shortest-path distances, stored as an upper triangle over the
/// graph's node order. Unreachable pairs are absent (`None`) — infinity is
/// represented by absence, never by a sentinel value.
#[derive(Clone, Debug)]
pub struct ClosureDistances<W> {
    nodes: Vec<String>,
    tri: Vec<Option<W>>,
}

/// Backbone classification of a distance graph.
#[derive(Clone, Debug)]
pub struct BackboneResult<W> {
    pub closure: ClosureDistances<W>,
    /// Parallel to the source graph's edge list: `true` = metric.
    pub metric_flags: Vec<bool>,
    pub backbone_pairs: BTreeSet<(u32, u32)>,
    pub semi_metric_pairs: BTreeSet<(u32, u32)>,
    /// |backbone| / |edges|; `None` when the graph has no edges.
    pub tau: Option<Rational>,
}

/// Compact counts for the backbone summary line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackboneSummary {
    pub nodes: u64,
    pub edges: u64,
    pub backbone_edges: u64,
    pub tau: Option<Rational>,
}

#[derive(Debug, Error)]
pub enum BackboneError {
    #[error("unknown node {name:?}")]
    UnknownNode { name: String },
    #[error("malformed backbone CSV: {message}")]
    Malformed { message: String },
    #[error("malformed backbone CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("failed to read or write backbone artifact: {0}")]
    Io(#[from] std::io::Error),
}

fn adjacency<W: EdgeWeight>(g: &DistanceGraph<W>) -> Vec<Vec<(u32, W)>> {
    let mut adj: Vec<Vec<(u32, W)>> = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        adj[e.a as usize].push((e.b, e.d.clone()));
        adj[e.b as usize].push((e.a, e.d.clone()));
    }
    adj
}

struct HeapEntry<W> {
    dist: W,
    node: u32,
}

impl<W: EdgeWeight> PartialEq for HeapEntry<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<W: EdgeWeight> Eq for HeapEntry<W> {}
impl<W: EdgeWeight> PartialOrd for HeapEntry<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<W: EdgeWeight> Ord for HeapEntry<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed on distance so BinaryHeap pops the minimum; weights are
        // finite and non-negative, so partial_cmp never sees NaN.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn dijkstra<W: EdgeWeight>(
    adj: &[Vec<(u32, W)>],
    source: u32,
    op: &impl PathLength<W>,
) -> Vec<Option<W>> {
    let mut dist: Vec<Option<W>> = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = Some(W::zero());
    heap.push(HeapEntry { dist: W::zero(), node: source });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        match &dist[node as usize] {
            Some(best) if *best < d => continue, // stale entry
            _ => {}
        }
        for (next, weight) in &adj[node as usize] {
            let candidate = op.combine(&d, weight);
            let better = match &dist[*next as usize] {
                Some(current) => candidate < *current,
                None => true,
            };
            if better {
                dist[*next as usize] = Some(candidate.clone());
                heap.push(HeapEntry { dist: candidate, node: *next });
            }
        }
    }
    dist
}

/// Exact single-source shortest distances by node name; unreachable nodes
/// are absent from the result.
pub fn shortest_paths_from<W: EdgeWeight>(
    g: &DistanceGraph<W>,
    source: &str,
) -> Result<BTreeMap<String, W>, BackboneError> {
    let src = g
        .node_index(source)
        .ok_or_else(|| BackboneError::UnknownNode { name: source.to_string() })?;
    let dist = dijkstra(&adjacency(g), src, &Additive);
    Ok(g.nodes
        .iter()
        .zip(dist)
        .filter_map(|(name, d)| d.map(|d| (name.clone(), d)))
        .collect())
}

/// Metric closure under additive path length.
pub fn metric_closure<W: EdgeWeight>(g: &DistanceGraph<W>) -> ClosureDistances<W> {
    metric_closure_with(g, &Additive)
}

/// Metric closure under a custom path-length operator. Per-source sweeps
/// run in parallel; rows are merged in node order, so the result is
/// identical for any worker count.
pub fn metric_closure_with<W: EdgeWeight>(
    g: &DistanceGraph<W>,
    op: &impl PathLength<W>,
) -> ClosureDistances<W> {
    let n = g.nodes.len();
    let adj = adjacency(g);
    let rows: Vec<Vec<Option<W>>> = (0..n as u32)
        .into_par_iter()
        .map(|source| {
            let full = dijkstra(&adj, source, op);
            full[source as usize..].to_vec()
        })
        .collect();
    let mut tri = Vec::with_capacity(n * (n + 1) / 2);
    for row in rows {
        tri.extend(row);
    }
    ClosureDistances { nodes: g.nodes.clone(), tri }
}

impl<W: EdgeWeight> ClosureDistances<W> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    fn tri_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // Row i starts after rows 0..i, each row k holding n-k entries.
        let n = self.nodes.len();
        i * n - i * (i + 1) / 2 + i + (j - i)
    }

    /// Shortest distance between node indices, `None` if disconnected.
    pub fn get(&self, i: usize, j: usize) -> Option<&W> {
        self.tri[self.tri_index(i, j)].as_ref()
    }

    pub fn by_name(&self, a: &str, b: &str) -> Result<Option<&W>, BackboneError> {
        let idx = |name: &str| {
            self.nodes
                .binary_search_by(|n| n.as_str().cmp(name))
                .map_err(|_| BackboneError::UnknownNode { name: name.to_string() })
        };
        Ok(self.get(idx(a)?, idx(b)?))
    }
}

/// Classify every edge as metric (backbone) or semi-metric.
pub fn extract_backbone<W: EdgeWeight>(g: &DistanceGraph<W>) -> BackboneResult<W> {
    let closure = metric_closure(g);
    let mut metric_flags = Vec::with_capacity(g.edges.len());
    let mut backbone_pairs = BTreeSet::new();
    let mut semi_metric_pairs = BTreeSet::new();
    for e in &g.edges {
        let indirect = closure
            .get(e.a as usize, e.b as usize)
            .expect("edge endpoints are connected by the edge itself");
        let metric = e.d.backbone_eq(indirect);
        metric_flags.push(metric);
        if metric {
            backbone_pairs.insert((e.a, e.b));
        } else {
            semi_metric_pairs.insert((e.a, e.b));
        }
    }
    let tau = if g.edges.is_empty() {
        None
    } else {
        Some(Rational::new(
            backbone_pairs.len() as i128,
            g.edges.len() as i128,
        ))
    };
    BackboneResult { closure, metric_flags, backbone_pairs, semi_metric_pairs, tau }
}

impl<W: EdgeWeight> BackboneResult<W> {
    /// The backbone as a standalone graph (all nodes retained).
    pub fn backbone_subgraph(&self, g: &DistanceGraph<W>) -> DistanceGraph<W> {
        DistanceGraph {
            nodes: g.nodes.clone(),
            edges: g
                .edges
                .iter()
                .zip(&self.metric_flags)
                .filter(|(_, &m)| m)
                .map(|(e, _)| e.clone())
                .collect(),
        }
    }

    pub fn summary(&self, g: &DistanceGraph<W>) -> BackboneSummary {
        BackboneSummary {
            nodes: g.nodes.len() as u64,
            edges: g.edges.len() as u64,
            backbone_edges: self.backbone_pairs.len() as u64,
            tau: self.tau.clone(),
        }
    }

    /// Unordered backbone edge pairs by node name.
    pub fn backbone_name_pairs(&self) -> BTreeSet<(&str, &str)> {
        self.backbone_pairs
            .iter()
            .map(|&(a, b)| {
                (
                    self.closure.nodes[a as usize].as_str(),
                    self.closure.nodes[b as usize].as_str(),
                )
            })
            .collect()
    }
}

/// Induced subgraph on a center node and its direct neighbors. With
/// `backbone_only`, neighbor discovery and the induced edge set both use
/// backbone edges exclusively.
pub fn ego<W: EdgeWeight>(
    g: &DistanceGraph<W>,
    center: &str,
    backbone: Option<&BackboneResult<W>>,
) -> Result<DistanceGraph<W>, BackboneError> {
    let center_idx = g
        .node_index(center)
        .ok_or_else(|| BackboneError::UnknownNode { name: center.to_string() })?;
    let keep = |idx: usize| -> bool {
        backbone.map_or(true, |bb| bb.metric_flags[idx])
    };
    let mut members = BTreeSet::from([center_idx]);
    for (idx, e) in g.edges.iter().enumerate() {
        if !keep(idx) {
            continue;
        }
        if e.a == center_idx {
            members.insert(e.b);
        } else if e.b == center_idx {
            members.insert(e.a);
        }
    }
    let nodes: Vec<String> = members
        .iter()
        .map(|&i| g.nodes[i as usize].clone())
        .collect();
    let remap: BTreeMap<u32, u32> = members
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new as u32))
        .collect();
    let edges: Vec<DistanceEdge<W>> = g
        .edges
        .iter()
        .enumerate()
        .filter(|(idx, e)| keep(*idx) && remap.contains_key(&e.a) && remap.contains_key(&e.b))
        .map(|(_, e)| DistanceEdge {
            a: remap[&e.a],
            b: remap[&e.b],
            n_i: e.n_i,
            n_j: e.n_j,
            n_ij: e.n_ij,
            d: e.d.clone(),
        })
        .collect();
    Ok(DistanceGraph { nodes, edges })
}

/// One fully classified edge of the exported artifact.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedEdge<W> {
    pub a: u32,
    pub b: u32,
    pub n_i: u64,
    pub n_j: u64,
    pub n_ij: u64,
    pub p: Rational,
    pub d: W,
    pub d_closure: W,
    pub is_backbone: bool,
}

/// Distance graph with per-edge proximity, closure distance, and backbone
/// flag — the shape of the backbone CSV artifact and the GraphML export.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedGraph<W> {
    pub nodes: Vec<String>,
    pub edges: Vec<ClassifiedEdge<W>>,
}

impl<W: EdgeWeight> ClassifiedGraph<W> {
    pub fn new(
        prox: &ProximityGraph,
        dist: &DistanceGraph<W>,
        bb: &BackboneResult<W>,
    ) -> Self {
        let edges = dist
            .edges
            .iter()
            .enumerate()
            .map(|(idx, e)| ClassifiedEdge {
                a: e.a,
                b: e.b,
                n_i: e.n_i,
                n_j: e.n_j,
                n_ij: e.n_ij,
                p: prox.edges[idx].p.clone(),
                d: e.d.clone(),
                d_closure: bb
                    .closure
                    .get(e.a as usize, e.b as usize)
                    .expect("edge endpoints connected")
                    .clone(),
                is_backbone: bb.metric_flags[idx],
            })
            .collect();
        ClassifiedGraph { nodes: dist.nodes.clone(), edges }
    }

    pub fn node_index(&self, name: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as u32)
    }

    /// Ego view of the classified graph (see [`ego`]).
    pub fn ego(&self, center: &str, backbone_only: bool) -> Result<Self, BackboneError> {
        let center_idx = self
            .node_index(center)
            .ok_or_else(|| BackboneError::UnknownNode { name: center.to_string() })?;
        let keep = |e: &ClassifiedEdge<W>| !backbone_only || e.is_backbone;
        let mut members = BTreeSet::from([center_idx]);
        for e in self.edges.iter().filter(|e| keep(e)) {
            if e.a == center_idx {
                members.insert(e.b);
            } else if e.b == center_idx {
                members.insert(e.a);
            }
        }
        let nodes: Vec<String> = members
            .iter()
            .map(|&i| self.nodes[i as usize].clone())
            .collect();
        let remap: BTreeMap<u32, u32> = members
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new as u32))
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| keep(e) && remap.contains_key(&e.a) && remap.contains_key(&e.b))
            .map(|e| ClassifiedEdge {
                a: remap[&e.a],
                b: remap[&e.b],
                ..e.clone()
            })
            .collect();
        Ok(ClassifiedGraph { nodes, edges })
    }

    pub fn backbone_edge_count(&self) -> u64 {
        self.edges.iter().filter(|e| e.is_backbone).count() as u64
    }

    /// Name pairs (lower, higher) of the backbone edges.
    pub fn backbone_name_pairs(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .filter(|e| e.is_backbone)
            .map(|e| {
                let (x, y) = (self.nodes[e.a as usize].as_str(), self.nodes[e.b as usize].as_str());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    }

    /// Name pairs (lower, higher) of all edges.
    pub fn edge_name_pairs(&self) -> BTreeSet<(&str, &str)> {
        self.edges
            .iter()
            .map(|e| {
                let (x, y) = (self.nodes[e.a as usize].as_str(), self.nodes[e.b as usize].as_str());
                if x <= y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect()
    }

    pub fn summary(&self) -> BackboneSummary {
        let backbone_edges = self.backbone_edge_count();
        BackboneSummary {
            nodes: self.nodes.len() as u64,
            edges: self.edges.len() as u64,
            backbone_edges,
            tau: if self.edges.is_empty() {
                None
            } else {
                Some(Rational::new(backbone_edges as i128, self.edges.len() as i128))
            },
        }
    }
}

const BACKBONE_CSV_HEADER: [&str; 12] = [
    "term_i",
    "term_j",
    "n_i",
    "n_j",
    "n_ij",
    "p_num",
    "p_den",
    "d_num",
    "d_den",
    "d_closure_num",
    "d_closure_den",
    "is_backbone",
];

/// Backbone CSV: the graph edge list plus closure distance and flag.
/// Float-mode weights serialize as their exact dyadic rationals, so reload
/// is lossless in both modes.
pub fn write_backbone_csv<W: EdgeWeight, O: Write>(
    cg: &ClassifiedGraph<W>,
    out: O,
) -> Result<(), BackboneError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(BACKBONE_CSV_HEADER)?;
    for e in &cg.edges {
        let d = e.d.to_exact();
        let dc = e.d_closure.to_exact();
        writer.write_record([
            cg.nodes[e.a as usize].as_str(),
            cg.nodes[e.b as usize].as_str(),
            &e.n_i.to_string(),
            &e.n_j.to_string(),
            &e.n_ij.to_string(),
            &e.p.numer_string(),
            &e.p.denom_string(),
            &d.numer_string(),
            &d.denom_string(),
            &dc.numer_string(),
            &dc.denom_string(),
            if e.is_backbone { "true" } else { "false" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reload a backbone CSV into a classified graph.
pub fn read_backbone_csv<W: EdgeWeight, R: Read>(
    input: R,
) -> Result<ClassifiedGraph<W>, BackboneError> {
    let mut reader = csv::Reader::from_reader(input);
    {
        let headers = reader.headers()?;
        if headers.iter().collect::<Vec<_>>() != BACKBONE_CSV_HEADER {
            return Err(BackboneError::Malformed {
                message: format!("unexpected header {:?}", headers),
            });
        }
    }
    struct Raw {
        i: String,
        j: String,
        n_i: u64,
        n_j: u64,
        n_ij: u64,
        p: Rational,
        d: Rational,
        dc: Rational,
        is_backbone: bool,
    }
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |idx: usize| -> &str { record.get(idx).unwrap_or("") };
        let count = |idx: usize| -> Result<u64, BackboneError> {
            field(idx).parse::<u64>().map_err(|_| BackboneError::Malformed {
                message: format!("bad count {:?}", field(idx)),
            })
        };
        let rational = |n: usize, d: usize| -> Result<Rational, BackboneError> {
            Rational::from_parts(field(n), field(d)).map_err(|e| BackboneError::Malformed {
                message: e.to_string(),
            })
        };
        let is_backbone = match field(11) {
            "true" => true,
            "false" => false,
            other => {
                return Err(BackboneError::Malformed {
                    message: format!("bad is_backbone value {other:?}"),
                })
            }
        };
        raw.push(Raw {
            i: field(0).to_string(),
            j: field(1).to_string(),
            n_i: count(2)?,
            n_j: count(3)?,
            n_ij: count(4)?,
            p: rational(5, 6)?,
            d: rational(7, 8)?,
            dc: rational(9, 10)?,
            is_backbone,
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
            return Err(BackboneError::Malformed {
                message: format!("self-loop on {:?}", e.i),
            });
        }
        let (mut a, mut b) = (index[e.i.as_str()], index[e.j.as_str()]);
        let (mut n_a, mut n_b) = (e.n_i, e.n_j);
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut n_a, &mut n_b);
        }
        if !seen.insert((a, b)) {
            return Err(BackboneError::Malformed {
                message: format!("duplicate pair ({}, {})", e.i, e.j),
            });
        }
        edges.push(ClassifiedEdge {
            a,
            b,
            n_i: n_a,
            n_j: n_b,
            n_ij: e.n_ij,
            p: e.p.clone(),
            d: W::from_exact(&e.d),
            d_closure: W::from_exact(&e.dc),
            is_backbone: e.is_backbone,
        });
    }
    edges.sort_by_key(|e| (e.a, e.b));
    Ok(ClassifiedGraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    /// Distance graph straight from (name, name, distance) triples.
    pub(crate) fn graph_from_triples(triples: &[(&str, &str, Rational)]) -> DistanceGraph<Rational> {
        let names: BTreeSet<&str> = triples.iter().flat_map(|&(a, b, _)| [a, b]).collect();
        let nodes: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let index: BTreeMap<&str, u32> = names
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, i as u32))
            .collect();
        let mut edges: Vec<DistanceEdge<Rational>> = triples
            .iter()
            .map(|(a, b, d)| {
                let (x, y) = (index[a], index[b]);
                let (x, y) = if x < y { (x, y) } else { (y, x) };
                DistanceEdge { a: x, b: y, n_i: 0, n_j: 0, n_ij: 0, d: d.clone() }
            })
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        DistanceGraph { nodes, edges }
    }

    fn r(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn line_graph_single_source() {
        let g = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1))]);
        let dist = shortest_paths_from(&g, "a").unwrap();
        assert_eq!(dist["a"], r(0));
        assert_eq!(dist["b"], r(1));
        assert_eq!(dist["c"], r(2));
    }

    #[test]
    fn unreachable_nodes_absent() {
        let mut g = graph_from_triples(&[("a", "b", r(1))]);
        g.nodes.push("z".to_string());
        let dist = shortest_paths_from(&g, "a").unwrap();
        assert!(!dist.contains_key("z"));
        assert_eq!(dist.len(), 2);
    }

    #[test]
    fn unknown_source_errors() {
        let g = graph_from_triples(&[("a", "b", r(1))]);
        assert!(matches!(
            shortest_paths_from(&g, "nope"),
            Err(BackboneError::UnknownNode { .. })
        ));
    }

    #[test]
    fn triangle_shortcut() {
        let g = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1)), ("a", "c", r(3))]);
        let dist = shortest_paths_from(&g, "a").unwrap();
        assert_eq!(dist["c"], r(2));
        let closure = metric_closure(&g);
        assert_eq!(closure.by_name("a", "c").unwrap(), Some(&r(2)));
        assert_eq!(closure.by_name("a", "a").unwrap(), Some(&r(0)));
        assert_eq!(closure.by_name("c", "a").unwrap(), Some(&r(2)));
    }

    #[test]
    fn single_edge_closure() {
        let g = graph_from_triples(&[("a", "b", r(2))]);
        let closure = metric_closure(&g);
        assert_eq!(closure.by_name("a", "b").unwrap(), Some(&r(2)));
    }

    #[test]
    fn empty_graph_closure() {
        let g: DistanceGraph<Rational> = DistanceGraph::default();
        let closure = metric_closure(&g);
        assert_eq!(closure.node_count(), 0);
        let bb = extract_backbone(&g);
        assert!(bb.tau.is_none());
        assert!(bb.backbone_pairs.is_empty());
    }

    #[test]
    fn triangle_classification_and_tau() {
        let g = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1)), ("a", "c", r(3))]);
        let bb = extract_backbone(&g);
        assert_eq!(bb.backbone_pairs.len(), 2);
        assert_eq!(bb.semi_metric_pairs.len(), 1);
        assert_eq!(bb.tau, Some(Rational::new(2, 3)));
        let pairs = bb.backbone_name_pairs();
        assert!(pairs.contains(&("a", "b")));
        assert!(pairs.contains(&("b", "c")));
        assert!(!pairs.contains(&("a", "c")));
    }

    #[test]
    fn tie_is_metric() {
        let g = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1)), ("a", "c", r(2))]);
        let bb = extract_backbone(&g);
        assert_eq!(bb.backbone_pairs.len(), 3);
        assert_eq!(bb.tau, Some(Rational::one()));
    }

    #[test]
    fn trees_are_all_metric() {
        let g = graph_from_triples(&[
            ("root", "l", Rational::new(1, 2)),
            ("root", "r", Rational::new(5, 3)),
            ("l", "ll", Rational::new(7, 4)),
        ]);
        let bb = extract_backbone(&g);
        assert_eq!(bb.tau, Some(Rational::one()));
    }

    #[test]
    fn backbone_is_idempotent() {
        let g = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1)), ("a", "c", r(3))]);
        let bb = extract_backbone(&g);
        let sub = bb.backbone_subgraph(&g);
        assert_eq!(sub.nodes.len(), 3);
        let again = extract_backbone(&sub);
        assert_eq!(again.tau, Some(Rational::one()));
    }

    #[test]
    fn zero_distance_edges_are_handled() {
        // p = 1 edges (d = 0) can chain; equality through a 0-path is metric.
        let g = graph_from_triples(&[("a", "b", r(0)), ("b", "c", r(0)), ("a", "c", r(0))]);
        let bb = extract_backbone(&g);
        assert_eq!(bb.tau, Some(Rational::one()));
    }

    #[test]
    fn float_mode_matches_exact_on_well_separated_graph() {
        let g = graph_from_triples(&[
            ("a", "b", Rational::new(6, 5)),
            ("b", "c", Rational::new(7, 4)),
            ("a", "c", Rational::new(9, 2)),
        ]);
        let exact = extract_backbone(&g);
        let gf: DistanceGraph<f64> = g.map_weights();
        let float = extract_backbone(&gf);
        assert_eq!(exact.metric_flags, float.metric_flags);
    }

    #[test]
    fn ego_star_and_backbone_views() {
        let g = graph_from_triples(&[
            ("hub", "a", r(1)),
            ("hub", "b", r(1)),
            ("hub", "c", r(1)),
            ("hub", "d", r(1)),
        ]);
        let star = ego(&g, "hub", None).unwrap();
        assert_eq!(star.nodes.len(), 5);
        assert_eq!(star.edges.len(), 4);

        let tri = graph_from_triples(&[("a", "b", r(1)), ("b", "c", r(1)), ("a", "c", r(3))]);
        let bb = extract_backbone(&tri);
        let view = ego(&tri, "a", Some(&bb)).unwrap();
        assert_eq!(view.nodes, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(view.edges.len(), 1);

        let full_view = ego(&tri, "a", None).unwrap();
        assert_eq!(full_view.nodes.len(), 3);
        assert_eq!(full_view.edges.len(), 3);

        assert!(matches!(
            ego(&tri, "zz", None),
            Err(BackboneError::UnknownNode { .. })
        ));
    }

    #[test]
    fn ego_isolated_center() {
        let mut g = graph_from_triples(&[("a", "b", r(1))]);
        g.nodes.push("z".to_string());
        let view = ego(&g, "z", None).unwrap();
        assert_eq!(view.nodes, vec!["z".to_string()]);
        assert!(view.edges.is_empty());
    }

    #[test]
    fn classified_graph_roundtrip() {
        use crate::graph::{build_proximity, to_distance};
        use crate::matcher::MatchRecord;
        use crate::matcher::MatchTable;
        use crate::dictionary::TermId;

        // Small real pipeline: three terms, counts that pass thresholds.
        let mut records = Vec::new();
        let mut add = |n: usize, terms: &[u32]| {
            for k in 0..n {
                records.push(MatchRecord {
                    post_id: format!("p{}-{k}", records.len()),
                    user_id: "u".to_string(),
                    terms: terms.iter().map(|&t| TermId(t)).collect(),
                });
            }
        };
        add(5, &[0, 1]);
        add(4, &[1, 2]);
        add(2, &[0, 2]);
        add(2, &[0]);
        add(1, &[1]);
        let mut per_term = BTreeMap::new();
        let mut per_pair = BTreeMap::new();
        for rec in &records {
            let ts: Vec<TermId> = rec.terms.iter().copied().collect();
            for &t in &ts {
                *per_term.entry(t).or_insert(0u64) += 1;
            }
            for (i, &x) in ts.iter().enumerate() {
                for &y in &ts[i + 1..] {
                    *per_pair.entry((x, y)).or_insert(0u64) += 1;
                }
            }
        }
        let table = MatchTable {
            records,
            per_term_post_counts: per_term,
            per_pair_post_counts: per_pair,
            term_names: BTreeMap::from([
                (TermId(0), "levi".to_string()),
                (TermId(1), "seiz".to_string()),
                (TermId(2), "epil".to_string()),
            ]),
        };
        let prox = build_proximity(&table, 2, 5);
        assert_eq!(prox.edges.len(), 3);
        let dist = to_distance(&prox).unwrap();
        let bb = extract_backbone(&dist);
        let cg = ClassifiedGraph::new(&prox, &dist, &bb);

        let mut buf = Vec::new();
        write_backbone_csv(&cg, &mut buf).unwrap();
        let reloaded: ClassifiedGraph<Rational> =
            read_backbone_csv(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(reloaded, cg);

        let mut buf2 = Vec::new();
        write_backbone_csv(&reloaded, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn closure_triangle_storage_is_consistent() {
        let g = graph_from_triples(&[
            ("a", "b", r(1)),
            ("b", "c", r(2)),
            ("c", "d", r(3)),
            ("a", "d", r(10)),
        ]);
        let closure = metric_closure(&g);
        let n = closure.node_count();
        for i in 0..n {
            assert_eq!(closure.get(i, i), Some(&Rational::zero()));
            for j in 0..n {
                assert_eq!(closure.get(i, j), closure.get(j, i));
            }
        }
        assert_eq!(closure.by_name("a", "d").unwrap(), Some(&r(6)));
    }
}
