//! Node-level and global measures on weighted undirected graphs.
//!
//! Path-based measures use the distance transform `d = 1 / w`, so strongly
//! associated topics are close to each other.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::network::TopicNetwork;
use crate::par;

/// Relative tolerance under which two path lengths count as equal.
pub const PATH_TIE_TOLERANCE: f64 = 1e-12;

#[inline]
pub(crate) fn lengths_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATH_TIE_TOLERANCE * a.abs().max(b.abs())
}

pub fn degree_strength(graph: &WeightedGraph) -> Vec<(usize, f64)> {
    graph.degrees().into_iter().zip(graph.strengths()).collect()
}

/// Barrat weighted clustering. Nodes with fewer than two neighbours get 0.
pub fn clustering_barrat(graph: &WeightedGraph) -> Vec<f64> {
    let adj = graph.adjacency_lists();
    par::map_indices(graph.node_count(), |i| {
        let nbrs = &adj[i];
        let k = nbrs.len();
        if k < 2 {
            return 0.0;
        }
        let s: f64 = nbrs.iter().map(|e| e.1).sum();
        let mut total = 0.0;
        for (a, &(h, w_ih)) in nbrs.iter().enumerate() {
            for &(j, w_ij) in &nbrs[a + 1..] {
                if graph.has_edge(h, j) {
                    // (h, j) and (j, h) both contribute (w_ij + w_ih) / 2.
                    total += w_ih + w_ij;
                }
            }
        }
        total / (s * (k as f64 - 1.0))
    })
}

pub fn mean_clustering(graph: &WeightedGraph) -> f64 {
    let c = clustering_barrat(graph);
    if c.is_empty() {
        return 0.0;
    }
    c.iter().sum::<f64>() / c.len() as f64
}

/// All-pairs shortest path lengths; unreachable pairs hold `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by node index.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct SingleSource {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
    /// Nodes in non-decreasing distance order.
    settled: Vec<usize>,
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> SingleSource {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut settled = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node: v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        settled.push(v);
        for &(u, w) in &adj[v] {
            if done[u] {
                continue;
            }
            let alt = dist[v] + 1.0 / w;
            if dist[u].is_infinite() || (alt < dist[u] && !lengths_tie(alt, dist[u])) {
                dist[u] = alt;
                sigma[u] = sigma[v];
                preds[u].clear();
                preds[u].push(v);
                heap.push(HeapEntry { dist: alt, node: u });
            } else if lengths_tie(alt, dist[u]) {
                sigma[u] += sigma[v];
                preds[u].push(v);
            }
        }
    }
    SingleSource {
        dist,
        sigma,
        preds,
        settled,
    }
}

pub fn shortest_distances(graph: &WeightedGraph) -> DistanceMatrix {
    let adj = graph.adjacency_lists();
    let n = graph.node_count();
    let rows = par::map_indices(n, |s| dijkstra(&adj, s).dist);
    DistanceMatrix {
        n,
        d: rows.into_iter().flatten().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLength {
    pub value: f64,
    /// Ordered pairs left out because no path joins them.
    pub excluded_pairs: usize,
}

/// Mean distance over ordered pairs `i != j` that are connected.
pub fn char_path_length(d: &DistanceMatrix) -> Result<PathLength> {
    let n = d.node_count();
    if n < 2 {
        return Err(Error::InvalidInput(
            "characteristic path length needs at least two nodes".into(),
        ));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut excluded = 0usize;
    for i in 0..n {
        for (j, &dij) in d.row(i).iter().enumerate() {
            if i == j {
                continue;
            }
            if dij.is_finite() {
                sum += dij;
                count += 1;
            } else {
                excluded += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::NoReachablePairs);
    }
    Ok(PathLength {
        value: sum / count as f64,
        excluded_pairs: excluded,
    })
}

/// Brandes betweenness over ordered source-target pairs, normalized by
/// `(n - 1)(n - 2)`. Graphs with fewer than three nodes give all zeros.
pub fn betweenness(graph: &WeightedGraph) -> Vec<f64> {
    let n = graph.node_count();
    if n < 3 {
        return vec![0.0; n];
    }
    let adj = graph.adjacency_lists();
    let per_source = par::map_indices(n, |s| {
        let sp = dijkstra(&adj, s);
        let mut delta = vec![0.0; n];
        for &w in sp.settled.iter().rev() {
            for &v in &sp.preds[w] {
                delta[v] += sp.sigma[v] / sp.sigma[w] * (1.0 + delta[w]);
            }
        }
        delta[s] = 0.0;
        delta
    });
    let mut bc = vec![0.0; n];
    for delta in per_source {
        for (b, d) in bc.iter_mut().zip(delta) {
            *b += d;
        }
    }
    let norm = ((n - 1) * (n - 2)) as f64;
    bc.iter().map(|b| b / norm).collect()
}

/// `P_i = 1 - Σ_m (s_i(m) / s_i)²`; 0 for nodes without strength.
pub fn participation(graph: &WeightedGraph, assignment: &[usize]) -> Vec<f64> {
    let modules = assignment.iter().copied().max().map_or(0, |m| m + 1);
    (0..graph.node_count())
        .map(|i| {
            let mut per_module = vec![0.0; modules];
            let mut s = 0.0;
            for (j, w) in graph.neighbors(i) {
                per_module[assignment[j]] += w;
                s += w;
            }
            if s == 0.0 {
                return 0.0;
            }
            1.0 - per_module.iter().map(|x| (x / s).powi(2)).sum::<f64>()
        })
        .collect()
}

/// Strength-weighted mean of `values` over the neighbours of `node`.
/// Neighbours with a missing value are skipped and the weights renormalized;
/// the number skipped is returned alongside.
pub fn neighbor_weighted_mean(
    graph: &WeightedGraph,
    node: usize,
    values: &[Option<f64>],
) -> (Option<f64>, usize) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut skipped = 0;
    for (j, w) in graph.neighbors(node) {
        match values[j] {
            Some(v) => {
                num += w * v;
                den += w;
            }
            None => skipped += 1,
        }
    }
    if den > 0.0 {
        (Some(num / den), skipped)
    } else {
        (None, skipped)
    }
}

/// ξ: strength-weighted mean prevalence of a node's neighbours. Isolated
/// nodes have no value.
pub fn xi_neighbor_prevalence(graph: &WeightedGraph, prevalence: &[f64]) -> Vec<Option<f64>> {
    let values: Vec<Option<f64>> = prevalence.iter().copied().map(Some).collect();
    (0..graph.node_count())
        .map(|i| neighbor_weighted_mean(graph, i, &values).0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub degree: usize,
    pub strength: f64,
    /// `s_i / k_i`; missing for isolated nodes.
    pub strength_per_edge: Option<f64>,
    pub clustering: f64,
    pub betweenness: f64,
    pub participation: f64,
    pub xi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub mean_clustering: f64,
    pub char_path_length: f64,
    pub unreachable_pairs: usize,
    pub density: f64,
    pub nodes: usize,
    pub edges: usize,
}

pub fn node_metrics(net: &TopicNetwork, assignment: &[usize]) -> Vec<NodeMetrics> {
    let g = &net.graph;
    let ks = degree_strength(g);
    let clustering = clustering_barrat(g);
    let bc = betweenness(g);
    let part = participation(g, assignment);
    let xi = xi_neighbor_prevalence(g, &net.node_prevalence);
    (0..g.node_count())
        .map(|i| {
            let (k, s) = ks[i];
            NodeMetrics {
                degree: k,
                strength: s,
                strength_per_edge: (k > 0).then(|| s / k as f64),
                clustering: clustering[i],
                betweenness: bc[i],
                participation: part[i],
                xi: xi[i],
            }
        })
        .collect()
}

pub fn global_metrics(graph: &WeightedGraph) -> Result<GlobalMetrics> {
    let path = char_path_length(&shortest_distances(graph))?;
    Ok(GlobalMetrics {
        mean_clustering: mean_clustering(graph),
        char_path_length: path.value,
        unreachable_pairs: path.excluded_pairs,
        density: graph.density(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
    })
}

/// Per-node quantities tracked over time and used as regression predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMetric {
    Prevalence,
    Degree,
    Strength,
    StrengthPerEdge,
    Clustering,
    Betweenness,
    Participation,
    Xi,
}

impl NodeMetric {
    pub const ALL: [NodeMetric; 8] = [
        NodeMetric::Prevalence,
        NodeMetric::Degree,
        NodeMetric::Strength,
        NodeMetric::StrengthPerEdge,
        NodeMetric::Clustering,
        NodeMetric::Betweenness,
        NodeMetric::Participation,
        NodeMetric::Xi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeMetric::Prevalence => "prevalence",
            NodeMetric::Degree => "degree",
            NodeMetric::Strength => "strength",
            NodeMetric::StrengthPerEdge => "strength_per_edge",
            NodeMetric::Clustering => "clustering",
            NodeMetric::Betweenness => "betweenness",
            NodeMetric::Participation => "participation",
            NodeMetric::Xi => "xi",
        }
    }

    pub fn value(self, prevalence: f64, m: &NodeMetrics) -> Option<f64> {
        match self {
            NodeMetric::Prevalence => Some(prevalence),
            NodeMetric::Degree => Some(m.degree as f64),
            NodeMetric::Strength => Some(m.strength),
            NodeMetric::StrengthPerEdge => m.strength_per_edge,
            NodeMetric::Clustering => Some(m.clustering),
            NodeMetric::Betweenness => Some(m.betweenness),
            NodeMetric::Participation => Some(m.participation),
            NodeMetric::Xi => m.xi,
        }
    }
}

impl fmt::Display for NodeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle(w: f64) -> WeightedGraph {
        WeightedGraph::from_edges(3, &[(0, 1, w), (1, 2, w), (0, 2, w)])
    }

    #[test]
    fn degree_and_strength() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]);
        let ks = degree_strength(&g);
        assert_eq!(ks[3], (0, 0.0));
        for &(k, s) in &ks[..3] {
            assert_eq!((k, s), (2, 1.0));
        }
        let g = WeightedGraph::from_edges(4, &[(0, 1, 0.3), (0, 2, 0.2), (2, 3, 0.7), (1, 3, 0.1)]);
        let ks = degree_strength(&g);
        let expect = [(2, 0.5), (2, 0.4), (2, 0.9), (2, 0.8)];
        for (got, want) in ks.iter().zip(expect) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-15);
        }
    }

    #[test]
    fn clustering_cases() {
        assert_eq!(clustering_barrat(&triangle(0.5)), vec![1.0; 3]);
        let star = WeightedGraph::from_edges(4, &[(0, 1, 0.3), (0, 2, 0.6), (0, 3, 0.9)]);
        assert_eq!(clustering_barrat(&star)[0], 0.0);
        // A=0 B=1 C=2 D=3
        let g = WeightedGraph::from_edges(4, &[(0, 1, 0.6), (0, 2, 0.4), (1, 2, 0.2), (0, 3, 0.8)]);
        let c = clustering_barrat(&g);
        assert!((c[0] - 1.0 / 3.6).abs() < 1e-12);
        assert_eq!(c[3], 0.0);
    }

    #[test]
    fn distances() {
        let d = shortest_distances(&WeightedGraph::from_edges(2, &[(0, 1, 0.5)]));
        assert_eq!(d.get(0, 1), 2.0);
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 0.4)]);
        assert_eq!(shortest_distances(&g).get(0, 2), 2.0);
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0)]);
        assert!(shortest_distances(&g).get(0, 2).is_infinite());
    }

    #[test]
    fn path_length_cases() {
        let complete = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert_eq!(char_path_length(&shortest_distances(&complete)).unwrap().value, 1.0);

        let chain = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let l = char_path_length(&shortest_distances(&chain)).unwrap();
        assert!((l.value - 4.0 / 3.0).abs() < 1e-15);

        let mut with_isolate = WeightedGraph::new(4);
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            with_isolate.set_weight(i, j, 1.0);
        }
        let l = char_path_length(&shortest_distances(&with_isolate)).unwrap();
        assert_eq!(l.value, 1.0);
        assert_eq!(l.excluded_pairs, 6);

        assert!(matches!(
            char_path_length(&shortest_distances(&WeightedGraph::new(3))),
            Err(Error::NoReachablePairs)
        ));
        assert!(char_path_length(&shortest_distances(&WeightedGraph::new(1))).is_err());
    }

    #[test]
    fn betweenness_cases() {
        let path = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(betweenness(&path), vec![0.0, 1.0, 0.0]);
        let k4 = WeightedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)],
        );
        assert_eq!(betweenness(&k4), vec![0.0; 4]);
        // Square: each opposite pair has two shortest paths.
        let square = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]);
        for b in betweenness(&square) {
            assert!((b - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn participation_cases() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 0.5), (0, 2, 0.5)]);
        assert_eq!(participation(&g, &[0, 0, 0]), vec![0.0; 3]);
        assert_eq!(participation(&g, &[0, 0, 1])[0], 0.5);
        let g = WeightedGraph::from_edges(3, &[(0, 1, 0.75), (0, 2, 0.25)]);
        assert!((participation(&g, &[0, 0, 1])[0] - 0.375).abs() < 1e-15);
        let g = WeightedGraph::from_edges(3, &[(0, 1, 0.75)]);
        assert_eq!(participation(&g, &[0, 1, 2])[2], 0.0);
    }

    #[test]
    fn xi_cases() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 0.7)]);
        assert!((xi_neighbor_prevalence(&g, &[0.9, 0.2])[0].unwrap() - 0.2).abs() < 1e-15);
        let g = WeightedGraph::from_edges(3, &[(0, 1, 0.3), (0, 2, 0.1)]);
        let xi = xi_neighbor_prevalence(&g, &[0.0, 0.1, 0.5]);
        assert!((xi[0].unwrap() - 0.2).abs() < 1e-15);
        let g = WeightedGraph::from_edges(4, &[(0, 1, 0.3), (0, 2, 0.1)]);
        let xi = xi_neighbor_prevalence(&g, &[0.9, 0.4, 0.4, 0.1]);
        assert!((xi[0].unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(xi[3], None);
    }

    fn arb_graph() -> impl Strategy<Value = WeightedGraph> {
        (3usize..9).prop_flat_map(|n| {
            prop::collection::vec(prop::option::weighted(0.6, 0.05f64..1.0), n * (n - 1) / 2).prop_map(
                move |ws| {
                    let mut g = WeightedGraph::new(n);
                    let mut it = ws.into_iter();
                    for i in 0..n {
                        for j in i + 1..n {
                            if let Some(w) = it.next().unwrap() {
                                g.set_weight(i, j, w);
                            }
                        }
                    }
                    g
                },
            )
        })
    }

    proptest! {
        #[test]
        fn scaling_weights(g in arb_graph(), lambda in 0.1f64..5.0) {
            let h = g.scaled(lambda);
            let n = g.node_count();
            let assign: Vec<usize> = (0..n).map(|i| i % 2).collect();
            prop_assert_eq!(g.degrees(), h.degrees());
            for (a, b) in g.strengths().iter().zip(h.strengths()) {
                prop_assert!((a * lambda - b).abs() < 1e-12);
            }
            for (a, b) in betweenness(&g).iter().zip(betweenness(&h)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            for (a, b) in clustering_barrat(&g).iter().zip(clustering_barrat(&h)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in participation(&g, &assign).iter().zip(participation(&h, &assign)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let p: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
            for (a, b) in xi_neighbor_prevalence(&g, &p).iter().zip(xi_neighbor_prevalence(&h, &p)) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
            let (dg, dh) = (shortest_distances(&g), shortest_distances(&h));
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (dg.get(i, j), dh.get(i, j));
                    if a.is_finite() {
                        prop_assert!((a / lambda - b).abs() <= 1e-9 * a.max(1.0));
                    } else {
                        prop_assert!(b.is_infinite());
                    }
                }
            }
        }

        #[test]
        fn strength_sum_and_ranges(g in arb_graph()) {
            let total: f64 = g.strengths().iter().sum();
            prop_assert!((total - 2.0 * g.total_weight()).abs() < 1e-12);
            for c in clustering_barrat(&g) {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
            }
            for b in betweenness(&g) {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&b));
            }
            let p: Vec<f64> = (0..g.node_count()).map(|i| (i as f64 * 0.37) % 1.0).collect();
            for (i, xi) in xi_neighbor_prevalence(&g, &p).into_iter().enumerate() {
                if let Some(xi) = xi {
                    let nb: Vec<f64> = g.neighbors(i).map(|(j, _)| p[j]).collect();
                    let lo = nb.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = nb.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(xi >= lo - 1e-12 && xi <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn equal_weights_give_binary_clustering(g in arb_graph()) {
            let b = g.binarized().scaled(0.4);
            let c = clustering_barrat(&b);
            for i in 0..b.node_count() {
                let nb: Vec<usize> = b.neighbors(i).map(|e| e.0).collect();
                let k = nb.len();
                if k < 2 {
                    prop_assert_eq!(c[i], 0.0);
                    continue;
                }
                let mut links = 0;
                for x in 0..k {
                    for y in x + 1..k {
                        if b.has_edge(nb[x], nb[y]) {
                            links += 1;
                        }
                    }
                }
                let binary = 2.0 * links as f64 / (k * (k - 1)) as f64;
                prop_assert!((c[i] - binary).abs() < 1e-12);
            }
        }
    }
}
