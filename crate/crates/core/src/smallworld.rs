//! Null and lattice reference networks and the small-world propensity.

use log::warn;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metrics::{char_path_length, mean_clustering, shortest_distances};
use crate::par;
use crate::seed::{derive_seed, rng_from_seed, Rng};

/// Successful swaps targeted per edge.
pub const SWAPS_PER_EDGE: usize = 10;
/// Swap attempts allowed per edge before settling for fewer swaps.
pub const ATTEMPTS_PER_EDGE: usize = 100;

pub const NULL_METHOD: &str = "double-edge-swap+ranked-weights";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullEnsemble {
    pub networks: Vec<WeightedGraph>,
    pub seed: u64,
    pub method: String,
    /// Successful swaps per null.
    pub swaps: Vec<usize>,
}

/// Degree-preserving rewiring by double edge swaps.
fn rewire(graph: &WeightedGraph, rng: &mut Rng) -> (Vec<(usize, usize)>, usize) {
    let n = graph.node_count();
    let mut edges: Vec<(usize, usize)> = graph.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
    let m = edges.len();
    let mut present = vec![false; n * n];
    for &(a, b) in &edges {
        present[a * n + b] = true;
        present[b * n + a] = true;
    }
    let target = SWAPS_PER_EDGE * m;
    let max_attempts = ATTEMPTS_PER_EDGE * m;
    let mut done = 0;
    let mut attempts = 0;
    while done < target && attempts < max_attempts {
        attempts += 1;
        let e1 = rng.random_range(0..m);
        let e2 = rng.random_range(0..m);
        if e1 == e2 {
            continue;
        }
        let (a, b) = edges[e1];
        let (mut c, mut d) = edges[e2];
        if rng.random_bool(0.5) {
            std::mem::swap(&mut c, &mut d);
        }
        // (a,b),(c,d) -> (a,d),(c,b)
        if a == d || c == b || present[a * n + d] || present[c * n + b] {
            continue;
        }
        present[a * n + b] = false;
        present[b * n + a] = false;
        present[c * n + d] = false;
        present[d * n + c] = false;
        present[a * n + d] = true;
        present[d * n + a] = true;
        present[c * n + b] = true;
        present[b * n + c] = true;
        edges[e1] = (a, d);
        edges[e2] = (c, b);
        done += 1;
    }
    (edges, done)
}

/// Places the original weights on a new topology so that node strengths
/// approximate the originals: repeatedly pick a random rank `r`, and give the
/// `r`-th smallest remaining weight to the edge with the `r`-th smallest
/// expected weight `s_u * s_v` under the strengths still unallocated.
fn assign_weights(
    n: usize,
    edges: &[(usize, usize)],
    original_strengths: &[f64],
    mut weights: Vec<f64>,
    rng: &mut Rng,
) -> WeightedGraph {
    weights.sort_by(f64::total_cmp);
    let mut remaining_strength = original_strengths.to_vec();
    let mut remaining: Vec<usize> = (0..edges.len()).collect();
    let mut out = WeightedGraph::new(n);
    while !remaining.is_empty() {
        let r = rng.random_range(0..remaining.len());
        let expected = |e: usize| {
            let (u, v) = edges[e];
            remaining_strength[u].max(0.0) * remaining_strength[v].max(0.0)
        };
        remaining.select_nth_unstable_by(r, |&a, &b| {
            expected(a).total_cmp(&expected(b)).then(a.cmp(&b))
        });
        let e = remaining.swap_remove(r);
        let w = weights.remove(r);
        let (u, v) = edges[e];
        out.set_weight(u, v, w);
        remaining_strength[u] -= w;
        remaining_strength[v] -= w;
    }
    out
}

/// One randomized network and the number of swaps it received.
pub fn randomize_one(graph: &WeightedGraph, seed: u64) -> (WeightedGraph, usize) {
    let mut rng = rng_from_seed(seed);
    let (edges, swaps) = rewire(graph, &mut rng);
    let weights: Vec<f64> = graph.edges().iter().map(|e| e.2).collect();
    let null = assign_weights(graph.node_count(), &edges, &graph.strengths(), weights, &mut rng);
    (null, swaps)
}

/// `count` nulls preserving the degree sequence exactly and the strength
/// sequence approximately. Null `i` uses seed `seed + i`.
pub fn randomize_preserving(graph: &WeightedGraph, count: usize, seed: u64) -> Result<NullEnsemble> {
    let m = graph.edge_count();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "randomization needs at least 2 edges, network has {m}"
        )));
    }
    let built = par::map_indices(count, |i| randomize_one(graph, derive_seed(seed, i as u64)));
    let target = SWAPS_PER_EDGE * m;
    let short = built.iter().filter(|(_, s)| *s < target).count();
    if short > 0 {
        warn!("{short} of {count} nulls stopped short of {target} swaps");
    }
    let (networks, swaps) = built.into_iter().unzip();
    Ok(NullEnsemble {
        networks,
        seed,
        method: NULL_METHOD.to_string(),
        swaps,
    })
}

/// Ring lattice with the same node count, edge count and weights: edges fill
/// the smallest circular distances first and the heaviest weights go to the
/// shortest slots.
pub fn lattice_reference(graph: &WeightedGraph) -> WeightedGraph {
    let n = graph.node_count();
    let mut weights: Vec<f64> = graph.edges().iter().map(|e| e.2).collect();
    weights.sort_by(|a, b| b.total_cmp(a));
    let mut slots: Vec<(usize, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let gap = j - i;
            slots.push((gap.min(n - gap), i, j));
        }
    }
    slots.sort_unstable();
    let mut lattice = WeightedGraph::new(n);
    for (&(_, i, j), &w) in slots.iter().zip(&weights) {
        lattice.set_weight(i, j, w);
    }
    lattice
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Greater,
    Less,
}

/// `(1 + #nulls at least as extreme) / (1 + #nulls)`.
pub fn empirical_pvalue(observed: f64, ensemble: &[f64], direction: Direction) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::InvalidInput("empirical p-value needs a non-empty ensemble".into()));
    }
    let extreme = ensemble
        .iter()
        .filter(|&&v| match direction {
            Direction::Greater => v >= observed,
            Direction::Less => v <= observed,
        })
        .count();
    Ok((1 + extreme) as f64 / (1 + ensemble.len()) as f64)
}

pub fn propensity_from_deltas(delta_c: f64, delta_l: f64) -> f64 {
    1.0 - ((delta_c * delta_c + delta_l * delta_l) / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldResult {
    pub swp: f64,
    pub delta_c: f64,
    pub delta_l: f64,
    pub c_observed: f64,
    pub c_lattice: f64,
    pub c_random: f64,
    pub l_observed: f64,
    pub l_lattice: f64,
    pub l_random: f64,
}

impl SmallWorldResult {
    pub fn clustering_ratio(&self) -> f64 {
        self.c_observed / self.c_random
    }

    pub fn path_length_ratio(&self) -> f64 {
        self.l_observed / self.l_random
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldReport {
    #[serde(flatten)]
    pub result: SmallWorldResult,
    pub clustering_ratio: f64,
    pub path_length_ratio: f64,
    pub ensemble_size: usize,
    pub ensemble_seed: u64,
    pub method: String,
    pub p_clustering: f64,
    pub p_path_length: f64,
    pub p_swp: f64,
}

struct References {
    c_lattice: f64,
    c_random: f64,
    l_lattice: f64,
    l_random: f64,
}

impl References {
    fn evaluate(&self, c: f64, l: f64) -> SmallWorldResult {
        let delta_c = ((self.c_lattice - c) / (self.c_lattice - self.c_random)).clamp(0.0, 1.0);
        let delta_l = ((l - self.l_random) / (self.l_lattice - self.l_random)).clamp(0.0, 1.0);
        SmallWorldResult {
            swp: propensity_from_deltas(delta_c, delta_l),
            delta_c,
            delta_l,
            c_observed: c,
            c_lattice: self.c_lattice,
            c_random: self.c_random,
            l_observed: l,
            l_lattice: self.l_lattice,
            l_random: self.l_random,
        }
    }
}

fn clustering_and_path(graph: &WeightedGraph) -> Result<(f64, f64)> {
    let l = char_path_length(&shortest_distances(graph))?.value;
    Ok((mean_clustering(graph), l))
}

/// Small-world propensity plus empirical p-values of C, L and the
/// propensity itself against the ensemble.
pub fn small_world_report(graph: &WeightedGraph, ensemble: &NullEnsemble) -> Result<SmallWorldReport> {
    if ensemble.networks.is_empty() {
        return Err(Error::InvalidInput("null ensemble is empty".into()));
    }
    let (c_obs, l_obs) = clustering_and_path(graph)?;
    let (c_lattice, l_lattice) = clustering_and_path(&lattice_reference(graph))?;
    let null_values = par::map_slice(&ensemble.networks, clustering_and_path)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let k = null_values.len() as f64;
    let c_random = null_values.iter().map(|v| v.0).sum::<f64>() / k;
    let l_random = null_values.iter().map(|v| v.1).sum::<f64>() / k;

    if (c_lattice - c_random).abs() <= f64::EPSILON * c_lattice.abs().max(1.0) {
        return Err(Error::DegenerateReferences(format!(
            "lattice and random clustering coincide ({c_lattice})"
        )));
    }
    if (l_lattice - l_random).abs() <= f64::EPSILON * l_lattice.abs().max(1.0) {
        return Err(Error::DegenerateReferences(format!(
            "lattice and random path lengths coincide ({l_lattice})"
        )));
    }
    let refs = References {
        c_lattice,
        c_random,
        l_lattice,
        l_random,
    };
    let result = refs.evaluate(c_obs, l_obs);
    let null_c: Vec<f64> = null_values.iter().map(|v| v.0).collect();
    let null_l: Vec<f64> = null_values.iter().map(|v| v.1).collect();
    let null_swp: Vec<f64> = null_values.iter().map(|&(c, l)| refs.evaluate(c, l).swp).collect();

    Ok(SmallWorldReport {
        result,
        clustering_ratio: result.clustering_ratio(),
        path_length_ratio: result.path_length_ratio(),
        ensemble_size: ensemble.networks.len(),
        ensemble_seed: ensemble.seed,
        method: ensemble.method.clone(),
        p_clustering: empirical_pvalue(c_obs, &null_c, Direction::Greater)?,
        p_path_length: empirical_pvalue(l_obs, &null_l, Direction::Greater)?,
        p_swp: empirical_pvalue(result.swp, &null_swp, Direction::Greater)?,
    })
}

pub fn small_world_propensity(graph: &WeightedGraph, ensemble: &NullEnsemble) -> Result<SmallWorldResult> {
    small_world_report(graph, ensemble).map(|r| r.result)
}

/// Ring lattice where every node links to its `k/2` nearest neighbours on
/// each side, with unit weights.
pub fn ring_lattice(n: usize, k: usize) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    for i in 0..n {
        for step in 1..=k / 2 {
            g.set_weight(i, (i + step) % n, 1.0);
        }
    }
    g
}

/// Ring lattice with each edge rewired to a uniformly chosen free endpoint
/// with probability `p`.
pub fn watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let mut g = ring_lattice(n, k);
    for step in 1..=k / 2 {
        for i in 0..n {
            let j = (i + step) % n;
            if !g.has_edge(i, j) || !rng.random_bool(p) {
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|&t| t != i && !g.has_edge(i, t)).collect();
            if free.is_empty() {
                continue;
            }
            let t = free[rng.random_range(0..free.len())];
            g.set_weight(i, j, 0.0);
            g.set_weight(i, t, 1.0);
        }
    }
    g
}

/// G(n, m): `m` edges placed uniformly at random, unit weights.
pub fn random_graph(n: usize, m: usize, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let mut g = WeightedGraph::new(n);
    let max = n * (n - 1) / 2;
    let mut placed = 0;
    while placed < m.min(max) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && !g.has_edge(i, j) {
            g.set_weight(i, j, 1.0);
            placed += 1;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted_weights(g: &WeightedGraph) -> Vec<f64> {
        let mut w: Vec<f64> = g.edges().iter().map(|e| e.2).collect();
        w.sort_by(f64::total_cmp);
        w
    }

    fn weighted_random(n: usize, m: usize, seed: u64) -> WeightedGraph {
        let mut rng = rng_from_seed(seed ^ 0xabcdef);
        let mut g = random_graph(n, m, seed);
        for (i, j, _) in g.edges() {
            g.set_weight(i, j, rng.random_range(0.02..0.6));
        }
        g
    }

    #[test]
    fn nulls_preserve_degrees_and_weights() {
        let g = weighted_random(30, 90, 7);
        let ens = randomize_preserving(&g, 10, 42).unwrap();
        assert_eq!(ens.networks.len(), 10);
        for null in &ens.networks {
            assert_eq!(null.degrees(), g.degrees());
            assert_eq!(sorted_weights(null), sorted_weights(&g));
            assert!(null.is_symmetric());
            assert_ne!(null, &g);
        }
        assert!(ens.swaps.iter().all(|&s| s == SWAPS_PER_EDGE * 90));
    }

    #[test]
    fn nulls_are_seed_deterministic() {
        let g = weighted_random(25, 60, 1);
        assert_eq!(randomize_preserving(&g, 4, 9).unwrap(), randomize_preserving(&g, 4, 9).unwrap());
        assert_ne!(randomize_preserving(&g, 1, 9).unwrap(), randomize_preserving(&g, 1, 10).unwrap());
    }

    #[test]
    fn randomization_needs_two_edges() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0)]);
        assert!(randomize_preserving(&g, 3, 0).is_err());
    }

    #[test]
    fn complete_graph_cannot_be_rewired() {
        let mut g = WeightedGraph::new(5);
        for i in 0..5 {
            for j in i + 1..5 {
                g.set_weight(i, j, 0.5);
            }
        }
        let (null, swaps) = randomize_one(&g, 3);
        assert_eq!(swaps, 0);
        assert_eq!(null, g);
    }

    #[test]
    fn lattice_of_hexagon() {
        let mut g = WeightedGraph::new(6);
        for (i, j) in [(0, 2), (2, 4), (4, 0), (1, 3), (3, 5), (5, 1)] {
            g.set_weight(i, j, 0.5);
        }
        let lat = lattice_reference(&g);
        for i in 0..6 {
            assert!(lat.has_edge(i, (i + 1) % 6));
        }
        assert_eq!(lat.edge_count(), 6);
        assert_eq!(mean_clustering(&lat), 0.0);
        // Ring distances from any node: 1,1,2,2,3 hops of length 2.
        let l = char_path_length(&shortest_distances(&lat)).unwrap().value;
        assert!((l - 2.0 * 9.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_of_complete_graph_is_complete() {
        let mut g = WeightedGraph::new(5);
        for i in 0..5 {
            for j in i + 1..5 {
                g.set_weight(i, j, 1.0);
            }
        }
        assert_eq!(lattice_reference(&g), g);
    }

    #[test]
    fn lattice_places_heaviest_weights_nearest() {
        let g = weighted_random(12, 30, 5);
        let lat = lattice_reference(&g);
        assert_eq!(sorted_weights(&lat), sorted_weights(&g));
        let nearest_min = (0..12).map(|i| lat.weight(i, (i + 1) % 12)).fold(f64::INFINITY, f64::min);
        let farther_max = lat
            .edges()
            .iter()
            .filter(|&&(i, j, _)| (j - i) % 12 != 1 && (j - i) != 11)
            .map(|e| e.2)
            .fold(0.0, f64::max);
        assert!(nearest_min >= farther_max);
    }

    #[test]
    fn empirical_pvalue_cases() {
        let nulls: Vec<f64> = (0..100).map(f64::from).collect();
        assert!((empirical_pvalue(1000.0, &nulls, Direction::Greater).unwrap() - 1.0 / 101.0).abs() < 1e-15);
        assert!((empirical_pvalue(-5.0, &nulls, Direction::Less).unwrap() - 1.0 / 101.0).abs() < 1e-15);
        let mid = empirical_pvalue(49.5, &nulls, Direction::Greater).unwrap();
        assert!((mid - 51.0 / 101.0).abs() < 1e-15);
        assert!(empirical_pvalue(1.0, &[], Direction::Less).is_err());
    }

    #[test]
    fn propensity_fixed_points() {
        assert_eq!(propensity_from_deltas(0.0, 0.0), 1.0);
        assert_eq!(propensity_from_deltas(1.0, 1.0), 0.0);
    }

    #[test]
    fn ring_lattice_has_zero_clustering_deviation() {
        let g = ring_lattice(40, 6);
        let ens = randomize_preserving(&g, 10, 11).unwrap();
        let r = small_world_propensity(&g, &ens).unwrap();
        assert!(r.delta_c.abs() < 1e-9);
        assert!((r.c_observed - r.c_lattice).abs() < 1e-9);
    }

    #[test]
    fn rewired_ring_is_small_world() {
        let g = watts_strogatz(100, 10, 0.05, 17);
        let ens = randomize_preserving(&g, 20, 3).unwrap();
        let report = small_world_report(&g, &ens).unwrap();
        assert!(report.result.swp > 0.6, "swp = {}", report.result.swp);
        assert!(report.clustering_ratio > 1.0);
        assert!(report.p_clustering < 0.05);
    }

    #[test]
    fn degenerate_references_error() {
        let mut g = WeightedGraph::new(5);
        for i in 0..5 {
            for j in i + 1..5 {
                g.set_weight(i, j, 1.0);
            }
        }
        let ens = NullEnsemble {
            networks: vec![g.clone()],
            seed: 0,
            method: NULL_METHOD.into(),
            swaps: vec![0],
        };
        assert!(matches!(small_world_propensity(&g, &ens), Err(Error::DegenerateReferences(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn propensity_in_unit_interval(seed in 0u64..10_000, m in 40usize..120) {
            let g = weighted_random(25, m, seed);
            let ens = randomize_preserving(&g, 5, seed).unwrap();
            if let Ok(r) = small_world_propensity(&g, &ens) {
                prop_assert!((0.0..=1.0).contains(&r.swp));
                prop_assert!((0.0..=1.0).contains(&r.delta_c));
                prop_assert!((0.0..=1.0).contains(&r.delta_l));
            }
        }

        #[test]
        fn pvalue_monotone_in_extreme_count(extreme in 0usize..50, total in 50usize..100) {
            let nulls: Vec<f64> = (0..total).map(|i| if i < extreme { 10.0 } else { 0.0 }).collect();
            let more: Vec<f64> = (0..total).map(|i| if i <= extreme { 10.0 } else { 0.0 }).collect();
            let p = empirical_pvalue(5.0, &nulls, Direction::Greater).unwrap();
            let q = empirical_pvalue(5.0, &more, Direction::Greater).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert!(q > p);
        }
    }
}
