//! Weighted modularity, a seeded Louvain optimizer and consensus clustering
//! over many restarts.

use std::collections::HashMap;

use log::debug;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::par;
use crate::seed::{derive_seed, rng_from_seed};

/// Minimum modularity gain for a Louvain move to be accepted.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community label per node, contiguous from 0 in order of first
    /// appearance.
    pub assignment: Vec<usize>,
    pub q: f64,
    pub gamma: f64,
}

impl Partition {
    pub fn community_count(&self) -> usize {
        self.assignment.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Relabels communities to `0..m` in order of first appearance.
pub fn relabel(assignment: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect()
}

fn check_cover(graph: &WeightedGraph, assignment: &[usize]) -> Result<()> {
    if assignment.len() != graph.node_count() {
        return Err(Error::InvalidInput(format!(
            "partition covers {} nodes but the network has {}",
            assignment.len(),
            graph.node_count()
        )));
    }
    Ok(())
}

/// `Q = (1/l) Σ_ij [w_ij - γ s_i s_j / l] δ(m_i, m_j)` with `l = Σ_ij w_ij`.
pub fn modularity(graph: &WeightedGraph, assignment: &[usize], gamma: f64) -> Result<f64> {
    check_cover(graph, assignment)?;
    Level::from_graph(graph).modularity(&relabel(assignment), gamma)
}

/// Modularity evaluated on the graph coarsened by `assignment`, where each
/// community becomes one node carrying its internal weight as a self-loop.
/// Agrees with [`modularity`] up to rounding.
pub fn aggregated_modularity(graph: &WeightedGraph, assignment: &[usize], gamma: f64) -> Result<f64> {
    check_cover(graph, assignment)?;
    let labels = relabel(assignment);
    let coarse = Level::from_graph(graph).aggregate(&labels);
    let singletons: Vec<usize> = (0..coarse.len()).collect();
    coarse.modularity(&singletons, gamma)
}

/// Working graph of one Louvain level. Self-loop weight counts both
/// orientations of every internal pair, matching the ordered-pair sums in the
/// modularity formula.
#[derive(Debug, Clone)]
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    strength: Vec<f64>,
    total: f64,
}

impl Level {
    fn from_graph(graph: &WeightedGraph) -> Self {
        let adj = graph.adjacency_lists();
        let strength: Vec<f64> = adj.iter().map(|a| a.iter().map(|e| e.1).sum()).collect();
        let total = strength.iter().sum();
        Self {
            self_loops: vec![0.0; adj.len()],
            adj,
            strength,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, labels: &[usize], gamma: f64) -> Result<f64> {
        if self.total <= 0.0 {
            return Err(Error::NoEdges);
        }
        let m = labels.iter().copied().max().map_or(0, |x| x + 1);
        let mut internal = vec![0.0; m];
        let mut tot = vec![0.0; m];
        for i in 0..self.len() {
            let c = labels[i];
            internal[c] += self.self_loops[i];
            tot[c] += self.strength[i];
            for &(j, w) in &self.adj[i] {
                if labels[j] == c {
                    internal[c] += w;
                }
            }
        }
        let l = self.total;
        Ok(internal
            .iter()
            .zip(&tot)
            .map(|(inn, t)| inn - gamma * t * t / l)
            .sum::<f64>()
            / l)
    }

    fn aggregate(&self, labels: &[usize]) -> Level {
        let m = labels.iter().copied().max().map_or(0, |x| x + 1);
        let mut self_loops = vec![0.0; m];
        let mut strength = vec![0.0; m];
        let mut links: Vec<HashMap<usize, f64>> = vec![HashMap::new(); m];
        for i in 0..self.len() {
            let ci = labels[i];
            self_loops[ci] += self.self_loops[i];
            strength[ci] += self.strength[i];
            for &(j, w) in &self.adj[i] {
                let cj = labels[j];
                if ci == cj {
                    self_loops[ci] += w;
                } else {
                    *links[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        let adj = links
            .into_iter()
            .map(|l| {
                let mut v: Vec<(usize, f64)> = l.into_iter().collect();
                v.sort_by_key(|e| e.0);
                v
            })
            .collect();
        Level {
            adj,
            self_loops,
            strength,
            total: self.total,
        }
    }

    /// Greedy single-node moves until a full sweep changes nothing. Returns
    /// contiguous labels and whether any node moved.
    fn local_moves(&self, gamma: f64, rng: &mut crate::seed::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let l = self.total;
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut weight_to = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        let mut any_move = false;

        loop {
            order.shuffle(rng);
            let mut moved = false;
            for &i in &order {
                let k_i = self.strength[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if weight_to[c] == 0.0 {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                let old = comm[i];
                tot[old] -= k_i;
                let gain = |c: usize, wt: f64| wt - gamma * tot[c] * k_i / l;
                let mut best = old;
                let mut best_gain = gain(old, weight_to[old]);
                for &c in &touched {
                    let g = gain(c, weight_to[c]);
                    if g > best_gain + MIN_GAIN {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += k_i;
                comm[i] = best;
                if best != old {
                    moved = true;
                }
                for &c in &touched {
                    weight_to[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_move = true;
        }
        (relabel(&comm), any_move)
    }
}

fn louvain_labels(graph: &WeightedGraph, seed: u64, gamma: f64) -> Vec<usize> {
    let n = graph.node_count();
    let mut level = Level::from_graph(graph);
    let mut flat: Vec<usize> = (0..n).collect();
    if level.total <= 0.0 {
        return flat;
    }
    let mut rng = rng_from_seed(seed);
    loop {
        let (labels, moved) = level.local_moves(gamma, &mut rng);
        if !moved {
            break;
        }
        for c in flat.iter_mut() {
            *c = labels[*c];
        }
        let coarse = level.aggregate(&labels);
        if coarse.len() == level.len() {
            break;
        }
        level = coarse;
    }
    relabel(&flat)
}

/// One seeded Louvain run: node sweeps in shuffled order, then aggregation,
/// repeated until no move improves modularity.
pub fn louvain_once(graph: &WeightedGraph, seed: u64, gamma: f64) -> Result<Partition> {
    let assignment = louvain_labels(graph, seed, gamma);
    let q = modularity(graph, &assignment, gamma)?;
    Ok(Partition {
        assignment,
        q,
        gamma,
    })
}

/// Fraction of partitions that place each pair of nodes together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    n: usize,
    values: Vec<f64>,
    pub iteration_count: usize,
}

impl AgreementMatrix {
    pub fn from_partitions(partitions: &[Vec<usize>]) -> Self {
        let n = partitions.first().map_or(0, Vec::len);
        let mut counts = vec![0u32; n * n];
        for p in partitions {
            for i in 0..n {
                for j in 0..n {
                    if p[i] == p[j] {
                        counts[i * n + j] += 1;
                    }
                }
            }
        }
        let total = partitions.len().max(1) as f64;
        Self {
            n,
            values: counts.into_iter().map(|c| f64::from(c) / total).collect(),
            iteration_count: partitions.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Off-diagonal entries at or above `tau` as a weighted graph.
    pub fn thresholded_graph(&self, tau: f64) -> WeightedGraph {
        let mut g = WeightedGraph::new(self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.get(i, j);
                if v >= tau && v > 0.0 {
                    g.set_weight(i, j, v);
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub iterations: usize,
    pub tau: f64,
    pub seed: u64,
    pub gamma: f64,
    pub max_rounds: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            tau: 0.5,
            seed: 0,
            gamma: 1.0,
            max_rounds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consensus {
    pub partition: Partition,
    /// Agreement of the restarts on the original network.
    pub agreement: AgreementMatrix,
    /// Clustering rounds performed, the first on the network itself.
    pub rounds: usize,
    /// Highest modularity among the restarts on the original network.
    pub best_single_q: f64,
}

/// Runs `iterations` seeded restarts, then repeatedly re-clusters the
/// thresholded agreement matrix until every restart returns the same
/// partition.
pub fn consensus_partition(graph: &WeightedGraph, config: &ConsensusConfig) -> Result<Consensus> {
    if config.iterations < 2 {
        return Err(Error::InvalidInput("consensus needs at least 2 iterations".into()));
    }
    let iterations = config.iterations;
    let run_round = |g: &WeightedGraph, round: usize| -> Vec<Vec<usize>> {
        par::map_indices(iterations, |idx| {
            let seed = derive_seed(config.seed, (round * iterations + idx) as u64);
            louvain_labels(g, seed, config.gamma)
        })
    };

    let mut runs = run_round(graph, 0);
    let mut best_single_q = f64::NEG_INFINITY;
    for r in &runs {
        best_single_q = best_single_q.max(modularity(graph, r, config.gamma)?);
    }
    let first = AgreementMatrix::from_partitions(&runs);
    let mut last = first.clone();

    for round in 1..=config.max_rounds {
        if runs.iter().all(|r| *r == runs[0]) {
            let assignment = runs.swap_remove(0);
            let q = modularity(graph, &assignment, config.gamma)?;
            debug!("consensus reached after {round} rounds");
            return Ok(Consensus {
                partition: Partition {
                    assignment,
                    q,
                    gamma: config.gamma,
                },
                agreement: first,
                rounds: round,
                best_single_q,
            });
        }
        let d = last.thresholded_graph(config.tau);
        runs = run_round(&d, round);
        last = AgreementMatrix::from_partitions(&runs);
    }
    Err(Error::NoConvergence {
        meta_iterations: config.max_rounds,
        last_agreement: Box::new(last),
    })
}

/// Normalized mutual information `2 I(A;B) / (H(A) + H(B))`; 1 when both
/// partitions are trivial.
pub fn normalized_mutual_information(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same nodes");
    let n = a.len() as f64;
    let (a, b) = (relabel(a), relabel(b));
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; ka * kb];
    let mut pa = vec![0.0; ka];
    let mut pb = vec![0.0; kb];
    for (&x, &y) in a.iter().zip(&b) {
        joint[x * kb + y] += 1.0;
        pa[x] += 1.0;
        pb[y] += 1.0;
    }
    let entropy = |p: &[f64]| -> f64 {
        p.iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| -(c / n) * (c / n).ln())
            .sum()
    };
    let (ha, hb) = (entropy(&pa), entropy(&pb));
    if ha + hb == 0.0 {
        return 1.0;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0.0 {
                mi += (c / n) * (c * n / (pa[x] * pb[y])).ln();
            }
        }
    }
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}
