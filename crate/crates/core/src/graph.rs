//! Dense symmetric weighted graph shared by the metric, null-model and
//! community code. Topic networks are small (on the order of 100 nodes), so a
//! dense matrix is the simplest layout with O(1) edge lookups.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds from an undirected edge list. Later duplicates overwrite earlier
    /// ones.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut g = Self::new(n);
        for &(i, j, w) in edges {
            g.set_weight(i, j, w);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0.0
    }

    /// Sets `w_ij = w_ji`. Self-loops are ignored.
    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        if i == j {
            return;
        }
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n).map(|i| self.neighbors(i).collect()).collect()
    }

    /// Edges with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weight(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Sum of `w_ij` over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.neighbors(i).count()).collect()
    }

    pub fn strengths(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// Same topology with every weight set to 1.
    pub fn binarized(&self) -> Self {
        Self {
            n: self.n,
            weights: self
                .weights
                .iter()
                .map(|&w| if w > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.weight(i, i) == 0.0 && (0..i).all(|j| self.weight(i, j) == self.weight(j, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_storage() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 0.5), (2, 1, 0.25), (3, 3, 9.0)]);
        assert_eq!(g.weight(1, 0), 0.5);
        assert_eq!(g.weight(1, 2), 0.25);
        assert_eq!(g.weight(3, 3), 0.0);
        assert!(g.is_symmetric());
        assert_eq!(g.edges(), vec![(0, 1, 0.5), (1, 2, 0.25)]);
        assert_eq!(g.degrees(), vec![1, 2, 1, 0]);
        assert_eq!(g.strengths(), vec![0.5, 0.75, 0.25, 0.0]);
        assert_eq!(g.total_weight(), 0.75);
        assert!((g.density() - 2.0 / 6.0).abs() < 1e-15);
    }
}
