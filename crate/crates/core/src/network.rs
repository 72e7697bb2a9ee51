//! Weighted topic co-occurrence networks.
//!
//! Edge weights are φ coefficients between per-article topic indicators.
//! Only positive, significant associations are kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::corpus::{records_in_window, ArticleRecord, OccurrenceMatrix, TopicVocabulary};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::month::MonthRange;
use crate::par;

/// 2×2 contingency counts for two binary variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable {
    pub fn from_vectors(x: &[bool], y: &[bool]) -> Self {
        let mut t = ContingencyTable {
            n11: 0,
            n10: 0,
            n01: 0,
            n00: 0,
        };
        for (&a, &b) in x.iter().zip(y) {
            match (a, b) {
                (true, true) => t.n11 += 1,
                (true, false) => t.n10 += 1,
                (false, true) => t.n01 += 1,
                (false, false) => t.n00 += 1,
            }
        }
        t
    }

    /// Table from marginal counts: `count_x`, `count_y` and `joint` ones out
    /// of `n` observations.
    pub fn from_counts(n: u64, count_x: u64, count_y: u64, joint: u64) -> Self {
        ContingencyTable {
            n11: joint,
            n10: count_x - joint,
            n01: count_y - joint,
            n00: n + joint - count_x - count_y,
        }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn phi(&self) -> Result<f64> {
        let (n11, n10, n01, n00) = (
            self.n11 as f64,
            self.n10 as f64,
            self.n01 as f64,
            self.n00 as f64,
        );
        let row1 = n11 + n10;
        let row0 = n01 + n00;
        let col1 = n11 + n01;
        let col0 = n10 + n00;
        if row1 == 0.0 || row0 == 0.0 || col1 == 0.0 || col0 == 0.0 {
            return Err(Error::UndefinedAssociation);
        }
        let phi = (n11 * n00 - n10 * n01) / (row1 * row0 * col1 * col0).sqrt();
        Ok(phi.clamp(-1.0, 1.0))
    }
}

/// φ coefficient of two equal-length binary vectors.
pub fn phi_coefficient(x: &[bool], y: &[bool]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "phi needs two vectors of equal length >= 2 (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    ContingencyTable::from_vectors(x, y).phi()
}

/// p-value of the χ² = nφ² test with one degree of freedom.
pub fn phi_significance(phi: f64, n_articles: usize) -> f64 {
    let chi2 = n_articles as f64 * phi * phi;
    if chi2 <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(1.0).expect("valid degrees of freedom");
    dist.sf(chi2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFilter {
    pub alpha: f64,
    /// Divide α by the number of tested pairs.
    pub bonferroni: bool,
}

impl Default for EdgeFilter {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bonferroni: false,
        }
    }
}

/// How the candidate pairs fared during thresholding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeScreening {
    pub pairs: usize,
    pub undefined: usize,
    pub non_positive: usize,
    pub non_significant: usize,
    pub retained: usize,
}

impl EdgeScreening {
    /// Fraction of defined associations that were dropped.
    pub fn removed_fraction(&self) -> f64 {
        let defined = self.pairs - self.undefined;
        if defined == 0 {
            return 0.0;
        }
        (self.non_positive + self.non_significant) as f64 / defined as f64
    }
}

/// p-values keyed by node pair `(i, j)`, `i < j`.
pub type EdgePValues = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicNetwork {
    pub topics: Vec<String>,
    pub graph: WeightedGraph,
    pub node_prevalence: Vec<f64>,
    pub window: MonthRange,
    pub article_count: usize,
    /// Topics with no occurrence in the window; they stay in the network as
    /// isolated nodes.
    pub absent: Vec<bool>,
    /// p-value of every retained edge, keyed by `(i, j)` with `i < j`.
    pub edge_p_values: EdgePValues,
    pub screening: EdgeScreening,
}

impl TopicNetwork {
    pub fn node_count(&self) -> usize {
        self.topics.len()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn p_value(&self, i: usize, j: usize) -> Option<f64> {
        self.edge_p_values.get(&(i.min(j), i.max(j))).copied()
    }
}

/// Builds the thresholded φ network over the articles dated inside `window`.
pub fn build_network(
    records: &[ArticleRecord],
    vocabulary: &TopicVocabulary,
    window: &MonthRange,
    filter: EdgeFilter,
) -> Result<TopicNetwork> {
    let in_window = records_in_window(records, window);
    if in_window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let occ = OccurrenceMatrix::build(&in_window, &vocabulary.topics);
    Ok(network_from_occurrences(&occ, &vocabulary.topics, *window, filter))
}

pub fn network_from_occurrences(
    occ: &OccurrenceMatrix,
    topics: &[String],
    window: MonthRange,
    filter: EdgeFilter,
) -> TopicNetwork {
    let n = topics.len();
    let n_articles = occ.n_articles;
    let counts: Vec<usize> = (0..n).map(|t| occ.count(t)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let alpha = if filter.bonferroni && !pairs.is_empty() {
        filter.alpha / pairs.len() as f64
    } else {
        filter.alpha
    };

    let outcomes = par::map_slice(&pairs, |&(i, j)| {
        let table = ContingencyTable::from_counts(
            n_articles as u64,
            counts[i] as u64,
            counts[j] as u64,
            occ.joint_count(i, j) as u64,
        );
        table.phi().map(|phi| (phi, phi_significance(phi, n_articles)))
    });

    let mut graph = WeightedGraph::new(n);
    let mut edge_p_values = BTreeMap::new();
    let mut screening = EdgeScreening {
        pairs: pairs.len(),
        ..EdgeScreening::default()
    };
    for (&(i, j), outcome) in pairs.iter().zip(outcomes) {
        match outcome {
            Err(_) => screening.undefined += 1,
            Ok((phi, _)) if phi <= 0.0 => screening.non_positive += 1,
            Ok((_, p)) if p >= alpha => screening.non_significant += 1,
            Ok((phi, p)) => {
                screening.retained += 1;
                graph.set_weight(i, j, phi);
                edge_p_values.insert((i, j), p);
            }
        }
    }

    TopicNetwork {
        topics: topics.to_vec(),
        graph,
        node_prevalence: counts.iter().map(|&c| c as f64 / n_articles as f64).collect(),
        window,
        article_count: n_articles,
        absent: counts.iter().map(|&c| c == 0).collect(),
        edge_p_values,
        screening,
    }
}
