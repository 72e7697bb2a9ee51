//! Sliding-window networks and the temporal slopes of node measures.

use std::collections::HashSet;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{records_in_window, ArticleRecord, OccurrenceMatrix, TopicVocabulary};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metrics::{neighbor_weighted_mean, node_metrics, NodeMetric, NodeMetrics};
use crate::month::{MonthRange, YearMonth};
use crate::network::{network_from_occurrences, EdgeFilter, TopicNetwork};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub central_month: YearMonth,
    pub half_width: u32,
    pub range: MonthRange,
}

impl WindowSpec {
    pub fn new(central_month: YearMonth, half_width: u32) -> Self {
        let hw = i64::from(half_width);
        Self {
            central_month,
            half_width,
            range: MonthRange {
                start: central_month.plus_months(-hw),
                end: central_month.plus_months(hw),
            },
        }
    }
}

/// Every window of `2 * half_width + 1` months that fits inside
/// `corpus_range`, in chronological order.
pub fn enumerate_windows(corpus_range: &MonthRange, half_width: u32) -> Result<Vec<WindowSpec>> {
    let width = 2 * half_width as usize + 1;
    let span = corpus_range.len_months();
    if span < width {
        return Err(Error::InvalidInput(format!(
            "corpus range {corpus_range} spans {span} months, shorter than one {width}-month window"
        )));
    }
    let first = corpus_range.start.plus_months(i64::from(half_width));
    Ok((0..=(span - width) as i64)
        .map(|offset| WindowSpec::new(first.plus_months(offset), half_width))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowNetwork {
    pub spec: WindowSpec,
    /// `None` when the window holds no articles.
    pub network: Option<TopicNetwork>,
}

/// One network per window over the fixed vocabulary.
pub fn window_networks(
    records: &[ArticleRecord],
    vocabulary: &TopicVocabulary,
    windows: &[WindowSpec],
    filter: EdgeFilter,
) -> Vec<WindowNetwork> {
    let nets = par::map_slice(windows, |spec| {
        let in_window = records_in_window(records, &spec.range);
        if in_window.is_empty() {
            return None;
        }
        let occ = OccurrenceMatrix::build(&in_window, &vocabulary.topics);
        Some(network_from_occurrences(&occ, &vocabulary.topics, spec.range, filter))
    });
    let degenerate = nets.iter().filter(|n| n.is_none()).count();
    if degenerate > 0 {
        warn!("{degenerate} of {} windows contain no articles", windows.len());
    }
    windows
        .iter()
        .zip(nets)
        .map(|(&spec, network)| WindowNetwork { spec, network })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// OLS slope per month.
    pub beta: f64,
    /// `beta` divided by the full-period value.
    pub delta: f64,
    pub n_points: usize,
}

/// Least-squares slope of `values` on `month_index`, standardized by
/// `static_value`. Missing windows are dropped; fewer than three points or a
/// zero standardizer give `None`.
pub fn metric_slope(values: &[Option<f64>], static_value: f64, month_index: &[f64]) -> Option<SlopeFit> {
    if static_value == 0.0 || !static_value.is_finite() {
        return None;
    }
    let points: Vec<(f64, f64)> = values
        .iter()
        .zip(month_index)
        .filter_map(|(v, &t)| v.filter(|x| x.is_finite()).map(|x| (t, x)))
        .collect();
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut sty = 0.0;
    for &(t, y) in &points {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
    }
    if stt == 0.0 {
        return None;
    }
    let beta = sty / stt;
    Some(SlopeFit {
        beta,
        delta: beta / static_value,
        n_points: points.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaTable {
    pub omega: Vec<Option<f64>>,
    /// Neighbour links skipped because the neighbour had no slope.
    pub excluded_neighbors: usize,
}

/// `Ω_i`: strength-weighted mean prevalence slope of each node's neighbours.
pub fn omega(graph: &WeightedGraph, prevalence_slopes: &[Option<f64>]) -> OmegaTable {
    let mut excluded = 0;
    let omega = (0..graph.node_count())
        .map(|i| {
            let (value, skipped) = neighbor_weighted_mean(graph, i, prevalence_slopes);
            excluded += skipped;
            value
        })
        .collect();
    if excluded > 0 {
        info!("omega: skipped {excluded} neighbour links without a prevalence slope");
    }
    OmegaTable {
        omega,
        excluded_neighbors: excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub topic: String,
    pub metric: NodeMetric,
    pub values: Vec<Option<f64>>,
    pub static_value: Option<f64>,
    pub slope: Option<SlopeFit>,
}

/// Metrics whose slopes are tracked.
pub const TRACKED_METRICS: [NodeMetric; 8] = NodeMetric::ALL;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub windows: Vec<WindowSpec>,
    pub topics: Vec<String>,
    /// Topics left out of the temporal analysis.
    pub excluded: Vec<bool>,
    /// One series per (topic, metric), topic-major, excluded topics omitted.
    pub series: Vec<MetricSeries>,
    pub omega: OmegaTable,
}

impl DynamicsResult {
    pub fn slope(&self, topic: &str, metric: NodeMetric) -> Option<SlopeFit> {
        self.series
            .iter()
            .find(|s| s.topic == topic && s.metric == metric)
            .and_then(|s| s.slope)
    }

    /// Standardized slope per topic, `None` where missing or excluded.
    pub fn deltas(&self, metric: NodeMetric) -> Vec<Option<f64>> {
        self.topics
            .iter()
            .map(|t| self.slope(t, metric).map(|s| s.delta))
            .collect()
    }
}

/// Per-window metrics, slopes against the static network and Ω.
///
/// Participation in every window uses the static community assignment.
pub fn analyze_windows(
    static_net: &TopicNetwork,
    assignment: &[usize],
    windows: &[WindowNetwork],
    exclude: &[String],
) -> DynamicsResult {
    let topics = static_net.topics.clone();
    let excluded_set: HashSet<&str> = exclude.iter().map(String::as_str).collect();
    let excluded: Vec<bool> = topics.iter().map(|t| excluded_set.contains(t.as_str())).collect();

    let static_metrics = node_metrics(static_net, assignment);
    let per_window: Vec<Option<Vec<NodeMetrics>>> = par::map_slice(windows, |w| {
        w.network.as_ref().map(|net| node_metrics(net, assignment))
    });
    let origin = windows.first().map(|w| w.spec.central_month);
    let month_index: Vec<f64> = windows
        .iter()
        .map(|w| origin.map_or(0.0, |o| o.months_until(w.spec.central_month) as f64))
        .collect();

    let mut series = Vec::new();
    for (i, topic) in topics.iter().enumerate() {
        if excluded[i] {
            continue;
        }
        for metric in TRACKED_METRICS {
            let values: Vec<Option<f64>> = windows
                .iter()
                .zip(&per_window)
                .map(|(w, m)| match (&w.network, m) {
                    (Some(net), Some(m)) => metric.value(net.node_prevalence[i], &m[i]),
                    _ => None,
                })
                .collect();
            let static_value = metric.value(static_net.node_prevalence[i], &static_metrics[i]);
            let slope = static_value.and_then(|sv| metric_slope(&values, sv, &month_index));
            series.push(MetricSeries {
                topic: topic.clone(),
                metric,
                values,
                static_value,
                slope,
            });
        }
    }

    let mut result = DynamicsResult {
        windows: windows.iter().map(|w| w.spec).collect(),
        topics,
        excluded,
        series,
        omega: OmegaTable {
            omega: Vec::new(),
            excluded_neighbors: 0,
        },
    };
    let prevalence_slopes = result.deltas(NodeMetric::Prevalence);
    let mut table = omega(&static_net.graph, &prevalence_slopes);
    for (o, &ex) in table.omega.iter_mut().zip(&result.excluded) {
        if ex {
            *o = None;
        }
    }
    result.omega = table;
    result
}
