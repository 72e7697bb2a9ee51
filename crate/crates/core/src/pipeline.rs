//! End-to-end run: corpus in, every artifact and a manifest out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::community::{consensus_partition, Consensus, ConsensusConfig};
use crate::corpus::{canonicalize, ingest, select_top_k, CanonicalizationMap, CorpusConfig, IngestReport};
use crate::dynamics::{analyze_windows, enumerate_windows, window_networks, DynamicsResult};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{global_metrics, node_metrics, NodeMetric, NodeMetrics};
use crate::month::MonthRange;
use crate::network::{build_network, EdgeFilter, TopicNetwork};
use crate::seed::stage_seed;
use crate::smallworld::{randomize_preserving, small_world_report};
use crate::stats::{
    analysis_static, analysis_temporal, analysis_temporal_from, correlation_battery, NamedCorrelation,
    RegressionResult, TEMPORAL_SLOPE_PREDICTORS,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_MARKER: &str = "FAILED";

/// Artifacts written by a successful run, in write order.
pub const ARTIFACTS: [&str; 14] = [
    "vocabulary.csv",
    "edges.csv",
    "partition.csv",
    "agreement.csv",
    "metrics.csv",
    "global_metrics.json",
    "network.graphml",
    "network.json",
    "swp.json",
    "window_series.csv",
    "slopes.csv",
    "omega.csv",
    "analysis.json",
    MANIFEST_FILE,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub canonicalization: Option<PathBuf>,
    pub range: MonthRange,
    pub k: usize,
    pub alpha: f64,
    pub bonferroni: bool,
    pub half_width: u32,
    pub null_count: usize,
    pub louvain_iterations: usize,
    pub tau: f64,
    pub gamma: f64,
    pub exclude: Vec<String>,
    pub seed: u64,
    pub output: PathBuf,
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, range: MonthRange, output: impl Into<PathBuf>) -> Self {
        Self {
            corpus: corpus.into(),
            canonicalization: None,
            range,
            k: 100,
            alpha: 0.05,
            bonferroni: false,
            half_width: 6,
            null_count: 100,
            louvain_iterations: 100,
            tau: 0.5,
            gamma: 1.0,
            exclude: Vec::new(),
            seed: 0,
            output: output.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.null_count == 0 {
            return bad("null ensemble size must be positive");
        }
        if self.louvain_iterations < 2 {
            return bad("louvain iterations must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return bad("gamma must be positive");
        }
        Ok(())
    }

    pub fn edge_filter(&self) -> EdgeFilter {
        EdgeFilter {
            alpha: self.alpha,
            bonferroni: self.bonferroni,
        }
    }

    pub fn consensus_config(&self) -> ConsensusConfig {
        ConsensusConfig {
            iterations: self.louvain_iterations,
            tau: self.tau,
            seed: stage_seed(self.seed, "communities"),
            gamma: self.gamma,
            ..ConsensusConfig::default()
        }
    }

    pub fn null_seed(&self) -> u64 {
        stage_seed(self.seed, "nulls")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub kept: usize,
    pub rejected_out_of_range: usize,
    pub rejected_empty_abstract: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: RunStatus,
    pub seed: u64,
    pub config: RunConfig,
    pub stages: Vec<StageTiming>,
    pub ingest: Option<IngestSummary>,
    pub outputs: Vec<String>,
    pub failure: Option<Failure>,
}

const MANIFEST_KEYS: [&str; 8] = ["version", "status", "seed", "config", "stages", "ingest", "outputs", "failure"];
const CONFIG_KEYS: [&str; 14] = [
    "corpus",
    "canonicalization",
    "range",
    "k",
    "alpha",
    "bonferroni",
    "half_width",
    "null_count",
    "louvain_iterations",
    "tau",
    "gamma",
    "exclude",
    "seed",
    "output",
];

/// Checks a parsed manifest: every top-level key and every config tunable is
/// present, the status is known, and a complete run lists files that exist in
/// `dir`.
pub fn validate_manifest(doc: &serde_json::Value, dir: &Path) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidInput(format!("manifest: {msg}")));
    let Some(obj) = doc.as_object() else {
        return bad("not an object".into());
    };
    for key in MANIFEST_KEYS {
        if !obj.contains_key(key) {
            return bad(format!("missing `{key}`"));
        }
    }
    let Some(config) = obj["config"].as_object() else {
        return bad("`config` is not an object".into());
    };
    for key in CONFIG_KEYS {
        if !config.contains_key(key) {
            return bad(format!("config is missing `{key}`"));
        }
    }
    if config.len() != CONFIG_KEYS.len() {
        return bad("config has unexpected keys".into());
    }
    let manifest: RunManifest = serde_json::from_value(doc.clone())?;
    if manifest.status == RunStatus::Complete {
        for name in &manifest.outputs {
            if !dir.join(name).is_file() {
                return bad(format!("listed output `{name}` does not exist"));
            }
        }
        if manifest.failure.is_some() {
            return bad("complete run carries a failure".into());
        }
    } else if manifest.failure.is_none() {
        return bad("failed run has no failure record".into());
    }
    Ok(())
}

/// Reads the corpus, rejects out-of-range and empty records, and applies the
/// canonicalization map if one is given.
pub fn load_corpus(corpus: &Path, canonicalization: Option<&Path>, range: MonthRange) -> Result<IngestReport> {
    let mut report = ingest(io::open(corpus)?, &CorpusConfig { range })?;
    if report.rejected() > 0 {
        log::warn!(
            "rejected {} out-of-range and {} empty-abstract records",
            report.rejected_out_of_range,
            report.rejected_empty_abstract
        );
    }
    if let Some(path) = canonicalization {
        let map = CanonicalizationMap::parse(io::open(path)?)?;
        report.records = canonicalize(&report.records, &map);
    }
    Ok(report)
}

/// Static regression, temporal regression and the Spearman battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub static_model: Option<RegressionResult>,
    pub static_error: Option<String>,
    pub temporal_model: Option<RegressionResult>,
    pub temporal_error: Option<String>,
    pub excluded_topics: Vec<String>,
    pub correlations: Vec<NamedCorrelation>,
    pub notes: Vec<String>,
}

pub const DF_NOTE: &str = "The temporal model is fit once on the non-excluded topics; \
its residual degrees of freedom are reported as computed and may differ by one from \
figures that mix samples with and without the excluded topic.";

pub fn analysis_report(
    net: &TopicNetwork,
    metrics: &[NodeMetrics],
    dynamics: &DynamicsResult,
) -> Result<AnalysisReport> {
    let excluded = dynamics
        .topics
        .iter()
        .zip(&dynamics.excluded)
        .filter(|(_, &x)| x)
        .map(|(t, _)| t.clone())
        .collect();
    assemble_analysis(
        &net.topics,
        &net.node_prevalence,
        metrics,
        analysis_temporal_from(dynamics),
        excluded,
    )
}

/// The same report rebuilt from exported tables: the metrics table, the
/// slopes table and the Ω table. Topics missing from the Ω table are the
/// excluded ones.
pub fn analysis_from_tables(
    table: &io::MetricTable,
    slopes: &io::SlopeMap,
    omega: &[(String, Option<f64>)],
) -> Result<AnalysisReport> {
    let delta = |topic: &str, m: NodeMetric| slopes.get(&(topic.to_string(), m)).map(|f| f.delta);
    let kept: Vec<&str> = omega.iter().map(|(t, _)| t.as_str()).collect();
    let prevalence: Vec<Option<f64>> = kept.iter().map(|t| delta(t, NodeMetric::Prevalence)).collect();
    let omega_values: Vec<Option<f64>> = omega.iter().map(|(_, o)| *o).collect();
    let metric_slopes: Vec<(NodeMetric, Vec<Option<f64>>)> = TEMPORAL_SLOPE_PREDICTORS
        .iter()
        .map(|&m| (m, kept.iter().map(|t| delta(t, m)).collect()))
        .collect();
    let excluded = table
        .topics
        .iter()
        .filter(|t| !kept.contains(&t.as_str()))
        .cloned()
        .collect();
    assemble_analysis(
        &table.topics,
        &table.prevalence,
        &table.metrics,
        analysis_temporal(&prevalence, &omega_values, &metric_slopes),
        excluded,
    )
}

/// A model that cannot be fit on this data is reported, not fatal.
fn unfitted_ok(
    which: &str,
    fit: Result<RegressionResult>,
) -> Result<(Option<RegressionResult>, Option<String>)> {
    match fit {
        Ok(m) => Ok((Some(m), None)),
        Err(e @ (Error::RankDeficient { .. } | Error::InvalidInput(_))) => {
            log::warn!("{which} regression not fit: {e}");
            Ok((None, Some(e.to_string())))
        }
        Err(e) => Err(e),
    }
}

fn assemble_analysis(
    topics: &[String],
    prevalence: &[f64],
    metrics: &[NodeMetrics],
    temporal: Result<RegressionResult>,
    excluded_topics: Vec<String>,
) -> Result<AnalysisReport> {
    let (static_model, static_error) = unfitted_ok("static", analysis_static(topics, prevalence, metrics))?;
    let (temporal_model, temporal_error) = unfitted_ok("temporal", temporal)?;
    let columns: Vec<(String, Vec<f64>)> = NodeMetric::ALL
        .iter()
        .map(|&m| {
            let values = (0..topics.len())
                .map(|i| m.value(prevalence[i], &metrics[i]).unwrap_or(f64::NAN))
                .collect();
            (m.name().to_string(), values)
        })
        .collect();
    Ok(AnalysisReport {
        static_model,
        static_error,
        temporal_model,
        temporal_error,
        excluded_topics,
        correlations: correlation_battery(&columns),
        notes: vec![DF_NOTE.to_string()],
    })
}

struct Stages {
    timings: Vec<StageTiming>,
}

impl Stages {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        log::info!("stage {stage}");
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage));
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Runs every stage and writes the artifacts into `config.output`. On
/// failure, files already written are kept, a `FAILED` marker names the
/// stage, and the manifest records the failure.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    std::fs::create_dir_all(&config.output).map_err(|e| Error::file(&config.output, e))?;
    let marker = config.output.join(FAILURE_MARKER);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| Error::file(&marker, e))?;
    }
    let mut stages = Stages { timings: Vec::new() };
    let mut ingest_summary = None;
    let result = execute(config, &mut stages, &mut ingest_summary);
    let mut manifest = RunManifest {
        version: VERSION.to_string(),
        status: RunStatus::Complete,
        seed: config.seed,
        config: config.clone(),
        stages: stages.timings,
        ingest: ingest_summary,
        outputs: ARTIFACTS.iter().map(|s| s.to_string()).collect(),
        failure: None,
    };
    if let Err(e) = &result {
        let (stage, message) = match e {
            Error::Stage { stage, source } => (stage.to_string(), source.to_string()),
            other => ("setup".to_string(), other.to_string()),
        };
        std::fs::write(&marker, format!("stage: {stage}\nerror: {message}\n")).map_err(|e| Error::file(&marker, e))?;
        manifest.status = RunStatus::Failed;
        manifest.outputs.retain(|name| config.output.join(name).is_file());
        manifest.failure = Some(Failure { stage, message });
    }
    let path = config.output.join(MANIFEST_FILE);
    io::write_json(io::create(&path)?, &manifest)?;
    result.map(|()| manifest)
}

fn execute(config: &RunConfig, stages: &mut Stages, ingest_summary: &mut Option<IngestSummary>) -> Result<()> {
    let out = |name: &str| config.output.join(name);
    let report = stages.run("ingest", || {
        load_corpus(&config.corpus, config.canonicalization.as_deref(), config.range)
    })?;
    *ingest_summary = Some(IngestSummary {
        kept: report.records.len(),
        rejected_out_of_range: report.rejected_out_of_range,
        rejected_empty_abstract: report.rejected_empty_abstract,
    });
    let records = report.records;

    let vocab = stages.run("select_top_k", || select_top_k(&records, config.k, &config.range))?;
    io::write_vocabulary_csv(io::create(&out("vocabulary.csv"))?, &vocab)?;

    let net = stages.run("build_network", || {
        build_network(&records, &vocab, &config.range, config.edge_filter())
    })?;
    io::write_edge_csv(io::create(&out("edges.csv"))?, &net)?;

    let consensus: Consensus = stages.run("communities", || consensus_partition(&net.graph, &config.consensus_config()))?;
    let assignment = consensus.partition.assignment.clone();
    io::write_partition_csv(io::create(&out("partition.csv"))?, &net.topics, &assignment)?;
    io::write_agreement_csv(io::create(&out("agreement.csv"))?, &net.topics, &consensus.agreement)?;

    let (metrics, global) = stages.run("metrics", || Ok((node_metrics(&net, &assignment), global_metrics(&net.graph)?)))?;
    io::write_metrics_csv(
        io::create(&out("metrics.csv"))?,
        &net.topics,
        &net.node_prevalence,
        Some(&assignment),
        Some(&metrics),
    )?;
    io::write_global_json(io::create(&out("global_metrics.json"))?, &global)?;
    let ann = io::GraphAnnotations {
        communities: Some(&assignment),
        metrics: Some(&metrics),
    };
    io::write_graphml(io::create(&out("network.graphml"))?, &net, ann)?;
    io::write_json_graph(io::create(&out("network.json"))?, &net, ann)?;

    let swp = stages.run("small_world", || {
        let ensemble = randomize_preserving(&net.graph, config.null_count, config.null_seed())?;
        small_world_report(&net.graph, &ensemble)
    })?;
    io::write_json(io::create(&out("swp.json"))?, &swp)?;

    let windows = stages.run("window_networks", || {
        let specs = enumerate_windows(&config.range, config.half_width)?;
        Ok(window_networks(&records, &vocab, &specs, config.edge_filter()))
    })?;

    let dynamics = stages.run("dynamics", || {
        for name in &config.exclude {
            if vocab.index_of(name).is_none() {
                log::warn!("excluded topic `{name}` is not in the vocabulary");
            }
        }
        Ok(analyze_windows(&net, &assignment, &windows, &config.exclude))
    })?;
    io::write_series_csv(io::create(&out("window_series.csv"))?, &dynamics)?;
    io::write_slopes_csv(io::create(&out("slopes.csv"))?, &dynamics)?;
    io::write_omega_csv(io::create(&out("omega.csv"))?, &dynamics)?;

    let analysis = stages.run("regression", || analysis_report(&net, &metrics, &dynamics))?;
    io::write_json(io::create(&out("analysis.json"))?, &analysis)?;
    Ok(())
}
