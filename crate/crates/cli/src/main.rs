use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use topiknet_core::community::{consensus_partition, ConsensusConfig};
use topiknet_core::corpus::{select_top_k, write_corpus};
use topiknet_core::dynamics::{analyze_windows, enumerate_windows, window_networks};
use topiknet_core::io::{self, ExportFormat, GraphAnnotations, ImportedNetwork};
use topiknet_core::metrics::{global_metrics, node_metrics};
use topiknet_core::network::{build_network, EdgeFilter};
use topiknet_core::pipeline::{self, load_corpus, RunConfig};
use topiknet_core::seed::stage_seed;
use topiknet_core::smallworld::{randomize_preserving, small_world_report};
use topiknet_core::synth::{generate_raw, SynthSpec};
use topiknet_core::{Error, ErrorClass, MonthRange, Result};

#[derive(Parser)]
#[command(name = "topiknet", version, about = "Topic co-occurrence network analysis")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TOPIKNET_THREADS")]
    threads: Option<usize>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and canonicalize a corpus; report candidate topics.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Select the top-k topics and build the static network.
    Build {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, env = "TOPIKNET_K", default_value_t = 100)]
        k: usize,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Node and global measures of a network.
    Metrics {
        #[command(flatten)]
        net: NetworkArgs,
        /// Community labels; defaults to those stored in the network file.
        #[arg(long, env = "TOPIKNET_PARTITION")]
        partition: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Null ensemble and small-world propensity.
    Nulls {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, env = "TOPIKNET_NULL_COUNT", default_value_t = 100)]
        null_count: usize,
        #[arg(long, env = "TOPIKNET_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Consensus community detection.
    Communities {
        #[command(flatten)]
        net: NetworkArgs,
        #[command(flatten)]
        consensus: ConsensusArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sliding-window networks, metric slopes and Ω.
    Dynamics {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Static network from `build`; fixes the topic set.
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, env = "TOPIKNET_PARTITION")]
        partition: Option<PathBuf>,
        #[arg(long, env = "TOPIKNET_HALF_WIDTH", default_value_t = 6)]
        half_width: u32,
        #[command(flatten)]
        filter: FilterArgs,
        /// Topics left out of temporal analyses.
        #[arg(long, env = "TOPIKNET_EXCLUDE", value_delimiter = ',')]
        exclude: Vec<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Static and temporal regressions from exported tables.
    Stats {
        #[arg(long, env = "TOPIKNET_METRICS")]
        metrics: PathBuf,
        #[arg(long, env = "TOPIKNET_SLOPES")]
        slopes: PathBuf,
        #[arg(long, env = "TOPIKNET_OMEGA")]
        omega: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Generate a synthetic corpus from a TOML spec.
    Synth {
        #[arg(long, env = "TOPIKNET_SPEC")]
        spec: PathBuf,
        /// Corpus file to write (JSON lines).
        #[arg(long, short, env = "TOPIKNET_OUTPUT")]
        output: PathBuf,
    },
    /// Full pipeline.
    Run(RunArgs),
    /// Write a network as GraphML, JSON or CSV.
    Export {
        #[command(flatten)]
        net: NetworkArgs,
        #[arg(long, env = "TOPIKNET_PARTITION")]
        partition: Option<PathBuf>,
        /// graphml, json or csv.
        #[arg(long, env = "TOPIKNET_FORMAT")]
        format: String,
        #[arg(long, short, env = "TOPIKNET_OUTPUT")]
        output: PathBuf,
    },
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus in JSON lines: {"id", "date": "YYYY-MM", "abstract", "keywords"}.
    #[arg(long, env = "TOPIKNET_CORPUS")]
    corpus: PathBuf,
    /// Variant-to-canonical phrase map.
    #[arg(long, env = "TOPIKNET_CANONICALIZATION")]
    canonicalization: Option<PathBuf>,
    /// Inclusive month range, YYYY-MM..YYYY-MM.
    #[arg(long, env = "TOPIKNET_RANGE", default_value = "2008-01..2017-12")]
    range: MonthRange,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long, env = "TOPIKNET_ALPHA", default_value_t = 0.05)]
    alpha: f64,
    /// Divide alpha by the number of topic pairs.
    #[arg(long, env = "TOPIKNET_BONFERRONI")]
    bonferroni: bool,
}

impl FilterArgs {
    fn filter(&self) -> EdgeFilter {
        EdgeFilter {
            alpha: self.alpha,
            bonferroni: self.bonferroni,
        }
    }
}

#[derive(Args)]
struct NetworkArgs {
    /// Network file (.graphml or .json).
    #[arg(long, env = "TOPIKNET_NETWORK")]
    network: PathBuf,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, short, env = "TOPIKNET_OUTPUT", default_value = ".")]
    output: PathBuf,
}

impl OutputArgs {
    fn dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.output).map_err(|e| Error::File {
            path: self.output.clone(),
            source: e,
        })?;
        Ok(&self.output)
    }
}

#[derive(Args)]
struct ConsensusArgs {
    #[arg(long, env = "TOPIKNET_LOUVAIN_ITERATIONS", default_value_t = 100)]
    louvain_iterations: usize,
    #[arg(long, env = "TOPIKNET_TAU", default_value_t = 0.5)]
    tau: f64,
    #[arg(long, env = "TOPIKNET_GAMMA", default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, env = "TOPIKNET_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, env = "TOPIKNET_K", default_value_t = 100)]
    k: usize,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, env = "TOPIKNET_HALF_WIDTH", default_value_t = 6)]
    half_width: u32,
    #[arg(long, env = "TOPIKNET_NULL_COUNT", default_value_t = 100)]
    null_count: usize,
    #[command(flatten)]
    consensus: ConsensusArgs,
    #[arg(long, env = "TOPIKNET_EXCLUDE", value_delimiter = ',')]
    exclude: Vec<String>,
    #[command(flatten)]
    out: OutputArgs,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            corpus: self.corpus.corpus.clone(),
            canonicalization: self.corpus.canonicalization.clone(),
            range: self.corpus.range,
            k: self.k,
            alpha: self.filter.alpha,
            bonferroni: self.filter.bonferroni,
            half_width: self.half_width,
            null_count: self.null_count,
            louvain_iterations: self.consensus.louvain_iterations,
            tau: self.consensus.tau,
            gamma: self.consensus.gamma,
            exclude: self.exclude.clone(),
            seed: self.consensus.seed,
            output: self.out.output.clone(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Convergence => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Err(e) = configure_threads(cli.threads).and_then(|()| dispatch(cli.command)) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        return ExitCode::from(exit_code(&e));
    }
    ExitCode::SUCCESS
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<()> {
    if threads.is_some_and(|n| n > 1) {
        log::warn!("built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn load_network(args: &NetworkArgs) -> Result<ImportedNetwork> {
    io::read_network_file(&args.network)
}

/// Labels from an explicit partition file, else those embedded in the network.
fn resolve_partition(imported: &ImportedNetwork, partition: Option<&Path>) -> Result<Vec<usize>> {
    match partition {
        Some(path) => io::read_partition_csv(io::open(path)?, &imported.network.topics),
        None => imported.communities.clone().ok_or_else(|| {
            Error::Config("no community labels: pass --partition or use a network file that carries them".into())
        }),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest { corpus, out } => {
            let dir = out.dir()?;
            let report = load_corpus(&corpus.corpus, corpus.canonicalization.as_deref(), corpus.range)?;
            let summary = pipeline::IngestSummary {
                kept: report.records.len(),
                rejected_out_of_range: report.rejected_out_of_range,
                rejected_empty_abstract: report.rejected_empty_abstract,
            };
            io::write_json(io::create(&dir.join("ingest_report.json"))?, &summary)?;
            let n = topiknet_core::corpus::candidate_topics(&report.records).len();
            let vocab = select_top_k(&report.records, n, &corpus.range)?;
            io::write_vocabulary_csv(io::create(&dir.join("candidates.csv"))?, &vocab)?;
            println!("kept {} records, {} candidate topics", summary.kept, n);
        }
        Command::Build { corpus, k, filter, out } => {
            let dir = out.dir()?;
            let records = load_corpus(&corpus.corpus, corpus.canonicalization.as_deref(), corpus.range)?.records;
            let vocab = select_top_k(&records, k, &corpus.range)?;
            let net = build_network(&records, &vocab, &corpus.range, filter.filter())?;
            io::write_vocabulary_csv(io::create(&dir.join("vocabulary.csv"))?, &vocab)?;
            io::write_edge_csv(io::create(&dir.join("edges.csv"))?, &net)?;
            io::write_graphml(io::create(&dir.join("network.graphml"))?, &net, GraphAnnotations::default())?;
            io::write_json_graph(io::create(&dir.join("network.json"))?, &net, GraphAnnotations::default())?;
            println!("{} topics, {} edges", net.node_count(), net.edge_count());
        }
        Command::Metrics { net, partition, out } => {
            let dir = out.dir()?;
            let imported = load_network(&net)?;
            let assignment = resolve_partition(&imported, partition.as_deref())?;
            let net = &imported.network;
            let metrics = node_metrics(net, &assignment);
            io::write_metrics_csv(
                io::create(&dir.join("metrics.csv"))?,
                &net.topics,
                &net.node_prevalence,
                Some(&assignment),
                Some(&metrics),
            )?;
            io::write_global_json(io::create(&dir.join("global_metrics.json"))?, &global_metrics(&net.graph)?)?;
        }
        Command::Nulls { net, null_count, seed, out } => {
            let dir = out.dir()?;
            let graph = load_network(&net)?.network.graph;
            let ensemble = randomize_preserving(&graph, null_count, stage_seed(seed, "nulls"))?;
            let report = small_world_report(&graph, &ensemble)?;
            io::write_json(io::create(&dir.join("swp.json"))?, &report)?;
            println!("swp {:.4}", report.result.swp);
        }
        Command::Communities { net, consensus, out } => {
            let dir = out.dir()?;
            let net = load_network(&net)?.network;
            let config = ConsensusConfig {
                iterations: consensus.louvain_iterations,
                tau: consensus.tau,
                seed: stage_seed(consensus.seed, "communities"),
                gamma: consensus.gamma,
                ..ConsensusConfig::default()
            };
            let result = consensus_partition(&net.graph, &config)?;
            io::write_partition_csv(
                io::create(&dir.join("partition.csv"))?,
                &net.topics,
                &result.partition.assignment,
            )?;
            io::write_agreement_csv(io::create(&dir.join("agreement.csv"))?, &net.topics, &result.agreement)?;
            println!(
                "{} communities, Q = {:.4}",
                result.partition.community_count(),
                result.partition.q
            );
        }
        Command::Dynamics {
            corpus,
            net,
            partition,
            half_width,
            filter,
            exclude,
            out,
        } => {
            let dir = out.dir()?;
            let imported = load_network(&net)?;
            let assignment = resolve_partition(&imported, partition.as_deref())?;
            let static_net = &imported.network;
            let records = load_corpus(&corpus.corpus, corpus.canonicalization.as_deref(), corpus.range)?.records;
            let vocab = topiknet_core::corpus::TopicVocabulary {
                topics: static_net.topics.clone(),
                prevalence: static_net.node_prevalence.clone(),
            };
            let specs = enumerate_windows(&corpus.range, half_width)?;
            let windows = window_networks(&records, &vocab, &specs, filter.filter());
            let dynamics = analyze_windows(static_net, &assignment, &windows, &exclude);
            io::write_series_csv(io::create(&dir.join("window_series.csv"))?, &dynamics)?;
            io::write_slopes_csv(io::create(&dir.join("slopes.csv"))?, &dynamics)?;
            io::write_omega_csv(io::create(&dir.join("omega.csv"))?, &dynamics)?;
        }
        Command::Stats {
            metrics,
            slopes,
            omega,
            out,
        } => {
            let dir = out.dir()?;
            let table = io::read_metrics_csv(io::open(&metrics)?)?;
            let slopes = io::read_slopes_csv(io::open(&slopes)?)?;
            let omega = io::read_omega_csv(io::open(&omega)?)?;
            let report = pipeline::analysis_from_tables(&table, &slopes, &omega)?;
            io::write_json(io::create(&dir.join("analysis.json"))?, &report)?;
        }
        Command::Synth { spec, output } => {
            let spec = SynthSpec::read_toml(io::open(&spec)?)?;
            let records = generate_raw(&spec)?;
            write_corpus(io::create(&output)?, &records)?;
            println!("wrote {} articles", records.len());
        }
        Command::Run(args) => {
            let manifest = pipeline::run_pipeline(&args.config())?;
            println!(
                "run complete: {} artifacts in {}",
                manifest.outputs.len(),
                manifest.config.output.display()
            );
        }
        Command::Export {
            net,
            partition,
            format,
            output,
        } => {
            let format: ExportFormat = format.parse()?;
            let imported = load_network(&net)?;
            let assignment = match (&partition, &imported.communities) {
                (None, None) => None,
                _ => Some(resolve_partition(&imported, partition.as_deref())?),
            };
            let metrics = assignment.as_ref().map(|a| node_metrics(&imported.network, a));
            let ann = GraphAnnotations {
                communities: assignment.as_deref(),
                metrics: metrics.as_deref(),
            };
            io::export_graph(&imported.network, ann, format, &output)?;
        }
    }
    Ok(())
}
