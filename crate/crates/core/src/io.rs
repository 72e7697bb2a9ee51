//! Plain-text exports and imports: GraphML, JSON and CSV.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value read back is bit-identical to the one written. Missing values are
//! empty CSV cells or JSON `null`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::community::AgreementMatrix;
use crate::corpus::TopicVocabulary;
use crate::dynamics::{DynamicsResult, SlopeFit};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::metrics::{GlobalMetrics, NodeMetric, NodeMetrics};
use crate::month::MonthRange;
use crate::network::{EdgePValues, EdgeScreening, TopicNetwork};

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::file(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::InvalidInput(format!("not a number: `{s}`")))
}

/// Node and edge attributes attached to an exported network.
#[derive(Debug, Clone, Copy, Default)]
pub struct GraphAnnotations<'a> {
    pub communities: Option<&'a [usize]>,
    pub metrics: Option<&'a [NodeMetrics]>,
}

const NODE_METRIC_KEYS: [&str; 7] = [
    "degree",
    "strength",
    "strength_per_edge",
    "clustering",
    "betweenness",
    "participation",
    "xi",
];

fn metric_cells(m: &NodeMetrics) -> [Option<f64>; 7] {
    [
        Some(m.degree as f64),
        Some(m.strength),
        m.strength_per_edge,
        Some(m.clustering),
        Some(m.betweenness),
        Some(m.participation),
        m.xi,
    ]
}

fn xml_escape(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

pub fn write_graphml<W: Write>(mut out: W, net: &TopicNetwork, ann: GraphAnnotations<'_>) -> Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
    for (id, ty) in [("window_start", "string"), ("window_end", "string"), ("article_count", "long")] {
        writeln!(out, r#"  <key id="{id}" for="graph" attr.name="{id}" attr.type="{ty}"/>"#)?;
    }
    writeln!(out, r#"  <key id="prevalence" for="node" attr.name="prevalence" attr.type="double"/>"#)?;
    if ann.communities.is_some() {
        writeln!(out, r#"  <key id="community" for="node" attr.name="community" attr.type="int"/>"#)?;
    }
    if ann.metrics.is_some() {
        for key in NODE_METRIC_KEYS {
            writeln!(out, r#"  <key id="{key}" for="node" attr.name="{key}" attr.type="double"/>"#)?;
        }
    }
    writeln!(out, r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#)?;
    writeln!(out, r#"  <key id="p_value" for="edge" attr.name="p_value" attr.type="double"/>"#)?;
    writeln!(out, r#"  <graph id="topics" edgedefault="undirected">"#)?;
    writeln!(out, r#"    <data key="window_start">{}</data>"#, net.window.start)?;
    writeln!(out, r#"    <data key="window_end">{}</data>"#, net.window.end)?;
    writeln!(out, r#"    <data key="article_count">{}</data>"#, net.article_count)?;
    for (i, topic) in net.topics.iter().enumerate() {
        writeln!(out, r#"    <node id="{}">"#, xml_escape(topic))?;
        writeln!(out, r#"      <data key="prevalence">{}</data>"#, net.node_prevalence[i])?;
        if let Some(c) = ann.communities {
            writeln!(out, r#"      <data key="community">{}</data>"#, c[i])?;
        }
        if let Some(m) = ann.metrics {
            for (key, v) in NODE_METRIC_KEYS.iter().zip(metric_cells(&m[i])) {
                if let Some(v) = v {
                    writeln!(out, r#"      <data key="{key}">{v}</data>"#)?;
                }
            }
        }
        writeln!(out, "    </node>")?;
    }
    for (i, j, w) in net.graph.edges() {
        writeln!(
            out,
            r#"    <edge source="{}" target="{}">"#,
            xml_escape(&net.topics[i]),
            xml_escape(&net.topics[j])
        )?;
        writeln!(out, r#"      <data key="weight">{w}</data>"#)?;
        if let Some(p) = net.p_value(i, j) {
            writeln!(out, r#"      <data key="p_value">{p}</data>"#)?;
        }
        writeln!(out, "    </edge>")?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    Ok(())
}

/// A network read back from an export, with any community labels found.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedNetwork {
    pub network: TopicNetwork,
    pub communities: Option<Vec<usize>>,
}

fn network_shell(topics: Vec<String>, prevalence: Vec<f64>, window: MonthRange, article_count: usize) -> TopicNetwork {
    let n = topics.len();
    TopicNetwork {
        graph: WeightedGraph::new(n),
        absent: prevalence.iter().map(|&p| p == 0.0).collect(),
        node_prevalence: prevalence,
        topics,
        window,
        article_count,
        edge_p_values: BTreeMap::new(),
        screening: EdgeScreening::default(),
    }
}

fn graphml_err(msg: impl Into<String>) -> Error {
    Error::GraphMl(msg.into())
}

pub fn read_graphml<R: BufRead>(source: R) -> Result<ImportedNetwork> {
    #[derive(Default)]
    struct PendingEdge {
        source: String,
        target: String,
        weight: Option<f64>,
        p: Option<f64>,
    }
    enum Owner {
        Graph,
        Node(usize),
        Edge,
    }

    let mut reader = Reader::from_reader(source);
    let mut buf = Vec::new();
    let mut topics: Vec<String> = Vec::new();
    let mut prevalence: Vec<f64> = Vec::new();
    let mut communities: Vec<Option<usize>> = Vec::new();
    let mut graph_data: HashMap<String, String> = HashMap::new();
    let mut edges: Vec<PendingEdge> = Vec::new();
    let mut owner = Owner::Graph;
    let mut data_key: Option<String> = None;
    let mut text = String::new();

    let attr = |e: &quick_xml::events::BytesStart<'_>, name: &[u8]| -> Result<Option<String>> {
        for a in e.attributes() {
            let a = a.map_err(|e| graphml_err(e.to_string()))?;
            if a.key.as_ref() == name {
                let v = a.unescape_value().map_err(|e| graphml_err(e.to_string()))?;
                return Ok(Some(v.into_owned()));
            }
        }
        Ok(None)
    };

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| graphml_err(e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"node" => {
                        let id = attr(e, b"id")?.ok_or_else(|| graphml_err("node without id"))?;
                        topics.push(id);
                        prevalence.push(0.0);
                        communities.push(None);
                        owner = Owner::Node(topics.len() - 1);
                    }
                    b"edge" => {
                        edges.push(PendingEdge {
                            source: attr(e, b"source")?.ok_or_else(|| graphml_err("edge without source"))?,
                            target: attr(e, b"target")?.ok_or_else(|| graphml_err("edge without target"))?,
                            ..PendingEdge::default()
                        });
                        owner = Owner::Edge;
                    }
                    b"data" if !empty => {
                        data_key = attr(e, b"key")?;
                        text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(ref t) if data_key.is_some() => {
                text.push_str(&t.decode().map_err(|e| graphml_err(e.to_string()))?);
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"data" => {
                    let key = data_key.take().unwrap_or_default();
                    let value = text.trim().to_string();
                    let num = || -> Result<f64> {
                        value
                            .parse()
                            .map_err(|_| graphml_err(format!("bad number `{value}` for `{key}`")))
                    };
                    match owner {
                        Owner::Graph => {
                            graph_data.insert(key.clone(), value.clone());
                        }
                        Owner::Node(i) => match key.as_str() {
                            "prevalence" => prevalence[i] = num()?,
                            "community" => {
                                communities[i] = Some(
                                    value
                                        .parse()
                                        .map_err(|_| graphml_err(format!("bad community `{value}`")))?,
                                )
                            }
                            _ => {}
                        },
                        Owner::Edge => {
                            let edge = edges.last_mut().expect("inside an edge");
                            match key.as_str() {
                                "weight" => edge.weight = Some(num()?),
                                "p_value" => edge.p = Some(num()?),
                                _ => {}
                            }
                        }
                    }
                }
                b"node" | b"edge" => owner = Owner::Graph,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    let window = match (graph_data.get("window_start"), graph_data.get("window_end")) {
        (Some(a), Some(b)) => MonthRange::new(a.parse()?, b.parse()?)?,
        _ => return Err(graphml_err("missing window_start/window_end graph data")),
    };
    let article_count = graph_data
        .get("article_count")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    let index: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut resolved = Vec::with_capacity(edges.len());
    for e in &edges {
        let i = *index
            .get(e.source.as_str())
            .ok_or_else(|| graphml_err(format!("edge references unknown node `{}`", e.source)))?;
        let j = *index
            .get(e.target.as_str())
            .ok_or_else(|| graphml_err(format!("edge references unknown node `{}`", e.target)))?;
        let w = e.weight.ok_or_else(|| graphml_err("edge without weight"))?;
        resolved.push((i, j, w, e.p));
    }
    let communities = if communities.iter().all(Option::is_some) && !communities.is_empty() {
        Some(communities.into_iter().map(Option::unwrap).collect())
    } else {
        None
    };
    let mut network = network_shell(topics, prevalence, window, article_count);
    for (i, j, w, p) in resolved {
        network.graph.set_weight(i, j, w);
        if let Some(p) = p {
            network.edge_p_values.insert((i.min(j), i.max(j)), p);
        }
    }
    network.screening.retained = network.graph.edge_count();
    Ok(ImportedNetwork { network, communities })
}

/// Edge list `topic_a, topic_b, phi, p_value` with `topic_a < topic_b`,
/// sorted by `(topic_a, topic_b)`.
pub fn write_edge_csv<W: Write>(out: W, net: &TopicNetwork) -> Result<()> {
    let mut rows: Vec<(&str, &str, f64, Option<f64>)> = net
        .graph
        .edges()
        .into_iter()
        .map(|(i, j, w)| {
            let (a, b) = (net.topics[i].as_str(), net.topics[j].as_str());
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            (a, b, w, net.p_value(i, j))
        })
        .collect();
    rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic_a", "topic_b", "phi", "p_value"])?;
    for (a, b, phi, p) in rows {
        w.write_record([a, b, &phi.to_string(), &fmt_opt(p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list onto the node set of `topics`.
pub fn read_edge_csv<R: Read>(source: R, topics: &[String]) -> Result<(WeightedGraph, EdgePValues)> {
    let index: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut graph = WeightedGraph::new(topics.len());
    let mut p_values = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(source);
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |msg: String| Error::Parse { line: line + 2, message: msg };
        let lookup = |k: usize| -> Result<usize> {
            let name = row.get(k).unwrap_or("");
            index.get(name).copied().ok_or_else(|| bad(format!("unknown topic `{name}`")))
        };
        let (i, j) = (lookup(0)?, lookup(1)?);
        let phi: f64 = row
            .get(2)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("bad phi".into()))?;
        graph.set_weight(i, j, phi);
        if let Some(p) = parse_opt(row.get(3).unwrap_or(""))? {
            p_values.insert((i.min(j), i.max(j)), p);
        }
    }
    Ok((graph, p_values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonNode {
    pub id: String,
    pub prevalence: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub community: Option<usize>,
    #[serde(flatten, skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<NodeMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonEdge {
    pub source: String,
    pub target: String,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonGraph {
    pub window: MonthRange,
    pub article_count: usize,
    pub nodes: Vec<JsonNode>,
    pub edges: Vec<JsonEdge>,
}

pub fn to_json_graph(net: &TopicNetwork, ann: GraphAnnotations<'_>) -> JsonGraph {
    JsonGraph {
        window: net.window,
        article_count: net.article_count,
        nodes: net
            .topics
            .iter()
            .enumerate()
            .map(|(i, t)| JsonNode {
                id: t.clone(),
                prevalence: net.node_prevalence[i],
                community: ann.communities.map(|c| c[i]),
                metrics: ann.metrics.map(|m| m[i]),
            })
            .collect(),
        edges: net
            .graph
            .edges()
            .into_iter()
            .map(|(i, j, w)| JsonEdge {
                source: net.topics[i].clone(),
                target: net.topics[j].clone(),
                weight: w,
                p_value: net.p_value(i, j),
            })
            .collect(),
    }
}

pub fn from_json_graph(doc: &JsonGraph) -> Result<ImportedNetwork> {
    let topics: Vec<String> = doc.nodes.iter().map(|n| n.id.clone()).collect();
    let prevalence = doc.nodes.iter().map(|n| n.prevalence).collect();
    let index: HashMap<&str, usize> = topics.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut network = network_shell(topics.clone(), prevalence, doc.window, doc.article_count);
    for e in &doc.edges {
        let find = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("edge references unknown node `{name}`")))
        };
        let (i, j) = (find(&e.source)?, find(&e.target)?);
        network.graph.set_weight(i, j, e.weight);
        if let Some(p) = e.p_value {
            network.edge_p_values.insert((i.min(j), i.max(j)), p);
        }
    }
    network.screening.retained = network.graph.edge_count();
    let communities = doc.nodes.iter().map(|n| n.community).collect::<Option<Vec<_>>>();
    Ok(ImportedNetwork { network, communities })
}

pub fn write_json_graph<W: Write>(out: W, net: &TopicNetwork, ann: GraphAnnotations<'_>) -> Result<()> {
    write_json(out, &to_json_graph(net, ann))
}

pub fn read_json_graph<R: Read>(source: R) -> Result<ImportedNetwork> {
    let doc: JsonGraph = serde_json::from_reader(source)?;
    from_json_graph(&doc)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads a network from GraphML or JSON, chosen by file extension.
pub fn read_network_file(path: &Path) -> Result<ImportedNetwork> {
    let reader = open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json_graph(reader),
        _ => read_graphml(reader),
    }
}

pub const EXPORT_FORMATS: [&str; 3] = ["graphml", "json", "csv"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Json,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "json" => Ok(ExportFormat::Json),
            "csv" => Ok(ExportFormat::Csv),
            _ => Err(Error::UnknownFormat {
                format: s.to_string(),
                supported: EXPORT_FORMATS.to_vec(),
            }),
        }
    }
}

/// Writes `net` in `format`. The CSV format writes the edge list to `path`
/// and the node table next to it as `<stem>_nodes.csv`.
pub fn export_graph(
    net: &TopicNetwork,
    ann: GraphAnnotations<'_>,
    format: ExportFormat,
    path: &Path,
) -> Result<()> {
    match format {
        ExportFormat::GraphMl => write_graphml(create(path)?, net, ann),
        ExportFormat::Json => write_json_graph(create(path)?, net, ann),
        ExportFormat::Csv => {
            write_edge_csv(create(path)?, net)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("network");
            let nodes = path.with_file_name(format!("{stem}_nodes.csv"));
            let metrics = ann.metrics.map(<[NodeMetrics]>::to_vec);
            write_metrics_csv(create(&nodes)?, &net.topics, &net.node_prevalence, ann.communities, metrics.as_deref())
        }
    }
}

pub fn write_vocabulary_csv<W: Write>(out: W, vocab: &TopicVocabulary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "prevalence"])?;
    for (t, p) in vocab.topics.iter().zip(&vocab.prevalence) {
        w.write_record([t.as_str(), &p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per topic: prevalence, community (when known) and every node
/// measure.
pub fn write_metrics_csv<W: Write>(
    out: W,
    topics: &[String],
    prevalence: &[f64],
    communities: Option<&[usize]>,
    metrics: Option<&[NodeMetrics]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["topic", "prevalence", "community"];
    header.extend(NODE_METRIC_KEYS);
    w.write_record(&header)?;
    for (i, t) in topics.iter().enumerate() {
        let mut row = vec![t.clone(), prevalence[i].to_string()];
        row.push(communities.map(|c| c[i].to_string()).unwrap_or_default());
        match metrics {
            Some(m) => row.extend(metric_cells(&m[i]).iter().map(|v| fmt_opt(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), NODE_METRIC_KEYS.len())),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub topics: Vec<String>,
    pub prevalence: Vec<f64>,
    pub communities: Option<Vec<usize>>,
    pub metrics: Vec<NodeMetrics>,
}

pub fn read_metrics_csv<R: Read>(source: R) -> Result<MetricTable> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut table = MetricTable {
        topics: Vec::new(),
        prevalence: Vec::new(),
        communities: Some(Vec::new()),
        metrics: Vec::new(),
    };
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let cell = |k: usize| -> Result<Option<f64>> {
            parse_opt(row.get(k).unwrap_or("")).map_err(|e| Error::Parse {
                line: line + 2,
                message: e.to_string(),
            })
        };
        let need = |k: usize| -> Result<f64> {
            cell(k)?.ok_or_else(|| Error::Parse {
                line: line + 2,
                message: format!("missing value in column {}", k + 1),
            })
        };
        table.topics.push(row.get(0).unwrap_or("").to_string());
        table.prevalence.push(need(1)?);
        match (cell(2)?, table.communities.as_mut()) {
            (Some(c), Some(cs)) => cs.push(c as usize),
            _ => table.communities = None,
        }
        table.metrics.push(NodeMetrics {
            degree: need(3)? as usize,
            strength: need(4)?,
            strength_per_edge: cell(5)?,
            clustering: need(6)?,
            betweenness: need(7)?,
            participation: need(8)?,
            xi: cell(9)?,
        });
    }
    Ok(table)
}

pub fn write_global_json<W: Write>(out: W, global: &GlobalMetrics) -> Result<()> {
    write_json(out, global)
}

pub fn write_partition_csv<W: Write>(out: W, topics: &[String], assignment: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "community_label"])?;
    for (t, c) in topics.iter().zip(assignment) {
        w.write_record([t.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Community labels in the order of `topics`.
pub fn read_partition_csv<R: Read>(source: R, topics: &[String]) -> Result<Vec<usize>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut labels: HashMap<String, usize> = HashMap::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let label = row.get(1).unwrap_or("").parse().map_err(|_| Error::Parse {
            line: line + 2,
            message: "bad community label".into(),
        })?;
        labels.insert(row.get(0).unwrap_or("").to_string(), label);
    }
    topics
        .iter()
        .map(|t| {
            labels
                .get(t)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("partition has no label for `{t}`")))
        })
        .collect()
}

/// Dense matrix with a header row and a leading topic column.
pub fn write_agreement_csv<W: Write>(out: W, topics: &[String], matrix: &AgreementMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["topic".to_string()];
    header.extend(topics.iter().cloned());
    w.write_record(&header)?;
    for (i, t) in topics.iter().enumerate() {
        let mut row = vec![t.clone()];
        row.extend(matrix.row(i).iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: `topic, metric, central_month, value`.
pub fn write_series_csv<W: Write>(out: W, dynamics: &DynamicsResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "metric", "central_month", "value"])?;
    for s in &dynamics.series {
        for (spec, v) in dynamics.windows.iter().zip(&s.values) {
            w.write_record([
                s.topic.as_str(),
                s.metric.name(),
                &spec.central_month.to_string(),
                &fmt_opt(*v),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `topic, metric, static_value, beta, delta`.
pub fn write_slopes_csv<W: Write>(out: W, dynamics: &DynamicsResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "metric", "static_value", "beta", "delta"])?;
    for s in &dynamics.series {
        w.write_record([
            s.topic.as_str(),
            s.metric.name(),
            &fmt_opt(s.static_value),
            &fmt_opt(s.slope.map(|f| f.beta)),
            &fmt_opt(s.slope.map(|f| f.delta)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_omega_csv<W: Write>(out: W, dynamics: &DynamicsResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic", "omega"])?;
    for (i, t) in dynamics.topics.iter().enumerate() {
        if dynamics.excluded[i] {
            continue;
        }
        w.write_record([t.as_str(), &fmt_opt(dynamics.omega.omega[i])])?;
    }
    w.flush()?;
    Ok(())
}

/// Slope deltas keyed by topic and metric, as read from a slopes table.
pub type SlopeMap = BTreeMap<(String, NodeMetric), SlopeFit>;

pub fn read_slopes_csv<R: Read>(source: R) -> Result<SlopeMap> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = BTreeMap::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let metric: NodeMetric = row.get(1).unwrap_or("").parse().map_err(|e: Error| Error::Parse {
            line: line + 2,
            message: e.to_string(),
        })?;
        let beta = parse_opt(row.get(3).unwrap_or(""))?;
        let delta = parse_opt(row.get(4).unwrap_or(""))?;
        if let (Some(beta), Some(delta)) = (beta, delta) {
            out.insert(
                (row.get(0).unwrap_or("").to_string(), metric),
                SlopeFit {
                    beta,
                    delta,
                    n_points: 0,
                },
            );
        }
    }
    Ok(out)
}

pub fn read_omega_csv<R: Read>(source: R) -> Result<Vec<(String, Option<f64>)>> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        out.push((row.get(0).unwrap_or("").to_string(), parse_opt(row.get(1).unwrap_or(""))?));
    }
    Ok(out)
}
