use std::path::Path;

use tempfile::tempdir;
use topiknet_core::corpus::write_corpus;
use topiknet_core::io;
use topiknet_core::pipeline::{run_pipeline, validate_manifest, RunConfig, ARTIFACTS, FAILURE_MARKER, MANIFEST_FILE};
use topiknet_core::synth::{generate_raw, topic_name, SynthSpec};
use topiknet_core::{Error, MonthRange};

fn write_synth_corpus(path: &Path) {
    let range = MonthRange::years(2008, 2017).unwrap();
    let spec = SynthSpec::equal_blocks(5, 20, 4000, range, 0.15, 0.04, 2);
    write_corpus(io::create(path).unwrap(), &generate_raw(&spec).unwrap()).unwrap();
}

fn quick_config(corpus: &Path, out: &Path) -> RunConfig {
    let mut c = RunConfig::new(corpus, MonthRange::years(2008, 2017).unwrap(), out);
    c.null_count = 10;
    c.louvain_iterations = 10;
    c.exclude = vec![topic_name(0)];
    c.seed = 99;
    c
}

#[test]
fn synthetic_run_writes_every_artifact_and_a_valid_manifest() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synth_corpus(&corpus);
    let out = dir.path().join("run");
    let manifest = run_pipeline(&quick_config(&corpus, &out)).unwrap();
    for name in ARTIFACTS {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    assert!(!out.join(FAILURE_MARKER).exists());
    let doc: serde_json::Value = serde_json::from_reader(io::open(&out.join(MANIFEST_FILE)).unwrap()).unwrap();
    validate_manifest(&doc, &out).unwrap();
    assert_eq!(doc["config"]["k"], 100);
    assert_eq!(doc["config"]["half_width"], 6);
    assert_eq!(doc["seed"], 99);
    assert_eq!(manifest.stages.len(), 9);

    let analysis: serde_json::Value = serde_json::from_reader(io::open(&out.join("analysis.json")).unwrap()).unwrap();
    assert_eq!(analysis["excluded_topics"][0], topic_name(0));
    assert!(analysis["static_model"].is_object());
}

#[test]
fn manifest_validation_catches_missing_tunables() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synth_corpus(&corpus);
    let out = dir.path().join("run");
    run_pipeline(&quick_config(&corpus, &out)).unwrap();
    let mut doc: serde_json::Value = serde_json::from_reader(io::open(&out.join(MANIFEST_FILE)).unwrap()).unwrap();
    doc["config"].as_object_mut().unwrap().remove("tau");
    assert!(validate_manifest(&doc, &out).is_err());
}

#[test]
fn too_large_k_aborts_at_selection_and_leaves_a_marker() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synth_corpus(&corpus);
    let out = dir.path().join("run");
    let mut config = quick_config(&corpus, &out);
    config.k = 150;
    match run_pipeline(&config) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "select_top_k");
            assert!(matches!(*source, Error::NotEnoughCandidates { requested: 150, found: 100 }));
        }
        other => panic!("{other:?}"),
    }
    let marker = std::fs::read_to_string(out.join(FAILURE_MARKER)).unwrap();
    assert!(marker.contains("select_top_k"));
    let doc: serde_json::Value = serde_json::from_reader(io::open(&out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(doc["status"], "failed");
    assert_eq!(doc["failure"]["stage"], "select_top_k");
    validate_manifest(&doc, &out).unwrap();
}

#[test]
fn malformed_corpus_line_names_the_line() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        "{\"id\":\"a\",\"date\":\"2010-01\",\"abstract\":\"x\",\"keywords\":[]}\n{broken\n",
    )
    .unwrap();
    let err = run_pipeline(&quick_config(&corpus, &dir.path().join("run"))).unwrap_err();
    let Error::Stage { stage, source } = err else { panic!() };
    assert_eq!(stage, "ingest");
    assert!(matches!(*source, Error::Parse { line: 2, .. }));
}

#[test]
fn same_config_twice_gives_identical_artifacts() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    write_synth_corpus(&corpus);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_pipeline(&quick_config(&corpus, &a)).unwrap();
    run_pipeline(&quick_config(&corpus, &b)).unwrap();
    for name in ARTIFACTS.iter().filter(|n| **n != MANIFEST_FILE) {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
}
