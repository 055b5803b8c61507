use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use pathgpt::corpus::{build_corpus, render_document, AddressBook, Corpus, DocId, Trajectory};
use pathgpt::eval::{evaluate_system, make_samples, metrics, trajectory_ods, EvalConfig, Pipeline, Task, TaskParams};
use pathgpt::llm::{assemble_prompt, augment_query, generate, EchoMock, LlmError, LlmProvider, Message, Query};
use pathgpt::retrieval::{Bm25Params, HashEmbedder, KnowledgeBase};
use pathgpt::roadnet::{parse_network, EdgeId, NodeId, RoadNetwork};
use pathgpt::synth::{CityParams, SyntheticCity};
use pathgpt::validate::validate_or_fallback;

fn small_city() -> (SyntheticCity, Corpus) {
    let params = CityParams {
        od_pairs: 60,
        duplicates: 6,
        held_out: 15,
        ..Default::default()
    };
    let city = SyntheticCity::generate(&params, 11).unwrap();
    let corpus = build_corpus(&city.network, &city.trajectories, &city.addresses, &BTreeSet::new());
    (city, corpus)
}

#[test]
fn echo_of_each_document_resolves_to_its_paths() {
    let (city, corpus) = small_city();
    assert_eq!(corpus.documents.len(), 60);
    assert_eq!(corpus.skips.duplicate_od, 6);
    for (doc, record) in corpus.documents.iter().zip(&corpus.records) {
        for (constraint, expected) in [
            ("fastest", &record.fastest),
            ("shortest", &record.shortest),
            ("most scenic", &record.historical),
        ] {
            let q = Query::new(doc.origin, doc.destination, constraint).unwrap();
            let prompt = assemble_prompt(&augment_query(&q, &city.network, &city.addresses), &[doc.text.as_str()]);
            let g = generate(&EchoMock, &prompt).unwrap();
            let report = validate_or_fallback(&g, &city.network, &q).unwrap();
            assert!(!report.fallback_used, "doc {} {constraint}: {:?}", doc.doc_id, report.reason);
            assert_eq!(report.final_path.edge_set(), expected.edge_set(), "doc {} {constraint}", doc.doc_id);
        }
    }
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

fn golden_network() -> RoadNetwork {
    parse_network(&fs::read_to_string(golden("network.txt")).unwrap()).unwrap()
}

#[test]
fn golden_document_and_prompt() {
    let net = golden_network();
    let book = AddressBook::parse(&fs::read_to_string(golden("addresses.csv")).unwrap()).unwrap();
    // Drivers took the river road 1-4-3 instead of the direct 1-2-3.
    let trajectory = Trajectory::new(vec![EdgeId(3), EdgeId(4)]);
    let corpus = build_corpus(&net, &[trajectory], &book, &BTreeSet::new());
    let doc = render_document(&corpus.records[0], &net, DocId(0));
    check_golden("document.txt", &(doc.text.clone() + "\n"));

    let q = Query::new(NodeId(1), NodeId(3), "most scenic").unwrap();
    let prompt = assemble_prompt(&augment_query(&q, &net, &book), &[doc.text.as_str(), "Second context."]);
    check_golden("prompt.txt", &prompt.render());
}

#[test]
fn knowledge_base_files_are_reproducible() {
    let (_, corpus) = small_city();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let kb = KnowledgeBase::build(corpus.documents.clone(), Bm25Params::default(), &HashEmbedder::default()).unwrap();
        kb.save(dir.path()).unwrap();
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}

struct Mumble;

impl LlmProvider for Mumble {
    fn name(&self) -> &str {
        "mumble"
    }

    fn complete(&self, _: &[Message]) -> Result<String, LlmError> {
        Ok("Turn left somewhere, I suppose.".to_string())
    }
}

struct Broken;

impl LlmProvider for Broken {
    fn name(&self) -> &str {
        "broken"
    }

    fn complete(&self, _: &[Message]) -> Result<String, LlmError> {
        Err(LlmError::Transport {
            provider: "broken".into(),
            message: "connection refused".into(),
        })
    }
}

fn config(k: usize, base_llm: bool) -> EvalConfig {
    EvalConfig {
        dataset: "synthetic".into(),
        k,
        k_prime: 100,
        base_llm,
        jobs: 4,
        max_in_flight: 4,
    }
}

#[test]
fn unparseable_output_equals_fastest_baseline() {
    let (city, corpus) = small_city();
    let kb = KnowledgeBase::build(corpus.documents, Bm25Params::default(), &HashEmbedder::default()).unwrap();
    let ods = trajectory_ods(&city.network, &city.held_out);
    let (samples, _) = make_samples(&city.network, &city.pois, &ods, Task::Scenic, &TaskParams::default());
    for provider in [&Mumble as &dyn LlmProvider, &Broken] {
        let pipeline = Pipeline {
            kb: &kb,
            network: &city.network,
            addresses: &city.addresses,
            embedder: &HashEmbedder::default(),
            provider,
        };
        let report = evaluate_system(&pipeline, &samples, &config(9, true)).unwrap();
        assert_eq!(report.fallback_count, samples.len());
        assert_eq!(report.fallback_rate(), 1.0);
        let fp = &report.means[2];
        assert_eq!(fp.system, "FP");
        assert_eq!(report.system_means().precision, fp.precision);
        assert_eq!(report.system_means().recall, fp.recall);
    }
}

#[test]
fn report_invariants() {
    let (city, corpus) = small_city();
    let kb = KnowledgeBase::build(corpus.documents, Bm25Params::default(), &HashEmbedder::default()).unwrap();
    let ods = trajectory_ods(&city.network, &city.held_out);
    let (samples, _) = make_samples(&city.network, &city.pois, &ods, Task::Fuel, &TaskParams::default());
    let pipeline = Pipeline {
        kb: &kb,
        network: &city.network,
        addresses: &city.addresses,
        embedder: &HashEmbedder::default(),
        provider: &EchoMock,
    };
    let serial = evaluate_system(&pipeline, &samples, &EvalConfig { jobs: 1, ..config(6, false) }).unwrap();
    let parallel = evaluate_system(&pipeline, &samples, &config(6, false)).unwrap();
    // Timing differs between runs and is kept out of the serialized report.
    assert_eq!(serde_json::to_string(&serial).unwrap(), serde_json::to_string(&parallel).unwrap());

    let n = serial.evaluated as f64;
    let p: f64 = serial.samples.iter().filter_map(|s| s.metrics).map(|m| m.precision).sum::<f64>() / n;
    let r: f64 = serial.samples.iter().filter_map(|s| s.metrics).map(|m| m.recall).sum::<f64>() / n;
    assert!((serial.system_means().precision - p).abs() < 1e-12);
    assert!((serial.system_means().recall - r).abs() < 1e-12);
    for s in &serial.samples {
        assert_eq!(s.index, serial.samples.iter().position(|x| x == s).unwrap());
        if s.fallback_used {
            assert_eq!(s.metrics, s.fp, "sample {}", s.index);
        }
        assert!(s.retrieved.len() <= 6);
    }
    assert_eq!(serial.latency.samples.len(), samples.len());
    assert!(serial.latency.mean.retrieval_ms > 0.0);
}

#[test]
fn drivers_follow_scenic_roads_more_than_the_fastest_path() {
    let (city, corpus) = small_city();
    let params = TaskParams::default();
    let ods: Vec<(NodeId, NodeId)> = corpus.records.iter().map(|r| (r.origin, r.destination)).collect();
    let (samples, _) = make_samples(&city.network, &city.pois, &ods, Task::Scenic, &params);
    let (mut hist, mut fast) = (0.0, 0.0);
    for (s, r) in samples.iter().zip(&corpus.records) {
        hist += metrics(&s.ground_truth, &r.historical).unwrap().precision;
        fast += metrics(&s.ground_truth, &r.fastest).unwrap().precision;
    }
    assert!(hist > fast, "historical {hist} vs fastest {fast}");
}
