//! Ground truths, baselines and the precision/recall evaluation of the
//! full pipeline.
//!
//! Precision divides the shared edge count by the ground truth's edge count
//! and recall by the generated path's, in that (unconventional) orientation.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AddressBook, DocId, Trajectory};
use crate::llm::{assemble_prompt, augment_query, generate, LlmProvider, Query};
use crate::retrieval::{retrieve, EmbeddingProvider, KnowledgeBase, RetrievalQuery};
use crate::roadnet::{
    shortest_path, FuelParams, NodeId, Path, Poi, RoadNetError, RoadNetwork, ScenicParams, WeightProfile,
};
use crate::validate::{fallback_report, validate_or_fallback};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot score an empty path")]
    EmptyPath,
    #[error(transparent)]
    Route(#[from] RoadNetError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What the ground truth optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Scenic,
    Fuel,
    Fastest,
    Shortest,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Scenic, Task::Fuel, Task::Fastest, Task::Shortest];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Scenic => "scenic",
            Task::Fuel => "fuel",
            Task::Fastest => "fastest",
            Task::Shortest => "shortest",
        }
    }

    /// The constraint phrase put into the query.
    pub fn constraints(self) -> &'static str {
        match self {
            Task::Scenic => "most scenic",
            Task::Fuel => "most fuel-efficient",
            Task::Fastest => "fastest",
            Task::Shortest => "shortest",
        }
    }

    pub fn profile(self, params: &TaskParams) -> WeightProfile {
        match self {
            Task::Scenic => WeightProfile::Scenic(params.scenic),
            Task::Fuel => WeightProfile::Fuel(params.fuel),
            Task::Fastest => WeightProfile::TravelTime,
            Task::Shortest => WeightProfile::Length,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown task {s:?}; expected scenic, fuel, fastest or shortest"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskParams {
    pub scenic: ScenicParams,
    pub fuel: FuelParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSample {
    pub query: Query,
    pub ground_truth: Path,
    pub task: Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
}

fn shared(gt: &Path, generated: &Path) -> Result<(usize, usize, usize), EvalError> {
    let (g, p) = (gt.edge_set(), generated.edge_set());
    if g.is_empty() || p.is_empty() {
        return Err(EvalError::EmptyPath);
    }
    Ok((g.intersection(&p).count(), g.len(), p.len()))
}

/// |gt ∩ generated| / |gt| over edge sets.
pub fn precision(gt: &Path, generated: &Path) -> Result<f64, EvalError> {
    let (both, g, _) = shared(gt, generated)?;
    Ok(both as f64 / g as f64)
}

/// |gt ∩ generated| / |generated| over edge sets.
pub fn recall(gt: &Path, generated: &Path) -> Result<f64, EvalError> {
    let (both, _, p) = shared(gt, generated)?;
    Ok(both as f64 / p as f64)
}

pub fn metrics(gt: &Path, generated: &Path) -> Result<Metrics, EvalError> {
    Ok(Metrics {
        precision: precision(gt, generated)?,
        recall: recall(gt, generated)?,
    })
}

pub fn make_ground_truth(
    network: &RoadNetwork,
    pois: &[Poi],
    od: (NodeId, NodeId),
    task: Task,
    params: &TaskParams,
) -> Result<EvalSample, RoadNetError> {
    let ground_truth = shortest_path(network, od.0, od.1, &task.profile(params), pois)?;
    let query = Query::new(od.0, od.1, task.constraints()).map_err(|_| RoadNetError::SameEndpoints(od.0))?;
    Ok(EvalSample {
        query,
        ground_truth,
        task,
    })
}

/// Samples for every OD pair that has a route; unreachable pairs are
/// returned separately.
pub fn make_samples(
    network: &RoadNetwork,
    pois: &[Poi],
    ods: &[(NodeId, NodeId)],
    task: Task,
    params: &TaskParams,
) -> (Vec<EvalSample>, Vec<(NodeId, NodeId)>) {
    let results: Vec<_> = ods
        .par_iter()
        .map(|&od| (od, make_ground_truth(network, pois, od, task, params)))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (od, r) in results {
        match r {
            Ok(s) => samples.push(s),
            Err(_) => skipped.push(od),
        }
    }
    (samples, skipped)
}

/// `count` distinct connected OD pairs drawn uniformly with a seeded
/// generator.
pub fn sample_connected_pairs(network: &RoadNetwork, count: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    let nodes = network.node_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let max_attempts = count.saturating_mul(50).max(1000);
    for _ in 0..max_attempts {
        if out.len() == count || nodes.len() < 2 {
            break;
        }
        let o = nodes[rng.random_range(0..nodes.len())];
        let d = nodes[rng.random_range(0..nodes.len())];
        if o == d || seen.contains(&(o, d)) {
            continue;
        }
        seen.insert((o, d));
        if shortest_path(network, o, d, &WeightProfile::Length, &[]).is_ok() {
            out.push((o, d));
        }
    }
    out
}

/// OD pairs of (held-out) trajectories, first occurrence order, skipping
/// trajectories that do not walk.
pub fn trajectory_ods(network: &RoadNetwork, trajectories: &[Trajectory]) -> Vec<(NodeId, NodeId)> {
    let mut seen = BTreeSet::new();
    trajectories
        .iter()
        .filter_map(|t| network.walk_unanchored(&t.edges).ok())
        .map(|p| (p.origin, p.destination))
        .filter(|od| od.0 != od.1 && seen.insert(*od))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    /// Dijkstra on edge length.
    Sp,
    /// Dijkstra on travel time.
    Fp,
}

pub fn baseline_path(network: &RoadNetwork, query: &Query, which: Baseline) -> Result<Path, RoadNetError> {
    let profile = match which {
        Baseline::Sp => WeightProfile::Length,
        Baseline::Fp => WeightProfile::TravelTime,
    };
    shortest_path(network, query.origin, query.destination, &profile, &[])
}

pub fn run_baseline(network: &RoadNetwork, sample: &EvalSample, which: Baseline) -> Result<Metrics, EvalError> {
    metrics(&sample.ground_truth, &baseline_path(network, &sample.query, which)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub retrieval_ms: f64,
    pub inference_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub dataset: String,
    pub k: usize,
    pub k_prime: usize,
    /// Prompt without retrieved context.
    pub base_llm: bool,
    /// Worker threads.
    pub jobs: usize,
    /// Cap on concurrent provider calls.
    pub max_in_flight: usize,
}

impl EvalConfig {
    pub fn system_label(&self) -> String {
        if self.base_llm {
            "Base LLM".to_string()
        } else {
            format!("PathGPT@{}", self.k)
        }
    }

    /// Stem of the report files: `eval_{task}_k{k}` or `eval_{task}_base`.
    pub fn file_stem(&self, task: Task) -> String {
        if self.base_llm {
            format!("{task}_base")
        } else {
            format!("{task}_k{}", self.k)
        }
    }
}

/// Per-sample outcome. Contains nothing timing-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub origin: NodeId,
    pub destination: NodeId,
    pub retrieved: Vec<DocId>,
    pub route_line: Option<String>,
    pub fallback_used: bool,
    pub reason: Option<String>,
    pub final_path: Vec<crate::roadnet::EdgeId>,
    /// Absent when the sample failed outright.
    pub metrics: Option<Metrics>,
    pub sp: Option<Metrics>,
    pub fp: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemMeans {
    pub system: String,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub task: Task,
    pub system: String,
    pub k: usize,
    pub base_llm: bool,
    pub sample_count: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub fallback_count: usize,
    /// The evaluated system first, then the SP and FP baselines.
    pub means: Vec<SystemMeans>,
    pub samples: Vec<SampleRecord>,
    /// Timing is reported separately; see [`LatencyReport`].
    #[serde(skip)]
    pub latency: LatencyReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub dataset: String,
    pub task: String,
    pub system: String,
    pub mean: LatencyBreakdown,
    pub samples: Vec<LatencyBreakdown>,
}

impl EvalReport {
    pub fn system_means(&self) -> &SystemMeans {
        &self.means[0]
    }

    pub fn fallback_rate(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.fallback_count as f64 / self.evaluated as f64
        }
    }

    /// Precision % / Recall % table, one row per method.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "dataset: {}  task: {}  samples: {} (evaluated {}, skipped {}, fallbacks {})\n",
            self.dataset, self.task, self.sample_count, self.evaluated, self.skipped, self.fallback_count
        );
        out.push_str(&format!("{:<12} {:>12} {:>12}\n", "Method", "Precision %", "Recall %"));
        let mut rows: Vec<&SystemMeans> = self.means.iter().skip(1).collect();
        rows.push(&self.means[0]);
        for m in rows {
            out.push_str(&format!(
                "{:<12} {:>12.2} {:>12.2}\n",
                m.system,
                m.precision * 100.0,
                m.recall * 100.0
            ));
        }
        out
    }
}

fn mean<'a>(system: &str, values: impl Iterator<Item = &'a Metrics>) -> SystemMeans {
    let (mut p, mut r, mut n) = (0.0, 0.0, 0usize);
    for m in values {
        p += m.precision;
        r += m.recall;
        n += 1;
    }
    let d = n.max(1) as f64;
    SystemMeans {
        system: system.to_string(),
        precision: p / d,
        recall: r / d,
    }
}

/// What the pipeline needs besides the samples.
pub struct Pipeline<'a> {
    pub kb: &'a KnowledgeBase,
    pub network: &'a RoadNetwork,
    pub addresses: &'a AddressBook,
    pub embedder: &'a dyn EmbeddingProvider,
    pub provider: &'a dyn LlmProvider,
}

/// Runs retrieval (unless in base-LLM mode), generation and validation for
/// one query.
pub fn recommend(
    pipeline: &Pipeline<'_>,
    query: &Query,
    k: usize,
    k_prime: usize,
    base_llm: bool,
) -> Result<Recommendation, RoadNetError> {
    let augmented = augment_query(query, pipeline.network, pipeline.addresses);
    let mut latency = LatencyBreakdown::default();
    let mut retrieved = Vec::new();
    let mut texts: Vec<&str> = Vec::new();
    if !base_llm {
        let rq = RetrievalQuery {
            lexical: augmented.body.clone(),
            semantic: augmented.text(),
        };
        match retrieve(pipeline.kb, pipeline.embedder, &rq, k_prime, k) {
            Ok(r) => {
                latency.retrieval_ms = r.timings.total().as_secs_f64() * 1000.0;
                retrieved = r.result.doc_ids();
                texts = retrieved
                    .iter()
                    .filter_map(|d| pipeline.kb.document(*d))
                    .map(|d| d.text.as_str())
                    .collect();
            }
            Err(e) => {
                let report = fallback_report(pipeline.network, query, format!("retrieval failed: {e}"))?;
                return Ok(Recommendation { retrieved, generation: None, report, latency });
            }
        }
    }
    let prompt = assemble_prompt(&augmented, &texts);
    match generate(pipeline.provider, &prompt) {
        Ok(generation) => {
            latency.inference_ms = generation.provider_latency_ms;
            let report = validate_or_fallback(&generation, pipeline.network, query)?;
            Ok(Recommendation {
                retrieved,
                generation: Some(generation),
                report,
                latency,
            })
        }
        Err(e) => {
            let report = fallback_report(pipeline.network, query, format!("generation failed: {e}"))?;
            Ok(Recommendation { retrieved, generation: None, report, latency })
        }
    }
}

#[derive(Debug, Clone)]
pub struct Recommendation {
    pub retrieved: Vec<DocId>,
    pub generation: Option<crate::llm::GenerationResult>,
    pub report: crate::validate::ValidationReport,
    pub latency: LatencyBreakdown,
}

fn evaluate_one(
    pipeline: &Pipeline<'_>,
    index: usize,
    sample: &EvalSample,
    config: &EvalConfig,
) -> (SampleRecord, LatencyBreakdown) {
    let q = &sample.query;
    let mut record = SampleRecord {
        index,
        origin: q.origin,
        destination: q.destination,
        retrieved: Vec::new(),
        route_line: None,
        fallback_used: false,
        reason: None,
        final_path: Vec::new(),
        metrics: None,
        sp: run_baseline(pipeline.network, sample, Baseline::Sp).ok(),
        fp: run_baseline(pipeline.network, sample, Baseline::Fp).ok(),
        error: None,
    };
    match recommend(pipeline, q, config.k, config.k_prime, config.base_llm) {
        Ok(rec) => {
            record.retrieved = rec.retrieved;
            record.route_line = rec.generation.and_then(|g| g.route_line);
            record.fallback_used = rec.report.fallback_used;
            record.reason = rec.report.reason.clone();
            match metrics(&sample.ground_truth, &rec.report.final_path) {
                Ok(m) => record.metrics = Some(m),
                Err(e) => record.error = Some(e.to_string()),
            }
            record.final_path = rec.report.final_path.edges;
            (record, rec.latency)
        }
        Err(e) => {
            record.error = Some(e.to_string());
            (record, LatencyBreakdown::default())
        }
    }
}

/// Evaluates every sample, in parallel on `config.jobs` threads (capped by
/// `config.max_in_flight`). Failures are recorded per sample. Output order
/// is sample order regardless of scheduling.
pub fn evaluate_system(
    pipeline: &Pipeline<'_>,
    samples: &[EvalSample],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if config.k == 0 || config.k_prime == 0 {
        return Err(EvalError::InvalidConfig("k and k_prime must be at least 1".into()));
    }
    let task = samples.first().map(|s| s.task).unwrap_or(Task::Fastest);
    if samples.iter().any(|s| s.task != task) {
        return Err(EvalError::InvalidConfig("samples mix several tasks".into()));
    }
    let threads = config.jobs.min(config.max_in_flight).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let outcomes: Vec<(SampleRecord, LatencyBreakdown)> = pool.install(|| {
        samples
            .par_iter()
            .enumerate()
            .map(|(i, s)| evaluate_one(pipeline, i, s, config))
            .collect()
    });

    let (records, latencies): (Vec<SampleRecord>, Vec<LatencyBreakdown>) = outcomes.into_iter().unzip();
    let scored: Vec<&SampleRecord> = records.iter().filter(|r| r.metrics.is_some()).collect();
    let system = config.system_label();
    let means = vec![
        mean(&system, scored.iter().filter_map(|r| r.metrics.as_ref())),
        mean("SP", scored.iter().filter_map(|r| r.sp.as_ref())),
        mean("FP", scored.iter().filter_map(|r| r.fp.as_ref())),
    ];
    let n = latencies.len().max(1) as f64;
    let latency = LatencyReport {
        dataset: config.dataset.clone(),
        task: task.to_string(),
        system: system.clone(),
        mean: LatencyBreakdown {
            retrieval_ms: latencies.iter().map(|l| l.retrieval_ms).sum::<f64>() / n,
            inference_ms: latencies.iter().map(|l| l.inference_ms).sum::<f64>() / n,
        },
        samples: latencies,
    };
    Ok(EvalReport {
        dataset: config.dataset.clone(),
        task,
        system,
        k: config.k,
        base_llm: config.base_llm,
        sample_count: samples.len(),
        evaluated: scored.len(),
        skipped: records.len() - scored.len(),
        fallback_count: scored.iter().filter(|r| r.fallback_used).count(),
        means,
        samples: records,
        latency,
    })
}

/// One JSON sample per line.
pub fn write_samples(samples: &[EvalSample], mut out: impl Write) -> Result<(), EvalError> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_samples(input: impl BufRead) -> Result<Vec<EvalSample>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roadnet::fixtures::{edge, network};
    use crate::roadnet::{Coord, EdgeId, PoiCategory};
    use crate::synth::grid_network;
    use proptest::prelude::*;

    fn path(ids: &[u64]) -> Path {
        Path {
            origin: NodeId(0),
            destination: NodeId(1),
            edges: ids.iter().map(|&i| EdgeId(i)).collect(),
        }
    }

    #[test]
    fn metric_examples() {
        let gt = path(&[1, 2, 3, 4]);
        let generated = path(&[2, 3, 5]);
        assert!((precision(&gt, &generated).unwrap() - 0.5).abs() < 1e-12);
        assert!((recall(&gt, &generated).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(metrics(&gt, &gt).unwrap(), Metrics { precision: 1.0, recall: 1.0 });
        assert_eq!(metrics(&gt, &path(&[9])).unwrap(), Metrics { precision: 0.0, recall: 0.0 });
        let superset = path(&[1, 2, 3, 4, 5, 6]);
        assert_eq!(precision(&gt, &superset).unwrap(), 1.0);
        assert_eq!(recall(&gt, &superset).unwrap(), 4.0 / 6.0);
        assert!(matches!(precision(&gt, &path(&[])), Err(EvalError::EmptyPath)));
    }

    proptest! {
        #[test]
        fn metric_bounds(a in proptest::collection::vec(0u64..12, 1..8), b in proptest::collection::vec(0u64..12, 1..8)) {
            let (x, y) = (path(&a), path(&b));
            let m = metrics(&x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
            let equal = x.edge_set() == y.edge_set();
            prop_assert_eq!(m.precision == 1.0 && m.recall == 1.0, equal);
        }
    }

    /// Square 0-1-3 / 0-2-3 with a highway on the first side. The 0-2-3
    /// side is 30 m longer but node 2 sits next to a park.
    fn detour() -> (RoadNetwork, Vec<Poi>) {
        let mut highway = edge(1, 0, 1, 100.0, "Ring Expressway");
        highway.is_highway = true;
        let net = network(
            &[(0, 0.0, 0.0), (1, 0.0, 0.001), (2, 0.001, 0.0), (3, 0.001, 0.001)],
            vec![highway, edge(2, 1, 3, 100.0, "North Road"), edge(3, 0, 2, 115.0, "Park Lane"), edge(4, 2, 3, 115.0, "Park Lane")],
        );
        let pois = vec![Poi { id: 1, location: Coord::new(0.0011, 0.0), category: PoiCategory::Leisure }];
        (net, pois)
    }

    #[test]
    fn ground_truth_fixtures() {
        let (net, pois) = detour();
        let od = (NodeId(0), NodeId(3));
        let p = TaskParams::default();
        // Direct 0-1-3 costs 200. Via 2: 115 and 115 both touch node 2, so 0.3 × 230 = 69.
        let scenic = make_ground_truth(&net, &pois, od, Task::Scenic, &p).unwrap();
        assert_eq!(scenic.ground_truth.edges, vec![EdgeId(3), EdgeId(4)]);
        assert_eq!(scenic.query.constraints, "most scenic");
        let plain = make_ground_truth(&net, &[], od, Task::Scenic, &p).unwrap();
        assert_eq!(plain.ground_truth.edges, vec![EdgeId(1), EdgeId(2)]);
        // Fuel: 100 × 10 + 100 = 1100 against 230.
        let fuel = make_ground_truth(&net, &[], od, Task::Fuel, &p).unwrap();
        assert_eq!(fuel.ground_truth.edges, vec![EdgeId(3), EdgeId(4)]);
        assert_eq!(fuel.query.constraints, "most fuel-efficient");

        let sp = run_baseline(&net, &scenic, Baseline::Sp).unwrap();
        assert_eq!(sp, Metrics { precision: 0.0, recall: 0.0 });
        assert_eq!(run_baseline(&net, &plain, Baseline::Sp).unwrap(), Metrics { precision: 1.0, recall: 1.0 });
        let grid = grid_network(3, 3, 100.0);
        let s = make_ground_truth(&grid, &[], (NodeId(0), NodeId(1)), Task::Fuel, &p).unwrap();
        assert_eq!(run_baseline(&grid, &s, Baseline::Fp).unwrap(), Metrics { precision: 1.0, recall: 1.0 });
    }

    #[test]
    fn file_stems_and_labels() {
        let mut c = EvalConfig { dataset: "city".into(), k: 6, k_prime: 100, base_llm: false, jobs: 1, max_in_flight: 4 };
        assert_eq!(c.file_stem(Task::Scenic), "scenic_k6");
        assert_eq!(c.system_label(), "PathGPT@6");
        c.base_llm = true;
        assert_eq!(c.file_stem(Task::Fuel), "fuel_base");
        assert_eq!(c.system_label(), "Base LLM");
        assert_eq!("Fuel".parse::<Task>().unwrap(), Task::Fuel);
        assert!("speedy".parse::<Task>().is_err());
    }

    #[test]
    fn connected_pairs_are_seeded() {
        let g = grid_network(4, 4, 100.0);
        let a = sample_connected_pairs(&g, 10, 5);
        assert_eq!(a.len(), 10);
        assert_eq!(a, sample_connected_pairs(&g, 10, 5));
        assert!(a.iter().all(|(o, d)| o != d));
        let split = network(&[(1, 0.0, 0.0), (2, 0.0, 0.001), (3, 1.0, 1.0), (4, 1.0, 1.001)], vec![edge(1, 1, 2, 1.0, "A"), edge(2, 3, 4, 1.0, "B")]);
        let pairs = sample_connected_pairs(&split, 4, 1);
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|(o, d)| (o.0 <= 2) == (d.0 <= 2)));
    }

    #[test]
    fn sample_file_round_trip() {
        let g = grid_network(3, 3, 100.0);
        let (samples, skipped) = make_samples(&g, &[], &[(NodeId(0), NodeId(8)), (NodeId(2), NodeId(6))], Task::Shortest, &TaskParams::default());
        assert!(skipped.is_empty());
        let mut buf = Vec::new();
        write_samples(&samples, &mut buf).unwrap();
        assert_eq!(read_samples(buf.as_slice()).unwrap(), samples);
    }
}
