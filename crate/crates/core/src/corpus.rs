//! Knowledge-base construction: trajectories become path records (historical,
//! fastest, shortest) rendered as one natural-language document per
//! origin-destination pair.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadnet::{shortest_path, EdgeId, NodeId, Path, RoadNetError, RoadNetwork, WeightProfile};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: RoadNetError,
    },
    #[error(transparent)]
    Route(#[from] RoadNetError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Map-matched edge sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub edges: Vec<EdgeId>,
}

impl Trajectory {
    pub fn new(edges: Vec<EdgeId>) -> Self {
        Self { edges }
    }
}

/// One trajectory per line, whitespace-separated edge ids. Blank lines and
/// `#` comments are skipped.
pub fn parse_trajectories(text: &str) -> Result<Vec<Trajectory>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let edges = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>().map(EdgeId).map_err(|_| CorpusError::Malformed {
                    line: i + 1,
                    message: format!("invalid edge id {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Trajectory { edges });
    }
    Ok(out)
}

pub fn write_trajectories(trajectories: &[Trajectory]) -> String {
    let mut out = String::new();
    for t in trajectories {
        let line: Vec<String> = t.edges.iter().map(|e| e.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Reverse-geocoded addresses keyed by node. File format: `node_id,address`
/// per line (CSV quoting), `#` comments allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressBook {
    entries: BTreeMap<NodeId, String>,
}

impl AddressBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: NodeId, address: impl Into<String>) {
        self.entries.insert(node, address.into());
    }

    pub fn get(&self, node: NodeId) -> Option<&str> {
        self.entries.get(&node).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut book = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| CorpusError::Malformed { line: i + 1, message };
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .from_reader(line.as_bytes());
            let record = reader
                .records()
                .next()
                .ok_or_else(|| malformed("empty record".into()))?
                .map_err(|e| malformed(e.to_string()))?;
            if record.len() != 2 {
                return Err(malformed(format!("expected node_id,address; got {} fields", record.len())));
            }
            if record[0].eq_ignore_ascii_case("node_id") {
                continue;
            }
            let node = record[0]
                .parse::<u64>()
                .map_err(|_| malformed(format!("invalid node id {:?}", &record[0])))?;
            book.insert(NodeId(node), record[1].to_string());
        }
        Ok(book)
    }

    pub fn write(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for (node, address) in &self.entries {
            writer
                .write_record([node.to_string().as_str(), address.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Address for `node`, or a synthesized fallback naming the lowest-id
/// incident named edge.
pub fn reverse_geocode(book: &AddressBook, node: NodeId, network: &RoadNetwork) -> String {
    if let Some(address) = book.get(node) {
        return address.to_string();
    }
    let road = network
        .incident_edges(node)
        .into_iter()
        .filter_map(|id| network.edge(id))
        .map(|e| e.road_name.trim())
        .find(|name| !name.is_empty())
        .unwrap_or("unnamed road");
    format!("near {road} (node {node})")
}

/// Historical path plus its fastest and shortest counterparts for one OD pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub origin: NodeId,
    pub destination: NodeId,
    pub historical: Path,
    pub fastest: Path,
    pub shortest: Path,
    pub origin_address: String,
    pub destination_address: String,
}

pub fn augment_trajectory(
    network: &RoadNetwork,
    trajectory: &Trajectory,
    book: &AddressBook,
) -> Result<PathRecord, RoadNetError> {
    let historical = network.walk_unanchored(&trajectory.edges)?;
    let (origin, destination) = (historical.origin, historical.destination);
    let fastest = shortest_path(network, origin, destination, &WeightProfile::TravelTime, &[])?;
    let shortest = shortest_path(network, origin, destination, &WeightProfile::Length, &[])?;
    Ok(PathRecord {
        origin,
        destination,
        historical,
        fastest,
        shortest,
        origin_address: reverse_geocode(book, origin, network),
        destination_address: reverse_geocode(book, destination, network),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub u32);

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The retrievable rendering of a [`PathRecord`]. Serialized field order is
/// the corpus file's column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub origin: NodeId,
    pub destination: NodeId,
    pub origin_address: String,
    pub destination_address: String,
    pub text: String,
}

impl Document {
    pub fn od(&self) -> (NodeId, NodeId) {
        (self.origin, self.destination)
    }
}

/// Comma-joined collapsed road names of `path`.
pub fn describe_roads(path: &Path, network: &RoadNetwork) -> String {
    let names = path.road_names(network);
    if names.is_empty() {
        "unnamed roads".to_string()
    } else {
        names.join(", ")
    }
}

fn km(path: &Path, network: &RoadNetwork) -> String {
    format!("{:.2}", path.length_m(network) / 1000.0)
}

pub fn render_document(record: &PathRecord, network: &RoadNetwork, doc_id: DocId) -> Document {
    let text = format!(
        "Path information from {} to {}: The historical path taken by previous drivers follows {} ({} km). \
         The fastest path follows {} ({} km). The shortest path follows {} ({} km).",
        record.origin_address,
        record.destination_address,
        describe_roads(&record.historical, network),
        km(&record.historical, network),
        describe_roads(&record.fastest, network),
        km(&record.fastest, network),
        describe_roads(&record.shortest, network),
        km(&record.shortest, network),
    );
    Document {
        doc_id,
        origin: record.origin,
        destination: record.destination,
        origin_address: record.origin_address.clone(),
        destination_address: record.destination_address.clone(),
        text,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTrajectory {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub discontiguous: usize,
    pub unreachable: usize,
    pub duplicate_od: usize,
    pub held_out: usize,
    pub failures: Vec<SkippedTrajectory>,
}

impl SkipReport {
    /// Trajectories rejected as invalid (not counting duplicates or held-out).
    pub fn invalid(&self) -> usize {
        self.discontiguous + self.unreachable
    }
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    /// Aligned with `documents` by position.
    pub records: Vec<PathRecord>,
    pub skips: SkipReport,
}

/// Builds one document per distinct OD pair, keeping the first valid
/// trajectory seen for each pair. Trajectories whose index is in `held_out`
/// never reach the corpus.
pub fn build_corpus(
    network: &RoadNetwork,
    trajectories: &[Trajectory],
    book: &AddressBook,
    held_out: &BTreeSet<usize>,
) -> Corpus {
    let mut skips = SkipReport::default();
    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut kept: Vec<(usize, Path)> = Vec::new();

    for (index, trajectory) in trajectories.iter().enumerate() {
        if held_out.contains(&index) {
            skips.held_out += 1;
            continue;
        }
        let historical = match network.walk_unanchored(&trajectory.edges) {
            Ok(p) => p,
            Err(e) => {
                skips.discontiguous += 1;
                skips.failures.push(SkippedTrajectory { index, reason: e.to_string() });
                continue;
            }
        };
        if historical.origin == historical.destination {
            skips.discontiguous += 1;
            skips.failures.push(SkippedTrajectory {
                index,
                reason: RoadNetError::SameEndpoints(historical.origin).to_string(),
            });
            continue;
        }
        if !seen.insert((historical.origin, historical.destination)) {
            skips.duplicate_od += 1;
            continue;
        }
        kept.push((index, historical));
    }

    let augmented: Vec<(usize, Result<PathRecord, RoadNetError>)> = kept
        .into_par_iter()
        .map(|(index, historical)| {
            let record = augment_trajectory(network, &trajectories[index], book);
            debug_assert!(record.as_ref().map_or(true, |r| r.historical == historical));
            (index, record)
        })
        .collect();

    let mut corpus = Corpus::default();
    for (index, record) in augmented {
        match record {
            Ok(record) => {
                let doc_id = DocId(corpus.documents.len() as u32);
                corpus.documents.push(render_document(&record, network, doc_id));
                corpus.records.push(record);
            }
            Err(e) => {
                skips.unreachable += 1;
                skips.failures.push(SkippedTrajectory { index, reason: e.to_string() });
            }
        }
    }
    skips.failures.sort_by_key(|f| f.index);
    if skips.invalid() > 0 {
        log::warn!("skipped {} invalid trajectories", skips.invalid());
    }
    corpus.skips = skips;
    corpus
}

/// Seeded choice of `round(fraction * count)` indices to hold out.
pub fn split_held_out(count: usize, fraction: f64, seed: u64) -> BTreeSet<usize> {
    let take = ((count as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, count, take.min(count)).into_iter().collect()
}

/// Corpus file: one JSON object per line with fields doc_id, origin,
/// destination, origin_address, destination_address, text.
pub fn write_corpus(documents: &[Document], mut out: impl Write) -> Result<(), CorpusError> {
    for doc in documents {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_corpus(input: impl BufRead) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if doc.doc_id.0 as usize != docs.len() {
            return Err(CorpusError::Malformed {
                line: i + 1,
                message: format!("doc_id {} out of sequence", doc.doc_id),
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}
