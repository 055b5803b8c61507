//! Checks a generated route against the road network: parse the ROUTE line,
//! resolve road names to a concrete edge sequence, verify contiguity and
//! one-way rules, and fall back to the fastest path when anything fails.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{GenerationResult, Query, ROUTE_PREFIX};
use crate::roadnet::{normalize_name, shortest_path, EdgeId, NodeId, Path, RoadNetError, RoadNetwork, WeightProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidateError {
    #[error("no ROUTE line in the model output")]
    NoRouteLine,
    #[error("route segment {index} is empty")]
    EmptySegment { index: usize },
    #[error("unknown road name {0:?}")]
    UnknownName(String),
    #[error("no contiguous realization of the route from {origin} to {destination}")]
    NoRealization { origin: NodeId, destination: NodeId },
}

/// Road names in route order, trimmed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedRoute {
    pub names: Vec<String>,
}

impl ParsedRoute {
    /// Normalized names with consecutive repeats merged; a path's collapsed
    /// labels must equal this sequence.
    pub fn collapsed(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for n in self.names.iter().map(|n| normalize_name(n)) {
            if out.last() != Some(&n) {
                out.push(n);
            }
        }
        out
    }
}

pub fn parse_route_line(line: &str) -> Result<ParsedRoute, ValidateError> {
    let body = line.trim().strip_prefix(ROUTE_PREFIX).ok_or(ValidateError::NoRouteLine)?;
    let names: Vec<String> = body.split("->").map(|s| s.trim().to_string()).collect();
    if let Some(index) = names.iter().position(String::is_empty) {
        return Err(ValidateError::EmptySegment { index });
    }
    Ok(ParsedRoute { names })
}

pub fn parse_route(raw: &GenerationResult) -> Result<ParsedRoute, ValidateError> {
    parse_route_line(raw.route_line.as_deref().ok_or(ValidateError::NoRouteLine)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedPath {
    pub path: Path,
    /// Per collapsed route name, the edges chosen for it.
    pub resolution_notes: Vec<(String, Vec<EdgeId>)>,
    /// False when the realization needs a one-way edge driven backwards.
    pub legal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// One move in the product graph of (node, position in the name list).
#[derive(Debug, Clone, Copy)]
struct Move {
    edge: usize,
    to: usize,
    length: f64,
}

/// Realizes `route` as the minimum-length edge sequence from `origin` to
/// `destination` whose collapsed labels equal the route's collapsed names.
/// Ties go to the lexicographically smallest edge id sequence. Legal
/// traversals are searched first; if only a rule-breaking realization
/// exists it is returned with `legal == false`.
pub fn resolve_names(
    route: &ParsedRoute,
    network: &RoadNetwork,
    origin: NodeId,
    destination: NodeId,
) -> Result<ResolvedPath, ValidateError> {
    let names = route.collapsed();
    if names.is_empty() {
        return Err(ValidateError::EmptySegment { index: 0 });
    }
    if let Some(unknown) = route.names.iter().find(|n| network.edges_named(n).is_none()) {
        return Err(ValidateError::UnknownName(unknown.clone()));
    }
    let no_route = ValidateError::NoRealization { origin, destination };
    let (Ok(src), Ok(dst)) = (network.node_idx(origin), network.node_idx(destination)) else {
        return Err(no_route);
    };
    if src == dst {
        return Err(no_route);
    }

    // Per edge, which route positions its name could fill.
    let mut positions: HashMap<String, Vec<usize>> = HashMap::new();
    for (j, n) in names.iter().enumerate() {
        positions.entry(n.clone()).or_default().push(j);
    }
    let edge_positions: Vec<&[usize]> = network
        .edges()
        .iter()
        .map(|e| {
            positions
                .get(&normalize_name(&e.road_name))
                .map(Vec::as_slice)
                .unwrap_or(&[])
        })
        .collect();

    for legal_only in [true, false] {
        if let Some(edges) = search(network, &names, &edge_positions, src, dst, legal_only) {
            let path = Path {
                origin,
                destination,
                edges: edges.iter().map(|&i| network.edge_at(i).id).collect(),
            };
            let mut notes: Vec<(String, Vec<EdgeId>)> = Vec::new();
            for &i in &edges {
                let e = network.edge_at(i);
                let n = normalize_name(&e.road_name);
                match notes.last_mut() {
                    Some((last, ids)) if *last == n => ids.push(e.id),
                    _ => notes.push((n, vec![e.id])),
                }
            }
            return Ok(ResolvedPath {
                path,
                resolution_notes: notes,
                legal: legal_only,
            });
        }
    }
    Err(no_route)
}

/// Product-graph Dijkstra. State `s = node * m + j` means "at node, last edge
/// labelled `names[j]`"; the start state is the extra index `n * m`.
fn search(
    network: &RoadNetwork,
    names: &[String],
    edge_positions: &[&[usize]],
    src: usize,
    dst: usize,
    legal_only: bool,
) -> Option<Vec<usize>> {
    let m = names.len();
    let n = network.node_count();
    let start = n * m;
    let goal = dst * m + (m - 1);
    let node_of = |s: usize| if s == start { src } else { s / m };

    let moves = |s: usize| -> Vec<Move> {
        let at = node_of(s);
        let allowed = |j: usize| if s == start { j == 0 } else { j == s % m || j == s % m + 1 };
        let mut out = Vec::new();
        for t in network.traversals(at) {
            if legal_only && !t.legal {
                continue;
            }
            for &j in edge_positions[t.edge] {
                if allowed(j) {
                    out.push(Move {
                        edge: t.edge,
                        to: t.to * m + j,
                        length: network.edge_at(t.edge).length_m,
                    });
                }
            }
        }
        out
    };

    let mut dist = vec![f64::INFINITY; start + 1];
    let mut settled = vec![false; start + 1];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Reverse((Cost(0.0), start)));
    while let Some(Reverse((Cost(d), s))) = heap.pop() {
        if settled[s] {
            continue;
        }
        settled[s] = true;
        order.push(s);
        if s == goal {
            break;
        }
        for mv in moves(s) {
            let nd = d + mv.length;
            if nd < dist[mv.to] {
                dist[mv.to] = nd;
                heap.push(Reverse((Cost(nd), mv.to)));
            }
        }
    }
    if !settled[goal] {
        return None;
    }

    // Tight moves lie on some shortest path; keep the states from which the
    // goal is reachable through tight moves, then walk greedily by edge id.
    let tight = |from: usize, mv: &Move| {
        let target = dist[from] + mv.length;
        settled[mv.to] && (target - dist[mv.to]).abs() <= 1e-9 * dist[mv.to].max(1.0)
    };
    let mut reaches = vec![false; start + 1];
    reaches[goal] = true;
    for &s in order.iter().rev() {
        if !reaches[s] {
            reaches[s] = moves(s).iter().any(|mv| reaches[mv.to] && tight(s, mv));
        }
    }
    let mut path = Vec::new();
    let mut s = start;
    while s != goal {
        let mv = moves(s)
            .into_iter()
            .filter(|mv| reaches[mv.to] && tight(s, mv) && dist[mv.to] > dist[s])
            .min_by_key(|mv| (mv.edge, mv.to))?;
        path.push(mv.edge);
        s = mv.to;
    }
    Some(path)
}

/// True iff no edge of `path` is driven against its one-way direction.
pub fn check_rules(path: &Path, network: &RoadNetwork) -> bool {
    path.respects_one_way(network)
}

/// Outcome of validation. Flags record the furthest stage passed; field
/// order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub parsed: bool,
    pub resolved: bool,
    pub contiguous: bool,
    pub rules_ok: bool,
    pub fallback_used: bool,
    /// Why the fallback was taken.
    pub reason: Option<String>,
    pub final_path: Path,
}

impl ValidationReport {
    /// Key-value record, one `field=value` per line in field order.
    pub fn to_record(&self) -> String {
        let edges: Vec<String> = self.final_path.edges.iter().map(|e| e.to_string()).collect();
        format!(
            "parsed={}\nresolved={}\ncontiguous={}\nrules_ok={}\nfallback_used={}\nreason={}\nfinal_path={}\n",
            self.parsed,
            self.resolved,
            self.contiguous,
            self.rules_ok,
            self.fallback_used,
            self.reason.as_deref().unwrap_or("-"),
            edges.join(" "),
        )
    }
}

/// The travel-time Dijkstra path used whenever validation fails.
pub fn fallback_path(network: &RoadNetwork, query: &Query) -> Result<Path, RoadNetError> {
    shortest_path(network, query.origin, query.destination, &WeightProfile::TravelTime, &[])
}

/// A report for output that never reached validation, e.g. a failed
/// provider call.
pub fn fallback_report(network: &RoadNetwork, query: &Query, reason: impl Into<String>) -> Result<ValidationReport, RoadNetError> {
    Ok(ValidationReport {
        parsed: false,
        resolved: false,
        contiguous: false,
        rules_ok: false,
        fallback_used: true,
        reason: Some(reason.into()),
        final_path: fallback_path(network, query)?,
    })
}

/// Parse, resolve, check contiguity and rules; on any failure substitute the
/// fastest path. Fails only if not even the fastest path exists.
pub fn validate_or_fallback(
    raw: &GenerationResult,
    network: &RoadNetwork,
    query: &Query,
) -> Result<ValidationReport, RoadNetError> {
    let mut report = ValidationReport {
        parsed: false,
        resolved: false,
        contiguous: false,
        rules_ok: false,
        fallback_used: false,
        reason: None,
        final_path: Path {
            origin: query.origin,
            destination: query.destination,
            edges: Vec::new(),
        },
    };
    let failure = (|| {
        let parsed = parse_route(raw)?;
        report.parsed = true;
        let resolved = resolve_names(&parsed, network, query.origin, query.destination)?;
        report.resolved = true;
        if !resolved.path.is_contiguous(network) {
            return Err("resolved path is not contiguous".to_string());
        }
        report.contiguous = true;
        if !resolved.legal || !check_rules(&resolved.path, network) {
            return Err("route drives a one-way road the wrong way".to_string());
        }
        report.rules_ok = true;
        report.final_path = resolved.path;
        Ok(())
    })()
    .err();
    if let Some(reason) = failure {
        report.fallback_used = true;
        report.reason = Some(reason);
        report.final_path = fallback_path(network, query)?;
    }
    Ok(report)
}

impl From<ValidateError> for String {
    fn from(e: ValidateError) -> Self {
        e.to_string()
    }
}
