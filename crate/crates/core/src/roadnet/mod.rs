//! Road network model: intersections, attributed road segments, weight
//! profiles and Dijkstra routing.
//!
//! A [`RoadNetwork`] is immutable once built. Bidirectional segments are a
//! single [`Edge`] that can be traversed both ways under the same [`EdgeId`];
//! one-way segments only from `from` to `to`.

mod dijkstra;
mod geo;
mod io;
mod path;
mod weights;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dijkstra::{shortest_path, shortest_path_weighted};
pub use geo::{haversine_m, Coord, EARTH_RADIUS_M};
pub use io::{load_network, load_pois, parse_network, parse_pois, write_network, write_pois};
pub use path::{Path, Step};
pub use weights::{edge_weight, EdgeWeights, FuelParams, ScenicParams, WeightProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A road segment between two intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub travel_time_s: f64,
    pub max_speed_kmh: f64,
    pub road_name: String,
    pub is_highway: bool,
    pub one_way: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoiCategory {
    Attraction,
    Leisure,
    Amenity,
    Other,
}

impl PoiCategory {
    /// Categories that count towards the scenic discount.
    pub fn is_scenic(self) -> bool {
        !matches!(self, PoiCategory::Other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoiCategory::Attraction => "attraction",
            PoiCategory::Leisure => "leisure",
            PoiCategory::Amenity => "amenity",
            PoiCategory::Other => "other",
        }
    }
}

impl std::str::FromStr for PoiCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "attraction" => Ok(PoiCategory::Attraction),
            "leisure" => Ok(PoiCategory::Leisure),
            "amenity" => Ok(PoiCategory::Amenity),
            "other" => Ok(PoiCategory::Other),
            other => Err(format!("unknown POI category {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: u64,
    pub location: Coord,
    pub category: PoiCategory,
}

#[derive(Debug, Error)]
pub enum RoadNetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<RoadNetError>,
    },
    #[error("edge {edge} references undeclared node {node}")]
    DanglingNode { edge: EdgeId, node: NodeId },
    #[error("edge {edge}: {field} must be strictly positive, got {value}")]
    NonPositive {
        edge: EdgeId,
        field: &'static str,
        value: f64,
    },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(EdgeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("origin and destination are the same node {0}")]
    SameEndpoints(NodeId),
    #[error("no route from {origin} to {destination}")]
    NoRoute {
        origin: NodeId,
        destination: NodeId,
    },
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("path is empty")]
    EmptyPath,
    #[error("edge {edge} at position {index} does not continue from node {at}")]
    Discontiguous {
        index: usize,
        edge: EdgeId,
        at: NodeId,
    },
    #[error("invalid weight profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RoadNetError {
    /// Strips any `Record` wrapper and returns the underlying error.
    pub fn root(&self) -> &RoadNetError {
        match self {
            RoadNetError::Record { source, .. } => source.root(),
            other => other,
        }
    }
}

/// Directed traversal of an edge as stored in the adjacency lists.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Traversal {
    pub edge: usize,
    pub to: usize,
    /// False for the reverse direction of a one-way edge.
    pub legal: bool,
}

/// Lowercases and collapses internal whitespace; used for name matching.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone)]
pub struct RoadNetwork {
    node_ids: Vec<NodeId>,
    coords: Vec<Coord>,
    node_index: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<EdgeId, usize>,
    /// Per node (dense index), every traversal leaving it, sorted by edge index.
    /// Includes illegal reverse traversals of one-way edges.
    adjacency: Vec<Vec<Traversal>>,
    name_index: BTreeMap<String, Vec<EdgeId>>,
    normalized_index: HashMap<String, Vec<EdgeId>>,
}

impl RoadNetwork {
    pub fn builder() -> RoadNetworkBuilder {
        RoadNetworkBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// Number of road segments (one per edge record).
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of legal directed traversals: one per one-way edge, two per
    /// bidirectional edge.
    pub fn traversal_count(&self) -> usize {
        self.adjacency
            .iter()
            .map(|list| list.iter().filter(|t| t.legal).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.node_index.contains_key(&node)
    }

    pub fn coord(&self, node: NodeId) -> Option<Coord> {
        self.node_index.get(&node).map(|&i| self.coords[i])
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    pub fn try_edge(&self, id: EdgeId) -> Result<&Edge, RoadNetError> {
        self.edge(id).ok_or(RoadNetError::UnknownEdge(id))
    }

    /// Legal outgoing traversals from `node` as `(edge, next node)` pairs.
    pub fn outgoing(&self, node: NodeId) -> impl Iterator<Item = (EdgeId, NodeId)> + '_ {
        let list = self
            .node_index
            .get(&node)
            .map(|&i| self.adjacency[i].as_slice())
            .unwrap_or(&[]);
        list.iter()
            .filter(|t| t.legal)
            .map(|t| (self.edges[t.edge].id, self.node_ids[t.to]))
    }

    /// Edge ids touching `node` in either direction, ascending.
    pub fn incident_edges(&self, node: NodeId) -> Vec<EdgeId> {
        let Some(&i) = self.node_index.get(&node) else {
            return Vec::new();
        };
        let mut ids: Vec<EdgeId> = self.adjacency[i]
            .iter()
            .map(|t| self.edges[t.edge].id)
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Exact road name → edges.
    pub fn name_index(&self) -> &BTreeMap<String, Vec<EdgeId>> {
        &self.name_index
    }

    /// Edges whose road name matches `name` after [`normalize_name`].
    pub fn edges_named(&self, name: &str) -> Option<&[EdgeId]> {
        self.normalized_index
            .get(&normalize_name(name))
            .map(Vec::as_slice)
    }

    /// Node closest to `location` by great-circle distance, ties to the
    /// smallest id.
    pub fn nearest_node(&self, location: Coord) -> Result<NodeId, RoadNetError> {
        let mut best: Option<(f64, NodeId)> = None;
        for (id, c) in self.node_ids.iter().zip(&self.coords) {
            let d = haversine_m(location, *c);
            match best {
                Some((bd, _)) if d >= bd => {}
                _ => best = Some((d, *id)),
            }
        }
        best.map(|(_, id)| id).ok_or(RoadNetError::EmptyNetwork)
    }

    pub(crate) fn node_idx(&self, node: NodeId) -> Result<usize, RoadNetError> {
        self.node_index
            .get(&node)
            .copied()
            .ok_or(RoadNetError::UnknownNode(node))
    }

    pub(crate) fn edge_idx(&self, edge: EdgeId) -> Result<usize, RoadNetError> {
        self.edge_index
            .get(&edge)
            .copied()
            .ok_or(RoadNetError::UnknownEdge(edge))
    }

    pub(crate) fn coord_at(&self, idx: usize) -> Coord {
        self.coords[idx]
    }

    pub(crate) fn edge_at(&self, idx: usize) -> &Edge {
        &self.edges[idx]
    }

    pub(crate) fn traversals(&self, node_idx: usize) -> &[Traversal] {
        &self.adjacency[node_idx]
    }
}

/// Accumulates nodes and edges, validating on [`RoadNetworkBuilder::build`].
#[derive(Debug, Default)]
pub struct RoadNetworkBuilder {
    nodes: Vec<(NodeId, Coord)>,
    edges: Vec<Edge>,
}

impl RoadNetworkBuilder {
    pub fn node(&mut self, id: NodeId, coord: Coord) -> &mut Self {
        self.nodes.push((id, coord));
        self
    }

    pub fn edge(&mut self, edge: Edge) -> &mut Self {
        self.edges.push(edge);
        self
    }

    pub fn build(&self) -> Result<RoadNetwork, RoadNetError> {
        let mut nodes = self.nodes.clone();
        nodes.sort_by_key(|(id, _)| *id);
        for pair in nodes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(RoadNetError::DuplicateNode(pair[0].0));
            }
        }
        let node_ids: Vec<NodeId> = nodes.iter().map(|(id, _)| *id).collect();
        let coords: Vec<Coord> = nodes.iter().map(|(_, c)| *c).collect();
        let node_index: HashMap<NodeId, usize> =
            node_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| e.id);
        for pair in edges.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(RoadNetError::DuplicateEdge(pair[0].id));
            }
        }
        for edge in &edges {
            validate_edge(edge, &node_index)?;
        }
        let edge_index: HashMap<EdgeId, usize> =
            edges.iter().enumerate().map(|(i, e)| (e.id, i)).collect();

        let mut adjacency: Vec<Vec<Traversal>> = vec![Vec::new(); node_ids.len()];
        let mut name_index: BTreeMap<String, Vec<EdgeId>> = BTreeMap::new();
        let mut normalized_index: HashMap<String, Vec<EdgeId>> = HashMap::new();
        for (i, edge) in edges.iter().enumerate() {
            let from = node_index[&edge.from];
            let to = node_index[&edge.to];
            adjacency[from].push(Traversal {
                edge: i,
                to,
                legal: true,
            });
            adjacency[to].push(Traversal {
                edge: i,
                to: from,
                legal: !edge.one_way,
            });
            if !edge.road_name.trim().is_empty() {
                name_index
                    .entry(edge.road_name.clone())
                    .or_default()
                    .push(edge.id);
                normalized_index
                    .entry(normalize_name(&edge.road_name))
                    .or_default()
                    .push(edge.id);
            }
        }

        Ok(RoadNetwork {
            node_ids,
            coords,
            node_index,
            edges,
            edge_index,
            adjacency,
            name_index,
            normalized_index,
        })
    }
}

fn validate_edge(edge: &Edge, nodes: &HashMap<NodeId, usize>) -> Result<(), RoadNetError> {
    for node in [edge.from, edge.to] {
        if !nodes.contains_key(&node) {
            return Err(RoadNetError::DanglingNode {
                edge: edge.id,
                node,
            });
        }
    }
    for (field, value) in [
        ("length_m", edge.length_m),
        ("travel_time_s", edge.travel_time_s),
        ("max_speed_kmh", edge.max_speed_kmh),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(RoadNetError::NonPositive {
                edge: edge.id,
                field,
                value,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn edge(id: u64, from: u64, to: u64, length: f64, name: &str) -> Edge {
        Edge {
            id: EdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            length_m: length,
            travel_time_s: length / 10.0,
            max_speed_kmh: 36.0,
            road_name: name.to_string(),
            is_highway: false,
            one_way: false,
        }
    }

    pub fn network(nodes: &[(u64, f64, f64)], edges: Vec<Edge>) -> RoadNetwork {
        let mut b = RoadNetwork::builder();
        for &(id, lat, lon) in nodes {
            b.node(NodeId(id), Coord::new(lat, lon));
        }
        for e in edges {
            b.edge(e);
        }
        b.build().unwrap()
    }

    /// Line A(1) -> B(2) -> C(3).
    pub fn line() -> RoadNetwork {
        network(
            &[(1, 0.0, 0.0), (2, 0.0, 0.001), (3, 0.0, 0.002)],
            vec![edge(10, 1, 2, 100.0, "Elm Street"), edge(11, 2, 3, 100.0, "Oak Avenue")],
        )
    }
}
