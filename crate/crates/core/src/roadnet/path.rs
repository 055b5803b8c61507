use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Edge, EdgeId, NodeId, RoadNetError, RoadNetwork};

/// An ordered edge sequence from `origin` to `destination`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub origin: NodeId,
    pub destination: NodeId,
    pub edges: Vec<EdgeId>,
}

/// One edge traversal of a walked path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub edge: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    /// True when traversed from the edge's `from` node to its `to` node.
    pub forward: bool,
}

impl RoadNetwork {
    /// Walks `edges` starting at `origin`, allowing either direction of every
    /// edge. Fails on the first edge that does not touch the current node.
    /// Traffic-rule legality is not checked here; see [`Path::respects_one_way`].
    pub fn walk(&self, origin: NodeId, edges: &[EdgeId]) -> Result<Vec<Step>, RoadNetError> {
        if !self.contains_node(origin) {
            return Err(RoadNetError::UnknownNode(origin));
        }
        let mut at = origin;
        let mut steps = Vec::with_capacity(edges.len());
        for (index, &id) in edges.iter().enumerate() {
            let edge = self.try_edge(id)?;
            let step = if edge.from == at {
                Step { edge: id, from: at, to: edge.to, forward: true }
            } else if edge.to == at {
                Step { edge: id, from: at, to: edge.from, forward: false }
            } else {
                return Err(RoadNetError::Discontiguous { index, edge: id, at });
            };
            at = step.to;
            steps.push(step);
        }
        Ok(steps)
    }

    /// Infers the orientation of an edge sequence whose origin is not known
    /// (e.g. a map-matched trajectory) and returns the legal walk. The forward
    /// orientation of the first edge is tried before the reverse one.
    pub fn walk_unanchored(&self, edges: &[EdgeId]) -> Result<Path, RoadNetError> {
        let first = *edges.first().ok_or(RoadNetError::EmptyPath)?;
        let edge = self.try_edge(first)?;
        let mut starts = vec![edge.from];
        if !edge.one_way && edge.to != edge.from {
            starts.push(edge.to);
        }
        let mut last_err = None;
        for origin in starts {
            match self.walk(origin, edges) {
                Ok(steps) => {
                    if let Some((index, step)) = steps
                        .iter()
                        .enumerate()
                        .find(|(_, s)| !self.step_is_legal(s))
                    {
                        last_err = Some(RoadNetError::Discontiguous {
                            index,
                            edge: step.edge,
                            at: step.from,
                        });
                        continue;
                    }
                    let destination = steps.last().map(|s| s.to).unwrap_or(origin);
                    return Ok(Path { origin, destination, edges: edges.to_vec() });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one orientation tried"))
    }

    pub(crate) fn step_is_legal(&self, step: &Step) -> bool {
        step.forward || self.edge(step.edge).is_some_and(|e| !e.one_way)
    }
}

impl Path {
    /// Structural walk, also checking that the walk ends at `destination`.
    pub fn steps(&self, network: &RoadNetwork) -> Result<Vec<Step>, RoadNetError> {
        if self.edges.is_empty() {
            return Err(RoadNetError::EmptyPath);
        }
        let steps = network.walk(self.origin, &self.edges)?;
        let end = steps.last().map(|s| s.to).unwrap_or(self.origin);
        if end != self.destination {
            return Err(RoadNetError::Discontiguous {
                index: self.edges.len(),
                edge: *self.edges.last().unwrap(),
                at: end,
            });
        }
        Ok(steps)
    }

    /// Non-empty, contiguous, and ends at the destination.
    pub fn is_contiguous(&self, network: &RoadNetwork) -> bool {
        self.steps(network).is_ok()
    }

    /// True iff no one-way edge is traversed against its direction. A path
    /// that is not contiguous is reported as false.
    pub fn respects_one_way(&self, network: &RoadNetwork) -> bool {
        match self.steps(network) {
            Ok(steps) => steps.iter().all(|s| network.step_is_legal(s)),
            Err(_) => false,
        }
    }

    pub fn edge_set(&self) -> BTreeSet<EdgeId> {
        self.edges.iter().copied().collect()
    }

    pub fn sum_by(&self, network: &RoadNetwork, f: impl Fn(&Edge) -> f64) -> f64 {
        self.edges
            .iter()
            .filter_map(|id| network.edge(*id))
            .map(f)
            .sum()
    }

    pub fn length_m(&self, network: &RoadNetwork) -> f64 {
        self.sum_by(network, |e| e.length_m)
    }

    pub fn travel_time_s(&self, network: &RoadNetwork) -> f64 {
        self.sum_by(network, |e| e.travel_time_s)
    }

    /// Road names along the path with unnamed edges dropped and
    /// consecutive duplicates collapsed.
    pub fn road_names<'a>(&self, network: &'a RoadNetwork) -> Vec<&'a str> {
        let mut names: Vec<&str> = Vec::new();
        for id in &self.edges {
            let Some(edge) = network.edge(*id) else { continue };
            let name = edge.road_name.trim();
            if name.is_empty() {
                continue;
            }
            if names.last() != Some(&name) {
                names.push(name);
            }
        }
        names
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn walk_both_directions() {
        let net = line();
        let steps = net.walk(NodeId(3), &[EdgeId(11), EdgeId(10)]).unwrap();
        assert_eq!(steps[1].to, NodeId(1));
        assert!(!steps[0].forward);
    }

    #[test]
    fn discontiguous_reports_position() {
        let net = line();
        let err = net.walk(NodeId(1), &[EdgeId(11)]).unwrap_err();
        assert!(matches!(err, RoadNetError::Discontiguous { index: 0, .. }));
    }

    #[test]
    fn unanchored_picks_orientation_from_second_edge() {
        let net = line();
        let p = net.walk_unanchored(&[EdgeId(11), EdgeId(10)]).unwrap();
        assert_eq!((p.origin, p.destination), (NodeId(3), NodeId(1)));
        let single = net.walk_unanchored(&[EdgeId(10)]).unwrap();
        assert_eq!((single.origin, single.destination), (NodeId(1), NodeId(2)));
    }

    #[test]
    fn unanchored_rejects_wrong_way() {
        let mut a = edge(1, 1, 2, 10.0, "A");
        a.one_way = true;
        let b = edge(2, 3, 2, 10.0, "B");
        let net = network(&[(1, 0.0, 0.0), (2, 0.0, 0.1), (3, 0.0, 0.2)], vec![a, b]);
        assert!(net.walk_unanchored(&[EdgeId(2), EdgeId(1)]).is_err());
        assert!(net.walk_unanchored(&[EdgeId(1), EdgeId(2)]).is_ok());
    }

    #[test]
    fn collapsed_names() {
        let net = network(
            &[(1, 0.0, 0.0), (2, 0.0, 0.1), (3, 0.0, 0.2), (4, 0.0, 0.3), (5, 0.0, 0.4)],
            vec![
                edge(1, 1, 2, 1.0, "Elm Street"),
                edge(2, 2, 3, 1.0, "Elm Street"),
                edge(3, 3, 4, 1.0, ""),
                edge(4, 4, 5, 1.0, "Oak Avenue"),
            ],
        );
        let p = Path {
            origin: NodeId(1),
            destination: NodeId(5),
            edges: vec![EdgeId(1), EdgeId(2), EdgeId(3), EdgeId(4)],
        };
        assert_eq!(p.road_names(&net), vec!["Elm Street", "Oak Avenue"]);
        assert_eq!(p.length_m(&net), 4.0);
    }
}
