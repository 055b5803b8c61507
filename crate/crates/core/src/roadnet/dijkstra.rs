use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{EdgeWeights, NodeId, Path, Poi, RoadNetError, RoadNetwork, WeightProfile};

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

/// Minimum-weight path under `profile`.
pub fn shortest_path(
    network: &RoadNetwork,
    origin: NodeId,
    destination: NodeId,
    profile: &WeightProfile,
    pois: &[Poi],
) -> Result<Path, RoadNetError> {
    let weights = EdgeWeights::compute(network, profile, pois)?;
    shortest_path_weighted(network, origin, destination, &weights).map(|(path, _)| path)
}

/// Dijkstra over legal traversals with precomputed weights; returns the path
/// and its total weight.
///
/// Ties are resolved deterministically: equal-cost frontier entries pop in
/// ascending node id order, and among equal-cost predecessors the smaller
/// edge id is kept.
pub fn shortest_path_weighted(
    network: &RoadNetwork,
    origin: NodeId,
    destination: NodeId,
    weights: &EdgeWeights,
) -> Result<(Path, f64), RoadNetError> {
    let src = network.node_idx(origin)?;
    let dst = network.node_idx(destination)?;
    if src == dst {
        return Err(RoadNetError::SameEndpoints(origin));
    }

    let n = network.node_count();
    let mut dist = vec![f64::INFINITY; n];
    // (edge index, previous node index)
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut frontier = BinaryHeap::new();
    dist[src] = 0.0;
    frontier.push(Reverse((Cost(0.0), src)));

    while let Some(Reverse((Cost(d), u))) = frontier.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if u == dst {
            break;
        }
        for t in network.traversals(u).iter().filter(|t| t.legal) {
            let v = t.to;
            if settled[v] {
                continue;
            }
            let nd = d + weights.at(t.edge);
            let better = match nd.total_cmp(&dist[v]) {
                Ordering::Less => true,
                Ordering::Equal => pred[v].is_some_and(|(e, _)| t.edge < e),
                Ordering::Greater => false,
            };
            if better {
                let improved = nd < dist[v];
                dist[v] = nd;
                pred[v] = Some((t.edge, u));
                if improved {
                    frontier.push(Reverse((Cost(nd), v)));
                }
            }
        }
    }

    if !settled[dst] {
        return Err(RoadNetError::NoRoute { origin, destination });
    }
    let mut edges = Vec::new();
    let mut at = dst;
    while let Some((e, prev)) = pred[at] {
        edges.push(network.edge_at(e).id);
        at = prev;
    }
    edges.reverse();
    Ok((
        Path {
            origin,
            destination,
            edges,
        },
        dist[dst],
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{Coord, EdgeId, FuelParams, PoiCategory, ScenicParams};
    use super::*;
    use crate::synth::grid_network;
    use proptest::prelude::*;

    /// Exhaustive simple-path enumeration over legal traversals.
    fn brute_force_min(
        net: &RoadNetwork,
        origin: NodeId,
        destination: NodeId,
        weights: &EdgeWeights,
    ) -> Option<f64> {
        fn dfs(
            net: &RoadNetwork,
            at: NodeId,
            dst: NodeId,
            weights: &EdgeWeights,
            visited: &mut Vec<NodeId>,
            acc: f64,
            best: &mut Option<f64>,
        ) {
            if at == dst {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for (edge, next) in net.outgoing(at) {
                if visited.contains(&next) {
                    continue;
                }
                visited.push(next);
                let w = weights.get(net, edge).unwrap();
                dfs(net, next, dst, weights, visited, acc + w, best);
                visited.pop();
            }
        }
        let mut best = None;
        dfs(net, origin, destination, weights, &mut vec![origin], 0.0, &mut best);
        best
    }

    #[test]
    fn line_graph_unique_route() {
        let net = line();
        let p = shortest_path(&net, NodeId(1), NodeId(3), &WeightProfile::Length, &[]).unwrap();
        assert_eq!(p.edges, vec![EdgeId(10), EdgeId(11)]);
    }

    #[test]
    fn triangle_prefers_two_short_edges() {
        let net = network(
            &[(1, 0.0, 0.0), (2, 0.0, 0.001), (3, 0.0, 0.002)],
            vec![edge(1, 1, 2, 1.0, "AB"), edge(2, 2, 3, 1.0, "BC"), edge(3, 1, 3, 3.0, "AC")],
        );
        let w = EdgeWeights::compute(&net, &WeightProfile::Length, &[]).unwrap();
        let (p, cost) = shortest_path_weighted(&net, NodeId(1), NodeId(3), &w).unwrap();
        assert_eq!(p.edges, vec![EdgeId(1), EdgeId(2)]);
        assert_eq!(cost, 2.0);
        assert_eq!(brute_force_min(&net, NodeId(1), NodeId(3), &w), Some(2.0));
    }

    #[test]
    fn grid_corner_to_corner() {
        let net = grid_network(4, 4, 100.0);
        let w = EdgeWeights::compute(&net, &WeightProfile::Length, &[]).unwrap();
        let (p, cost) = shortest_path_weighted(&net, NodeId(0), NodeId(15), &w).unwrap();
        assert_eq!(p.edges.len(), 6);
        assert!((cost - 600.0).abs() < 1e-9);
        assert_eq!(brute_force_min(&net, NodeId(0), NodeId(15), &w), Some(cost));
        assert!(p.respects_one_way(&net));
        // Deterministic under the many equal-cost staircases.
        let (again, _) = shortest_path_weighted(&net, NodeId(0), NodeId(15), &w).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn one_way_forces_detour() {
        // 1 -> 2 direct is one-way 2->1 only; detour via 3.
        let mut direct = edge(1, 2, 1, 1.0, "Direct");
        direct.one_way = true;
        let net = network(
            &[(1, 0.0, 0.0), (2, 0.0, 0.001), (3, 0.001, 0.0005)],
            vec![direct, edge(2, 1, 3, 5.0, "Up"), edge(3, 3, 2, 5.0, "Down")],
        );
        let p = shortest_path(&net, NodeId(1), NodeId(2), &WeightProfile::Length, &[]).unwrap();
        assert_eq!(p.edges, vec![EdgeId(2), EdgeId(3)]);
        let back = shortest_path(&net, NodeId(2), NodeId(1), &WeightProfile::Length, &[]).unwrap();
        assert_eq!(back.edges, vec![EdgeId(1)]);
    }

    #[test]
    fn errors() {
        let mut e = edge(1, 1, 2, 1.0, "x");
        e.one_way = true;
        let net = network(&[(1, 0.0, 0.0), (2, 0.0, 0.001)], vec![e]);
        assert!(matches!(
            shortest_path(&net, NodeId(2), NodeId(1), &WeightProfile::Length, &[]),
            Err(RoadNetError::NoRoute { .. })
        ));
        assert!(matches!(
            shortest_path(&net, NodeId(1), NodeId(1), &WeightProfile::Length, &[]),
            Err(RoadNetError::SameEndpoints(_))
        ));
        assert!(matches!(
            shortest_path(&net, NodeId(1), NodeId(5), &WeightProfile::Length, &[]),
            Err(RoadNetError::UnknownNode(NodeId(5)))
        ));
    }

    #[derive(Debug, Clone)]
    struct RandomGraph {
        nodes: Vec<(u64, f64, f64)>,
        edges: Vec<(u64, u64, f64, f64, f64, bool, bool)>,
        pois: Vec<(f64, f64)>,
    }

    fn random_graph() -> impl Strategy<Value = RandomGraph> {
        (2usize..=10).prop_flat_map(|n| {
            let nodes = proptest::collection::vec((0.0f64..0.01, 0.0f64..0.01), n);
            let edges = proptest::collection::vec(
                (0..n as u64, 0..n as u64, 1.0f64..500.0, 1.0f64..60.0, 10.0f64..120.0, any::<bool>(), any::<bool>()),
                1..25,
            );
            let pois = proptest::collection::vec((0.0f64..0.01, 0.0f64..0.01), 0..4);
            (nodes, edges, pois).prop_map(|(nodes, edges, pois)| RandomGraph {
                nodes: nodes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (a, b))| (i as u64, a, b))
                    .collect(),
                edges: edges.into_iter().filter(|e| e.0 != e.1).collect(),
                pois,
            })
        })
    }

    fn build(g: &RandomGraph) -> (RoadNetwork, Vec<Poi>) {
        let edges = g
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(from, to, len, tt, speed, hw, ow))| {
                let mut e = edge(i as u64, from, to, len, "r");
                e.travel_time_s = tt;
                e.max_speed_kmh = speed;
                e.is_highway = hw;
                e.one_way = ow;
                e
            })
            .collect();
        let pois = g
            .pois
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon))| Poi {
                id: i as u64,
                location: Coord::new(lat, lon),
                category: PoiCategory::Attraction,
            })
            .collect();
        (network(&g.nodes, edges), pois)
    }

    fn profiles() -> [WeightProfile; 4] {
        [
            WeightProfile::Length,
            WeightProfile::TravelTime,
            WeightProfile::Scenic(ScenicParams { proximity_threshold_m: 300.0, discount_factor: 0.3 }),
            WeightProfile::Fuel(FuelParams::default()),
        ]
    }

    proptest! {
        #[test]
        fn matches_exhaustive_enumeration(g in random_graph()) {
            let (net, pois) = build(&g);
            for profile in profiles() {
                let w = EdgeWeights::compute(&net, &profile, &pois).unwrap();
                for &o in net.node_ids() {
                    for &d in net.node_ids() {
                        if o == d { continue; }
                        let expected = brute_force_min(&net, o, d, &w);
                        match shortest_path_weighted(&net, o, d, &w) {
                            Ok((path, cost)) => {
                                let e = expected.expect("dijkstra found a route the oracle missed");
                                prop_assert!((cost - e).abs() <= 1e-9 * e.max(1.0));
                                prop_assert!(path.respects_one_way(&net));
                                prop_assert!((w.total(&net, &path.edges) - cost).abs() <= 1e-9 * cost.max(1.0));
                            }
                            Err(RoadNetError::NoRoute { .. }) => prop_assert!(expected.is_none()),
                            Err(e) => prop_assert!(false, "unexpected error {e}"),
                        }
                    }
                }
            }
        }

        #[test]
        fn scenic_and_fuel_are_monotone(g in random_graph()) {
            let (net, pois) = build(&g);
            let len = EdgeWeights::compute(&net, &WeightProfile::Length, &pois).unwrap();
            let [_, _, scenic, fuel] = profiles();
            let scenic = EdgeWeights::compute(&net, &scenic, &pois).unwrap();
            let fuel = EdgeWeights::compute(&net, &fuel, &pois).unwrap();
            for e in net.edges() {
                prop_assert!(scenic.get(&net, e.id).unwrap() <= len.get(&net, e.id).unwrap());
                prop_assert!(fuel.get(&net, e.id).unwrap() >= len.get(&net, e.id).unwrap());
            }
        }

        #[test]
        fn near_unit_factors_reduce_to_length(g in random_graph()) {
            let (net, pois) = build(&g);
            let len = EdgeWeights::compute(&net, &WeightProfile::Length, &pois).unwrap();
            let scenic = EdgeWeights::compute(&net, &WeightProfile::Scenic(ScenicParams {
                proximity_threshold_m: 300.0, discount_factor: 1.0 - 1e-12 }), &pois).unwrap();
            let fuel = EdgeWeights::compute(&net, &WeightProfile::Fuel(FuelParams {
                speed_threshold_kmh: 60.0, penalty_factor: 1.0 + 1e-12 }), &pois).unwrap();
            let o = net.node_ids()[0];
            let d = net.node_ids()[net.node_count() - 1];
            if let Ok((_, base)) = shortest_path_weighted(&net, o, d, &len) {
                for w in [&scenic, &fuel] {
                    let (_, cost) = shortest_path_weighted(&net, o, d, w).unwrap();
                    prop_assert!((cost - base).abs() <= 1e-9 * base);
                }
            }
        }
    }
}
