use serde::{Deserialize, Serialize};

use super::{haversine_m, Coord, Edge, EdgeId, Poi, RoadNetError, RoadNetwork, EARTH_RADIUS_M};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenicParams {
    pub proximity_threshold_m: f64,
    pub discount_factor: f64,
}

impl Default for ScenicParams {
    fn default() -> Self {
        Self {
            proximity_threshold_m: 100.0,
            discount_factor: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuelParams {
    pub speed_threshold_kmh: f64,
    pub penalty_factor: f64,
}

impl Default for FuelParams {
    fn default() -> Self {
        Self {
            speed_threshold_kmh: 60.0,
            penalty_factor: 10.0,
        }
    }
}

/// How an edge is priced for routing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum WeightProfile {
    Length,
    TravelTime,
    /// Length, discounted near attraction/leisure/amenity POIs.
    Scenic(ScenicParams),
    /// Length, penalized on highways and fast roads.
    Fuel(FuelParams),
}

impl WeightProfile {
    pub fn tag(&self) -> &'static str {
        match self {
            WeightProfile::Length => "length",
            WeightProfile::TravelTime => "travel_time",
            WeightProfile::Scenic(_) => "scenic",
            WeightProfile::Fuel(_) => "fuel",
        }
    }

    pub fn validate(&self) -> Result<(), RoadNetError> {
        match *self {
            WeightProfile::Scenic(p) => {
                if !(p.discount_factor > 0.0 && p.discount_factor < 1.0) {
                    return Err(RoadNetError::InvalidProfile(format!(
                        "scenic discount_factor must lie in (0, 1), got {}",
                        p.discount_factor
                    )));
                }
                if !(p.proximity_threshold_m > 0.0) {
                    return Err(RoadNetError::InvalidProfile(format!(
                        "scenic proximity_threshold_m must be positive, got {}",
                        p.proximity_threshold_m
                    )));
                }
            }
            WeightProfile::Fuel(p) => {
                if !(p.penalty_factor > 1.0) || !p.penalty_factor.is_finite() {
                    return Err(RoadNetError::InvalidProfile(format!(
                        "fuel penalty_factor must exceed 1, got {}",
                        p.penalty_factor
                    )));
                }
                if !(p.speed_threshold_kmh > 0.0) {
                    return Err(RoadNetError::InvalidProfile(format!(
                        "fuel speed_threshold_kmh must be positive, got {}",
                        p.speed_threshold_kmh
                    )));
                }
            }
            WeightProfile::Length | WeightProfile::TravelTime => {}
        }
        Ok(())
    }
}

/// Scenic POIs sorted by latitude, for band queries.
struct PoiBand {
    points: Vec<Coord>,
}

impl PoiBand {
    fn new(pois: &[Poi]) -> Self {
        let mut points: Vec<Coord> = pois
            .iter()
            .filter(|p| p.category.is_scenic())
            .map(|p| p.location)
            .collect();
        points.sort_by(|a, b| a.lat.total_cmp(&b.lat));
        Self { points }
    }

    fn any_within(&self, at: Coord, radius_m: f64) -> bool {
        // Great-circle distance is never below the meridional distance.
        let dlat = (radius_m / EARTH_RADIUS_M).to_degrees();
        let lo = self.points.partition_point(|p| p.lat < at.lat - dlat);
        self.points[lo..]
            .iter()
            .take_while(|p| p.lat <= at.lat + dlat)
            .any(|p| haversine_m(at, *p) <= radius_m)
    }
}

fn price(edge: &Edge, profile: &WeightProfile, near_poi: impl Fn() -> bool) -> f64 {
    match profile {
        WeightProfile::Length => edge.length_m,
        WeightProfile::TravelTime => edge.travel_time_s,
        WeightProfile::Scenic(p) => {
            if near_poi() {
                edge.length_m * p.discount_factor
            } else {
                edge.length_m
            }
        }
        WeightProfile::Fuel(p) => {
            if edge.is_highway || edge.max_speed_kmh > p.speed_threshold_kmh {
                edge.length_m * p.penalty_factor
            } else {
                edge.length_m
            }
        }
    }
}

/// Weight of a single edge under `profile`.
pub fn edge_weight(
    network: &RoadNetwork,
    edge: EdgeId,
    profile: &WeightProfile,
    pois: &[Poi],
) -> Result<f64, RoadNetError> {
    profile.validate()?;
    let e = network.try_edge(edge)?;
    let near = || {
        let WeightProfile::Scenic(p) = profile else { return false };
        let band = PoiBand::new(pois);
        [e.from, e.to].iter().any(|n| {
            network
                .coord(*n)
                .is_some_and(|c| band.any_within(c, p.proximity_threshold_m))
        })
    };
    Ok(price(e, profile, near))
}

/// Per-edge weights for one profile, precomputed for repeated routing.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    values: Vec<f64>,
}

impl EdgeWeights {
    pub fn compute(
        network: &RoadNetwork,
        profile: &WeightProfile,
        pois: &[Poi],
    ) -> Result<Self, RoadNetError> {
        profile.validate()?;
        let near_node: Vec<bool> = match profile {
            WeightProfile::Scenic(p) => {
                let band = PoiBand::new(pois);
                (0..network.node_count())
                    .map(|i| band.any_within(network.coord_at(i), p.proximity_threshold_m))
                    .collect()
            }
            _ => Vec::new(),
        };
        let values = network
            .edges()
            .iter()
            .map(|e| {
                price(e, profile, || {
                    let from = network.node_idx(e.from).expect("validated at build");
                    let to = network.node_idx(e.to).expect("validated at build");
                    near_node[from] || near_node[to]
                })
            })
            .collect();
        Ok(Self { values })
    }

    /// Arbitrary positive weights, e.g. a simulated driver's preferences.
    pub fn from_fn(network: &RoadNetwork, f: impl Fn(&Edge) -> f64) -> Result<Self, RoadNetError> {
        let values: Vec<f64> = network.edges().iter().map(f).collect();
        if let Some((e, v)) = network
            .edges()
            .iter()
            .zip(&values)
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(RoadNetError::NonPositive { edge: e.id, field: "weight", value: *v });
        }
        Ok(Self { values })
    }

    pub fn get(&self, network: &RoadNetwork, edge: EdgeId) -> Option<f64> {
        network.edge_idx(edge).ok().map(|i| self.values[i])
    }

    pub(crate) fn at(&self, edge_idx: usize) -> f64 {
        self.values[edge_idx]
    }

    /// Sum of weights along `edges`; unknown edges are ignored.
    pub fn total(&self, network: &RoadNetwork, edges: &[EdgeId]) -> f64 {
        edges.iter().filter_map(|e| self.get(network, *e)).sum()
    }
}
