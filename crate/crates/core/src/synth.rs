//! Synthetic road networks and trajectory datasets for tests, examples and
//! offline experiments.
//!
//! [`grid_network`] is a uniform grid with unit-like weights. [`SyntheticCity`]
//! is a jittered grid with named streets, a highway cross, arterials, one-way
//! locals, clustered POIs, an address book and simulated drivers who prefer
//! POI-rich streets and avoid fast roads.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{write_trajectories, AddressBook, Trajectory};
use crate::roadnet::{
    shortest_path_weighted, write_network, write_pois, Coord, Edge, EdgeId, EdgeWeights, NodeId, Poi,
    PoiCategory, RoadNetError, RoadNetwork, EARTH_RADIUS_M,
};

const STREETS: [&str; 20] = [
    "Elm", "Oak", "Pine", "Maple", "Cedar", "Birch", "Willow", "Aspen", "Spruce", "Poplar", "Chestnut",
    "Hawthorn", "Juniper", "Laurel", "Magnolia", "Sycamore", "Alder", "Hazel", "Linden", "Rowan",
];
const AVENUES: [&str; 20] = [
    "Amber", "Beacon", "Crescent", "Dover", "Eastgate", "Fairview", "Granite", "Harbor", "Ivy", "Jasper",
    "Kingston", "Lakeview", "Meadow", "Northfield", "Orchard", "Prospect", "Quarry", "Riverside", "Summit",
    "Tidewater",
];

const BASE: Coord = Coord { lat: 30.66, lon: 104.06 };

const ROW_SUFFIX: [&str; 5] = ["Street", "Road", "Lane", "Way", "Drive"];
const COL_SUFFIX: [&str; 5] = ["Avenue", "Boulevard", "Parkway", "Terrace", "Place"];

fn row_name(r: usize) -> String {
    format!("{} {}", STREETS[r % STREETS.len()], ROW_SUFFIX[r % ROW_SUFFIX.len()])
}

fn col_name(c: usize) -> String {
    format!("{} {}", AVENUES[c % AVENUES.len()], COL_SUFFIX[c % COL_SUFFIX.len()])
}

fn offset(origin: Coord, north_m: f64, east_m: f64) -> Coord {
    let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
    let dlon = (east_m / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    Coord::new(origin.lat + dlat, origin.lon + dlon)
}

/// `rows × cols` grid, node `r * cols + c`, every edge `spacing_m` long with
/// a travel time of a tenth of its length. Horizontal edges get ids first,
/// then vertical ones. All edges are two-way.
pub fn grid_network(rows: usize, cols: usize, spacing_m: f64) -> RoadNetwork {
    let mut b = RoadNetwork::builder();
    for r in 0..rows {
        for c in 0..cols {
            let coord = offset(BASE, r as f64 * spacing_m, c as f64 * spacing_m);
            b.node(NodeId((r * cols + c) as u64), coord);
        }
    }
    let mut next = 0u64;
    let mut add = |b: &mut crate::roadnet::RoadNetworkBuilder, from: usize, to: usize, name: String| {
        b.edge(Edge {
            id: EdgeId(next),
            from: NodeId(from as u64),
            to: NodeId(to as u64),
            length_m: spacing_m,
            travel_time_s: spacing_m / 10.0,
            max_speed_kmh: 36.0,
            road_name: name,
            is_highway: false,
            one_way: false,
        });
        next += 1;
    };
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            add(&mut b, r * cols + c, r * cols + c + 1, row_name(r));
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            add(&mut b, r * cols + c, (r + 1) * cols + c, col_name(c));
        }
    }
    b.build().expect("grid is well formed")
}

/// Knobs for [`SyntheticCity::generate`].
#[derive(Debug, Clone)]
pub struct CityParams {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// Distinct origin-destination pairs in the knowledge-base trajectories.
    pub od_pairs: usize,
    /// Extra trajectories repeating an already used OD pair.
    pub duplicates: usize,
    /// Evaluation trajectories, each sharing its OD pair with a kb trajectory.
    pub held_out: usize,
    pub poi_clusters: usize,
    pub pois_per_cluster: usize,
}

impl Default for CityParams {
    fn default() -> Self {
        Self {
            rows: 20,
            cols: 20,
            spacing_m: 150.0,
            od_pairs: 200,
            duplicates: 20,
            held_out: 50,
            poi_clusters: 6,
            pois_per_cluster: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub network: RoadNetwork,
    pub pois: Vec<Poi>,
    pub addresses: AddressBook,
    pub trajectories: Vec<Trajectory>,
    pub held_out: Vec<Trajectory>,
}

/// File names used by [`SyntheticCity::write_to`].
#[derive(Debug, Clone)]
pub struct CityFiles {
    pub network: PathBuf,
    pub pois: PathBuf,
    pub addresses: PathBuf,
    pub trajectories: PathBuf,
    pub held_out: PathBuf,
}

impl SyntheticCity {
    pub fn generate(params: &CityParams, seed: u64) -> Result<Self, RoadNetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rows, cols) = (params.rows, params.cols);
        if rows < 2 || cols < 2 {
            return Err(RoadNetError::EmptyNetwork);
        }
        let jitter = params.spacing_m * 0.1;
        let id = |r: usize, c: usize| NodeId((r * cols + c) as u64);

        let mut b = RoadNetwork::builder();
        let mut coords = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let north = r as f64 * params.spacing_m + rng.random_range(-jitter..jitter);
                let east = c as f64 * params.spacing_m + rng.random_range(-jitter..jitter);
                let coord = offset(BASE, north, east);
                coords.push(coord);
                b.node(id(r, c), coord);
            }
        }

        let (hr, hc) = (rows / 2, cols / 2);
        let arterial = |i: usize, n: usize| n > 8 && (i == n / 4 || i == 3 * n / 4);
        let mut next = 0u64;
        let mut add = |b: &mut crate::roadnet::RoadNetworkBuilder,
                       rng: &mut ChaCha8Rng,
                       from: (usize, usize),
                       to: (usize, usize),
                       name: String,
                       kind: RoadKind,
                       one_way: bool| {
            let a = coords[from.0 * cols + from.1];
            let z = coords[to.0 * cols + to.1];
            let length_m = crate::roadnet::haversine_m(a, z);
            let (speed, congestion) = match kind {
                RoadKind::Highway => (100.0, rng.random_range(1.0..1.2)),
                RoadKind::Arterial => (70.0, rng.random_range(1.0..1.5)),
                RoadKind::Local => (40.0, rng.random_range(1.0..1.6)),
            };
            b.edge(Edge {
                id: EdgeId(next),
                from: id(from.0, from.1),
                to: id(to.0, to.1),
                length_m,
                travel_time_s: length_m / (speed / 3.6) * congestion,
                max_speed_kmh: speed,
                road_name: name,
                is_highway: kind == RoadKind::Highway,
                one_way,
            });
            next += 1;
        };

        for r in 0..rows {
            let (kind, name) = if r == hr {
                (RoadKind::Highway, "Jinjiang Expressway".to_string())
            } else if arterial(r, rows) {
                (RoadKind::Arterial, row_name(r))
            } else {
                (RoadKind::Local, row_name(r))
            };
            // Every fourth local row is one-way, alternating direction.
            let one_way = kind == RoadKind::Local && r % 4 == 3;
            let eastbound = (r / 4) % 2 == 0;
            for c in 0..cols - 1 {
                let (from, to) = if one_way && !eastbound { ((r, c + 1), (r, c)) } else { ((r, c), (r, c + 1)) };
                add(&mut b, &mut rng, from, to, name.clone(), kind, one_way);
            }
        }
        for c in 0..cols {
            let (kind, name) = if c == hc {
                (RoadKind::Highway, "Airport Expressway".to_string())
            } else if arterial(c, cols) {
                (RoadKind::Arterial, col_name(c))
            } else {
                (RoadKind::Local, col_name(c))
            };
            for r in 0..rows - 1 {
                add(&mut b, &mut rng, (r, c), (r + 1, c), name.clone(), kind, false);
            }
        }
        let network = b.build()?;

        let pois = scatter_pois(&network, params, &mut rng);

        let mut addresses = AddressBook::new();
        for r in 0..rows {
            for c in 0..cols {
                // The cross street, unless that is the highway.
                let incident: Vec<&Edge> = network
                    .incident_edges(id(r, c))
                    .into_iter()
                    .filter_map(|e| network.edge(e))
                    .filter(|e| !e.is_highway)
                    .collect();
                let horizontal = |e: &&&Edge| e.from.0 / cols as u64 == e.to.0 / cols as u64;
                let street = incident
                    .iter()
                    .find(horizontal)
                    .or(incident.first())
                    .map(|e| e.road_name.clone())
                    .unwrap_or_else(|| row_name(r));
                addresses.insert(id(r, c), format!("{} {street}", 100 * (r + 1) + 2 * (c + 1)));
            }
        }

        let driver = DriverModel::new(&network, &pois);
        let nodes = network.node_ids().to_vec();
        let min_hops = (rows + cols) / 5;
        let mut pairs: Vec<(NodeId, NodeId)> = Vec::new();
        let mut seen = BTreeSet::new();
        while pairs.len() < params.od_pairs {
            let o = nodes[rng.random_range(0..nodes.len())];
            let d = nodes[rng.random_range(0..nodes.len())];
            let hops = {
                let (ro, co) = (o.0 as usize / cols, o.0 as usize % cols);
                let (rd, cd) = (d.0 as usize / cols, d.0 as usize % cols);
                ro.abs_diff(rd) + co.abs_diff(cd)
            };
            if hops < min_hops.max(2) || !seen.insert((o, d)) {
                continue;
            }
            pairs.push((o, d));
        }

        let mut trajectories = Vec::with_capacity(params.od_pairs + params.duplicates);
        for &(o, d) in &pairs {
            trajectories.push(driver.drive(&network, o, d, &mut rng)?);
        }
        let mut extra: Vec<usize> = (0..pairs.len()).collect();
        extra.shuffle(&mut rng);
        for &i in extra.iter().take(params.duplicates) {
            let (o, d) = pairs[i];
            let at = rng.random_range(0..=trajectories.len());
            // Inserted after the first occurrence so deduplication keeps the original.
            let first = trajectories
                .iter()
                .position(|t| network.walk_unanchored(&t.edges).is_ok_and(|p| (p.origin, p.destination) == (o, d)))
                .expect("pair driven above");
            trajectories.insert(at.max(first + 1), driver.drive(&network, o, d, &mut rng)?);
        }

        extra.shuffle(&mut rng);
        let mut held_out = Vec::with_capacity(params.held_out);
        for &i in extra.iter().take(params.held_out) {
            let (o, d) = pairs[i];
            held_out.push(driver.drive(&network, o, d, &mut rng)?);
        }

        Ok(Self {
            network,
            pois,
            addresses,
            trajectories,
            held_out,
        })
    }

    /// Writes the city's input files into `dir`.
    pub fn write_to(&self, dir: &FsPath) -> std::io::Result<CityFiles> {
        fs::create_dir_all(dir)?;
        let files = CityFiles {
            network: dir.join("network.txt"),
            pois: dir.join("pois.csv"),
            addresses: dir.join("addresses.csv"),
            trajectories: dir.join("trajectories.txt"),
            held_out: dir.join("heldout.txt"),
        };
        fs::write(&files.network, write_network(&self.network))?;
        fs::write(&files.pois, write_pois(&self.pois))?;
        fs::write(&files.addresses, self.addresses.write())?;
        fs::write(&files.trajectories, write_trajectories(&self.trajectories))?;
        fs::write(&files.held_out, write_trajectories(&self.held_out))?;
        Ok(files)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RoadKind {
    Highway,
    Arterial,
    Local,
}

fn scatter_pois(network: &RoadNetwork, params: &CityParams, rng: &mut ChaCha8Rng) -> Vec<Poi> {
    let nodes = network.node_ids();
    let categories = [
        PoiCategory::Attraction,
        PoiCategory::Leisure,
        PoiCategory::Amenity,
        PoiCategory::Leisure,
        PoiCategory::Other,
    ];
    let spread = params.spacing_m * 1.5;
    let mut pois = Vec::new();
    for _ in 0..params.poi_clusters {
        let center = network
            .coord(nodes[rng.random_range(0..nodes.len())])
            .expect("node in network");
        for _ in 0..params.pois_per_cluster {
            let location = offset(center, rng.random_range(-spread..spread), rng.random_range(-spread..spread));
            pois.push(Poi {
                id: pois.len() as u64 + 1,
                location,
                category: categories[rng.random_range(0..categories.len())],
            });
        }
    }
    pois
}

/// Drivers pay perceived cost: length, cheaper next to scenic POIs, dearer on
/// fast roads, with per-trip noise.
struct DriverModel {
    base: Vec<f64>,
}

impl DriverModel {
    fn new(network: &RoadNetwork, pois: &[Poi]) -> Self {
        let scenic = crate::roadnet::WeightProfile::Scenic(Default::default());
        let discounted = EdgeWeights::compute(network, &scenic, pois).expect("valid profile");
        let base = network
            .edges()
            .iter()
            .map(|e| {
                let near_poi = discounted.get(network, e.id).is_some_and(|w| w < e.length_m);
                let mut w = e.length_m;
                if near_poi {
                    w *= 0.5;
                }
                if e.is_highway || e.max_speed_kmh > 60.0 {
                    w *= 2.5;
                }
                w
            })
            .collect();
        Self { base }
    }

    fn drive(
        &self,
        network: &RoadNetwork,
        origin: NodeId,
        destination: NodeId,
        rng: &mut ChaCha8Rng,
    ) -> Result<Trajectory, RoadNetError> {
        let noise: Vec<f64> = (0..self.base.len()).map(|_| rng.random_range(0.85..1.15)).collect();
        let index = |e: &Edge| network.edges().binary_search_by_key(&e.id, |x| x.id).expect("own edge");
        let weights = EdgeWeights::from_fn(network, |e| {
            let i = index(e);
            self.base[i] * noise[i]
        })?;
        let (path, _) = shortest_path_weighted(network, origin, destination, &weights)?;
        Ok(Trajectory::new(path.edges))
    }
}
