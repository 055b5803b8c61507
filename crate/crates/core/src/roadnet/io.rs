//! Text formats for networks and POIs.
//!
//! Network file:
//!
//! ```text
//! #nodes
//! node_id,lat,lon
//! #edges
//! edge_id,from,to,length_m,travel_time_s,max_speed_kmh,road_name,is_highway,one_way
//! ```
//!
//! POI file: `poi_id,lat,lon,category`. Any other line starting with `#` is
//! a comment; blank lines are ignored. Fields follow CSV quoting, so road
//! names containing commas are double-quoted.

use std::fs;
use std::str::FromStr;

use csv::StringRecord;

use super::{Coord, Edge, EdgeId, NodeId, Poi, RoadNetError, RoadNetwork};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Edges,
}

fn split_record(line: &str, line_no: usize) -> Result<StringRecord, RoadNetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(line.as_bytes());
    match reader.records().next() {
        Some(Ok(record)) => Ok(record),
        Some(Err(e)) => Err(malformed(line_no, e.to_string())),
        None => Err(malformed(line_no, "empty record")),
    }
}

fn malformed(line: usize, message: impl Into<String>) -> RoadNetError {
    RoadNetError::Malformed {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(record: &StringRecord, i: usize, name: &str, line: usize) -> Result<T, RoadNetError> {
    let raw = record
        .get(i)
        .ok_or_else(|| malformed(line, format!("missing field {name}")))?;
    raw.parse()
        .map_err(|_| malformed(line, format!("invalid {name}: {raw:?}")))
}

fn flag(record: &StringRecord, i: usize, name: &str, line: usize) -> Result<bool, RoadNetError> {
    let raw = record
        .get(i)
        .ok_or_else(|| malformed(line, format!("missing field {name}")))?;
    match raw.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(malformed(line, format!("invalid {name}: {raw:?}"))),
    }
}

fn is_header(record: &StringRecord, name: &str) -> bool {
    record.get(0).is_some_and(|f| f.eq_ignore_ascii_case(name))
}

/// Parses a network file's contents.
pub fn parse_network(text: &str) -> Result<RoadNetwork, RoadNetError> {
    let mut section = Section::None;
    let mut nodes: Vec<(usize, NodeId, Coord)> = Vec::new();
    let mut edges: Vec<(usize, Edge)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            match rest.trim().to_ascii_lowercase().as_str() {
                "nodes" => section = Section::Nodes,
                "edges" => section = Section::Edges,
                _ => {}
            }
            continue;
        }
        let record = split_record(line, line_no)?;
        match section {
            Section::None => {
                return Err(malformed(line_no, "record outside #nodes/#edges section"));
            }
            Section::Nodes => {
                if is_header(&record, "node_id") {
                    continue;
                }
                if record.len() != 3 {
                    return Err(malformed(line_no, format!("expected 3 node fields, got {}", record.len())));
                }
                let id = NodeId(field(&record, 0, "node_id", line_no)?);
                let lat: f64 = field(&record, 1, "lat", line_no)?;
                let lon: f64 = field(&record, 2, "lon", line_no)?;
                if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                    return Err(malformed(line_no, "coordinates out of range"));
                }
                nodes.push((line_no, id, Coord::new(lat, lon)));
            }
            Section::Edges => {
                if is_header(&record, "edge_id") {
                    continue;
                }
                if record.len() != 9 {
                    return Err(malformed(line_no, format!("expected 9 edge fields, got {}", record.len())));
                }
                let edge = Edge {
                    id: EdgeId(field(&record, 0, "edge_id", line_no)?),
                    from: NodeId(field(&record, 1, "from", line_no)?),
                    to: NodeId(field(&record, 2, "to", line_no)?),
                    length_m: field(&record, 3, "length_m", line_no)?,
                    travel_time_s: field(&record, 4, "travel_time_s", line_no)?,
                    max_speed_kmh: field(&record, 5, "max_speed_kmh", line_no)?,
                    road_name: record.get(6).unwrap_or_default().to_string(),
                    is_highway: flag(&record, 7, "is_highway", line_no)?,
                    one_way: flag(&record, 8, "one_way", line_no)?,
                };
                edges.push((line_no, edge));
            }
        }
    }

    // Re-run the builder checks record by record so errors carry line numbers.
    let mut seen_nodes = std::collections::HashMap::new();
    for (line, id, _) in &nodes {
        if seen_nodes.insert(*id, *line).is_some() {
            return Err(at_line(*line, RoadNetError::DuplicateNode(*id)));
        }
    }
    let mut seen_edges = std::collections::HashSet::new();
    for (line, edge) in &edges {
        if !seen_edges.insert(edge.id) {
            return Err(at_line(*line, RoadNetError::DuplicateEdge(edge.id)));
        }
        for node in [edge.from, edge.to] {
            if !seen_nodes.contains_key(&node) {
                return Err(at_line(*line, RoadNetError::DanglingNode { edge: edge.id, node }));
            }
        }
        for (name, value) in [
            ("length_m", edge.length_m),
            ("travel_time_s", edge.travel_time_s),
            ("max_speed_kmh", edge.max_speed_kmh),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(at_line(
                    *line,
                    RoadNetError::NonPositive { edge: edge.id, field: name, value },
                ));
            }
        }
    }

    let mut builder = RoadNetwork::builder();
    for (_, id, coord) in nodes {
        builder.node(id, coord);
    }
    for (_, edge) in edges {
        builder.edge(edge);
    }
    builder.build()
}

fn at_line(line: usize, source: RoadNetError) -> RoadNetError {
    RoadNetError::Record {
        line,
        source: Box::new(source),
    }
}

pub fn load_network(path: impl AsRef<std::path::Path>) -> Result<RoadNetwork, RoadNetError> {
    parse_network(&fs::read_to_string(path)?)
}

pub fn parse_pois(text: &str) -> Result<Vec<Poi>, RoadNetError> {
    let mut pois = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let record = split_record(line, line_no)?;
        if is_header(&record, "poi_id") {
            continue;
        }
        if record.len() != 4 {
            return Err(malformed(line_no, format!("expected 4 POI fields, got {}", record.len())));
        }
        let category = record[3]
            .parse()
            .map_err(|e: String| malformed(line_no, e))?;
        pois.push(Poi {
            id: field(&record, 0, "poi_id", line_no)?,
            location: Coord::new(field(&record, 1, "lat", line_no)?, field(&record, 2, "lon", line_no)?),
            category,
        });
    }
    Ok(pois)
}

pub fn load_pois(path: impl AsRef<std::path::Path>) -> Result<Vec<Poi>, RoadNetError> {
    parse_pois(&fs::read_to_string(path)?)
}

fn csv_line(fields: &[String]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(fields).expect("in-memory write");
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Serializes a network in the format read by [`parse_network`].
pub fn write_network(network: &RoadNetwork) -> String {
    let mut out = String::from("#nodes\n");
    for &id in network.node_ids() {
        let c = network.coord(id).expect("listed node");
        out.push_str(&csv_line(&[id.to_string(), c.lat.to_string(), c.lon.to_string()]));
    }
    out.push_str("#edges\n");
    for e in network.edges() {
        out.push_str(&csv_line(&[
            e.id.to_string(),
            e.from.to_string(),
            e.to.to_string(),
            e.length_m.to_string(),
            e.travel_time_s.to_string(),
            e.max_speed_kmh.to_string(),
            e.road_name.clone(),
            e.is_highway.to_string(),
            e.one_way.to_string(),
        ]));
    }
    out
}

pub fn write_pois(pois: &[Poi]) -> String {
    let mut out = String::new();
    for p in pois {
        out.push_str(&csv_line(&[
            p.id.to_string(),
            p.location.lat.to_string(),
            p.location.lon.to_string(),
            p.category.as_str().to_string(),
        ]));
    }
    out
}
