//! GeoJSON import and export of networks and data layers.
//!
//! Networks are written as one `Point` feature per node (properties `id`, `live`
//! and any metrics) followed by one `LineString` feature per edge (properties
//! `start`, `end`, `key` and any segment metrics). Coordinates carry six decimals.
//! Imported line features without `start`/`end` ids have their endpoints matched
//! to existing nodes within [`SNAP_TOLERANCE`], or receive generated ids.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geom::Coord;
use crate::graph::{EdgeGeom, Multigraph, Node, SNAP_TOLERANCE};
use crate::layers::DataEntry;
use crate::metrics::MetricsTable;

const RESERVED_NODE_PROPS: [&str; 2] = ["id", "live"];
const RESERVED_EDGE_PROPS: [&str; 4] = ["id", "start", "end", "key"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    GeoJson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imported {
    pub graph: Multigraph,
    /// Features that were neither node points nor lines.
    pub skipped: usize,
}

fn parse_err(index: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        index,
        message: message.into(),
    }
}

fn features(doc: &Value) -> Result<&Vec<Value>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Malformed("expected a FeatureCollection".into()));
    }
    doc.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing features array".into()))
}

fn parse_doc(source: &[u8]) -> Result<Value> {
    serde_json::from_slice(source).map_err(|e| Error::Malformed(e.to_string()))
}

fn parse_coord(index: usize, v: &Value) -> Result<Coord> {
    let arr = v
        .as_array()
        .filter(|a| a.len() >= 2)
        .ok_or_else(|| parse_err(index, "coordinate must be an array of two numbers"))?;
    match (arr[0].as_f64(), arr[1].as_f64()) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok(Coord::new(x, y)),
        _ => Err(parse_err(index, "coordinate must hold finite numbers")),
    }
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn numeric_attrs(props: &Map<String, Value>, reserved: &[&str]) -> BTreeMap<String, f64> {
    props
        .iter()
        .filter(|(k, _)| !reserved.contains(&k.as_str()))
        .filter_map(|(k, v)| v.as_f64().map(|f| (k.clone(), f)))
        .collect()
}

/// Buckets node ids by coordinate cell for endpoint snapping.
#[derive(Default)]
struct SnapIndex {
    cells: HashMap<(i64, i64), Vec<(String, Coord)>>,
}

impl SnapIndex {
    fn cell(c: Coord) -> (i64, i64) {
        (
            (c.x / SNAP_TOLERANCE).floor() as i64,
            (c.y / SNAP_TOLERANCE).floor() as i64,
        )
    }

    fn insert(&mut self, id: &str, c: Coord) {
        self.cells
            .entry(Self::cell(c))
            .or_default()
            .push((id.to_string(), c));
    }

    fn nearest(&self, c: Coord) -> Option<&str> {
        let (cx, cy) = Self::cell(c);
        let mut best: Option<(f64, &str)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for (id, p) in bucket {
                    let d = p.dist(c);
                    if d <= SNAP_TOLERANCE
                        && best.is_none_or(|(bd, bid)| d < bd || (d == bd && id.as_str() < bid))
                    {
                        best = Some((d, id));
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }
}

/// Parses a GeoJSON feature collection into a [`Multigraph`].
pub fn import_network(source: &[u8], format: Format) -> Result<Imported> {
    let Format::GeoJson = format;
    let doc = parse_doc(source)?;
    let feats = features(&doc)?;
    let mut g = Multigraph::new();
    g.crs_tag = doc.get("crs_tag").and_then(Value::as_str).map(String::from);

    let mut skipped = 0;
    let mut lines = Vec::new();
    let empty = Map::new();
    for (index, feat) in feats.iter().enumerate() {
        let obj = feat
            .as_object()
            .ok_or_else(|| parse_err(index, "feature must be an object"))?;
        let props = obj
            .get("properties")
            .and_then(Value::as_object)
            .unwrap_or(&empty);
        let geometry = obj.get("geometry").unwrap_or(&Value::Null);
        match geometry.get("type").and_then(Value::as_str) {
            Some("Point") => {
                let Some(id) = props.get("id").and_then(id_string) else {
                    skipped += 1;
                    continue;
                };
                let c = parse_coord(index, geometry.get("coordinates").unwrap_or(&Value::Null))?;
                if g.nodes.contains_key(&id) {
                    return Err(parse_err(index, format!("duplicate node id {id}")));
                }
                let mut node = Node::new(id, c.x, c.y);
                node.live = props.get("live").and_then(Value::as_bool).unwrap_or(true);
                node.attrs = numeric_attrs(props, &RESERVED_NODE_PROPS);
                g.insert_node(node);
            }
            Some("LineString") => {
                let coords = geometry
                    .get("coordinates")
                    .and_then(Value::as_array)
                    .ok_or_else(|| parse_err(index, "LineString without coordinates"))?;
                let points = coords
                    .iter()
                    .map(|c| parse_coord(index, c))
                    .collect::<Result<Vec<_>>>()?;
                if points.len() < 2 {
                    return Err(parse_err(index, "LineString needs at least two positions"));
                }
                lines.push((index, Some(points), props));
            }
            None if geometry.is_null() && props.contains_key("start") => {
                lines.push((index, None, props));
            }
            _ => skipped += 1,
        }
    }

    let mut snap = SnapIndex::default();
    for node in g.nodes.values() {
        snap.insert(&node.id, node.coord());
    }
    let mut next_generated = 0usize;
    let mut resolve = |g: &mut Multigraph,
                       snap: &mut SnapIndex,
                       index: usize,
                       explicit: Option<String>,
                       at: Option<Coord>|
     -> Result<String> {
        if let Some(id) = explicit {
            if !g.nodes.contains_key(&id) {
                let c = at.ok_or_else(|| {
                    parse_err(index, format!("node {id} undeclared and edge has no geometry"))
                })?;
                g.add_node(id.clone(), c.x, c.y);
                snap.insert(&id, c);
            }
            return Ok(id);
        }
        let c = at.ok_or_else(|| parse_err(index, "edge without geometry needs start and end"))?;
        if let Some(id) = snap.nearest(c) {
            return Ok(id.to_string());
        }
        let id = loop {
            let candidate = format!("n{next_generated}");
            next_generated += 1;
            if !g.nodes.contains_key(&candidate) {
                break candidate;
            }
        };
        g.add_node(id.clone(), c.x, c.y);
        snap.insert(&id, c);
        Ok(id)
    };

    for (index, points, props) in lines {
        let first = points.as_ref().map(|p| p[0]);
        let last = points.as_ref().map(|p| p[p.len() - 1]);
        let start = resolve(&mut g, &mut snap, index, props.get("start").and_then(id_string), first)?;
        let end = resolve(&mut g, &mut snap, index, props.get("end").and_then(id_string), last)?;
        let geom = match points {
            Some(mut pts) => {
                let n = pts.len();
                for (slot, id) in [(0, &start), (n - 1, &end)] {
                    let c = g.nodes[id].coord();
                    let offset = c.dist(pts[slot]);
                    if offset > SNAP_TOLERANCE {
                        return Err(Error::SnapTolerance {
                            node: id.clone(),
                            offset,
                        });
                    }
                    pts[slot] = c;
                }
                Some(EdgeGeom::new(pts))
            }
            None => None,
        };
        let key = match props.get("key") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .and_then(|k| u32::try_from(k).ok())
                    .ok_or_else(|| parse_err(index, "key must be a small non-negative integer"))?,
            ),
        };
        let ek = match key {
            Some(k) => g.insert_edge(&start, &end, k, geom)?,
            None => g.add_edge(&start, &end, geom),
        };
        g.edges.get_mut(&ek).unwrap().attrs = numeric_attrs(props, &RESERVED_EDGE_PROPS);
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} features that are neither node points nor lines");
    }
    Ok(Imported { graph: g, skipped })
}

fn write_coord(out: &mut String, c: Coord) {
    write!(out, "[{:.6},{:.6}]", c.x, c.y).unwrap();
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn write_feature(out: &mut String, geometry: &str, props: Map<String, Value>) {
    out.push_str("{\"type\":\"Feature\",\"geometry\":");
    out.push_str(geometry);
    out.push_str(",\"properties\":");
    out.push_str(&serde_json::to_string(&Value::Object(props)).unwrap());
    out.push('}');
}

/// Serialises a network, overlaying `metrics` onto node and edge properties.
pub fn export_network(
    g: &Multigraph,
    metrics: Option<&MetricsTable>,
    format: Format,
) -> Result<String> {
    let Format::GeoJson = format;
    let mut node_cols: HashMap<&str, usize> = HashMap::new();
    let mut edge_cols = HashMap::new();
    if let Some(m) = metrics {
        let unknown: Vec<String> = m
            .node_ids
            .iter()
            .filter(|id| !g.nodes.contains_key(*id))
            .cloned()
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownNodes(unknown));
        }
        let unknown: Vec<String> = m
            .edge_keys
            .iter()
            .filter(|k| !g.edges.contains_key(*k))
            .map(ToString::to_string)
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownEdges(unknown));
        }
        node_cols = m.node_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        edge_cols = m.edge_keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    }

    let mut out = String::from("{\"type\":\"FeatureCollection\"");
    if let Some(tag) = &g.crs_tag {
        out.push_str(",\"crs_tag\":");
        out.push_str(&serde_json::to_string(tag).unwrap());
    }
    out.push_str(",\"features\":[");
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !first {
            out.push(',');
        }
        first = false;
        out.push('\n');
    };
    for node in g.nodes.values() {
        let mut props = Map::new();
        props.insert("id".into(), Value::String(node.id.clone()));
        props.insert("live".into(), Value::Bool(node.live));
        for (k, v) in &node.attrs {
            props.insert(k.clone(), number(*v));
        }
        if let (Some(m), Some(&i)) = (metrics, node_cols.get(node.id.as_str())) {
            for (name, col) in &m.nodes {
                props.insert(name.clone(), number(col[i]));
            }
        }
        let mut geometry = String::from("{\"type\":\"Point\",\"coordinates\":");
        write_coord(&mut geometry, node.coord());
        geometry.push('}');
        sep(&mut out);
        write_feature(&mut out, &geometry, props);
    }
    for (key, edge) in &g.edges {
        let mut props = Map::new();
        props.insert("start".into(), Value::String(key.start.clone()));
        props.insert("end".into(), Value::String(key.end.clone()));
        props.insert("key".into(), Value::from(key.key));
        for (k, v) in &edge.attrs {
            props.insert(k.clone(), number(*v));
        }
        if let (Some(m), Some(&i)) = (metrics, edge_cols.get(key)) {
            for (name, col) in &m.edges {
                props.insert(name.clone(), number(col[i]));
            }
        }
        let geometry = match &edge.geom {
            Some(geom) => {
                let mut s = String::from("{\"type\":\"LineString\",\"coordinates\":[");
                for (i, c) in geom.points.iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    write_coord(&mut s, *c);
                }
                s.push_str("]}");
                s
            }
            None => "null".to_string(),
        };
        sep(&mut out);
        write_feature(&mut out, &geometry, props);
    }
    out.push_str("\n]}\n");
    Ok(out)
}

/// Reads `Point` features as data entries. `id` comes from the `id` property,
/// falling back to the feature index.
pub fn import_data(
    source: &[u8],
    category_field: Option<&str>,
    value_fields: &[String],
) -> Result<Vec<DataEntry>> {
    let doc = parse_doc(source)?;
    let mut entries = Vec::new();
    for (index, feat) in features(&doc)?.iter().enumerate() {
        let geometry = feat.get("geometry").unwrap_or(&Value::Null);
        if geometry.get("type").and_then(Value::as_str) != Some("Point") {
            log::warn!("data feature {index} is not a Point; skipped");
            continue;
        }
        let c = parse_coord(index, geometry.get("coordinates").unwrap_or(&Value::Null))?;
        let empty = Map::new();
        let props = feat
            .get("properties")
            .and_then(Value::as_object)
            .unwrap_or(&empty);
        let id = props
            .get("id")
            .and_then(id_string)
            .unwrap_or_else(|| index.to_string());
        let mut entry = DataEntry::new(id, c.x, c.y);
        if let Some(field) = category_field {
            entry.category = props.get(field).and_then(id_string);
        }
        for field in value_fields {
            match props.get(field) {
                None | Some(Value::Null) => {}
                Some(v) => {
                    let f = v.as_f64().ok_or_else(|| Error::InvalidEntry {
                        entry: entry.id.clone(),
                        message: format!("field {field} is not numeric: {v}"),
                    })?;
                    entry.values.insert(field.clone(), f);
                }
            }
        }
        entries.push(entry);
    }
    Ok(entries)
}
