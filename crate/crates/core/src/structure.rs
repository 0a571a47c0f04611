//! Flat, index-based traversal form of a [`Multigraph`], plus the graph
//! transformations that precede it: decomposition and primal-to-dual conversion.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::geom::{self, Coord};
use crate::graph::{EdgeGeom, EdgeKey, Multigraph, Node};
use crate::metrics::MetricsTable;

/// One traversal direction of an undirected edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    pub start_idx: usize,
    pub end_idx: usize,
    /// Polyline length in metres.
    pub length: f64,
    /// Cumulative absolute turning along the polyline, in degrees.
    pub angle_sum: f64,
    /// Compass bearing of the first geometry step.
    pub in_bearing: f64,
    /// Compass bearing of the last geometry step.
    pub out_bearing: f64,
    /// Index into [`NetworkStructure::segments`].
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub key: EdgeKey,
    /// Geometry oriented from `key.start` to `key.end`.
    pub geom: EdgeGeom,
    pub attrs: BTreeMap<String, f64>,
    pub length: f64,
    /// Forward (`start -> end`) and backward record indices.
    pub records: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkStructure {
    pub node_ids: Vec<String>,
    pub node_x: Vec<f64>,
    pub node_y: Vec<f64>,
    pub node_live: Vec<bool>,
    pub node_attrs: Vec<BTreeMap<String, f64>>,
    /// Directed records grouped by start node; see [`NetworkStructure::out_range`].
    pub edges: Vec<EdgeRecord>,
    /// `offsets[i]..offsets[i + 1]` holds the records leaving node `i`.
    pub offsets: Vec<usize>,
    pub segments: Vec<Segment>,
    pub crs_tag: Option<String>,
}

fn directed_record(points: &[Coord], start_idx: usize, end_idx: usize, segment: usize) -> EdgeRecord {
    let (in_bearing, out_bearing) = geom::terminal_bearings(points).unwrap_or((0.0, 0.0));
    EdgeRecord {
        start_idx,
        end_idx,
        length: geom::polyline_length(points),
        angle_sum: geom::angle_sum(points),
        in_bearing,
        out_bearing,
        segment,
    }
}

impl NetworkStructure {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn out_range(&self, node: usize) -> Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    pub fn out_edges(&self, node: usize) -> &[EdgeRecord] {
        &self.edges[self.out_range(node)]
    }

    pub fn coord(&self, node: usize) -> Coord {
        Coord::new(self.node_x[node], self.node_y[node])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_ids.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    /// The record traversing the same segment in the opposite direction.
    pub fn reverse_record(&self, record: usize) -> usize {
        let [fwd, bwd] = self.segments[self.edges[record].segment].records;
        if record == fwd {
            bwd
        } else {
            fwd
        }
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Flattens a projected multigraph. Every edge needs a geometry of positive length.
pub fn build_structure(g: &Multigraph) -> Result<NetworkStructure> {
    let node_ids: Vec<String> = g.nodes.keys().cloned().collect();
    let index: BTreeMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut staged = Vec::with_capacity(g.edges.len() * 2);
    let mut segments = Vec::with_capacity(g.edges.len());
    for (key, edge) in &g.edges {
        let geom = edge.geom.clone().ok_or_else(|| Error::MissingGeometry {
            start: key.start.clone(),
            end: key.end.clone(),
            key: key.key,
        })?;
        let unknown = || Error::UnknownNodes(vec![key.to_string()]);
        let a = *index.get(key.start.as_str()).ok_or_else(unknown)?;
        let b = *index.get(key.end.as_str()).ok_or_else(unknown)?;
        let seg = segments.len();
        let forward = directed_record(&geom.points, a, b, seg);
        if !(forward.length > 0.0) {
            return Err(Error::ZeroLengthEdge {
                start: key.start.clone(),
                end: key.end.clone(),
                key: key.key,
            });
        }
        let reversed = geom.reversed();
        let backward = directed_record(&reversed.points, b, a, seg);
        staged.push((a, seg, 0usize, forward));
        staged.push((b, seg, 1usize, backward));
        segments.push(Segment {
            key: key.clone(),
            length: forward.length,
            geom,
            attrs: edge.attrs.clone(),
            records: [0, 0],
        });
    }
    staged.sort_by_key(|&(start, seg, dir, _)| (start, seg, dir));

    let n = node_ids.len();
    let mut offsets = vec![0usize; n + 1];
    let mut edges = Vec::with_capacity(staged.len());
    for (i, (start, seg, dir, rec)) in staged.into_iter().enumerate() {
        offsets[start + 1] += 1;
        segments[seg].records[dir] = i;
        edges.push(rec);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }

    let nodes: Vec<&Node> = g.nodes.values().collect();
    Ok(NetworkStructure {
        node_x: nodes.iter().map(|n| n.x).collect(),
        node_y: nodes.iter().map(|n| n.y).collect(),
        node_live: nodes.iter().map(|n| n.live).collect(),
        node_attrs: nodes.iter().map(|n| n.attrs.clone()).collect(),
        node_ids,
        edges,
        offsets,
        segments,
        crs_tag: g.crs_tag.clone(),
    })
}

/// Rebuilds a multigraph from a structure, attaching metric columns as node and
/// edge attributes.
pub fn structure_to_graph(s: &NetworkStructure, metrics: Option<&MetricsTable>) -> Result<Multigraph> {
    if let Some(m) = metrics {
        if m.node_ids.len() != s.node_count() {
            return Err(Error::MetricsShape {
                what: "nodes",
                expected: s.node_count(),
                found: m.node_ids.len(),
            });
        }
        if m.edge_keys.len() != s.segment_count() {
            return Err(Error::MetricsShape {
                what: "edges",
                expected: s.segment_count(),
                found: m.edge_keys.len(),
            });
        }
        for col in m.nodes.values() {
            if col.len() != s.node_count() {
                return Err(Error::MetricsShape {
                    what: "nodes",
                    expected: s.node_count(),
                    found: col.len(),
                });
            }
        }
    }
    let mut g = Multigraph::new();
    g.crs_tag = s.crs_tag.clone();
    for i in 0..s.node_count() {
        let mut node = Node::new(s.node_ids[i].clone(), s.node_x[i], s.node_y[i]);
        node.live = s.node_live[i];
        node.attrs = s.node_attrs[i].clone();
        if let Some(m) = metrics {
            for (name, col) in &m.nodes {
                node.attrs.insert(name.clone(), col[i]);
            }
        }
        g.insert_node(node);
    }
    for (i, seg) in s.segments.iter().enumerate() {
        let k = g.insert_edge(&seg.key.start, &seg.key.end, seg.key.key, Some(seg.geom.clone()))?;
        let edge = g.edges.get_mut(&k).unwrap();
        edge.attrs = seg.attrs.clone();
        if let Some(m) = metrics {
            for (name, col) in &m.edges {
                edge.attrs.insert(name.clone(), col[i]);
            }
        }
    }
    Ok(g)
}

fn require_geom<'a>(key: &EdgeKey, geom: &'a Option<EdgeGeom>) -> Result<&'a EdgeGeom> {
    geom.as_ref().ok_or_else(|| Error::MissingGeometry {
        start: key.start.clone(),
        end: key.end.clone(),
        key: key.key,
    })
}

fn fresh_id(g: &Multigraph, base: String) -> String {
    let mut id = base;
    while g.nodes.contains_key(&id) {
        id.push('~');
    }
    id
}

/// Splits every edge longer than `max_len` into `ceil(L / max_len)` equal parts.
/// Inserted nodes are named `{start}_{end}_{key}:{k}`.
pub fn decompose(g: &Multigraph, max_len: f64) -> Result<Multigraph> {
    if !(max_len > 0.0) || !max_len.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "max_len must be positive, got {max_len}"
        )));
    }
    let mut out = Multigraph {
        nodes: g.nodes.clone(),
        edges: BTreeMap::new(),
        crs_tag: g.crs_tag.clone(),
    };
    for (key, edge) in &g.edges {
        let geom = require_geom(key, &edge.geom)?;
        let length = geom.length();
        let parts = (length / max_len).ceil() as usize;
        if parts <= 1 {
            let k = out.insert_edge(&key.start, &key.end, key.key, Some(geom.clone()))?;
            out.edges.get_mut(&k).unwrap().attrs = edge.attrs.clone();
            continue;
        }
        let step = length / parts as f64;
        let cuts: Vec<f64> = (1..parts).map(|k| step * k as f64).collect();
        let pieces = geom::split_at(&geom.points, &cuts);
        let live = g.nodes[&key.start].live || g.nodes[&key.end].live;
        let mut prev = key.start.clone();
        for (k, piece) in pieces.iter().enumerate() {
            let next = if k + 1 == pieces.len() {
                key.end.clone()
            } else {
                let id = fresh_id(&out, format!("{}_{}_{}:{}", key.start, key.end, key.key, k + 1));
                let at = *piece.last().unwrap();
                out.add_node(id.clone(), at.x, at.y).live = live;
                id
            };
            out.add_edge(&prev, &next, Some(EdgeGeom::new(piece.clone())));
            prev = next;
        }
    }
    Ok(out)
}

/// Primal half-edge from `node`: the part of the edge between `node` and the
/// edge's length midpoint, oriented away from `node`.
fn half_from(points: &[Coord], from_start: bool) -> Vec<Coord> {
    let length = geom::polyline_length(points);
    let halves = geom::split_at(points, &[length / 2.0]);
    if from_start {
        halves[0].clone()
    } else {
        let mut h = halves[halves.len() - 1].clone();
        h.reverse();
        h
    }
}

/// Dual node id for a primal edge.
pub fn dual_id(key: &EdgeKey) -> String {
    format!("{}_{}_{}", key.start, key.end, key.key)
}

/// Converts a primal graph into its dual: one node per street at its length
/// midpoint, one edge per pair of streets meeting at a junction with geometry
/// welded from the two half-streets.
pub fn to_dual(g: &Multigraph) -> Result<Multigraph> {
    let mut out = Multigraph::new();
    out.crs_tag = g.crs_tag.clone();
    for (key, edge) in &g.edges {
        let geom = require_geom(key, &edge.geom)?;
        let mid = geom::point_along(&geom.points, geom.length() / 2.0);
        let id = dual_id(key);
        if out.nodes.contains_key(&id) {
            return Err(Error::InvalidParameter(format!("dual node id {id} is ambiguous")));
        }
        out.add_node(id, mid.x, mid.y).live =
            g.nodes.get(&key.start).is_some_and(|n| n.live) || g.nodes.get(&key.end).is_some_and(|n| n.live);
    }

    let mut ends: BTreeMap<&str, Vec<(&EdgeKey, bool)>> = BTreeMap::new();
    for key in g.edges.keys() {
        ends.entry(key.start.as_str()).or_default().push((key, true));
        ends.entry(key.end.as_str()).or_default().push((key, false));
    }
    for incident in ends.values() {
        for i in 0..incident.len() {
            for j in i + 1..incident.len() {
                let (ka, sa) = incident[i];
                let (kb, sb) = incident[j];
                if ka == kb {
                    continue;
                }
                let pa = &g.edges[ka].geom.as_ref().unwrap().points;
                let pb = &g.edges[kb].geom.as_ref().unwrap().points;
                let mut welded = half_from(pa, sa);
                welded.reverse();
                welded.extend(half_from(pb, sb).into_iter().skip(1));
                out.add_edge(&dual_id(ka), &dual_id(kb), Some(EdgeGeom::new(welded)));
            }
        }
    }
    Ok(out)
}
