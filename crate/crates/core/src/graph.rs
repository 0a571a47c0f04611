//! The primal street multigraph: string-keyed nodes with planar coordinates and
//! keyed parallel edges, each optionally carrying its own polyline geometry.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{polyline_length, Coord};

/// Maximum offset between a geometry endpoint and its node.
pub const SNAP_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Buffer nodes (`live == false`) are traversed but not used as analysis sources.
    pub live: bool,
    /// Extra numeric properties, carried through import and export.
    pub attrs: BTreeMap<String, f64>,
}

impl Node {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
            live: true,
            attrs: BTreeMap::new(),
        }
    }

    pub fn coord(&self) -> Coord {
        Coord::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGeom {
    pub points: Vec<Coord>,
}

impl EdgeGeom {
    pub fn new(points: Vec<Coord>) -> Self {
        Self { points }
    }

    pub fn straight(a: Coord, b: Coord) -> Self {
        Self { points: vec![a, b] }
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }
}

/// Identity of an undirected edge. Constructed edges always hold `start <= end`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub start: String,
    pub end: String,
    pub key: u32,
}

impl EdgeKey {
    pub fn new(start: impl Into<String>, end: impl Into<String>, key: u32) -> Self {
        Self {
            start: start.into(),
            end: end.into(),
            key,
        }
    }

    pub fn is_loop(&self) -> bool {
        self.start == self.end
    }

    /// The endpoint opposite to `node`.
    pub fn other(&self, node: &str) -> &str {
        if self.start == node {
            &self.end
        } else {
            &self.start
        }
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.end.clone(), self.start.clone(), self.key)
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.start, self.end, self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Edge {
    /// Geometry runs from `EdgeKey::start` to `EdgeKey::end`.
    pub geom: Option<EdgeGeom>,
    pub attrs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Multigraph {
    pub nodes: BTreeMap<String, Node>,
    pub edges: BTreeMap<EdgeKey, Edge>,
    /// Projection label, e.g. `UTM 30U`. `None` for unprojected (or unknown) input.
    pub crs_tag: Option<String>,
}

impl Multigraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn add_node(&mut self, id: impl Into<String>, x: f64, y: f64) -> &mut Node {
        let id = id.into();
        self.nodes
            .entry(id.clone())
            .or_insert_with(|| Node::new(id, x, y))
    }

    pub fn insert_node(&mut self, node: Node) {
        self.nodes.insert(node.id.clone(), node);
    }

    fn canonical(a: &str, b: &str, geom: Option<EdgeGeom>) -> (String, String, Option<EdgeGeom>) {
        if a <= b {
            (a.to_string(), b.to_string(), geom)
        } else {
            (b.to_string(), a.to_string(), geom.map(|g| g.reversed()))
        }
    }

    /// Smallest unused key for the unordered pair `(a, b)`.
    pub fn next_key(&self, a: &str, b: &str) -> u32 {
        let (s, e) = if a <= b { (a, b) } else { (b, a) };
        let lo = EdgeKey::new(s, e, 0);
        let hi = EdgeKey::new(s, e, u32::MAX);
        self.edges
            .range(lo..=hi)
            .next_back()
            .map_or(0, |(k, _)| k.key + 1)
    }

    /// Adds an edge with the next free key, canonicalising the orientation.
    /// `geom`, when given, runs from `a` to `b`.
    pub fn add_edge(&mut self, a: &str, b: &str, geom: Option<EdgeGeom>) -> EdgeKey {
        let key = self.next_key(a, b);
        let (s, e, geom) = Self::canonical(a, b, geom);
        let ek = EdgeKey::new(s, e, key);
        self.edges.insert(
            ek.clone(),
            Edge {
                geom,
                attrs: BTreeMap::new(),
            },
        );
        ek
    }

    /// Adds an edge with an explicit key; errors if `(a, b, key)` already exists.
    pub fn insert_edge(
        &mut self,
        a: &str,
        b: &str,
        key: u32,
        geom: Option<EdgeGeom>,
    ) -> Result<EdgeKey> {
        let (s, e, geom) = Self::canonical(a, b, geom);
        let ek = EdgeKey::new(s, e, key);
        if self.edges.contains_key(&ek) {
            return Err(Error::DuplicateEdge {
                start: ek.start,
                end: ek.end,
                key,
            });
        }
        self.edges.insert(
            ek.clone(),
            Edge {
                geom,
                attrs: BTreeMap::new(),
            },
        );
        Ok(ek)
    }

    pub fn node_coord(&self, id: &str) -> Option<Coord> {
        self.nodes.get(id).map(Node::coord)
    }

    /// Edge geometry oriented to start at `from`, or a straight segment when absent.
    pub fn oriented_points(&self, key: &EdgeKey, from: &str) -> Vec<Coord> {
        let edge = &self.edges[key];
        let mut pts = match &edge.geom {
            Some(g) => g.points.clone(),
            None => vec![
                self.node_coord(&key.start).unwrap_or(Coord::new(f64::NAN, f64::NAN)),
                self.node_coord(&key.end).unwrap_or(Coord::new(f64::NAN, f64::NAN)),
            ],
        };
        if key.start != from {
            pts.reverse();
        }
        pts
    }

    /// Length of an edge's geometry, or the straight-line span when absent.
    pub fn edge_length(&self, key: &EdgeKey) -> f64 {
        match &self.edges[key].geom {
            Some(g) => g.length(),
            None => match (self.node_coord(&key.start), self.node_coord(&key.end)) {
                (Some(a), Some(b)) => a.dist(b),
                _ => 0.0,
            },
        }
    }

    pub fn total_length(&self) -> f64 {
        self.edges.keys().map(|k| self.edge_length(k)).sum()
    }

    /// Incident edges per node; a self-loop is listed twice so list length is the degree.
    pub fn incidence(&self) -> BTreeMap<&str, Vec<&EdgeKey>> {
        let mut inc: BTreeMap<&str, Vec<&EdgeKey>> =
            self.nodes.keys().map(|k| (k.as_str(), Vec::new())).collect();
        for k in self.edges.keys() {
            inc.entry(k.start.as_str()).or_default().push(k);
            inc.entry(k.end.as_str()).or_default().push(k);
        }
        inc
    }

    pub fn degree(&self, id: &str) -> usize {
        self.edges
            .keys()
            .map(|k| usize::from(k.start == id) + usize::from(k.end == id))
            .sum()
    }

    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        self.incidence()
            .into_iter()
            .map(|(k, v)| (k, v.len()))
            .collect()
    }

    /// Removes a node together with every incident edge.
    pub fn remove_node(&mut self, id: &str) {
        self.nodes.remove(id);
        self.edges.retain(|k, _| k.start != id && k.end != id);
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for node in self.nodes.values() {
            if !node.coord().is_finite() {
                report.non_finite.push(node.id.clone());
            }
        }
        for (k, edge) in &self.edges {
            let mut dangling = false;
            for id in [&k.start, &k.end] {
                if !self.nodes.contains_key(id) {
                    report.dangling.push((k.clone(), id.clone()));
                    dangling = true;
                }
            }
            if k.start > k.end && self.edges.contains_key(&k.reversed()) {
                report.duplicates.push(k.clone());
            }
            if dangling {
                continue;
            }
            let Some(geom) = &edge.geom else { continue };
            if geom.points.len() < 2 {
                report.short_geoms.push(k.clone());
                continue;
            }
            let ends = [
                (&k.start, geom.points[0]),
                (&k.end, geom.points[geom.points.len() - 1]),
            ];
            for (id, p) in ends {
                let offset = self.nodes[id].coord().dist(p);
                if !(offset <= SNAP_TOLERANCE) {
                    report.snap_violations.push(SnapViolation {
                        edge: k.clone(),
                        node: id.clone(),
                        offset,
                    });
                }
            }
            if k.is_loop() && geom.length() == 0.0 {
                report.zero_length_loops.push(k.clone());
            }
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapViolation {
    pub edge: EdgeKey,
    pub node: String,
    pub offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub snap_violations: Vec<SnapViolation>,
    /// Edges referencing a node id that does not exist.
    pub dangling: Vec<(EdgeKey, String)>,
    /// Edges stored under both `(a, b, k)` and `(b, a, k)`.
    pub duplicates: Vec<EdgeKey>,
    pub non_finite: Vec<String>,
    pub short_geoms: Vec<EdgeKey>,
    pub zero_length_loops: Vec<EdgeKey>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.snap_violations.is_empty()
            && self.dangling.is_empty()
            && self.duplicates.is_empty()
            && self.non_finite.is_empty()
            && self.short_geoms.is_empty()
            && self.zero_length_loops.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock;

    #[test]
    fn canonical_orientation() {
        let mut g = Multigraph::new();
        g.add_node("b", 100.0, 0.0);
        g.add_node("a", 0.0, 0.0);
        let geom = EdgeGeom::new(vec![Coord::new(100.0, 0.0), Coord::new(0.0, 0.0)]);
        let k = g.add_edge("b", "a", Some(geom));
        assert_eq!(k, EdgeKey::new("a", "b", 0));
        assert_eq!(g.edges[&k].geom.as_ref().unwrap().points[0], Coord::new(0.0, 0.0));
        assert_eq!(g.add_edge("a", "b", None).key, 1);
        assert!(matches!(
            g.insert_edge("b", "a", 1, None),
            Err(Error::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn square_is_valid() {
        let g = mock::square();
        assert!(g.validate().is_empty());
        assert_eq!(g.total_length(), 400.0);
    }

    #[test]
    fn snap_violation_reported() {
        let mut g = mock::square();
        let k = g.edges.keys().next().unwrap().clone();
        let geom = g.edges.get_mut(&k).unwrap().geom.as_mut().unwrap();
        geom.points[0].x += 1.0;
        let report = g.validate();
        assert_eq!(report.snap_violations.len(), 1);
        assert!((report.snap_violations[0].offset - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dangling_reference_reported() {
        let mut g = mock::square();
        g.edges.insert(EdgeKey::new("a", "zz", 0), Edge::default());
        let report = g.validate();
        assert_eq!(report.dangling, vec![(EdgeKey::new("a", "zz", 0), "zz".to_string())]);
        assert_eq!(report.snap_violations.len(), 0);
    }

    #[test]
    fn reversed_duplicate_reported() {
        let mut g = mock::square();
        let k = g.edges.keys().next().unwrap().clone();
        g.edges.insert(k.reversed(), Edge::default());
        assert_eq!(g.validate().duplicates, vec![k.reversed()]);
    }

    #[test]
    fn loops_count_twice_in_degree() {
        let mut g = Multigraph::new();
        g.add_node("a", 0.0, 0.0);
        g.add_node("b", 10.0, 0.0);
        g.add_edge("a", "b", None);
        g.add_edge("a", "a", None);
        assert_eq!(g.degree("a"), 3);
        assert_eq!(g.degrees()["a"], 3);
    }
}
