//! Cleaning passes that turn messy source networks into topological street
//! networks: straight-geometry inference, stub removal, filler-node welding and
//! node consolidation with parallel-edge deduplication.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Coord};
use crate::graph::{Edge, EdgeGeom, EdgeKey, Multigraph, Node};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanConfig {
    /// Degree-1 chains no longer than this are removed.
    pub despine_dist: f64,
    /// Nodes closer than this (single linkage) are merged.
    pub consolidate_dist: f64,
    pub keep_largest_component: bool,
    /// Parallel edges created by merging are deduplicated when all are at most this long.
    pub merge_parallel_max_len: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            despine_dist: 25.0,
            consolidate_dist: 12.0,
            keep_largest_component: true,
            merge_parallel_max_len: 100.0,
        }
    }
}

impl CleanConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("despine_dist", self.despine_dist),
            ("consolidate_dist", self.consolidate_dist),
            ("merge_parallel_max_len", self.merge_parallel_max_len),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn missing(key: &EdgeKey) -> Error {
    Error::MissingGeometry {
        start: key.start.clone(),
        end: key.end.clone(),
        key: key.key,
    }
}

fn require_geoms(g: &Multigraph) -> Result<()> {
    match g.edges.iter().find(|(_, e)| e.geom.is_none()) {
        Some((k, _)) => Err(missing(k)),
        None => Ok(()),
    }
}

/// Gives every geometry-less edge a straight segment between its endpoints.
pub fn infer_simple_geoms(g: &Multigraph) -> Multigraph {
    let mut out = g.clone();
    for (key, edge) in out.edges.iter_mut() {
        if edge.geom.is_none() {
            if let (Some(a), Some(b)) = (g.node_coord(&key.start), g.node_coord(&key.end)) {
                edge.geom = Some(EdgeGeom::straight(a, b));
            }
        }
    }
    out
}

/// Removes short dead-end stubs and, optionally, everything outside the
/// component with the greatest total street length.
pub fn remove_dangling_nodes(g: &Multigraph, cfg: &CleanConfig) -> Result<Multigraph> {
    cfg.validate()?;
    let mut out = g.clone();
    loop {
        let inc = out.incidence();
        let mut doomed_nodes = BTreeSet::new();
        let mut doomed_edges = BTreeSet::new();
        for (&leaf, edges) in &inc {
            if edges.len() != 1 || doomed_nodes.contains(leaf) || edges[0].is_loop() {
                continue;
            }
            let mut chain_nodes = vec![leaf.to_string()];
            let mut chain_edges = Vec::new();
            let mut length = 0.0;
            let mut cur = leaf;
            let mut via = edges[0];
            loop {
                length += out.edge_length(via);
                chain_edges.push(via.clone());
                let next = via.other(cur);
                let next_edges = &inc[next];
                match next_edges.len() {
                    1 => {
                        // isolated chain: both ends are stubs
                        chain_nodes.push(next.to_string());
                        break;
                    }
                    2 if next != leaf && !next_edges[0].is_loop() => {
                        chain_nodes.push(next.to_string());
                        via = if next_edges[0] == via { next_edges[1] } else { next_edges[0] };
                        cur = next;
                    }
                    _ => break,
                }
                if length > cfg.despine_dist {
                    break;
                }
            }
            if length <= cfg.despine_dist {
                doomed_nodes.extend(chain_nodes);
                doomed_edges.extend(chain_edges);
            }
        }
        if doomed_edges.is_empty() {
            break;
        }
        out.edges.retain(|k, _| !doomed_edges.contains(k));
        out.nodes.retain(|id, _| !doomed_nodes.contains(id));
    }

    if cfg.keep_largest_component {
        out = largest_component(&out);
    }
    if out.nodes.is_empty() {
        return Err(Error::NothingSurvived);
    }
    Ok(out)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // smaller index as root keeps roots deterministic
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi] = lo;
    }
}

fn largest_component(g: &Multigraph) -> Multigraph {
    let ids: Vec<&String> = g.nodes.keys().collect();
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    for k in g.edges.keys() {
        union(&mut parent, index[k.start.as_str()], index[k.end.as_str()]);
    }
    let mut lengths: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..ids.len() {
        lengths.entry(find(&mut parent, i)).or_insert(0.0);
    }
    for k in g.edges.keys() {
        let root = find(&mut parent, index[k.start.as_str()]);
        *lengths.get_mut(&root).unwrap() += g.edge_length(k);
    }
    // ties go to the component holding the smallest node id
    let Some(best) = lengths
        .iter()
        .fold(None::<(usize, f64)>, |acc, (&root, &len)| match acc {
            Some((_, best_len)) if best_len >= len => acc,
            _ => Some((root, len)),
        })
        .map(|(root, _)| root)
    else {
        return g.clone();
    };
    let mut out = g.clone();
    out.nodes.retain(|id, _| find(&mut parent, index[id.as_str()]) == best);
    out.edges.retain(|k, _| find(&mut parent, index[k.start.as_str()]) == best);
    out
}

/// Welds the two edges at every degree-2 node into one, removing the node.
///
/// Nodes are visited in descending id order, so a pure ring collapses onto its
/// smallest id as a single self-loop.
pub fn remove_filler_nodes(g: &Multigraph) -> Result<Multigraph> {
    require_geoms(g)?;
    let mut out = g.clone();
    let mut inc: BTreeMap<String, Vec<EdgeKey>> = out
        .incidence()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.into_iter().cloned().collect()))
        .collect();
    let ids: Vec<String> = out.nodes.keys().rev().cloned().collect();
    for v in ids {
        let edges = &inc[&v];
        if edges.len() != 2 || edges[0] == edges[1] {
            continue;
        }
        let (e1, e2) = (edges[0].clone(), edges[1].clone());
        let a = e1.other(&v).to_string();
        let b = e2.other(&v).to_string();
        let mut points = out.oriented_points(&e1, &a);
        points.extend(out.oriented_points(&e2, &v).into_iter().skip(1));
        out.edges.remove(&e1);
        out.edges.remove(&e2);
        out.nodes.remove(&v);
        inc.remove(&v);
        for (end, old) in [(&a, &e1), (&b, &e2)] {
            let list = inc.get_mut(end).unwrap();
            let pos = list.iter().position(|k| k == old).unwrap();
            list.remove(pos);
        }
        let welded = out.add_edge(&a, &b, Some(EdgeGeom::new(points)));
        inc.get_mut(&a).unwrap().push(welded.clone());
        inc.get_mut(&b).unwrap().push(welded);
    }
    Ok(out)
}

/// Single-linkage clusters of nodes within `dist`, as sorted member lists.
fn clusters(g: &Multigraph, dist: f64) -> Vec<Vec<String>> {
    let nodes: Vec<&Node> = g.nodes.values().collect();
    let cell = |c: Coord| ((c.x / dist).floor() as i64, (c.y / dist).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        grid.entry(cell(n.coord())).or_default().push(i);
    }
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    for (i, n) in nodes.iter().enumerate() {
        let (cx, cy) = cell(n.coord());
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &j in grid.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    if j > i && n.coord().dist(nodes[j].coord()) <= dist {
                        union(&mut parent, i, j);
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..nodes.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(nodes[i].id.clone());
    }
    groups.into_values().collect()
}

/// Merges nearby nodes onto their cluster centroid, drops short self-loops,
/// deduplicates short parallel edges between merged nodes and finally welds
/// filler nodes.
pub fn consolidate_nodes(g: &Multigraph, cfg: &CleanConfig) -> Result<Multigraph> {
    cfg.validate()?;
    if cfg.consolidate_dist == 0.0 {
        return Ok(g.clone());
    }
    require_geoms(g)?;

    let mut rep: HashMap<&str, String> = HashMap::new();
    let mut centroid: HashMap<String, Coord> = HashMap::new();
    let mut out = Multigraph::new();
    out.crs_tag = g.crs_tag.clone();
    for members in clusters(g, cfg.consolidate_dist) {
        let id = members[0].clone();
        if members.len() == 1 {
            out.insert_node(g.nodes[&id].clone());
        } else {
            let count = members.len() as f64;
            let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), m| {
                (sx + g.nodes[m].x, sy + g.nodes[m].y)
            });
            let c = Coord::new(sx / count, sy / count);
            let mut node = Node::new(id.clone(), c.x, c.y);
            node.live = members.iter().any(|m| g.nodes[m].live);
            out.insert_node(node);
            centroid.insert(id.clone(), c);
        }
        for m in members {
            rep.insert(g.nodes.get_key_value(&m).unwrap().0.as_str(), id.clone());
        }
    }

    let mut untouched = Vec::new();
    let mut moved: BTreeMap<(String, String), Vec<(Vec<Coord>, f64)>> = BTreeMap::new();
    for (key, edge) in &g.edges {
        let (s, e) = (&rep[key.start.as_str()], &rep[key.end.as_str()]);
        if !centroid.contains_key(s) && !centroid.contains_key(e) {
            untouched.push((key, edge));
            continue;
        }
        let original_len = g.edge_length(key);
        let mut pts = edge.geom.as_ref().unwrap().points.clone();
        if let Some(&c) = centroid.get(s) {
            pts[0] = c;
        }
        if let Some(&c) = centroid.get(e) {
            *pts.last_mut().unwrap() = c;
        }
        if s == e && original_len < cfg.consolidate_dist {
            continue;
        }
        let (lo, hi, pts) = if s <= e {
            (s.clone(), e.clone(), pts)
        } else {
            pts.reverse();
            (e.clone(), s.clone(), pts)
        };
        let len = geom::polyline_length(&pts);
        moved.entry((lo, hi)).or_default().push((pts, len));
    }

    for (key, edge) in untouched {
        let k = out.insert_edge(&key.start, &key.end, key.key, edge.geom.clone())?;
        out.edges.insert(k, Edge { geom: edge.geom.clone(), attrs: edge.attrs.clone() });
    }
    for ((a, b), group) in moved {
        let short: Vec<usize> = if a != b {
            (0..group.len())
                .filter(|&i| group[i].1 <= cfg.merge_parallel_max_len)
                .collect()
        } else {
            Vec::new()
        };
        let keep = if short.len() >= 2 {
            let mids: Vec<Coord> = short
                .iter()
                .map(|&i| geom::point_along(&group[i].0, group[i].1 / 2.0))
                .collect();
            let n = mids.len() as f64;
            let mean = Coord::new(
                mids.iter().map(|m| m.x).sum::<f64>() / n,
                mids.iter().map(|m| m.y).sum::<f64>() / n,
            );
            let (mut best, mut best_d) = (short[0], f64::INFINITY);
            for (&i, m) in short.iter().zip(&mids) {
                let d = m.dist(mean);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            Some((best, short))
        } else {
            None
        };
        for (i, (pts, _)) in group.into_iter().enumerate() {
            if let Some((best, short)) = &keep {
                if *best != i && short.contains(&i) {
                    continue;
                }
            }
            out.add_edge(&a, &b, Some(EdgeGeom::new(pts)));
        }
    }
    remove_filler_nodes(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock;

    fn line(g: &mut Multigraph, a: &str, b: &str) -> EdgeKey {
        let geom = EdgeGeom::straight(g.nodes[a].coord(), g.nodes[b].coord());
        g.add_edge(a, b, Some(geom))
    }

    fn no_despine() -> CleanConfig {
        CleanConfig {
            despine_dist: 0.0,
            keep_largest_component: false,
            ..CleanConfig::default()
        }
    }

    #[test]
    fn infer_geoms_only_fills_missing() {
        let mut g = Multigraph::new();
        g.add_node("a", 0.0, 0.0);
        g.add_node("b", 100.0, 0.0);
        g.add_node("c", 100.0, 50.0);
        let bare = g.add_edge("a", "b", None);
        let curved = EdgeGeom::new(vec![
            Coord::new(100.0, 0.0),
            Coord::new(120.0, 25.0),
            Coord::new(100.0, 50.0),
        ]);
        let kept = g.add_edge("b", "c", Some(curved.clone()));
        let out = infer_simple_geoms(&g);
        assert_eq!(
            out.edges[&bare].geom,
            Some(EdgeGeom::straight(Coord::new(0.0, 0.0), Coord::new(100.0, 0.0)))
        );
        assert_eq!(out.edge_length(&bare), 100.0);
        assert_eq!(out.edges[&kept].geom, Some(curved));
        assert_eq!(infer_simple_geoms(&out), out);
    }

    fn t_shape() -> Multigraph {
        let mut g = Multigraph::new();
        g.add_node("w", 0.0, 0.0);
        g.add_node("o", 100.0, 0.0);
        g.add_node("e", 200.0, 0.0);
        g.add_node("n", 100.0, 100.0);
        g.add_node("stub", 100.0, -10.0);
        for (a, b) in [("w", "o"), ("o", "e"), ("o", "n"), ("o", "stub")] {
            line(&mut g, a, b);
        }
        g
    }

    #[test]
    fn despine_removes_short_stub() {
        let cfg = CleanConfig { despine_dist: 25.0, keep_largest_component: false, ..Default::default() };
        let out = remove_dangling_nodes(&t_shape(), &cfg).unwrap();
        assert!(!out.nodes.contains_key("stub"));
        assert_eq!(out.edge_count(), 3);
        assert_eq!(remove_dangling_nodes(&t_shape(), &no_despine()).unwrap(), t_shape());
    }

    #[test]
    fn despine_walks_filler_chains() {
        let mut g = t_shape();
        g.add_node("s2", 100.0, -20.0);
        line(&mut g, "stub", "s2");
        let cfg = CleanConfig { despine_dist: 25.0, keep_largest_component: false, ..Default::default() };
        let out = remove_dangling_nodes(&g, &cfg).unwrap();
        assert_eq!(out.node_count(), 4);
        let cfg = CleanConfig { despine_dist: 15.0, ..cfg };
        assert_eq!(remove_dangling_nodes(&g, &cfg).unwrap().node_count(), 6);
    }

    #[test]
    fn keeps_longest_component() {
        let mut g = mock::square();
        g.add_node("p", 1000.0, 0.0);
        g.add_node("q", 1050.0, 0.0);
        line(&mut g, "p", "q");
        let cfg = CleanConfig { despine_dist: 0.0, ..Default::default() };
        let out = remove_dangling_nodes(&g, &cfg).unwrap();
        assert_eq!(out, mock::square());
    }

    #[test]
    fn nothing_survived() {
        let mut g = Multigraph::new();
        g.add_node("p", 0.0, 0.0);
        g.add_node("q", 5.0, 0.0);
        line(&mut g, "p", "q");
        assert!(matches!(
            remove_dangling_nodes(&g, &CleanConfig::default()),
            Err(Error::NothingSurvived)
        ));
    }

    #[test]
    fn filler_path_welded() {
        let mut g = Multigraph::new();
        g.add_node("a", 0.0, 0.0);
        g.add_node("b", 50.0, 0.0);
        g.add_node("c", 50.0, 70.0);
        line(&mut g, "a", "b");
        line(&mut g, "b", "c");
        let out = remove_filler_nodes(&g).unwrap();
        assert_eq!(out.node_count(), 2);
        let k = EdgeKey::new("a", "c", 0);
        assert_eq!(out.edge_length(&k), 120.0);
        assert_eq!(
            out.edges[&k].geom.as_ref().unwrap().points,
            vec![Coord::new(0.0, 0.0), Coord::new(50.0, 0.0), Coord::new(50.0, 70.0)]
        );
    }

    #[test]
    fn ring_collapses_to_smallest_id() {
        let mut g = Multigraph::new();
        g.add_node("c", 0.0, 0.0);
        g.add_node("a", 100.0, 0.0);
        g.add_node("b", 50.0, 80.0);
        line(&mut g, "a", "b");
        line(&mut g, "b", "c");
        line(&mut g, "a", "c");
        let total = g.total_length();
        let out = remove_filler_nodes(&g).unwrap();
        assert_eq!(out.nodes.keys().collect::<Vec<_>>(), vec!["a"]);
        let k = EdgeKey::new("a", "a", 0);
        assert!((out.edge_length(&k) - total).abs() < 1e-9);
        assert_eq!(remove_filler_nodes(&out).unwrap(), out);
    }

    #[test]
    fn consolidates_pair_to_midpoint() {
        let mut g = t_shape();
        g.add_node("o2", 105.0, 0.0);
        g.remove_node("stub");
        line(&mut g, "o", "o2");
        g.add_node("s", 105.0, -100.0);
        line(&mut g, "o2", "s");
        let out = consolidate_nodes(&g, &CleanConfig::default()).unwrap();
        assert_eq!(out.nodes["o"].coord(), Coord::new(102.5, 0.0));
        assert!(!out.nodes.contains_key("o2"));
        assert_eq!(out.degree("o"), 4);
        assert!(out.validate().is_empty());
    }

    #[test]
    fn zero_distance_is_identity() {
        let g = mock::messy_graph();
        let cfg = CleanConfig { consolidate_dist: 0.0, ..Default::default() };
        assert_eq!(consolidate_nodes(&g, &cfg).unwrap(), g);
    }

    #[test]
    fn dual_carriageway_merged() {
        let g = mock::dual_carriageway();
        let out = consolidate_nodes(&g, &CleanConfig::default()).unwrap();
        assert_eq!(out.node_count(), 8);
        let between: Vec<_> = out
            .edges
            .keys()
            .filter(|k| k.start == "a1" && k.end == "b1")
            .collect();
        assert_eq!(between.len(), 1);
        assert!(out.validate().is_empty());

        // above the parallel cutoff both carriageways survive
        let cfg = CleanConfig { merge_parallel_max_len: 50.0, ..Default::default() };
        let out = consolidate_nodes(&g, &cfg).unwrap();
        assert_eq!(out.edges.keys().filter(|k| k.start == "a1" && k.end == "b1").count(), 2);
    }
}
