//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pedscale::geom::{self, Coord};
use pedscale::{EdgeGeom, Multigraph, NetworkStructure};
use rand::Rng;

/// Random connected graph on integer coordinates. Edges follow axis-aligned
/// polylines with a random detour, so every length (and every path sum) is an
/// exactly representable integer.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize) -> Multigraph {
    let mut g = Multigraph::new();
    let mut used = BTreeSet::new();
    while g.node_count() < n {
        let c = (rng.random_range(0..1000i64), rng.random_range(0..1000i64));
        if used.insert(c) {
            g.add_node(format!("n{:02}", g.node_count()), c.0 as f64, c.1 as f64);
        }
    }
    let ids: Vec<String> = g.nodes.keys().cloned().collect();
    let mut pairs = Vec::new();
    for k in 1..n {
        pairs.push((rng.random_range(0..k), k));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            pairs.push((a, b));
        }
    }
    for (a, b) in pairs {
        let (pa, pb) = (g.node_coord(&ids[a]).unwrap(), g.node_coord(&ids[b]).unwrap());
        let h = rng.random_range(-60..=60i64) as f64;
        let mut pts = vec![pa, Coord::new(pa.x, pa.y + h), Coord::new(pb.x, pa.y + h), pb];
        pts.dedup();
        g.add_edge(&ids[a], &ids[b], Some(EdgeGeom::new(pts)));
    }
    g
}

/// Cheapest record length between each ordered node pair.
fn min_lengths(s: &NetworkStructure) -> BTreeMap<(usize, usize), f64> {
    let mut w: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for r in &s.edges {
        if r.start_idx != r.end_idx {
            let e = w.entry((r.start_idx, r.end_idx)).or_insert(f64::INFINITY);
            *e = e.min(r.length);
        }
    }
    w
}

/// Floyd-Warshall distances.
pub fn all_pairs(s: &NetworkStructure) -> Vec<Vec<f64>> {
    let n = s.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for ((a, b), l) in min_lengths(s) {
        d[a][b] = d[a][b].min(l);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Naive node measures from an all-pairs matrix. Paths are reconstructed by
/// choosing, at every step back from the target, the smallest-index predecessor
/// that lies on a shortest path.
pub fn naive_node_measures(
    s: &NetworkStructure,
    d: &[Vec<f64>],
    distances: &[f64],
    betas: &[f64],
) -> BTreeMap<String, Vec<f64>> {
    let n = s.node_count();
    let w = min_lengths(s);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in w.keys() {
        preds[b].push(a);
    }
    let mut out = BTreeMap::new();
    for (t, (&dt, &beta)) in distances.iter().zip(betas).enumerate() {
        let _ = t;
        let mut density = vec![0.0; n];
        let mut harmonic = vec![0.0; n];
        let mut gravity = vec![0.0; n];
        let mut betw = vec![0.0; n];
        let mut betw_wt = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || d[i][j] > dt {
                    continue;
                }
                density[i] += 1.0;
                harmonic[i] += 1.0 / d[i][j];
                gravity[i] += (-beta * d[i][j]).exp();
                if j > i {
                    let mut v = j;
                    loop {
                        let u = *preds[v]
                            .iter()
                            .filter(|&&u| d[i][u] + w[&(u, v)] == d[i][v])
                            .min()
                            .expect("shortest path predecessor");
                        if u == i {
                            break;
                        }
                        betw[u] += 1.0;
                        betw_wt[u] += (-beta * d[i][j]).exp();
                        v = u;
                    }
                }
            }
        }
        for (m, col) in [
            ("density", density),
            ("harmonic", harmonic),
            ("gravity", gravity),
            ("betweenness", betw),
            ("betweenness_wt", betw_wt),
        ] {
            out.insert(format!("cc_{m}_{dt}"), col);
        }
    }
    out
}

pub fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * b.abs().max(a.abs())
}

/// 4 × 3 lattice at 100 m spacing, ids `c{col}r{row}`.
pub fn lattice_4x3() -> Multigraph {
    let mut g = Multigraph::new();
    for c in 0..4 {
        for r in 0..3 {
            g.add_node(format!("c{c}r{r}"), 100.0 * c as f64, 100.0 * r as f64);
        }
    }
    for c in 0..4 {
        for r in 0..3 {
            let id = format!("c{c}r{r}");
            for (dc, dr) in [(1, 0), (0, 1)] {
                let (nc, nr) = (c + dc, r + dr);
                if nc < 4 && nr < 3 {
                    let other = format!("c{nc}r{nr}");
                    let geom = EdgeGeom::straight(g.node_coord(&id).unwrap(), g.node_coord(&other).unwrap());
                    g.add_edge(&id, &other, Some(geom));
                }
            }
        }
    }
    g
}

fn turn_cost(s: &NetworkStructure, from: usize, to: usize) -> f64 {
    let (a, b) = (&s.edges[from], &s.edges[to]);
    geom::signed_turn(a.out_bearing, b.in_bearing).abs() + b.angle_sum
}

/// Least angular cost to every node over all simple paths from `src`.
pub fn exhaustive_simplest(s: &NetworkStructure, src: usize) -> Vec<f64> {
    fn walk(s: &NetworkStructure, rec: usize, cost: f64, on_path: &mut Vec<bool>, best: &mut [f64]) {
        let v = s.edges[rec].end_idx;
        best[v] = best[v].min(cost);
        on_path[v] = true;
        for next in s.out_range(v) {
            if !on_path[s.edges[next].end_idx] {
                walk(s, next, cost + turn_cost(s, rec, next), on_path, best);
            }
        }
        on_path[v] = false;
    }
    let mut best = vec![f64::INFINITY; s.node_count()];
    best[src] = 0.0;
    let mut on_path = vec![false; s.node_count()];
    on_path[src] = true;
    for r in s.out_range(src) {
        if s.edges[r].end_idx != src {
            walk(s, r, s.edges[r].angle_sum, &mut on_path, &mut best);
        }
    }
    best
}

/// Node-labelled angular search: each node keeps only its cheapest cost and the
/// set of records it has been approached by, and charges the next turn against
/// whichever approach is most favourable. A route can thereby borrow the
/// heading of a different, costlier approach. Iterated to a fixpoint.
pub fn node_state_simplest(s: &NetworkStructure, src: usize) -> Vec<f64> {
    let n = s.node_count();
    let mut cost = vec![f64::INFINITY; n];
    let mut arrivals: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    cost[src] = 0.0;
    let mut changed = true;
    while changed {
        changed = false;
        for u in 0..n {
            if cost[u].is_infinite() {
                continue;
            }
            for r in s.out_range(u) {
                let v = s.edges[r].end_idx;
                let turn = arrivals[u]
                    .iter()
                    .map(|&a| turn_cost(s, a, r))
                    .fold(f64::INFINITY, f64::min);
                let step = if u == src { s.edges[r].angle_sum } else { turn };
                changed |= arrivals[v].insert(r);
                if cost[u] + step < cost[v] {
                    cost[v] = cost[u] + step;
                    changed = true;
                }
            }
        }
    }
    cost
}

/// Index of the segment nearest to `p`, ties to the smaller index.
pub fn nearest_segment(s: &NetworkStructure, p: Coord) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, seg) in s.segments.iter().enumerate() {
        let d = geom::point_polyline_dist(p, &seg.geom.points);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Geodesic distance on WGS84 by Vincenty's inverse formula.
pub fn vincenty(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> f64 {
    let a = 6_378_137.0f64;
    let f = 1.0 / 298.257_223_563;
    let b = a * (1.0 - f);
    let l = (lon2 - lon1).to_radians();
    let u1 = ((1.0 - f) * lat1.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * lat2.to_radians().tan()).atan();
    let (su1, cu1, su2, cu2) = (u1.sin(), u1.cos(), u2.sin(), u2.cos());
    let mut lambda = l;
    let (mut sin_s, mut cos_s, mut sigma, mut cos2a, mut cos2sm);
    loop {
        let (sl, cl) = (lambda.sin(), lambda.cos());
        sin_s = ((cu2 * sl).powi(2) + (cu1 * su2 - su1 * cu2 * cl).powi(2)).sqrt();
        if sin_s == 0.0 {
            return 0.0;
        }
        cos_s = su1 * su2 + cu1 * cu2 * cl;
        sigma = sin_s.atan2(cos_s);
        let sin_a = cu1 * cu2 * sl / sin_s;
        cos2a = 1.0 - sin_a * sin_a;
        cos2sm = if cos2a != 0.0 { cos_s - 2.0 * su1 * su2 / cos2a } else { 0.0 };
        let c = f / 16.0 * cos2a * (4.0 + f * (4.0 - 3.0 * cos2a));
        let prev = lambda;
        lambda = l + (1.0 - c) * f * sin_a
            * (sigma + c * sin_s * (cos2sm + c * cos_s * (-1.0 + 2.0 * cos2sm * cos2sm)));
        if (lambda - prev).abs() < 1e-13 {
            break;
        }
    }
    let u_sq = cos2a * (a * a - b * b) / (b * b);
    let big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
    let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
    let ds = big_b * sin_s
        * (cos2sm + big_b / 4.0
            * (cos_s * (-1.0 + 2.0 * cos2sm * cos2sm)
                - big_b / 6.0 * cos2sm * (-3.0 + 4.0 * sin_s * sin_s) * (-3.0 + 4.0 * cos2sm * cos2sm)));
    b * big_a * (sigma - ds)
}

/// Sorted `(start, end, length)` triples, for comparing topology up to keys.
pub fn edge_signature(g: &Multigraph) -> Vec<(String, String, f64)> {
    let mut v: Vec<_> = g
        .edges
        .keys()
        .map(|k| (k.start.clone(), k.end.clone(), g.edge_length(k)))
        .collect();
    v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)).then(a.2.total_cmp(&b.2)));
    v
}
