//! Data layers: assignment of points to the network, distance decay, and the
//! accessibility, mixed-use and statistical aggregations built on top.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::centrality::{live_sources, run_search, AnalysisConfig, Search, ShortestTree};
use crate::error::{Error, Result};
use crate::geom::{self, Coord};
use crate::metrics::{metric_name, MetricsTable};
use crate::parallel;
use crate::structure::NetworkStructure;

/// Default search radius for assigning data points, in metres.
pub const DEFAULT_MAX_ASSIGN_DIST: f64 = 400.0;

/// `β = 4 / d_max`, so that the weight at `d_max` is `exp(-4)`.
pub fn beta_from_distance(d_max: f64) -> Result<f64> {
    if !(d_max > 0.0) || !d_max.is_finite() {
        return Err(Error::InvalidParameter(format!("distance must be positive, got {d_max}")));
    }
    Ok(4.0 / d_max)
}

pub fn distance_from_beta(beta: f64) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(4.0 / beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub beta: f64,
    pub d_max: f64,
}

impl DecayParams {
    pub fn new(beta: f64, d_max: f64) -> Result<Self> {
        if !(beta > 0.0) || !(d_max > 0.0) || !beta.is_finite() || !d_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "decay needs positive beta and d_max, got {beta} and {d_max}"
            )));
        }
        Ok(Self { beta, d_max })
    }

    /// Pairs `d_max` with the default `β = 4 / d_max`.
    pub fn from_distance(d_max: f64) -> Result<Self> {
        Self::new(beta_from_distance(d_max)?, d_max)
    }
}

/// `exp(-β·d)` for `0 <= d <= d_max`.
pub fn decay_weight(d: f64, p: &DecayParams) -> Result<f64> {
    if d > p.d_max {
        return Err(Error::OutsideWindow { distance: d, d_max: p.d_max });
    }
    if !(d >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be non-negative, got {d}")));
    }
    Ok((-p.beta * d).exp())
}

/// A data point, optionally assigned to the two endpoints of its closest street.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEntry {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub category: Option<String>,
    /// Numeric observations keyed by field name.
    pub values: BTreeMap<String, f64>,
    /// Node index and straight-line distance of the closer street endpoint.
    pub nearest: Option<(usize, f64)>,
    pub next_nearest: Option<(usize, f64)>,
}

impl DataEntry {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            id: id.into(),
            x,
            y,
            category: None,
            values: BTreeMap::new(),
            nearest: None,
            next_nearest: None,
        }
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn with_value(mut self, field: impl Into<String>, value: f64) -> Self {
        self.values.insert(field.into(), value);
        self
    }

    pub fn coord(&self) -> Coord {
        Coord::new(self.x, self.y)
    }

    pub fn is_assigned(&self) -> bool {
        self.nearest.is_some()
    }

    fn flanks(&self) -> impl Iterator<Item = (usize, f64)> {
        self.nearest.into_iter().chain(self.next_nearest)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationConfig {
    pub categories: Vec<String>,
    pub hill_orders: Vec<f64>,
    pub stats_fields: Vec<String>,
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = self.hill_orders.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(Error::InvalidParameter(format!("hill order must be finite and >= 0, got {q}")));
        }
        Ok(())
    }
}

pub fn unassigned_count(data: &[DataEntry]) -> usize {
    data.iter().filter(|e| !e.is_assigned()).count()
}

/// Uniform grid over node positions.
struct NodeGrid {
    cell: f64,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl NodeGrid {
    fn new(s: &NetworkStructure, cell: f64) -> Self {
        let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for i in 0..s.node_count() {
            cells.entry(Self::key(s.coord(i), cell)).or_default().push(i);
        }
        Self { cell, cells }
    }

    fn key(c: Coord, cell: f64) -> (i64, i64) {
        ((c.x / cell).floor() as i64, (c.y / cell).floor() as i64)
    }

    /// Closest node within `radius` (which must not exceed the cell size).
    fn nearest(&self, s: &NetworkStructure, p: Coord, radius: f64) -> Option<usize> {
        let (cx, cy) = Self::key(p, self.cell);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &i in self.cells.get(&(cx + dx, cy + dy)).map_or(&[][..], Vec::as_slice) {
                    let d = p.dist(s.coord(i));
                    if d <= radius && best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                        best = Some((d, i));
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

fn consider(s: &NetworkStructure, p: Coord, seg: usize, best: &mut Option<(f64, usize)>) {
    let d = geom::point_polyline_dist(p, &s.segments[seg].geom.points);
    if best.is_none_or(|(bd, bs)| d < bd || (d == bd && seg < bs)) {
        *best = Some((d, seg));
    }
}

/// Walks the face around `p` starting from `start`, recording the closest street.
/// Returns `false` when the walk was cut short by `limit`.
fn wind(
    s: &NetworkStructure,
    p: Coord,
    start: usize,
    limit: f64,
    clockwise: bool,
    best: &mut Option<(f64, usize)>,
) -> bool {
    let rotation = |from: f64, to: f64| {
        if clockwise {
            geom::clockwise_turn(from, to)
        } else {
            geom::clockwise_turn(to, from)
        }
    };
    let pick = |node: usize, reference: f64, back: Option<usize>| {
        s.out_range(node)
            .map(|r| {
                let rot = if Some(r) == back { 360.0 } else { rotation(reference, s.edges[r].in_bearing) };
                (rot, r)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, r)| r)
    };
    let Some(first) = pick(start, geom::bearing(s.coord(start), p), None) else {
        return true;
    };
    let mut record = first;
    let mut walked = 0.0;
    for _ in 0..=s.edges.len() {
        let r = &s.edges[record];
        consider(s, p, r.segment, best);
        walked += r.length;
        if walked > limit {
            return false;
        }
        let back = s.reverse_record(record);
        let back_bearing = s.edges[back].in_bearing;
        let next = pick(r.end_idx, back_bearing, Some(back)).expect("arrival node has the back record");
        if next == first {
            break;
        }
        record = next;
    }
    true
}

fn assign_one(s: &NetworkStructure, grid: &NodeGrid, entry: &DataEntry, max_dist: f64) -> DataEntry {
    let mut out = entry.clone();
    out.nearest = None;
    out.next_nearest = None;
    let p = entry.coord();
    let Some(start) = grid.nearest(s, p, max_dist) else {
        return out;
    };
    let mut best = None;
    for r in s.out_edges(start) {
        consider(s, p, r.segment, &mut best);
    }
    if !wind(s, p, start, max_dist, true, &mut best) {
        wind(s, p, start, max_dist, false, &mut best);
    }
    match best {
        None => out.nearest = Some((start, p.dist(s.coord(start)))),
        Some((_, seg)) => {
            let fwd = &s.edges[s.segments[seg].records[0]];
            let (a, b) = (fwd.start_idx, fwd.end_idx);
            let (da, db) = (p.dist(s.coord(a)), p.dist(s.coord(b)));
            if a == b {
                out.nearest = Some((a, da));
            } else if db < da {
                out.nearest = Some((b, db));
                out.next_nearest = Some((a, da));
            } else {
                out.nearest = Some((a, da));
                out.next_nearest = Some((b, db));
            }
        }
    }
    out
}

/// Assigns each entry to the two endpoints of its closest adjacent street, found
/// by winding around the street block from the nearest node. Entries with no
/// node within `max_assign_dist` come back unassigned.
pub fn assign_to_network(data: &[DataEntry], s: &NetworkStructure, max_assign_dist: f64) -> Result<Vec<DataEntry>> {
    if !(max_assign_dist > 0.0) || !max_assign_dist.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "max_assign_dist must be positive, got {max_assign_dist}"
        )));
    }
    let grid = NodeGrid::new(s, max_assign_dist);
    let out: Vec<DataEntry> = data
        .par_iter()
        .map(|e| assign_one(s, &grid, e, max_assign_dist))
        .collect();
    let missed = unassigned_count(&out);
    if missed > 0 {
        log::info!("{missed} of {} data points unassigned", out.len());
    }
    Ok(out)
}

/// Entries reachable from the tree's source: total distance is the better of
/// the two flanks, each network distance plus assignment distance.
pub fn aggregate_reachable(tree: &ShortestTree, data: &[DataEntry], d_max: f64) -> Vec<(usize, f64)> {
    data.iter()
        .enumerate()
        .filter_map(|(i, e)| {
            let total = e
                .flanks()
                .map(|(n, a)| tree.dist[n] + a)
                .fold(f64::INFINITY, f64::min);
            (total <= d_max).then_some((i, total))
        })
        .collect()
}

fn total_mass(weights: &[f64]) -> f64 {
    weights.iter().filter(|w| **w > 0.0).sum()
}

fn hill_unchecked(weights: &[f64], q: f64) -> f64 {
    let total = total_mass(weights);
    if !(total > 0.0) {
        return 0.0;
    }
    let props = weights.iter().filter(|w| **w > 0.0).map(|w| w / total);
    if q == 0.0 {
        props.count() as f64
    } else if q == 1.0 {
        (-props.map(|p| p * p.ln()).sum::<f64>()).exp()
    } else {
        (props.map(|p| p.powf(q)).sum::<f64>().ln() / (1.0 - q)).exp()
    }
}

fn check_order(q: f64) -> Result<()> {
    if !q.is_finite() || q < 0.0 {
        return Err(Error::InvalidParameter(format!("hill order must be finite and >= 0, got {q}")));
    }
    Ok(())
}

/// Hill number of order `q`; zero-count classes are ignored and an all-zero
/// input gives 0.
pub fn hill_diversity(counts: &[f64], q: f64) -> Result<f64> {
    check_order(q)?;
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidParameter("counts must be finite and non-negative".into()));
    }
    Ok(hill_unchecked(counts, q))
}

/// Hill number over class masses `Σ exp(-β·d)` of `(class, total distance)` entries.
pub fn hill_branch_wt_diversity(entries: &[(&str, f64)], q: f64, p: &DecayParams) -> Result<f64> {
    check_order(q)?;
    let mut masses: BTreeMap<&str, f64> = BTreeMap::new();
    for &(class, d) in entries {
        *masses.entry(class).or_default() += decay_weight(d, p)?;
    }
    Ok(hill_unchecked(&masses.into_values().collect::<Vec<_>>(), q))
}

/// Entries grouped by assigned node.
struct Flanks {
    offsets: Vec<usize>,
    items: Vec<(usize, f64)>,
}

impl Flanks {
    fn new(s: &NetworkStructure, data: &[DataEntry]) -> Self {
        let mut per_node = vec![Vec::new(); s.node_count()];
        for (i, e) in data.iter().enumerate() {
            for (n, a) in e.flanks() {
                per_node[n].push((i, a));
            }
        }
        let mut offsets = Vec::with_capacity(s.node_count() + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for list in per_node {
            items.extend(list);
            offsets.push(items.len());
        }
        Self { offsets, items }
    }

    fn at(&self, node: usize) -> &[(usize, f64)] {
        &self.items[self.offsets[node]..self.offsets[node + 1]]
    }
}

struct ReachWorkspace {
    search: Search,
    best: Vec<f64>,
    touched: Vec<usize>,
    reach: Vec<(usize, f64)>,
}

/// Runs `fill` for every node with the entries reachable within the largest
/// threshold, sorted by entry index. Non-live nodes see an empty window.
fn per_source<F>(s: &NetworkStructure, data: &[DataEntry], ac: &AnalysisConfig, width: usize, fill: F) -> Vec<f64>
where
    F: Fn(&[(usize, f64)], &mut [f64]) + Sync + Send,
{
    let n = s.node_count();
    let d_max = ac.max_distance();
    let flanks = Flanks::new(s, data);
    let mut rows = vec![0.0; n * width];
    for i in 0..n {
        if !s.node_live[i] {
            fill(&[], &mut rows[i * width..(i + 1) * width]);
        }
    }
    let sources = live_sources(s);
    parallel::fold_chunks(
        &sources,
        || ReachWorkspace {
            search: Search::new(s),
            best: vec![f64::INFINITY; data.len()],
            touched: Vec::new(),
            reach: Vec::new(),
        },
        |ws, chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            for &src in chunk {
                run_search(&mut ws.search, s, src, d_max, ac.heuristic);
                for &v in &ws.search.reached {
                    let dv = ws.search.node_dist(v);
                    for &(e, a) in flanks.at(v) {
                        let total = dv + a;
                        if ws.best[e].is_infinite() {
                            ws.touched.push(e);
                        }
                        if total < ws.best[e] {
                            ws.best[e] = total;
                        }
                    }
                }
                ws.touched.sort_unstable();
                ws.reach.clear();
                for &e in &ws.touched {
                    if ws.best[e] <= d_max {
                        ws.reach.push((e, ws.best[e]));
                    }
                    ws.best[e] = f64::INFINITY;
                }
                ws.touched.clear();
                let mut row = vec![0.0; width];
                fill(&ws.reach, &mut row);
                out.push((src, row));
            }
            out
        },
        |out| {
            for (src, row) in out {
                rows[src * width..(src + 1) * width].copy_from_slice(&row);
            }
        },
    );
    rows
}

fn column(rows: &[f64], width: usize, offset: usize) -> Vec<f64> {
    rows.chunks(width).map(|r| r[offset]).collect()
}

fn new_table(s: &NetworkStructure) -> MetricsTable {
    MetricsTable::new(s.node_ids.clone(), s.segments.iter().map(|seg| seg.key.clone()).collect())
}

fn category_indices(data: &[DataEntry], classes: &[String]) -> Vec<Option<usize>> {
    data.iter()
        .map(|e| e.category.as_ref().and_then(|c| classes.iter().position(|x| x == c)))
        .collect()
}

/// Per node, category and threshold: `ac_{class}_{d}` counts reachable entries
/// and `ac_{class}_{d}_wt` sums their decay weights.
pub fn compute_accessibilities(
    s: &NetworkStructure,
    data: &[DataEntry],
    cfg: &AggregationConfig,
    ac: &AnalysisConfig,
) -> Result<MetricsTable> {
    ac.validate()?;
    cfg.validate()?;
    if cfg.categories.is_empty() {
        return Err(Error::InvalidParameter("accessibility needs at least one category".into()));
    }
    let present: BTreeSet<&str> = data.iter().filter_map(|e| e.category.as_deref()).collect();
    if let Some(c) = cfg.categories.iter().find(|c| !present.contains(c.as_str())) {
        return Err(Error::UnknownCategory(c.clone()));
    }
    let classes = &cfg.categories;
    let class_of = category_indices(data, classes);
    let t_count = ac.distances.len();
    let width = classes.len() * t_count * 2;
    let rows = per_source(s, data, ac, width, |reach, row| {
        for &(e, total) in reach {
            let Some(c) = class_of[e] else { continue };
            for t in 0..t_count {
                if total <= ac.distances[t] {
                    let o = (c * t_count + t) * 2;
                    row[o] += 1.0;
                    row[o + 1] += (-ac.betas[t] * total).exp();
                }
            }
        }
    });
    let mut table = new_table(s);
    for (c, class) in classes.iter().enumerate() {
        for (t, d) in ac.distances.iter().enumerate() {
            let o = (c * t_count + t) * 2;
            table.insert_node_column(metric_name("ac", class, d), column(&rows, width, o))?;
            table.insert_node_column(format!("{}_wt", metric_name("ac", class, d)), column(&rows, width, o + 1))?;
        }
    }
    Ok(table)
}

/// Per node, order `q` and threshold: `mu_hill_q{q}_{d}` over class counts and
/// `mu_hill_branch_wt_q{q}_{d}` over decay-weighted class masses. Classes are the
/// configured categories, or every category in the data when none are given.
pub fn compute_mixed_uses(
    s: &NetworkStructure,
    data: &[DataEntry],
    cfg: &AggregationConfig,
    ac: &AnalysisConfig,
) -> Result<MetricsTable> {
    ac.validate()?;
    cfg.validate()?;
    if cfg.hill_orders.is_empty() {
        return Err(Error::InvalidParameter("mixed uses need at least one hill order".into()));
    }
    let classes: Vec<String> = if cfg.categories.is_empty() {
        data.iter()
            .filter_map(|e| e.category.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        cfg.categories.clone()
    };
    let class_of = category_indices(data, &classes);
    let (t_count, q_count) = (ac.distances.len(), cfg.hill_orders.len());
    let width = q_count * t_count * 2;
    let rows = per_source(s, data, ac, width, |reach, row| {
        let mut counts = vec![0.0; classes.len()];
        let mut masses = vec![0.0; classes.len()];
        for t in 0..t_count {
            counts.fill(0.0);
            masses.fill(0.0);
            for &(e, total) in reach {
                if let (Some(c), true) = (class_of[e], total <= ac.distances[t]) {
                    counts[c] += 1.0;
                    masses[c] += (-ac.betas[t] * total).exp();
                }
            }
            for (qi, &q) in cfg.hill_orders.iter().enumerate() {
                let o = (qi * t_count + t) * 2;
                row[o] = hill_unchecked(&counts, q);
                row[o + 1] = hill_unchecked(&masses, q);
            }
        }
    });
    let mut table = new_table(s);
    for (qi, q) in cfg.hill_orders.iter().enumerate() {
        for (t, d) in ac.distances.iter().enumerate() {
            let o = (qi * t_count + t) * 2;
            table.insert_node_column(metric_name("mu", &format!("hill_q{q}"), d), column(&rows, width, o))?;
            table.insert_node_column(
                metric_name("mu", &format!("hill_branch_wt_q{q}"), d),
                column(&rows, width, o + 1),
            )?;
        }
    }
    Ok(table)
}

pub const STATS: [&str; 9] = ["count", "sum", "mean", "min", "max", "var", "sum_wt", "mean_wt", "var_wt"];

fn summarise(values: &[(f64, f64)], out: &mut [f64]) {
    out[0] = values.len() as f64;
    if values.is_empty() {
        out[1..].fill(f64::NAN);
        return;
    }
    let n = values.len() as f64;
    let sum: f64 = values.iter().map(|(v, _)| v).sum();
    let mean = sum / n;
    let var = values.iter().map(|(v, _)| (v - mean).powi(2)).sum::<f64>() / n;
    let sum_w: f64 = values.iter().map(|(_, w)| w).sum();
    let sum_wt: f64 = values.iter().map(|(v, w)| v * w).sum();
    let mean_wt = sum_wt / sum_w;
    let var_wt = values.iter().map(|(v, w)| w * (v - mean_wt).powi(2)).sum::<f64>() / sum_w;
    out[1] = sum;
    out[2] = mean;
    out[3] = values.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    out[4] = values.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
    out[5] = var;
    out[6] = sum_wt;
    out[7] = mean_wt;
    out[8] = var_wt;
}

/// Per node, field and threshold: the aggregates in [`STATS`] as
/// `st_{field}_{stat}_{d}`, weighting by `exp(-β·total distance)`. An empty
/// window has count 0 and NaN aggregates. Entries without the field are ignored.
pub fn compute_stats(
    s: &NetworkStructure,
    data: &[DataEntry],
    cfg: &AggregationConfig,
    ac: &AnalysisConfig,
) -> Result<MetricsTable> {
    ac.validate()?;
    cfg.validate()?;
    if cfg.stats_fields.is_empty() {
        return Err(Error::InvalidParameter("stats need at least one value field".into()));
    }
    for e in data {
        if let Some((f, v)) = e.values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidEntry {
                entry: e.id.clone(),
                message: format!("field {f} is not a finite number: {v}"),
            });
        }
    }
    let (t_count, f_count, k) = (ac.distances.len(), cfg.stats_fields.len(), STATS.len());
    let width = f_count * t_count * k;
    let rows = per_source(s, data, ac, width, |reach, row| {
        let mut values = Vec::with_capacity(reach.len());
        for (fi, field) in cfg.stats_fields.iter().enumerate() {
            for t in 0..t_count {
                values.clear();
                for &(e, total) in reach {
                    if let (Some(v), true) = (data[e].values.get(field), total <= ac.distances[t]) {
                        values.push((*v, (-ac.betas[t] * total).exp()));
                    }
                }
                let o = (fi * t_count + t) * k;
                summarise(&values, &mut row[o..o + k]);
            }
        }
    });
    let mut table = new_table(s);
    for (fi, field) in cfg.stats_fields.iter().enumerate() {
        for (si, stat) in STATS.iter().enumerate() {
            for (t, d) in ac.distances.iter().enumerate() {
                let o = (fi * t_count + t) * k + si;
                table.insert_node_column(metric_name("st", &format!("{field}_{stat}"), d), column(&rows, width, o))?;
            }
        }
    }
    Ok(table)
}
