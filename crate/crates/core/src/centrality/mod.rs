//! Moving-window centralities. One search per live source runs at the largest
//! distance threshold; smaller thresholds are applied as filters while
//! accumulating, so every threshold is computed in the same pass.

mod search;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::beta_from_distance;
use crate::metrics::{metric_name, MetricsTable};
use crate::parallel;
use crate::structure::NetworkStructure;

pub(crate) use search::{Branch, Search, NONE};

/// Lower clamp on distances inside the segment harmonic integral.
pub const SEGMENT_HARMONIC_FLOOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    #[default]
    Shortest,
    Simplest,
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(Self::Shortest),
            "simplest" => Ok(Self::Simplest),
            other => Err(Error::InvalidParameter(format!("unknown heuristic {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Density,
    Harmonic,
    Gravity,
    Betweenness,
    BetweennessWt,
    Cycles,
    SegDensity,
    SegHarmonic,
    SegBeta,
    SegBetweenness,
}

impl Measure {
    pub const NODE: [Measure; 6] = [
        Measure::Density,
        Measure::Harmonic,
        Measure::Gravity,
        Measure::Betweenness,
        Measure::BetweennessWt,
        Measure::Cycles,
    ];
    pub const SEGMENT: [Measure; 4] = [
        Measure::SegDensity,
        Measure::SegHarmonic,
        Measure::SegBeta,
        Measure::SegBetweenness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Density => "density",
            Measure::Harmonic => "harmonic",
            Measure::Gravity => "gravity",
            Measure::Betweenness => "betweenness",
            Measure::BetweennessWt => "betweenness_wt",
            Measure::Cycles => "cycles",
            Measure::SegDensity => "seg_density",
            Measure::SegHarmonic => "seg_harmonic",
            Measure::SegBeta => "seg_beta",
            Measure::SegBetweenness => "seg_betweenness",
        }
    }

    pub fn is_segment(self) -> bool {
        Measure::SEGMENT.contains(&self)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::NODE
            .iter()
            .chain(Measure::SEGMENT.iter())
            .find(|m| m.name() == s)
            .copied()
            .ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Window thresholds in metres, strictly ascending.
    pub distances: Vec<f64>,
    /// Decay rates paired with `distances`.
    pub betas: Vec<f64>,
    pub heuristic: Heuristic,
    pub measures: BTreeSet<Measure>,
}

impl AnalysisConfig {
    /// Builds a config, defaulting each beta to `4 / d_max`.
    pub fn new(
        distances: Vec<f64>,
        betas: Option<Vec<f64>>,
        heuristic: Heuristic,
        measures: impl IntoIterator<Item = Measure>,
    ) -> Result<Self> {
        let betas = match betas {
            Some(b) => b,
            None => distances
                .iter()
                .map(|&d| beta_from_distance(d))
                .collect::<Result<_>>()?,
        };
        let cfg = Self {
            distances,
            betas,
            heuristic,
            measures: measures.into_iter().collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses measure names, e.g. from a CLI list.
    pub fn parse_measures<S: AsRef<str>>(names: &[S]) -> Result<BTreeSet<Measure>> {
        names.iter().map(|n| n.as_ref().parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() {
            return Err(Error::InvalidParameter("at least one distance is required".into()));
        }
        if self.distances.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter("distances must be positive and finite".into()));
        }
        if self.distances.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("distances must be strictly ascending".into()));
        }
        if self.betas.len() != self.distances.len() {
            return Err(Error::InvalidParameter("betas must pair with distances".into()));
        }
        if self.betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidParameter("betas must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn max_distance(&self) -> f64 {
        *self.distances.last().expect("validated config has distances")
    }
}

/// Search result for one source, densified over all nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestTree {
    pub source: usize,
    /// Metric distance per node, infinite outside the window.
    pub dist: Vec<f64>,
    /// Angular cost per node for simplest searches.
    pub simplest_cost: Option<Vec<f64>>,
    /// Directed record used to reach each node.
    pub pred_edge: Vec<Option<usize>>,
    pub visit_order: Vec<usize>,
    pub(crate) branches: Vec<Branch>,
}

impl ShortestTree {
    fn from_search(search: &Search, n: usize, source: usize, angular: bool) -> Self {
        let mut dist = vec![f64::INFINITY; n];
        let mut cost = vec![f64::INFINITY; n];
        let mut pred_edge = vec![None; n];
        for &v in &search.reached {
            let b = search.branches[search.node_branch(v).unwrap()];
            dist[v] = b.dist;
            cost[v] = b.cost;
            pred_edge[v] = (b.record != NONE).then_some(b.record);
        }
        Self {
            source,
            dist,
            simplest_cost: angular.then_some(cost),
            pred_edge,
            visit_order: search.reached.clone(),
            branches: search.branches.clone(),
        }
    }

    /// Nodes along the reported route from the source to `target`, inclusive.
    pub fn path_to(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut b = self.branches.iter().position(|b| {
            b.node == target && self.pred_edge[target] == (b.record != NONE).then_some(b.record)
        })?;
        while self.branches[b].parent != NONE {
            b = self.branches[b].parent;
            path.push(self.branches[b].node);
        }
        path.reverse();
        debug_assert_eq!(path[0], self.source);
        Some(path)
    }
}

/// Metric shortest-path tree from `source` within `d_max`.
pub fn shortest_tree(s: &NetworkStructure, source: usize, d_max: f64) -> ShortestTree {
    let mut search = Search::new(s);
    search.shortest(s, source, d_max);
    ShortestTree::from_search(&search, s.node_count(), source, false)
}

/// Simplest-path (least angular change) tree from `source` within metric `d_max`.
pub fn simplest_tree(s: &NetworkStructure, source: usize, d_max: f64) -> ShortestTree {
    let mut search = Search::new(s);
    search.simplest(s, source, d_max);
    ShortestTree::from_search(&search, s.node_count(), source, true)
}

pub(crate) fn run_search(search: &mut Search, s: &NetworkStructure, src: usize, d_max: f64, h: Heuristic) {
    match h {
        Heuristic::Shortest => search.shortest(s, src, d_max),
        Heuristic::Simplest => search.simplest(s, src, d_max),
    }
}

pub(crate) fn live_sources(s: &NetworkStructure) -> Vec<usize> {
    (0..s.node_count()).filter(|&i| s.node_live[i]).collect()
}

/// Positions of each requested measure inside per-source rows.
struct Plan {
    thresholds: Vec<f64>,
    betas: Vec<f64>,
    row_measures: Vec<Measure>,
    node_betweenness: bool,
    node_betweenness_wt: bool,
    seg_betweenness: bool,
    want_segments: bool,
    want_cycles: bool,
}

impl Plan {
    fn new(cfg: &AnalysisConfig) -> Self {
        let row_measures: Vec<Measure> = cfg
            .measures
            .iter()
            .copied()
            .filter(|m| {
                !matches!(
                    m,
                    Measure::Betweenness | Measure::BetweennessWt | Measure::SegBetweenness
                )
            })
            .collect();
        Self {
            thresholds: cfg.distances.clone(),
            betas: cfg.betas.clone(),
            want_segments: row_measures.iter().any(|m| m.is_segment()),
            want_cycles: row_measures.contains(&Measure::Cycles),
            row_measures,
            node_betweenness: cfg.measures.contains(&Measure::Betweenness),
            node_betweenness_wt: cfg.measures.contains(&Measure::BetweennessWt),
            seg_betweenness: cfg.measures.contains(&Measure::SegBetweenness),
        }
    }

    fn t(&self) -> usize {
        self.thresholds.len()
    }

    fn row_len(&self) -> usize {
        self.row_measures.len() * self.t()
    }

    fn slot(&self, m: Measure) -> Option<usize> {
        self.row_measures.iter().position(|&x| x == m).map(|i| i * self.t())
    }

    fn wants_tree_accumulation(&self) -> bool {
        self.node_betweenness || self.node_betweenness_wt || self.seg_betweenness
    }
}

struct Workspace {
    search: Search,
    /// Per-branch accumulation: `2T` values (counts then weights).
    acc: Vec<f64>,
    node_scratch: Vec<f64>,
    node_touched: Vec<usize>,
    node_mark: Vec<bool>,
    seg_scratch: Vec<f64>,
    seg_touched: Vec<usize>,
    seg_mark: Vec<bool>,
}

impl Workspace {
    fn new(s: &NetworkStructure, t: usize) -> Self {
        Self {
            search: Search::new(s),
            acc: Vec::new(),
            node_scratch: vec![0.0; s.node_count() * 2 * t],
            node_touched: Vec::new(),
            node_mark: vec![false; s.node_count()],
            seg_scratch: vec![0.0; s.segment_count() * t],
            seg_touched: Vec::new(),
            seg_mark: vec![false; s.segment_count()],
        }
    }
}

type Sparse = Vec<(usize, Vec<f64>)>;

struct ChunkOut {
    rows: Vec<(usize, Vec<f64>)>,
    nodes: Sparse,
    segments: Sparse,
}

fn drain_sparse(scratch: &mut [f64], touched: &mut Vec<usize>, mark: &mut [bool], width: usize) -> Sparse {
    touched.sort_unstable();
    let out = touched
        .iter()
        .map(|&i| {
            mark[i] = false;
            let vals = scratch[i * width..(i + 1) * width].to_vec();
            scratch[i * width..(i + 1) * width].fill(0.0);
            (i, vals)
        })
        .collect();
    touched.clear();
    out
}

/// Accumulates one source into its row and into the workspace scratch buffers.
fn accumulate_source(s: &NetworkStructure, plan: &Plan, ws: &mut Workspace, src: usize) -> Vec<f64> {
    let t_count = plan.t();
    let mut row = vec![0.0; plan.row_len()];
    let search = &ws.search;

    let density = plan.slot(Measure::Density);
    let harmonic = plan.slot(Measure::Harmonic);
    let gravity = plan.slot(Measure::Gravity);
    for &v in &search.reached {
        if v == src {
            continue;
        }
        let d = search.node_dist(v);
        for t in 0..t_count {
            if d > plan.thresholds[t] {
                continue;
            }
            if let Some(o) = density {
                row[o + t] += 1.0;
            }
            if let Some(o) = harmonic {
                if d > 0.0 {
                    row[o + t] += 1.0 / d;
                }
            }
            if let Some(o) = gravity {
                row[o + t] += (-plan.betas[t] * d).exp();
            }
        }
    }

    if plan.want_cycles {
        let o = plan.slot(Measure::Cycles).unwrap();
        let mut nodes = vec![0.0f64; t_count];
        let mut records = vec![0.0f64; t_count];
        for &u in &search.reached {
            let du = search.node_dist(u);
            for t in 0..t_count {
                if du <= plan.thresholds[t] {
                    nodes[t] += 1.0;
                }
            }
            for r in s.out_edges(u) {
                let m = du.max(search.node_dist(r.end_idx));
                for t in 0..t_count {
                    if m <= plan.thresholds[t] {
                        records[t] += 1.0;
                    }
                }
            }
        }
        for t in 0..t_count {
            row[o + t] = (records[t] / 2.0 - (nodes[t] - 1.0)).max(0.0);
        }
    }

    if plan.want_segments {
        let sd = plan.slot(Measure::SegDensity);
        let sh = plan.slot(Measure::SegHarmonic);
        let sb = plan.slot(Measure::SegBeta);
        for &u in &search.reached {
            let du = search.node_dist(u);
            for r in s.out_edges(u) {
                let dv = search.node_dist(r.end_idx);
                let split = if dv.is_finite() {
                    ((dv + r.length - du) / 2.0).clamp(0.0, r.length)
                } else {
                    r.length
                };
                let d0 = du;
                for t in 0..t_count {
                    let limit = plan.thresholds[t];
                    if d0 >= limit {
                        continue;
                    }
                    let d1 = (du + split).min(limit);
                    if let Some(o) = sd {
                        row[o + t] += d1 - d0;
                    }
                    if let Some(o) = sh {
                        row[o + t] += d1.max(SEGMENT_HARMONIC_FLOOR).ln()
                            - d0.max(SEGMENT_HARMONIC_FLOOR).ln();
                    }
                    if let Some(o) = sb {
                        let beta = plan.betas[t];
                        row[o + t] += ((-beta * d0).exp() - (-beta * d1).exp()) / beta;
                    }
                }
            }
        }
    }

    if plan.wants_tree_accumulation() {
        accumulate_betweenness(s, plan, ws, src);
    }
    row
}

/// Tree accumulation of betweenness: each branch sums the pair weights of its
/// descendants, which is exactly what every intermediate node (and interior
/// street) on those paths receives.
fn accumulate_betweenness(s: &NetworkStructure, plan: &Plan, ws: &mut Workspace, src: usize) {
    let t_count = plan.t();
    let width = 2 * t_count;
    let branches = &ws.search.branches;
    ws.acc.clear();
    ws.acc.resize(branches.len() * width, 0.0);
    let own = |b: usize, out: &mut [f64]| {
        let br = branches[b];
        out.fill(0.0);
        if br.node <= src || ws.search.node_branch(br.node) != Some(b) {
            return;
        }
        for t in 0..t_count {
            if br.dist <= plan.thresholds[t] {
                out[t] = 1.0;
                out[t_count + t] = (-plan.betas[t] * br.dist).exp();
            }
        }
    };
    let mut own_vals = vec![0.0; width];
    for b in 0..branches.len() {
        own(b, &mut own_vals);
        ws.acc[b * width..(b + 1) * width].copy_from_slice(&own_vals);
    }
    for b in (1..branches.len()).rev() {
        let br = branches[b];
        own(b, &mut own_vals);
        let base = b * width;
        let through: Vec<f64> = (0..width).map(|k| ws.acc[base + k] - own_vals[k]).collect();
        let parent = br.parent;
        for k in 0..width {
            ws.acc[parent * width + k] += ws.acc[base + k];
        }
        if through.iter().all(|&x| x == 0.0) {
            continue;
        }
        if br.node != src && (plan.node_betweenness || plan.node_betweenness_wt) {
            let k = br.node;
            if !ws.node_mark[k] {
                ws.node_mark[k] = true;
                ws.node_touched.push(k);
            }
            for (j, v) in through.iter().enumerate() {
                ws.node_scratch[k * width + j] += v;
            }
        }
        if plan.seg_betweenness && branches[parent].node != src {
            let rec = &s.edges[br.record];
            let seg = rec.segment;
            if !ws.seg_mark[seg] {
                ws.seg_mark[seg] = true;
                ws.seg_touched.push(seg);
            }
            for t in 0..t_count {
                ws.seg_scratch[seg * t_count + t] += through[t_count + t] * rec.length;
            }
        }
    }
}

fn validate_measures(cfg: &AnalysisConfig, allowed: &[Measure]) -> Result<()> {
    cfg.validate()?;
    match cfg.measures.iter().find(|m| !allowed.contains(m)) {
        Some(m) => Err(Error::UnknownMeasure(m.name().to_string())),
        None => Ok(()),
    }
}

/// Node measures (`density`, `harmonic`, `gravity`, `betweenness`,
/// `betweenness_wt`, `cycles`) per threshold.
pub fn node_centrality(s: &NetworkStructure, cfg: &AnalysisConfig) -> Result<MetricsTable> {
    validate_measures(cfg, &Measure::NODE)?;
    compute(s, cfg)
}

/// Segmentised measures (`seg_density`, `seg_harmonic`, `seg_beta`,
/// `seg_betweenness`) per threshold.
pub fn segment_centrality(s: &NetworkStructure, cfg: &AnalysisConfig) -> Result<MetricsTable> {
    validate_measures(cfg, &Measure::SEGMENT)?;
    compute(s, cfg)
}

/// Any mix of node and segment measures in a single pass.
pub fn compute_centrality(s: &NetworkStructure, cfg: &AnalysisConfig) -> Result<MetricsTable> {
    cfg.validate()?;
    compute(s, cfg)
}

fn compute(s: &NetworkStructure, cfg: &AnalysisConfig) -> Result<MetricsTable> {
    let plan = Plan::new(cfg);
    let t_count = plan.t();
    let n = s.node_count();
    let d_max = cfg.max_distance();
    let mut rows = vec![0.0; n * plan.row_len()];
    let mut node_acc = vec![0.0; n * 2 * t_count];
    let mut seg_acc = vec![0.0; s.segment_count() * t_count];

    let sources = live_sources(s);
    parallel::fold_chunks(
        &sources,
        || Workspace::new(s, t_count),
        |ws, chunk| {
            let mut out = ChunkOut {
                rows: Vec::with_capacity(chunk.len()),
                nodes: Vec::new(),
                segments: Vec::new(),
            };
            for &src in chunk {
                run_search(&mut ws.search, s, src, d_max, cfg.heuristic);
                out.rows.push((src, accumulate_source(s, &plan, ws, src)));
            }
            out.nodes = drain_sparse(&mut ws.node_scratch, &mut ws.node_touched, &mut ws.node_mark, 2 * t_count);
            out.segments = drain_sparse(&mut ws.seg_scratch, &mut ws.seg_touched, &mut ws.seg_mark, t_count);
            out
        },
        |out| {
            let w = plan.row_len();
            for (src, row) in out.rows {
                rows[src * w..(src + 1) * w].copy_from_slice(&row);
            }
            for (k, vals) in out.nodes {
                for (j, v) in vals.into_iter().enumerate() {
                    node_acc[k * 2 * t_count + j] += v;
                }
            }
            for (seg, vals) in out.segments {
                for (j, v) in vals.into_iter().enumerate() {
                    seg_acc[seg * t_count + j] += v;
                }
            }
        },
    );

    let edge_keys = s.segments.iter().map(|seg| seg.key.clone()).collect();
    let mut table = MetricsTable::new(s.node_ids.clone(), edge_keys);
    let w = plan.row_len();
    for (mi, m) in plan.row_measures.iter().enumerate() {
        for (t, d) in cfg.distances.iter().enumerate() {
            let col = (0..n).map(|i| rows[i * w + mi * t_count + t]).collect();
            table.insert_node_column(metric_name("cc", m.name(), d), col)?;
        }
    }
    for (t, d) in cfg.distances.iter().enumerate() {
        if plan.node_betweenness {
            let col = (0..n).map(|i| node_acc[i * 2 * t_count + t]).collect();
            table.insert_node_column(metric_name("cc", Measure::Betweenness.name(), d), col)?;
        }
        if plan.node_betweenness_wt {
            let col = (0..n).map(|i| node_acc[i * 2 * t_count + t_count + t]).collect();
            table.insert_node_column(metric_name("cc", Measure::BetweennessWt.name(), d), col)?;
        }
        if plan.seg_betweenness {
            let col = (0..s.segment_count()).map(|i| seg_acc[i * t_count + t]).collect();
            table.insert_edge_column(metric_name("cc", Measure::SegBetweenness.name(), d), col)?;
        }
    }
    Ok(table)
}
