//! Windowed label-setting searches over a [`NetworkStructure`].
//!
//! Both searches record their result as a list of branches in settle order. A
//! branch is one settled label together with its parent branch, which makes the
//! branch list a tree rooted at the source even when labels are directed edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geom::signed_turn;
use crate::structure::NetworkStructure;

pub(crate) const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Branch {
    pub node: usize,
    pub parent: usize,
    /// Record traversed to reach `node`; `NONE` for the root.
    pub record: usize,
    /// Metric distance from the source.
    pub dist: f64,
    /// Angular cost for simplest searches, equal to `dist` for shortest ones.
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct HeapItem {
    key: f64,
    idx: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Angular cost of stepping from record `from` onto record `to`.
pub(crate) fn step_cost(s: &NetworkStructure, from: usize, to: usize) -> f64 {
    let (a, b) = (&s.edges[from], &s.edges[to]);
    signed_turn(a.out_bearing, b.in_bearing).abs() + b.angle_sum
}

/// Reusable search workspace; arrays are reset sparsely between sources.
#[derive(Debug, Clone)]
pub(crate) struct Search {
    dist: Vec<f64>,
    pred_node: Vec<usize>,
    pred_rec: Vec<usize>,
    node_branch: Vec<usize>,
    state_cost: Vec<f64>,
    state_dist: Vec<f64>,
    state_pred: Vec<usize>,
    state_branch: Vec<usize>,
    touched_nodes: Vec<usize>,
    touched_states: Vec<usize>,
    heap: BinaryHeap<HeapItem>,
    pub branches: Vec<Branch>,
    /// Reached nodes in the order their reported label settled.
    pub reached: Vec<usize>,
}

impl Search {
    pub fn new(s: &NetworkStructure) -> Self {
        let (n, e) = (s.node_count(), s.edges.len());
        Self {
            dist: vec![f64::INFINITY; n],
            pred_node: vec![NONE; n],
            pred_rec: vec![NONE; n],
            node_branch: vec![NONE; n],
            state_cost: vec![f64::INFINITY; e],
            state_dist: vec![f64::INFINITY; e],
            state_pred: vec![NONE; e],
            state_branch: vec![NONE; e],
            touched_nodes: Vec::new(),
            touched_states: Vec::new(),
            heap: BinaryHeap::new(),
            branches: Vec::new(),
            reached: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &i in &self.touched_nodes {
            self.dist[i] = f64::INFINITY;
            self.pred_node[i] = NONE;
            self.pred_rec[i] = NONE;
            self.node_branch[i] = NONE;
        }
        for &i in &self.touched_states {
            self.state_cost[i] = f64::INFINITY;
            self.state_dist[i] = f64::INFINITY;
            self.state_pred[i] = NONE;
            self.state_branch[i] = NONE;
        }
        self.touched_nodes.clear();
        self.touched_states.clear();
        self.heap.clear();
        self.branches.clear();
        self.reached.clear();
    }

    /// Branch holding the reported label of `node`, if reached.
    pub fn node_branch(&self, node: usize) -> Option<usize> {
        let b = self.node_branch[node];
        (b != NONE).then_some(b)
    }

    /// Metric distance of `node`, infinite when outside the window.
    pub fn node_dist(&self, node: usize) -> f64 {
        match self.node_branch(node) {
            Some(b) => self.branches[b].dist,
            None => f64::INFINITY,
        }
    }

    /// Dijkstra on metric length, cut off at `d_max`. Equal-distance ties keep the
    /// smaller predecessor node index.
    pub fn shortest(&mut self, s: &NetworkStructure, source: usize, d_max: f64) {
        self.reset();
        self.dist[source] = 0.0;
        self.touched_nodes.push(source);
        self.heap.push(HeapItem { key: 0.0, idx: source });
        while let Some(HeapItem { key: d, idx: u }) = self.heap.pop() {
            if self.node_branch[u] != NONE || d > self.dist[u] {
                continue;
            }
            let parent = match self.pred_node[u] {
                NONE => NONE,
                p => self.node_branch[p],
            };
            self.node_branch[u] = self.branches.len();
            self.branches.push(Branch {
                node: u,
                parent,
                record: self.pred_rec[u],
                dist: d,
                cost: d,
            });
            self.reached.push(u);
            for ri in s.out_range(u) {
                let r = &s.edges[ri];
                let v = r.end_idx;
                if self.node_branch[v] != NONE {
                    continue;
                }
                let nd = d + r.length;
                if nd > d_max {
                    continue;
                }
                if self.dist[v] == f64::INFINITY {
                    self.touched_nodes.push(v);
                }
                if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.pred_node[v] = u;
                    self.pred_rec[v] = ri;
                    self.heap.push(HeapItem { key: nd, idx: v });
                } else if nd == self.dist[v] && u < self.pred_node[v] {
                    self.pred_node[v] = u;
                    self.pred_rec[v] = ri;
                }
            }
        }
    }

    fn relax_state(&mut self, state: usize, cost: f64, dist: f64, pred: usize) {
        if self.state_cost[state] == f64::INFINITY {
            self.touched_states.push(state);
        }
        let current = self.state_cost[state];
        if cost < current || (cost == current && pred < self.state_pred[state]) {
            self.state_cost[state] = cost;
            self.state_dist[state] = dist;
            self.state_pred[state] = pred;
            if cost < current {
                self.heap.push(HeapItem { key: cost, idx: state });
            }
        }
    }

    /// Angular label-setting search over directed-edge states. Metric length still
    /// accrues and bounds the window; a node reports its cheapest incoming state.
    /// Immediate reversal onto the same street is not followed.
    pub fn simplest(&mut self, s: &NetworkStructure, source: usize, d_max: f64) {
        self.reset();
        self.touched_nodes.push(source);
        self.node_branch[source] = 0;
        self.branches.push(Branch {
            node: source,
            parent: NONE,
            record: NONE,
            dist: 0.0,
            cost: 0.0,
        });
        self.reached.push(source);
        for ri in s.out_range(source) {
            let r = &s.edges[ri];
            if r.length <= d_max {
                self.relax_state(ri, r.angle_sum, r.length, NONE);
            }
        }
        while let Some(HeapItem { key: c, idx: ri }) = self.heap.pop() {
            if self.state_branch[ri] != NONE || c > self.state_cost[ri] {
                continue;
            }
            let parent = match self.state_pred[ri] {
                NONE => 0,
                p => self.state_branch[p],
            };
            let b = self.branches.len();
            let v = s.edges[ri].end_idx;
            let d = self.state_dist[ri];
            self.branches.push(Branch {
                node: v,
                parent,
                record: ri,
                dist: d,
                cost: c,
            });
            self.state_branch[ri] = b;
            if self.node_branch[v] == NONE {
                self.node_branch[v] = b;
                self.touched_nodes.push(v);
                self.reached.push(v);
            }
            let back = s.reverse_record(ri);
            for si in s.out_range(v) {
                if si == back || self.state_branch[si] != NONE {
                    continue;
                }
                let nd = d + s.edges[si].length;
                if nd > d_max {
                    continue;
                }
                let nc = c + step_cost(s, ri, si);
                self.relax_state(si, nc, nd, ri);
            }
        }
    }
}
