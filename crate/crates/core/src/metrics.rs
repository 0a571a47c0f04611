use std::collections::BTreeMap;
use std::fmt::Display;

use crate::error::{Error, Result};
use crate::graph::EdgeKey;

/// Property name for a metric column: `{prefix}_{measure}_{distance}`.
///
/// Distances print without a trailing `.0`, so `800.0` becomes `cc_harmonic_800`.
pub fn metric_name(prefix: &str, measure: &str, distance: impl Display) -> String {
    format!("{prefix}_{measure}_{distance}")
}

/// Per-node and per-edge metric columns keyed by property name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    pub node_ids: Vec<String>,
    pub edge_keys: Vec<EdgeKey>,
    pub nodes: BTreeMap<String, Vec<f64>>,
    pub edges: BTreeMap<String, Vec<f64>>,
}

impl MetricsTable {
    pub fn new(node_ids: Vec<String>, edge_keys: Vec<EdgeKey>) -> Self {
        Self {
            node_ids,
            edge_keys,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn insert_node_column(&mut self, name: String, values: Vec<f64>) -> Result<()> {
        if values.len() != self.node_ids.len() {
            return Err(Error::MetricsShape {
                what: "nodes",
                expected: self.node_ids.len(),
                found: values.len(),
            });
        }
        self.nodes.insert(name, values);
        Ok(())
    }

    pub fn insert_edge_column(&mut self, name: String, values: Vec<f64>) -> Result<()> {
        if values.len() != self.edge_keys.len() {
            return Err(Error::MetricsShape {
                what: "edges",
                expected: self.edge_keys.len(),
                found: values.len(),
            });
        }
        self.edges.insert(name, values);
        Ok(())
    }

    pub fn node_column(&self, name: &str) -> Option<&[f64]> {
        self.nodes.get(name).map(Vec::as_slice)
    }

    pub fn edge_column(&self, name: &str) -> Option<&[f64]> {
        self.edges.get(name).map(Vec::as_slice)
    }

    /// Value of a node column looked up by node id.
    pub fn node_value(&self, name: &str, node_id: &str) -> Option<f64> {
        let idx = self.node_ids.iter().position(|n| n == node_id)?;
        self.nodes.get(name).map(|col| col[idx])
    }

    /// Adds the columns of `other`, which must describe the same nodes and edges.
    pub fn merge(&mut self, other: MetricsTable) -> Result<()> {
        if other.node_ids != self.node_ids || other.edge_keys != self.edge_keys {
            return Err(Error::InvalidParameter(
                "cannot merge metrics computed on different networks".into(),
            ));
        }
        self.nodes.extend(other.nodes);
        self.edges.extend(other.edges);
        Ok(())
    }
}
