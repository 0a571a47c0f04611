//! Pedestrian-scale street network analysis.
//!
//! The pipeline runs from a primal [`Multigraph`] through cleaning
//! ([`clean`]), optional decomposition or dual conversion ([`structure`]) into a
//! flat [`NetworkStructure`], over which moving-window [`centrality`] and data
//! [`layers`] measures are computed into a [`MetricsTable`].

pub mod centrality;
pub mod clean;
pub mod error;
pub mod geom;
pub mod graph;
pub mod io;
pub mod layers;
pub mod metrics;
pub mod mock;
pub mod projection;
pub mod structure;

mod parallel;

pub use centrality::{AnalysisConfig, Heuristic, ShortestTree};
pub use clean::CleanConfig;
pub use error::{Error, Result};
pub use geom::Coord;
pub use graph::{Edge, EdgeGeom, EdgeKey, Multigraph, Node, ValidationReport, SNAP_TOLERANCE};
pub use layers::{AggregationConfig, DataEntry, DecayParams};
pub use metrics::{metric_name, MetricsTable};
pub use structure::{EdgeRecord, NetworkStructure};
