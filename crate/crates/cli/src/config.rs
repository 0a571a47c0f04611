//! Declarative run configuration. A config file holds the shared paths and
//! options plus an ordered list of stages; every field mirrors a CLI flag.

use serde::{Deserialize, Serialize};

use pedscale::centrality::Measure;
use pedscale::{AnalysisConfig, CleanConfig, Heuristic};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Tool version that wrote the file; informational only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_level: Option<String>,
    /// Reproject WGS84 input to UTM before the first stage.
    pub project_utm: bool,
    pub stages: Vec<Stage>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serialises")
    }

    /// First stage of the same kind as `like`, used to seed subcommand defaults.
    pub fn stage_like(&self, kind: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name() == kind)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut analysing = false;
        for stage in &self.stages {
            stage.validate()?;
            if stage.is_analysis() {
                analysing = true;
            } else if analysing {
                return Err(CliError::Usage(format!(
                    "stage {} cannot follow an analysis stage",
                    stage.name()
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    Clean(CleanStage),
    Decompose(DecomposeStage),
    ToDual,
    Centrality(CentralityStage),
    Landuse(LanduseStage),
    Stats(StatsStage),
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Clean(_) => "clean",
            Stage::Decompose(_) => "decompose",
            Stage::ToDual => "to-dual",
            Stage::Centrality(_) => "centrality",
            Stage::Landuse(_) => "landuse",
            Stage::Stats(_) => "stats",
        }
    }

    pub fn is_analysis(&self) -> bool {
        matches!(self, Stage::Centrality(_) | Stage::Landuse(_) | Stage::Stats(_))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            Stage::Clean(c) => {
                c.passes().into_iter().try_for_each(|p| p.validate())?;
            }
            Stage::Decompose(d) => match d.max_length {
                Some(m) if m > 0.0 && m.is_finite() => {}
                Some(m) => return Err(CliError::Usage(format!("max_length must be positive, got {m}"))),
                None => return Err(CliError::Usage("decompose needs max_length".into())),
            },
            Stage::ToDual => {}
            Stage::Centrality(c) => {
                c.analysis()?;
            }
            Stage::Landuse(l) => {
                l.window().analysis()?;
                if l.data.is_none() {
                    return Err(CliError::Usage("landuse needs data".into()));
                }
                if let Some(q) = l.hill_q.iter().find(|q| !q.is_finite() || **q < 0.0) {
                    return Err(CliError::Usage(format!("hill_q must be finite and >= 0, got {q}")));
                }
                check_assign(l.max_assign_dist)?;
            }
            Stage::Stats(s) => {
                s.window().analysis()?;
                if s.data.is_none() {
                    return Err(CliError::Usage("stats needs data".into()));
                }
                if s.value_fields.is_empty() {
                    return Err(CliError::Usage("stats needs at least one value_field".into()));
                }
                check_assign(s.max_assign_dist)?;
            }
        }
        Ok(())
    }
}

fn check_assign(d: f64) -> Result<(), CliError> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("max_assign_dist must be positive, got {d}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanStage {
    /// Give geometry-less edges straight geometries first.
    pub infer_geoms: bool,
    pub despine_dist: f64,
    /// One consolidation pass per entry, in order.
    pub consolidate_dist: Vec<f64>,
    pub keep_largest_component: bool,
    pub merge_parallel_max_len: f64,
}

impl Default for CleanStage {
    fn default() -> Self {
        let d = CleanConfig::default();
        Self {
            infer_geoms: false,
            despine_dist: d.despine_dist,
            consolidate_dist: vec![d.consolidate_dist],
            keep_largest_component: d.keep_largest_component,
            merge_parallel_max_len: d.merge_parallel_max_len,
        }
    }
}

impl CleanStage {
    /// The configuration for the stub pass followed by one per consolidation distance.
    pub fn passes(&self) -> Vec<CleanConfig> {
        let base = CleanConfig {
            despine_dist: self.despine_dist,
            consolidate_dist: 0.0,
            keep_largest_component: self.keep_largest_component,
            merge_parallel_max_len: self.merge_parallel_max_len,
        };
        std::iter::once(base)
            .chain(self.consolidate_dist.iter().map(|&d| CleanConfig { consolidate_dist: d, ..base }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeStage {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_length: Option<f64>,
}

/// Thresholds and route choice shared by every analysis stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Window {
    pub distances: Vec<f64>,
    pub betas: Option<Vec<f64>>,
    pub heuristic: Heuristic,
}

impl Window {
    pub fn analysis_with(&self, measures: impl IntoIterator<Item = Measure>) -> Result<AnalysisConfig, CliError> {
        if self.distances.is_empty() {
            return Err(CliError::Usage("distances are required".into()));
        }
        AnalysisConfig::new(self.distances.clone(), self.betas.clone(), self.heuristic, measures)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    fn analysis(&self) -> Result<AnalysisConfig, CliError> {
        self.analysis_with([])
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CentralityStage {
    pub distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    pub heuristic: Heuristic,
    /// Measure names; empty selects every node measure.
    pub measures: Vec<String>,
    /// Add every segment measure.
    pub segments: bool,
}

macro_rules! window_accessors {
    ($($t:ty),*) => {$(
        impl $t {
            pub fn window(&self) -> Window {
                Window {
                    distances: self.distances.clone(),
                    betas: self.betas.clone(),
                    heuristic: self.heuristic,
                }
            }
        }
    )*};
}

window_accessors!(CentralityStage, LanduseStage, StatsStage);

impl CentralityStage {
    pub fn analysis(&self) -> Result<AnalysisConfig, CliError> {
        let mut measures = AnalysisConfig::parse_measures(&self.measures).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.measures.is_empty() {
            measures.extend(Measure::NODE);
        }
        if self.segments {
            measures.extend(Measure::SEGMENT);
        }
        self.window().analysis_with(measures)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanduseStage {
    pub distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    pub heuristic: Heuristic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub category_field: String,
    /// Classes to report; empty means every class found in the data.
    pub categories: Vec<String>,
    pub hill_q: Vec<f64>,
    pub max_assign_dist: f64,
}

impl Default for LanduseStage {
    fn default() -> Self {
        Self {
            distances: Vec::new(),
            betas: None,
            heuristic: Heuristic::default(),
            data: None,
            category_field: "category".into(),
            categories: Vec::new(),
            hill_q: vec![0.0, 1.0, 2.0],
            max_assign_dist: pedscale::layers::DEFAULT_MAX_ASSIGN_DIST,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsStage {
    pub distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    pub heuristic: Heuristic,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    pub value_fields: Vec<String>,
    pub max_assign_dist: f64,
}

impl Default for StatsStage {
    fn default() -> Self {
        Self {
            distances: Vec::new(),
            betas: None,
            heuristic: Heuristic::default(),
            data: None,
            value_fields: Vec::new(),
            max_assign_dist: pedscale::layers::DEFAULT_MAX_ASSIGN_DIST,
        }
    }
}
