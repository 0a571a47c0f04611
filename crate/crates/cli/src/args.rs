use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pedscale::Heuristic;

use crate::config::{CentralityStage, CleanStage, DecomposeStage, LanduseStage, RunConfig, Stage, StatsStage};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pedscale", version, about = "Pedestrian-scale street network analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file (TOML); explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Input network GeoJSON, `-` for stdin.
    #[arg(short, long, global = true)]
    pub input: Option<String>,
    /// Output network GeoJSON, `-` for stdout.
    #[arg(short, long, global = true)]
    pub output: Option<String>,
    /// Worker threads for analysis [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Log filter, e.g. `info` or `pedscale=debug`; overrides PEDSCALE_LOG.
    #[arg(long, global = true)]
    pub log_level: Option<String>,
    /// Reproject WGS84 lon/lat input to UTM before the first stage.
    #[arg(long, global = true)]
    pub project_utm: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove stubs and filler nodes, then consolidate nearby nodes.
    Clean(CleanArgs),
    /// Split long edges into equal parts.
    Decompose(DecomposeArgs),
    /// Convert the primal network to its dual.
    ToDual,
    /// Moving-window network centralities.
    Centrality(CentralityArgs),
    /// Land-use accessibility and mixed-use diversity.
    Landuse(LanduseArgs),
    /// Statistical aggregation of numeric point data.
    Stats(StatsArgs),
    /// Run every stage listed in the config file.
    Pipeline,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Straight geometries for edges that have none.
    #[arg(long)]
    pub infer_geoms: bool,
    /// Dead-end chains up to this length (m) are removed.
    #[arg(long, value_name = "M")]
    pub despine: Option<f64>,
    /// Consolidation distance (m); a list runs one pass per value.
    #[arg(long, value_delimiter = ',', value_name = "M,..")]
    pub consolidate_dist: Vec<f64>,
    #[arg(long, value_name = "M")]
    pub merge_parallel_max_len: Option<f64>,
    /// Keep only the component with the most street length.
    #[arg(long, overrides_with = "no_keep_largest")]
    pub keep_largest: bool,
    #[arg(long, overrides_with = "keep_largest")]
    pub no_keep_largest: bool,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Longest allowed edge (m).
    #[arg(long, value_name = "M")]
    pub max_length: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Distance thresholds (m), ascending.
    #[arg(long, value_delimiter = ',', value_name = "M,..")]
    pub distances: Vec<f64>,
    /// Decay rates paired with the distances [default: 4/d].
    #[arg(long, value_delimiter = ',', value_name = "B,..")]
    pub betas: Vec<f64>,
    #[arg(long, value_parser = parse_heuristic)]
    pub heuristic: Option<Heuristic>,
}

#[derive(Debug, Args)]
pub struct CentralityArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    /// Measure names [default: every node measure].
    #[arg(long, value_delimiter = ',')]
    pub measures: Vec<String>,
    /// Also compute every segment measure.
    #[arg(long)]
    pub segments: bool,
}

#[derive(Debug, Args)]
pub struct LanduseArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    /// Point GeoJSON of land uses.
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub category_field: Option<String>,
    /// Classes to report [default: all in the data].
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<String>,
    /// Hill orders for mixed-use diversity.
    #[arg(long, value_delimiter = ',')]
    pub hill_q: Vec<f64>,
    #[arg(long, value_name = "M")]
    pub max_assign_dist: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    /// Point GeoJSON of observations.
    #[arg(long)]
    pub data: Option<String>,
    /// Numeric fields to aggregate.
    #[arg(long = "value-field", value_delimiter = ',', required = false)]
    pub value_fields: Vec<String>,
    #[arg(long, value_name = "M")]
    pub max_assign_dist: Option<f64>,
}

fn parse_heuristic(s: &str) -> Result<Heuristic, String> {
    s.parse().map_err(|e: pedscale::Error| e.to_string())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_list<T>(slot: &mut Vec<T>, value: Vec<T>) {
    if !value.is_empty() {
        *slot = value;
    }
}

impl WindowArgs {
    fn apply(self, distances: &mut Vec<f64>, betas: &mut Option<Vec<f64>>, heuristic: &mut Heuristic) {
        set_list(distances, self.distances);
        if !self.betas.is_empty() {
            *betas = Some(self.betas);
        }
        set(heuristic, self.heuristic);
    }
}

impl Cli {
    /// Merges the config file (if any) with explicit flags.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
                RunConfig::parse(&text)?
            }
            None => RunConfig::default(),
        };
        cfg.version = None;
        let c = self.common;
        if c.input.is_some() {
            cfg.input = c.input;
        }
        if c.output.is_some() {
            cfg.output = c.output;
        }
        if c.workers.is_some() {
            cfg.workers = c.workers;
        }
        if c.log_level.is_some() {
            cfg.log_level = c.log_level;
        }
        cfg.project_utm |= c.project_utm;

        let seed = |kind: &str| cfg.stage_like(kind).cloned();
        let stage = match self.command {
            Command::Pipeline => None,
            Command::ToDual => Some(Stage::ToDual),
            Command::Clean(a) => {
                let mut s = match seed("clean") {
                    Some(Stage::Clean(s)) => s,
                    _ => CleanStage::default(),
                };
                s.infer_geoms |= a.infer_geoms;
                set(&mut s.despine_dist, a.despine);
                set_list(&mut s.consolidate_dist, a.consolidate_dist);
                set(&mut s.merge_parallel_max_len, a.merge_parallel_max_len);
                if a.keep_largest {
                    s.keep_largest_component = true;
                }
                if a.no_keep_largest {
                    s.keep_largest_component = false;
                }
                Some(Stage::Clean(s))
            }
            Command::Decompose(a) => {
                let mut s = match seed("decompose") {
                    Some(Stage::Decompose(s)) => s,
                    _ => DecomposeStage::default(),
                };
                if a.max_length.is_some() {
                    s.max_length = a.max_length;
                }
                Some(Stage::Decompose(s))
            }
            Command::Centrality(a) => {
                let mut s = match seed("centrality") {
                    Some(Stage::Centrality(s)) => s,
                    _ => CentralityStage::default(),
                };
                a.window.apply(&mut s.distances, &mut s.betas, &mut s.heuristic);
                set_list(&mut s.measures, a.measures);
                s.segments |= a.segments;
                Some(Stage::Centrality(s))
            }
            Command::Landuse(a) => {
                let mut s = match seed("landuse") {
                    Some(Stage::Landuse(s)) => s,
                    _ => LanduseStage::default(),
                };
                a.window.apply(&mut s.distances, &mut s.betas, &mut s.heuristic);
                if a.data.is_some() {
                    s.data = a.data;
                }
                set(&mut s.category_field, a.category_field);
                set_list(&mut s.categories, a.categories);
                set_list(&mut s.hill_q, a.hill_q);
                set(&mut s.max_assign_dist, a.max_assign_dist);
                Some(Stage::Landuse(s))
            }
            Command::Stats(a) => {
                let mut s = match seed("stats") {
                    Some(Stage::Stats(s)) => s,
                    _ => StatsStage::default(),
                };
                a.window.apply(&mut s.distances, &mut s.betas, &mut s.heuristic);
                if a.data.is_some() {
                    s.data = a.data;
                }
                set_list(&mut s.value_fields, a.value_fields);
                set(&mut s.max_assign_dist, a.max_assign_dist);
                Some(Stage::Stats(s))
            }
        };
        if let Some(stage) = stage {
            cfg.stages = vec![stage];
        } else if cfg.stages.is_empty() {
            return Err(CliError::Usage("pipeline needs a config with at least one stage".into()));
        }
        Ok(cfg)
    }
}
