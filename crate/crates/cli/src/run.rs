//! Stage execution. Every stage consumes and produces network GeoJSON text, so
//! a pipeline is exactly the composition of the individual subcommands.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use pedscale::clean::{consolidate_nodes, infer_simple_geoms, remove_dangling_nodes, remove_filler_nodes};
use pedscale::io::{export_network, import_data, import_network, Format};
use pedscale::layers::{self, assign_to_network, unassigned_count};
use pedscale::projection::project_wgs_to_utm;
use pedscale::structure::{build_structure, decompose, structure_to_graph, to_dual};
use pedscale::{AggregationConfig, MetricsTable, Multigraph, NetworkStructure};

use crate::config::{CleanStage, LanduseStage, RunConfig, Stage, StatsStage, VERSION};
use crate::error::CliError;

/// Human-readable progress lines, printed once the run finishes.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
}

impl Report {
    fn push(&mut self, stage: &str, line: impl AsRef<str>) {
        self.lines.push(format!("{stage}: {}", line.as_ref()));
    }

    fn counts(&mut self, stage: &str, before: &Multigraph, after: &Multigraph) {
        self.push(stage, format!("nodes: {} → {}", before.node_count(), after.node_count()));
        self.push(stage, format!("edges: {} → {}", before.edge_count(), after.edge_count()));
    }
}

pub fn read_source(path: &str) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    if path == "-" {
        std::io::stdin().read_to_end(&mut buf).map_err(|e| CliError::io(path, e))?;
    } else {
        buf = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    }
    Ok(buf)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &str, contents: &[u8]) -> Result<(), CliError> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        return out.write_all(contents).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e));
    }
    let dir = match Path::new(path).parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::env::current_dir().map_err(|e| CliError::io(path, e))?,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn import(text: &[u8]) -> Result<Multigraph, CliError> {
    let imported = import_network(text, Format::GeoJson)?;
    if imported.skipped > 0 {
        log::warn!("skipped {} features without a usable id or geometry", imported.skipped);
    }
    Ok(imported.graph)
}

fn export(g: &Multigraph) -> Result<String, CliError> {
    Ok(export_network(g, None, Format::GeoJson)?)
}

fn clean(stage: &CleanStage, g: Multigraph, report: &mut Report) -> Result<Multigraph, CliError> {
    let before = g.clone();
    let mut g = if stage.infer_geoms { infer_simple_geoms(&g) } else { g };
    let passes = stage.passes();
    g = remove_dangling_nodes(&g, &passes[0])?;
    g = remove_filler_nodes(&g)?;
    for pass in &passes[1..] {
        let n = g.node_count();
        g = consolidate_nodes(&g, pass)?;
        log::info!("consolidation at {} m: {} → {} nodes", pass.consolidate_dist, n, g.node_count());
    }
    report.counts("clean", &before, &g);
    Ok(g)
}

fn annotate(s: &NetworkStructure, table: &MetricsTable, report: &mut Report, stage: &str) -> Result<Multigraph, CliError> {
    report.push(stage, format!("columns: {}", table.nodes.len() + table.edges.len()));
    Ok(structure_to_graph(s, Some(table))?)
}

fn assigned(
    s: &NetworkStructure,
    data: &str,
    category: Option<&str>,
    values: &[String],
    max_assign_dist: f64,
    report: &mut Report,
    stage: &str,
) -> Result<Vec<pedscale::DataEntry>, CliError> {
    let entries = import_data(&read_source(data)?, category, values)?;
    let entries = assign_to_network(&entries, s, max_assign_dist)?;
    report.push(stage, format!("points: {}", entries.len()));
    report.push(stage, format!("unassigned: {}", unassigned_count(&entries)));
    Ok(entries)
}

fn landuse(stage: &LanduseStage, g: &Multigraph, report: &mut Report) -> Result<Multigraph, CliError> {
    let ac = stage.window().analysis_with([])?;
    let s = build_structure(g)?;
    let data = stage.data.as_deref().expect("validated");
    let entries = assigned(&s, data, Some(&stage.category_field), &[], stage.max_assign_dist, report, "landuse")?;
    let categories = if stage.categories.is_empty() {
        let mut found: Vec<String> = entries.iter().filter_map(|e| e.category.clone()).collect();
        found.sort();
        found.dedup();
        found
    } else {
        stage.categories.clone()
    };
    let cfg = AggregationConfig {
        categories,
        hill_orders: stage.hill_q.clone(),
        stats_fields: Vec::new(),
    };
    let mut table = MetricsTable::new(s.node_ids.clone(), s.segments.iter().map(|x| x.key.clone()).collect());
    if cfg.categories.is_empty() {
        log::warn!("no categories found in field {}", stage.category_field);
    } else {
        table.merge(layers::compute_accessibilities(&s, &entries, &cfg, &ac)?)?;
        if !cfg.hill_orders.is_empty() {
            table.merge(layers::compute_mixed_uses(&s, &entries, &cfg, &ac)?)?;
        }
    }
    annotate(&s, &table, report, "landuse")
}

fn stats(stage: &StatsStage, g: &Multigraph, report: &mut Report) -> Result<Multigraph, CliError> {
    let ac = stage.window().analysis_with([])?;
    let s = build_structure(g)?;
    let data = stage.data.as_deref().expect("validated");
    let entries = assigned(&s, data, None, &stage.value_fields, stage.max_assign_dist, report, "stats")?;
    let cfg = AggregationConfig {
        stats_fields: stage.value_fields.clone(),
        ..Default::default()
    };
    let table = layers::compute_stats(&s, &entries, &cfg, &ac)?;
    annotate(&s, &table, report, "stats")
}

fn apply(stage: &Stage, g: Multigraph, report: &mut Report) -> Result<Multigraph, CliError> {
    match stage {
        Stage::Clean(c) => clean(c, g, report),
        Stage::Decompose(d) => {
            let out = decompose(&g, d.max_length.expect("validated"))?;
            report.counts("decompose", &g, &out);
            Ok(out)
        }
        Stage::ToDual => {
            let out = to_dual(&g)?;
            report.counts("to-dual", &g, &out);
            Ok(out)
        }
        Stage::Centrality(c) => {
            let ac = c.analysis()?;
            let s = build_structure(&g)?;
            let table = pedscale::centrality::compute_centrality(&s, &ac)?;
            annotate(&s, &table, report, "centrality")
        }
        Stage::Landuse(l) => landuse(l, &g, report),
        Stage::Stats(s) => stats(s, &g, report),
    }
}

/// Runs every stage of a validated config and writes the output and sidecar.
pub fn execute(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let started = Instant::now();
    let input = cfg.input.as_deref().unwrap_or("-");
    let output = cfg.output.as_deref().unwrap_or("-");
    let mut g = import(&read_source(input)?)?;
    if cfg.project_utm {
        g = project_wgs_to_utm(&g)?;
        report.push("project", format!("crs: {}", g.crs_tag.as_deref().unwrap_or("?")));
    }
    let mut text = export(&g)?;
    for stage in &cfg.stages {
        log::info!("running stage {}", stage.name());
        let graph = import(text.as_bytes())?;
        text = export(&apply(stage, graph, report)?)?;
    }
    write_atomic(output, text.as_bytes())?;
    if output != "-" {
        let sidecar = RunConfig {
            version: Some(VERSION.to_string()),
            ..cfg.clone()
        };
        write_atomic(&sidecar_path(output), sidecar.to_toml().as_bytes())?;
    }
    report.lines.push(format!("wall time: {:.3}s", started.elapsed().as_secs_f64()));
    Ok(())
}

pub fn sidecar_path(output: &str) -> String {
    format!("{output}.run.toml")
}
