//! Acceptance suite. Runs without the libtest harness so that every criterion
//! reports a single PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use pedscale::centrality::{
    compute_centrality, node_centrality, segment_centrality, shortest_tree, simplest_tree, Measure,
};
use pedscale::clean::{consolidate_nodes, remove_dangling_nodes, remove_filler_nodes};
use pedscale::io::{export_network, Format};
use pedscale::layers::{
    aggregate_reachable, assign_to_network, beta_from_distance, decay_weight, hill_diversity,
};
use pedscale::structure::{build_structure, decompose, structure_to_graph};
use pedscale::{mock, AnalysisConfig, CleanConfig, Coord, DataEntry, DecayParams, EdgeGeom, Heuristic, Multigraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn decay_law() -> Check {
    for (d_max, beta) in [(200.0, 0.02), (400.0, 0.01), (800.0, 0.005), (1600.0, 0.0025)] {
        let b = beta_from_distance(d_max).map_err(|e| e.to_string())?;
        ensure(b == beta, || format!("beta({d_max}) = {b}"))?;
        let p = DecayParams::new(b, d_max).unwrap();
        for d in [0.0, d_max / 4.0, d_max / 2.0, d_max] {
            let w = decay_weight(d, &p).unwrap();
            ensure((w - (-beta * d).exp()).abs() <= 1e-12, || format!("w({d}) = {w}"))?;
        }
        let w = decay_weight(d_max, &p).unwrap();
        ensure((w - (-4.0f64).exp()).abs() <= 1e-12, || format!("w(d_max) = {w}"))?;
    }
    Ok("4 thresholds".into())
}

fn shortest_path_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let measures = [
        Measure::Density,
        Measure::Harmonic,
        Measure::Gravity,
        Measure::Betweenness,
        Measure::BetweennessWt,
    ];
    let mut compared = 0usize;
    for trial in 0..200 {
        let n = rng.random_range(2..=50);
        let g = random_connected_graph(&mut rng, n);
        let s = build_structure(&g).map_err(|e| e.to_string())?;
        let d1 = rng.random_range(200..1500) as f64;
        let distances = vec![d1, d1 + rng.random_range(100..1500) as f64];
        let cfg = AnalysisConfig::new(distances.clone(), None, Heuristic::Shortest, measures).unwrap();
        let oracle = all_pairs(&s);
        let d_max = distances[1];
        for src in 0..s.node_count() {
            let tree = shortest_tree(&s, src, d_max);
            for v in 0..s.node_count() {
                let want = if oracle[src][v] <= d_max { oracle[src][v] } else { f64::INFINITY };
                ensure(tree.dist[v] == want, || {
                    format!("trial {trial}: dist {src}->{v} = {}, oracle {want}", tree.dist[v])
                })?;
            }
        }
        let table = node_centrality(&s, &cfg).map_err(|e| e.to_string())?;
        for (name, want) in naive_node_measures(&s, &oracle, &distances, &cfg.betas) {
            let got = table.node_column(&name).ok_or(format!("missing {name}"))?;
            for (i, (a, b)) in got.iter().zip(&want).enumerate() {
                ensure(close_rel(*a, *b, 1e-9), || format!("trial {trial}: {name}[{i}] = {a}, naive {b}"))?;
                compared += 1;
            }
        }
    }
    Ok(format!("200 graphs, {compared} values"))
}

fn angular_safeguard() -> Check {
    let s = build_structure(&lattice_4x3()).unwrap();
    let src = s.index_of("c1r0").unwrap();
    let tree = simplest_tree(&s, src, 1e6);
    let engine = tree.simplest_cost.unwrap();
    let exhaustive = exhaustive_simplest(&s, src);
    let variant = node_state_simplest(&s, src);
    for v in 0..s.node_count() {
        ensure(engine[v] == exhaustive[v], || {
            format!("{}: edge-state {} vs enumeration {}", s.node_ids[v], engine[v], exhaustive[v])
        })?;
        ensure(variant[v] <= engine[v], || format!("{}: node-state above edge-state", s.node_ids[v]))?;
    }
    let undercut: Vec<&str> = (0..s.node_count())
        .filter(|&v| variant[v] < engine[v])
        .map(|v| s.node_ids[v].as_str())
        .collect();
    ensure(!undercut.is_empty(), || "node-state variant never undercuts".into())?;
    let t = s.index_of("c2r1").unwrap();
    Ok(format!(
        "{} nodes undercut; c2r1 true {} vs node-state {}",
        undercut.len(),
        engine[t],
        variant[t]
    ))
}

fn decomposition_invariants() -> Check {
    let g = mock::mock_graph();
    let total = g.total_length();
    for max_len in [25.0, 50.0, 100.0] {
        let d = decompose(&g, max_len).map_err(|e| e.to_string())?;
        for k in d.edges.keys() {
            let l = d.edge_length(k);
            ensure(l <= max_len * (1.0 + 1e-9), || format!("{k} has length {l} > {max_len}"))?;
        }
        let rel = (d.total_length() - total).abs() / total;
        ensure(rel <= 1e-9, || format!("length drift {rel}"))?;
        for (id, deg) in d.degrees() {
            if !g.nodes.contains_key(id) {
                ensure(deg == 2, || format!("new node {id} has degree {deg}"))?;
            }
        }
        let back = remove_filler_nodes(&d).map_err(|e| e.to_string())?;
        ensure(back.node_count() == g.node_count() && back.edge_count() == g.edge_count(), || {
            format!("recovered {} nodes / {} edges", back.node_count(), back.edge_count())
        })?;
        let (a, b) = (edge_signature(&back), edge_signature(&g));
        let same = a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1 == y.1 && close_rel(x.2, y.2, 1e-9));
        ensure(same, || format!("topology differs after recovery at max_len {max_len}"))?;
    }
    Ok(format!("{} edges, max_len 25/50/100", g.edge_count()))
}

fn segment_stability() -> Check {
    let g = mock::mock_graph();
    let cfg = AnalysisConfig::new(
        vec![800.0],
        None,
        Heuristic::Shortest,
        [Measure::SegDensity, Measure::SegHarmonic, Measure::SegBeta],
    )
    .unwrap();
    let base = segment_centrality(&build_structure(&g).unwrap(), &cfg).unwrap();
    let mut worst = [0.0f64; 3];
    for max_len in [100.0, 50.0, 25.0] {
        let s = build_structure(&decompose(&g, max_len).unwrap()).unwrap();
        let t = segment_centrality(&s, &cfg).unwrap();
        for id in g.nodes.keys() {
            for (k, (name, tol)) in [
                ("cc_seg_density_800", 1e-9),
                ("cc_seg_harmonic_800", 1e-6),
                ("cc_seg_beta_800", 1e-6),
            ]
            .into_iter()
            .enumerate()
            {
                let (a, b) = (t.node_value(name, id).unwrap(), base.node_value(name, id).unwrap());
                let rel = if a == b { 0.0 } else { (a - b).abs() / b.abs().max(a.abs()) };
                worst[k] = worst[k].max(rel);
                ensure(rel <= tol, || format!("{name} at {id}, max_len {max_len}: {a} vs {b}"))?;
            }
        }
    }
    Ok(format!(
        "max relative drift density {:.1e}, harmonic {:.1e}, beta {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn assignment_and_flanks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut points = 0;
    for seed in 0..5 {
        let s = build_structure(&mock::grid_with_noise(6, 6, 100.0, 1.0, seed)).unwrap();
        let data: Vec<DataEntry> = (0..200)
            .map(|i| DataEntry::new(format!("p{i}"), rng.random_range(30.0..470.0), rng.random_range(30.0..470.0)))
            .collect();
        let out = assign_to_network(&data, &s, 400.0).unwrap();
        for e in &out {
            let p = Coord::new(e.x, e.y);
            let seg = nearest_segment(&s, p);
            let rec = &s.edges[s.segments[seg].records[0]];
            let mut want = [rec.start_idx, rec.end_idx];
            want.sort();
            let (n, dn) = e.nearest.ok_or(format!("{} unassigned", e.id))?;
            let (m, dm) = e.next_nearest.ok_or(format!("{} has one flank", e.id))?;
            let mut got = [n, m];
            got.sort();
            ensure(got == want, || format!("seed {seed} {}: winding {got:?} vs nearest edge {want:?}", e.id))?;
            for (node, dist) in [(n, dn), (m, dm)] {
                ensure(dist >= p.dist(s.coord(node)) - pedscale::SNAP_TOLERANCE, || {
                    format!("{}: assignment distance too small", e.id)
                })?;
            }
            points += 1;
        }
    }

    let mut g = Multigraph::new();
    g.add_node("a", 0.0, 0.0);
    g.add_node("b", 100.0, 0.0);
    g.add_edge("a", "b", Some(EdgeGeom::straight(Coord::new(0.0, 0.0), Coord::new(100.0, 0.0))));
    let s = build_structure(&g).unwrap();
    let mut e = DataEntry::new("p", 0.0, 0.0);
    e.nearest = Some((0, 30.0));
    e.next_nearest = Some((1, 80.0));
    let data = [e];
    let from_a = aggregate_reachable(&shortest_tree(&s, 0, 800.0), &data, 800.0);
    let from_b = aggregate_reachable(&shortest_tree(&s, 1, 800.0), &data, 800.0);
    ensure(from_a == vec![(0, 30.0)] && from_b == vec![(0, 80.0)], || {
        format!("flank totals {from_a:?} / {from_b:?}")
    })?;

    // one long street, walk from a to a point off its middle
    let mut g = Multigraph::new();
    g.add_node("a", 0.0, 0.0);
    g.add_node("b", 800.0, 0.0);
    g.add_edge("a", "b", Some(EdgeGeom::straight(Coord::new(0.0, 0.0), Coord::new(800.0, 0.0))));
    let exact = 310.0 + 20.0;
    let mut errors = Vec::new();
    for max_len in [200.0, 100.0, 50.0, 25.0] {
        let s = build_structure(&decompose(&g, max_len).unwrap()).unwrap();
        let placed = assign_to_network(&[DataEntry::new("p", 310.0, 20.0)], &s, 400.0).unwrap();
        let src = s.index_of("a").unwrap();
        let reach = aggregate_reachable(&shortest_tree(&s, src, 2000.0), &placed, 2000.0);
        errors.push((reach[0].1 - exact).abs());
    }
    ensure(errors.windows(2).all(|w| w[1] <= w[0]), || format!("errors {errors:?}"))?;
    Ok(format!(
        "{points} points match the nearest-edge oracle; errors {:.2?}",
        errors
    ))
}

fn hill_properties() -> Check {
    for s in [1usize, 5, 20] {
        for q in [0.0, 0.5, 1.0, 2.0, 5.0] {
            let d = hill_diversity(&vec![4.0; s], q).unwrap();
            ensure((d - s as f64).abs() <= 1e-9, || format!("uniform {s} at q {q}: {d}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let orders: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
    for _ in 0..100 {
        let counts: Vec<f64> = (0..rng.random_range(1..12)).map(|_| rng.random_range(0..30) as f64).collect();
        if counts.iter().all(|c| *c == 0.0) {
            continue;
        }
        let values: Vec<f64> = orders.iter().map(|&q| hill_diversity(&counts, q).unwrap()).collect();
        ensure(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), || {
            format!("not monotone for {counts:?}: {values:?}")
        })?;
        let d1 = hill_diversity(&counts, 1.0).unwrap();
        for q in [1.0 - 1e-6, 1.0 + 1e-6] {
            let dq = hill_diversity(&counts, q).unwrap();
            ensure((dq - d1).abs() <= 1e-4, || format!("q {q}: {dq} vs {d1}"))?;
        }
    }
    Ok("uniform, monotone and continuity checks".into())
}

fn cleaning_invariants() -> Check {
    let g = mock::messy_graph();
    let once = remove_filler_nodes(&g).map_err(|e| e.to_string())?;
    let rel = (once.total_length() - g.total_length()).abs() / g.total_length();
    ensure(rel <= 1e-9, || format!("filler removal length drift {rel}"))?;
    ensure(remove_filler_nodes(&once).unwrap() == once, || "filler removal not idempotent".into())?;

    let mut previous = g.clone();
    for despine in [0.0, 10.0, 25.0, 50.0] {
        let cfg = CleanConfig { despine_dist: despine, keep_largest_component: false, ..Default::default() };
        let out = remove_dangling_nodes(&g, &cfg).unwrap();
        ensure(out.edges.keys().all(|k| g.edges.contains_key(k)), || format!("despine {despine} added edges"))?;
        ensure(out.edges.keys().all(|k| previous.edges.contains_key(k)), || {
            format!("despine {despine} kept an edge a smaller threshold removed")
        })?;
        previous = out;
    }

    let zero = CleanConfig { consolidate_dist: 0.0, ..Default::default() };
    ensure(consolidate_nodes(&g, &zero).unwrap() == g, || "consolidation at 0 changed the graph".into())?;

    let merged = consolidate_nodes(&mock::dual_carriageway(), &CleanConfig::default()).unwrap();
    let between = merged.edges.keys().filter(|k| k.start == "a1" && k.end == "b1").count();
    ensure(between == 1, || format!("{between} edges between the merged ends"))?;
    Ok(format!("dual carriageway: {} nodes, {} edges", merged.node_count(), merged.edge_count()))
}

fn determinism_and_scale() -> Check {
    let g = mock::grid_with_noise(224, 224, 100.0, 0.75, 9);
    let s = build_structure(&g).unwrap();
    let all = Measure::NODE.iter().chain(Measure::SEGMENT.iter()).copied();
    let cfg = AnalysisConfig::new(vec![200.0, 400.0, 800.0, 1600.0], None, Heuristic::Shortest, all).unwrap();
    let run = |workers: usize| -> (String, Duration) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let start = Instant::now();
        let table = pool.install(|| compute_centrality(&s, &cfg)).unwrap();
        let elapsed = start.elapsed();
        let out = structure_to_graph(&s, Some(&table)).unwrap();
        (export_network(&out, None, Format::GeoJson).unwrap(), elapsed)
    };
    let (one, t1) = run(1);
    let (four, t4) = run(4);
    ensure(one == four, || "outputs differ between 1 and 4 workers".into())?;
    ensure(t1.max(t4) < Duration::from_secs(120), || format!("took {t1:?} / {t4:?}"))?;
    Ok(format!(
        "{} nodes, {} edges; 1 worker {:.1}s, 4 workers {:.1}s, {} output bytes identical",
        s.node_count(),
        s.segment_count(),
        t1.as_secs_f64(),
        t4.as_secs_f64(),
        one.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("decay law", decay_law),
        ("shortest-path oracle", shortest_path_oracle),
        ("angular safeguard", angular_safeguard),
        ("decomposition invariants", decomposition_invariants),
        ("segment stability", segment_stability),
        ("assignment and directional aggregation", assignment_and_flanks),
        ("hill properties", hill_properties),
        ("cleaning invariants", cleaning_invariants),
        ("determinism and scale", determinism_and_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
