//! Small hand-built networks used by tests, benches and the CLI examples, plus a
//! seeded synthetic grid generator for scale runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Coord;
use crate::graph::{EdgeGeom, Multigraph};

fn straight(g: &mut Multigraph, a: &str, b: &str) {
    let geom = EdgeGeom::straight(g.nodes[a].coord(), g.nodes[b].coord());
    g.add_edge(a, b, Some(geom));
}

fn via(g: &mut Multigraph, a: &str, b: &str, interior: &[(f64, f64)]) {
    let mut pts = vec![g.nodes[a].coord()];
    pts.extend(interior.iter().map(|&p| Coord::from(p)));
    pts.push(g.nodes[b].coord());
    g.add_edge(a, b, Some(EdgeGeom::new(pts)));
}

/// Four 100 m sides: `a (0,0)`, `b (100,0)`, `c (100,100)`, `d (0,100)`.
pub fn square() -> Multigraph {
    let mut g = Multigraph::new();
    for (id, x, y) in [("a", 0.0, 0.0), ("b", 100.0, 0.0), ("c", 100.0, 100.0), ("d", 0.0, 100.0)] {
        g.add_node(id, x, y);
    }
    for (a, b) in [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")] {
        straight(&mut g, a, b);
    }
    g
}

fn grid_id(col: usize, row: usize) -> String {
    format!("g{col}{row}")
}

/// A 6 × 5 block grid at 100 m spacing with curved streets, a diagonal, corner
/// stubs and a long winding spur. It has no degree-2 nodes.
pub fn mock_graph() -> Multigraph {
    let mut g = Multigraph::new();
    for col in 0..6 {
        for row in 0..5 {
            g.add_node(grid_id(col, row), col as f64 * 100.0, row as f64 * 100.0);
        }
    }
    for col in 0..6 {
        for row in 0..5 {
            let here = grid_id(col, row);
            if col < 5 {
                let east = grid_id(col + 1, row);
                match (col, row) {
                    (1, 2) => via(&mut g, &here, &east, &[(150.0, 215.0)]),
                    (3, 4) => via(&mut g, &here, &east, &[(330.0, 420.0), (370.0, 420.0)]),
                    _ => straight(&mut g, &here, &east),
                }
            }
            if row < 4 {
                let north = grid_id(col, row + 1);
                match (col, row) {
                    (2, 2) => {}
                    (3, 0) => via(&mut g, &here, &north, &[(310.0, 30.0), (290.0, 70.0)]),
                    (5, 1) => via(&mut g, &here, &north, &[(520.0, 150.0)]),
                    _ => straight(&mut g, &here, &north),
                }
            }
        }
    }
    straight(&mut g, &grid_id(1, 3), &grid_id(2, 4));

    for (id, x, y, corner) in [
        ("s0", -60.0, -40.0, grid_id(0, 0)),
        ("s1", 560.0, -30.0, grid_id(5, 0)),
        ("s2", -50.0, 450.0, grid_id(0, 4)),
    ] {
        g.add_node(id, x, y);
        straight(&mut g, &corner, id);
    }
    g.add_node("w", 1100.0, 420.0);
    via(&mut g, &grid_id(5, 4), "w", &[(700.0, 480.0), (900.0, 380.0)]);
    g
}

/// The mock network with OSM-style noise: filler vertices as nodes, short stubs,
/// a split junction and a small disconnected fragment.
pub fn messy_graph() -> Multigraph {
    let mut g = mock_graph();
    // filler nodes along the spur
    let spur = g
        .edges
        .keys()
        .find(|k| k.end == "w")
        .cloned()
        .expect("spur edge");
    let pts = g.edges.remove(&spur).unwrap().geom.unwrap().points;
    let mut prev = spur.start.clone();
    for (i, p) in pts[1..pts.len() - 1].iter().enumerate() {
        let id = format!("f{i}");
        g.add_node(id.clone(), p.x, p.y);
        straight(&mut g, &prev, &id);
        prev = id;
    }
    straight(&mut g, &prev, "w");

    for (id, x, y, anchor) in [
        ("t0", 200.0, -10.0, grid_id(2, 0)),
        ("t1", 512.0, 200.0, grid_id(5, 2)),
        ("t2", 100.0, 418.0, grid_id(1, 4)),
    ] {
        g.add_node(id, x, y);
        straight(&mut g, &anchor, id);
    }

    // split junction: g33 gains a twin 6 m away carrying two of its edges
    g.add_node("j33", 306.0, 300.0);
    for other in [grid_id(4, 3), grid_id(3, 4)] {
        let k = g
            .edges
            .keys()
            .find(|k| (k.start == "g33" && k.end == other) || (k.end == "g33" && k.start == other))
            .cloned()
            .unwrap();
        let mut pts = g.oriented_points(&k, &other);
        g.edges.remove(&k);
        *pts.last_mut().unwrap() = Coord::new(306.0, 300.0);
        g.add_edge(&other, "j33", Some(EdgeGeom::new(pts)));
    }
    straight(&mut g, "g33", "j33");

    g.add_node("x0", 2000.0, 2000.0);
    g.add_node("x1", 2030.0, 2000.0);
    straight(&mut g, "x0", "x1");
    g
}

/// Two parallel 80 m carriageways joining split junctions 8 m apart, each
/// junction served by three approach roads.
pub fn dual_carriageway() -> Multigraph {
    let mut g = Multigraph::new();
    for (id, x, y) in [
        ("a1", 0.0, 0.0),
        ("a2", 0.0, 8.0),
        ("b1", 80.0, 0.0),
        ("b2", 80.0, 8.0),
        ("wa", -100.0, 0.0),
        ("sa", 0.0, -100.0),
        ("na", 0.0, 108.0),
        ("eb", 180.0, 0.0),
        ("sb", 80.0, -100.0),
        ("nb", 80.0, 108.0),
    ] {
        g.add_node(id, x, y);
    }
    for (a, b) in [
        ("a1", "b1"),
        ("a2", "b2"),
        ("a1", "a2"),
        ("b1", "b2"),
        ("wa", "a1"),
        ("sa", "a1"),
        ("na", "a2"),
        ("b1", "eb"),
        ("sb", "b1"),
        ("nb", "b2"),
    ] {
        straight(&mut g, a, b);
    }
    g
}

/// Seeded jittered grid of `cols × rows` nodes; each lattice edge survives with
/// probability `keep`.
pub fn grid_with_noise(
    cols: usize,
    rows: usize,
    spacing: f64,
    keep: f64,
    seed: u64,
) -> Multigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = spacing * 0.2;
    let width = (cols * rows).to_string().len();
    let id = |c: usize, r: usize| format!("{:0width$}", r * cols + c);
    let mut g = Multigraph::new();
    for r in 0..rows {
        for c in 0..cols {
            let x = c as f64 * spacing + rng.random_range(-jitter..jitter);
            let y = r as f64 * spacing + rng.random_range(-jitter..jitter);
            g.add_node(id(c, r), x, y);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols && rng.random::<f64>() < keep {
                straight(&mut g, &id(c, r), &id(c + 1, r));
            }
            if r + 1 < rows && rng.random::<f64>() < keep {
                straight(&mut g, &id(c, r), &id(c, r + 1));
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_has_no_fillers() {
        let g = mock_graph();
        assert!(g.validate().is_empty());
        assert!(g.degrees().values().all(|&d| d != 2));
    }

    #[test]
    fn messy_is_valid() {
        let g = messy_graph();
        assert!(g.validate().is_empty(), "{:?}", g.validate());
    }

    #[test]
    fn synthetic_grid_is_seeded() {
        let a = grid_with_noise(20, 20, 100.0, 0.75, 7);
        let b = grid_with_noise(20, 20, 100.0, 0.75, 7);
        assert_eq!(a, b);
        assert_eq!(a.node_count(), 400);
    }
}
