//! Shared fixtures for the pedscale benchmarks.

use pedscale::structure::build_structure;
use pedscale::{mock, DataEntry, NetworkStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Jittered `side × side` grid at 100 m spacing with a quarter of edges missing.
pub fn grid_structure(side: usize) -> NetworkStructure {
    build_structure(&mock::grid_with_noise(side, side, 100.0, 0.75, 1)).expect("generated grid is valid")
}

/// Uniform random points over the same extent as [`grid_structure`].
pub fn random_points(side: usize, count: usize) -> Vec<DataEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let extent = (side.saturating_sub(1)) as f64 * 100.0;
    (0..count)
        .map(|i| {
            DataEntry::new(format!("p{i}"), rng.random_range(0.0..extent), rng.random_range(0.0..extent))
                .with_category(["food", "retail", "civic"][i % 3])
        })
        .collect()
}
