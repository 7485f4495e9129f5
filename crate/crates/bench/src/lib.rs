//! Shared inputs for the criterion benchmarks in `benches/`.

use schrostab_core::rng::{complex_normal, seeded};
use schrostab_core::Complex64;

/// Seeded random state of length `n + 1`.
pub fn random_state(n: usize, seed: u64) -> Vec<Complex64> {
    complex_normal(&mut seeded(seed), n + 1)
}
