//! Reproducible randomness.
//!
//! Every random object in the crate is drawn from a ChaCha8 generator keyed by
//! a 64-bit seed. ChaCha is counter based, so a seed can be split into
//! independent substreams with [`substream`] without any shared state; the
//! output is identical on every platform.
//!
//! Stream ids in use:
//! * `0`: sketch operator realization ([`crate::sketch::SketchOperator::realize`])
//! * `1`: auxiliary draws made by algorithms (column subsets, synthetic data)

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::Mat;

pub const STREAM_SKETCH: u64 = 0;
pub const STREAM_AUX: u64 = 1;

/// Generator for `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a child seed from `seed` and a label (splitmix64 finalizer).
///
/// Used to hand distinct, independent seeds to the several operators one
/// algorithm realizes from a single user seed.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed
        .wrapping_add(label.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `rows x cols` matrix of independent standard normals, filled column-major.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}
