//! Seeded, reproducible random streams.
//!
//! Every consumer derives its own ChaCha20 stream from `(seed, label)` so that
//! adding a new consumer never perturbs the samples of an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent stream for `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes()));
    rng
}

/// Independent stream for the `index`-th worker/chunk of `label`.
pub fn substream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(fnv1a(label.as_bytes()).wrapping_add(index));
    rng
}
