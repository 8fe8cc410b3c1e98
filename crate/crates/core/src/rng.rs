//! Labeled random sub-streams.
//!
//! Every consumer of randomness (deployment, k-means seeding, GA, PSO,
//! packet draws) gets its own ChaCha stream derived from one root seed and a
//! fixed label, so each stage is reproducible on its own and adding draws in
//! one stage never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const DEPLOY_SENSORS: &str = "deploy/sensors";
pub const DEPLOY_AUVS: &str = "deploy/auvs";
pub const DEPLOY_HUBS: &str = "deploy/hubs";
pub const KMEANS: &str = "kmeans";
pub const GA: &str = "ga";
pub const PSO: &str = "pso";
pub const PACKETS: &str = "packets";

/// FNV-1a over the label bytes.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stream `label` of root seed `seed`.
pub fn substream(seed: u64, label: &str) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label_hash(label));
    rng
}
