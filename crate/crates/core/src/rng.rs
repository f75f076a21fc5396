//! Deterministic per-trajectory random streams.
//!
//! Every trajectory gets its own ChaCha stream keyed by (master seed, stream id),
//! so results are independent of worker count and scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Derives an independent stream for a trajectory or ensemble member.
pub fn stream(master_seed: u64, stream_id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}
