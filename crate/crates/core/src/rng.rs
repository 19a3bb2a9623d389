use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible random stream `stream` under master `seed`.
///
/// ChaCha is counter based, so streams can be generated on any worker in any order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved per purpose so sample draws and bootstrap draws never overlap.
pub mod streams {
    pub const SAMPLE: u64 = 0;
    pub const BOOTSTRAP_BASE: u64 = 1 << 32;
    pub const CROSSING_BASE: u64 = 2 << 32;
    pub const REPLICATION_BASE: u64 = 3 << 32;
}
