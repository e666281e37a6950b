use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream `stream` under root `seed`. Streams never overlap, so
/// per-layer draws do not depend on how many other layers are generated.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
