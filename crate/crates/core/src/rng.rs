//! Counter-keyed random streams.
//!
//! Every stream is a ChaCha8 generator whose key is derived from the run seed
//! and a purpose tag, and whose 64-bit stream id packs the (time, link)
//! coordinates of the draw. Results therefore do not depend on the order in
//! which cells are evaluated or on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. Each purpose gets its own key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    StaticAmplitude = 1,
    StaticPhase = 2,
    DynamicAmplitude = 3,
    DynamicPhase = 4,
    Rotation = 5,
    BreathDepth = 6,
    BreathPhase = 7,
    MultiplicativeNoise = 8,
    ThermalNoise = 9,
    PhaseNoise = 10,
}

/// Stream for draws at coordinate `(slot, lane)`; `slot` is a time index or
/// breather index, `lane` a link or receiver index.
pub(crate) fn stream(seed: u64, purpose: Purpose, slot: u64, lane: u64) -> ChaCha8Rng {
    debug_assert!(slot < 1 << 40 && lane < 1 << 24);
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream((slot << 24) | lane);
    rng
}
