//! Counter-based random streams.
//!
//! A stream is a ChaCha8 keystream whose 256-bit key is derived from
//! `(seed, stream_id)` and whose 64-bit stream selector is the path index, so
//! path `i` of a simulation sees the same numbers however paths are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream for one path.
pub fn path_rng(seed: u64, stream_id: u64, path: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream_id.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}
