//! Deterministic derivation of independent per-item RNG seeds.

/// SplitMix64 finalizer: a cheap avalanche mix with full 64-bit diffusion.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for item `index` of the stream owned by `master`.
///
/// Parallel and serial producers that agree on `(master, index)` agree on
/// every derived stream, which is what makes batch generation
/// embarrassingly parallel yet bit-reproducible.
pub fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index)))
}
