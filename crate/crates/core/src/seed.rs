//! Deterministic seed derivation.
//!
//! Everything stochastic in this crate (per-run seeds in the estimator,
//! per-call seeds forwarded to generators, the Bernoulli mock's draws) is
//! derived from user-supplied seeds through [`mix`], so identical
//! configuration yields identical results regardless of scheduling.

/// SplitMix64 finalizer step.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes two seeds into one, order-sensitively: `mix(a, b) != mix(b, a)`
/// in general. Used to derive per-run seeds from a master seed and per-call
/// seeds from a run seed.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix(splitmix(a) ^ splitmix(b.wrapping_add(0x632b_e59b_d9b4_e019)))
}
