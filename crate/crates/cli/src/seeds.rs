//! Seed derivation.
//!
//! `derive_seed(master, i) = splitmix64(master + φ·(i + 1))` with
//! `φ = 0x9E37_79B9_7F4A_7C15`. The multiplier is odd, so distinct
//! indices give distinct inputs mod 2⁶⁴, and the SplitMix64 finalizer is a
//! bijection, so derived seeds for distinct indices never collide.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Seed of repetition `rep`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, rep as u64)
}

/// Independent streams used inside one repetition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Split = 1,
    Projection = 2,
    Folds = 3,
    Solver = 4,
}

pub fn stream_seed(rep_seed: u64, stream: Stream) -> u64 {
    derive_seed(rep_seed, stream as u64)
}
