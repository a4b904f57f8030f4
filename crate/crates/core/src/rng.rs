//! Deterministic random sub-streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(master seed, index, purpose)`. Two computations that use different keys
//! never share randomness, and the result of a replicate does not depend on
//! which thread ran it or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a sub-stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Resample = 1,
    Search = 2,
    Data = 3,
    Test = 4,
    Chunk = 5,
}

/// Stream for `(master, index, purpose)`.
pub fn stream(master: u64, index: u64, purpose: Purpose) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// A fresh 64-bit seed derived from `(master, index, purpose)`.
pub fn derive_seed(master: u64, index: u64, purpose: Purpose) -> u64 {
    stream(master, index, purpose).next_u64()
}
