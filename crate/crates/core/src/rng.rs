//! Seeded random streams.
//!
//! Every random decision in an analysis flows from one [`Stream`] seeded by
//! the run seed. Work that may run in parallel (permutation rounds, bootstrap
//! resamples) first draws one child seed per unit of work from the parent in
//! a fixed order, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_seeds<R: Rng + ?Sized>(parent: &mut R, n: usize) -> Vec<u64> {
    (0..n).map(|_| parent.random()).collect()
}
