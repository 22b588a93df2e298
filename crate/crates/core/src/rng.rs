//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, trial, variable)`: the trial picks the
//! ChaCha stream and the variable picks a disjoint window of the keystream.
//! Workers can therefore take any subset of trials and still reproduce a
//! serial run bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Keystream words reserved per variable (2^36, far beyond any single use).
const VARIABLE_SHIFT: u32 = 36;

#[derive(Clone, Debug)]
pub struct Streams {
    base: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn get(&self, trial: u64, variable: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(trial);
        rng.set_word_pos(u128::from(variable) << VARIABLE_SHIFT);
        rng
    }
}

/// Stream index and sign flip for `trial` under antithetic pairing: trial
/// `2m + 1` replays the stream of `2m` with every random sign reversed.
pub fn antithetic_slot(trial: u64, antithetic: bool) -> (u64, bool) {
    if antithetic {
        (trial & !1, trial & 1 == 1)
    } else {
        (trial, false)
    }
}
