//! Deterministic random substreams derived from one master seed.
//!
//! Every consumer of randomness in a training run owns its own ChaCha stream
//! so that adding draws in one place (say, sampling the exploration length)
//! never shifts the numbers seen anywhere else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Task sampling on environment reset.
    Env = 1,
    /// Network initialisation.
    Init = 2,
    /// Main agent action sampling.
    Action = 3,
    /// Pure-exploration phase lengths.
    ExploreLength = 4,
    /// Pure-exploration agent actions.
    Explore = 5,
    /// Minibatch shuffling.
    Shuffle = 6,
    /// Evaluation episodes.
    Eval = 7,
}

pub fn substream(master_seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream as u64);
    rng
}

/// Independent generator for evaluation number `index` of a run.
pub fn eval_stream(master_seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(Stream::Eval as u64);
    rng.set_word_pos(u128::from(index) << 64);
    rng
}
