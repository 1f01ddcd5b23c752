//! Seed discipline: one master seed fans out to named, independent substreams.
//!
//! A substream is identified by `(master, trial, stream, salt)`. Two calls
//! with the same key return generators producing identical sequences, which
//! is what makes parallel trial execution order-independent.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used everywhere in the core.
pub type SimRng = ChaCha12Rng;

/// Named random substreams of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    TestPoints,
    FaultIndices,
    FaultStates,
    Nlos,
    Randomization,
    Heatmap,
    /// Free-form streams for tests and validation checks.
    Aux,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::TestPoints => 0x7465_7374,
            Stream::FaultIndices => 0x6661_696c,
            Stream::FaultStates => 0x7374_6174,
            Stream::Nlos => 0x6e6c_6f73,
            Stream::Randomization => 0x7261_6e64,
            Stream::Heatmap => 0x6865_6174,
            Stream::Aux => 0x6175_7878,
        }
    }
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the generator for one substream.
pub fn substream(master: u64, trial: u64, stream: Stream, salt: u64) -> SimRng {
    let mut state = master;
    let mut mix = splitmix64(&mut state);
    for word in [trial, stream.tag(), salt] {
        state ^= word.wrapping_mul(0xff51_afd7_ed55_8ccd).wrapping_add(mix);
        mix = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    SimRng::from_seed(seed)
}

/// Keyed seed source bound to a master seed and trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub master: u64,
    pub trial: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, trial: u64) -> Self {
        Self { master, trial }
    }

    pub fn stream(&self, stream: Stream) -> SimRng {
        substream(self.master, self.trial, stream, 0)
    }

    pub fn salted(&self, stream: Stream, salt: u64) -> SimRng {
        substream(self.master, self.trial, stream, salt)
    }
}
