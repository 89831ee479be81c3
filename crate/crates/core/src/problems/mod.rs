//! Instance generators and closed-form test problems.
//!
//! All randomness flows through [`component_rng`]: a ChaCha8 generator seeded
//! from the instance seed, with one stream per instance component. Adding a
//! component never perturbs the draws of another.

pub mod biochem;
pub mod fixtures;
pub mod quadratic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream index of each randomly drawn instance component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    U1,
    U2,
    U3,
    D,
    Z,
    Radius,
    Start,
    Stoichiometry,
    Kinetics,
    /// Starting point number `i` of a model with several starts.
    StartIndex(u32),
}

impl Stream {
    pub fn index(self) -> u64 {
        match self {
            Self::U1 => 0,
            Self::U2 => 1,
            Self::U3 => 2,
            Self::D => 3,
            Self::Z => 4,
            Self::Radius => 5,
            Self::Start => 6,
            Self::Stoichiometry => 7,
            Self::Kinetics => 8,
            Self::StartIndex(i) => 1024 + i as u64,
        }
    }
}

pub fn component_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.index());
    rng
}
