pub mod coupling;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod marking;
pub mod perm;
pub mod rng;
pub mod rule;
pub mod shuffle;
pub mod spectral;
pub mod statistic;
pub mod stats;

pub use error::{Error, Result};
pub use perm::Permutation;
pub use rule::{RuleKind, ShuffleRule};
