//! Experiment runner: configuration, data pipelines, leaf-size cross-validation and
//! CSV result emission on top of the `uacqr` library.

pub mod config;
pub mod crossval;
pub mod error;
pub mod run;

pub use config::{Mode, RunConfig, Setting};
pub use error::{CliError, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent sub-seed `stream` of a master seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.random()
}
