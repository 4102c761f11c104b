//! Statistics of neural-network weight-matrix ensembles under the
//! 13-parameter permutation-invariant Gaussian matrix model (PIGMM).
//!
//! The crate trains ensembles of small dense ReLU networks on MNIST,
//! snapshots their square weight matrices each epoch, evaluates the 52
//! permutation invariants on them, fits the 13 model parameters from the
//! linear/quadratic invariant averages, predicts cubic/quartic invariants
//! exactly via set-partition enumeration and Isserlis' theorem, and
//! quantifies change over training with deviation measures and a
//! block-wise Wasserstein distance.

pub mod baselines;
pub mod dataio;
pub mod ensemble;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod wick;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Weight initialisation scheme for the trained networks and the matching
/// reference model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Entries i.i.d. `N(0, 1/fan_in)`.
    Gaussian,
    /// Entries i.i.d. `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    Uniform,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gaussian => "gaussian",
            Scheme::Uniform => "uniform",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Scheme::Gaussian),
            "uniform" => Ok(Scheme::Uniform),
            other => Err(Error::Argument(format!("unknown scheme '{other}'"))),
        }
    }
}

/// SplitMix64 finaliser, used wherever a single `u64` has to be spread into
/// a full-entropy seed.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
