//! Gibbs partitions of composition schemes `U = V(W)`.
//!
//! The crate classifies weight pairs into phases, computes exact finite-n laws
//! through the Kolchin representation, evaluates the limiting laws and samples
//! partitions exactly.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod laws;
pub mod numeric;
pub mod phase;
pub mod presets;
pub mod sampler;
pub mod series;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use phase::{classify, Phase, PhaseReport};
pub use weights::{ClosedForm, SchemeSpec, SlowVarying, WeightSequence};
