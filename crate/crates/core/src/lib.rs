//! Temporal knowledge-graph embeddings in which every timestamp rotates
//! entity quaternions coordinate-wise and relations act as translations.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO. Loading benchmark
//! files, checkpoints and the command line live in the `rotateqvs` crate.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod check;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exec;
pub mod model;
pub mod patterns;
pub mod quaternion;
pub mod synth;
pub mod train;

pub use dataset::{Dataset, FilterIndex, Quadruple, Split, Vocabulary};
pub use error::{Error, Result};
pub use eval::{EvalReport, Metrics, Side};
pub use exec::{Executor, Sequential};
pub use model::{ModelParams, ScoreAgg};
pub use quaternion::{Quaternion, QuaternionVector, UnitQuaternion};
pub use synth::{SyntheticGraph, SyntheticSpec};
pub use train::{TrainConfig, TrainOutcome};
