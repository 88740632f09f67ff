//! Differential diagnosis of neurodegenerative conditions from brain
//! structure volumes, organized around an age-indexed trajectory tree.
//!
//! The pipeline: normalize 124 structure volumes into control-referenced
//! z-scores ([`normalize`]), fit per-population lifespan trajectories
//! with screened polynomial selection ([`trajectory`]), draw balanced
//! synthetic samples along them ([`sampling`]), embed the samples into
//! 2D ([`embed`]), assemble the 3D tree with age as the third axis and
//! classify subjects by nearest branch ([`tree`]), and evaluate ranked
//! predictions against an SVM baseline ([`baseline`], [`eval`]).
//! [`simulate`] generates ground-truth cohorts for end-to-end checks.
//!
//! Runnable walkthroughs live in `examples/`; the `lifetree` binary
//! chains the same stages behind subcommands.

pub mod baseline;
pub mod cli;
pub mod cohort;
pub mod embed;
pub mod error;
pub mod eval;
pub mod normalize;
pub mod sampling;
pub mod simulate;
pub mod stats;
pub mod trajectory;
pub mod tree;

pub use error::{Error, Result};
