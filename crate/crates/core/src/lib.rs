//! Representation learning with predefined prototypes.
//!
//! Class prototypes are fixed before training by a human-chosen rule and an
//! embedder is trained so that its embeddings land on them, alongside an
//! ordinary bias-free linear classifier:
//!
//! ```text
//! L = CE(y, softmax(Wᵀ F(x))) + λ_p ‖F(x) − P(y, α)‖²
//! ```
//!
//! [`prototypes`] builds the frozen extractor `P` (class-orthogonal or
//! factor-coded), [`model`] holds the MLP embedder and linear head with
//! exact gradients, [`training`] the loss, mixup, optimizers and loop,
//! [`metrics`] and [`explain`] the analysis side. Everything here is
//! `no_std` + `alloc`; file formats and the CLI live in the `predproto` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod error;
pub mod explain;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod prototypes;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
