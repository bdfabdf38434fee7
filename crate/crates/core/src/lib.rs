//! Fourier amplitude/phase augmentation and co-teacher consistency training.
//!
//! Module map:
//! - [`spectral`]: exact 2D DFTs and amplitude/phase decomposition
//! - [`augment`]: amplitude mix / swap / cutmix / jitter / elimination
//! - [`corpus`]: multi-domain corpora, splits, pair sampling, batches
//! - [`nn`]: a small classifier with hand-derived gradients and SGD
//! - [`coteacher`]: EMA teacher, consistency losses and the training loop
//! - [`analysis`]: edge similarity, phase-only protocol, weight shrinkage

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod augment;
pub mod corpus;
pub mod coteacher;
pub mod error;
pub mod nn;
pub mod rng;
pub mod spectral;
pub mod tensor;

pub use error::{FactError, Result};
pub use tensor::{ImageTensor, Plane};
