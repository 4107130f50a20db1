//! Extrinsic antimeans on real projective spaces.
//!
//! Points of `RP^m` and `(RP^m)^q` are embedded by the Veronese–Whitney map
//! `[x] ↦ x xᵀ`. The extrinsic antimean of a sample, the maximizer of the
//! mean squared chord distance, is the eigenvector line of the smallest
//! eigenvalue of `(1/n) Σ x xᵀ` in each component. On top of that the crate
//! provides anticovariance matrices, one-sample, two-sample and anti-MANOVA
//! tests with χ² or bootstrap calibration, and landmark registration on a
//! projective frame.

pub mod bootstrap;
pub mod calibrate;
pub mod data;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod manifold;
pub mod numerics;
pub mod vw;

pub use error::{Error, Result};
