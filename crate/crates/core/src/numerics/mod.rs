//! Dependency-light numeric kernels: symmetric eigendecomposition, χ²
//! distribution functions, and reproducible random streams.

pub mod chisq;
pub mod linalg;
pub mod rng;

pub use chisq::{chisq_cdf, chisq_pdf, chisq_quantile, chisq_sf};
pub use linalg::{canonical_sign, eigh_sym, EigenDecomp, Matrix, SymMatrix};
pub use rng::{rng_draw_uniform_indices, RngStream, StreamRng};
