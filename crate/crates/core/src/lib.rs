//! Haar sampling on the orthogonal and unitary groups, linear trace
//! statistics, and the numerical machinery to certify how close those
//! statistics are to Gaussian: exact moment identities, an exchangeable-pair
//! construction with measurable limit conditions, a characterizing-operator
//! solver, and distribution distances with explicit error control.
//!
//! Everything stochastic is keyed by `(master_seed, stream_index)` and is
//! reproducible across thread counts; see [`rng`].

pub mod distance;
pub mod error;
pub mod haar;
pub mod linstat;
pub mod matrix;
pub mod moments;
pub mod pair;
pub mod qr;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod stein;
pub mod svd;

pub use error::{Error, Result};
pub use matrix::{Field, Group, Mat, Scalar, SquareMatrix};
pub use rng::RngStream;
