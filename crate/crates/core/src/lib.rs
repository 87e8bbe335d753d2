//! Renormalization of real quadratic-like germs.
//!
//! Truncated power-series germs, the renormalization operator and its fixed
//! points, spectra, parameter-space cascades, and dimension estimates.

pub mod cli;
pub mod error;
pub mod families;
pub mod hdim;
pub mod kneading;
pub mod linalg;
pub mod mandelplane;
pub mod paramspace;
pub mod renorm;
pub mod scalar;
pub mod series;
pub mod solver;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::{ComplexScalar, Scalar};
pub use series::{PowerGerm, SeriesConfig};
