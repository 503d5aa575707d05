//! Structural index analysis for circuit DAEs with generalized elements.

pub mod devspec;
pub mod elements;
mod error;
pub mod fit;
pub mod linalg;
pub mod matrix;
pub mod mna;
pub mod netlist;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod topology;
pub mod waveform;

pub use error::Error;
pub use matrix::Matrix;
pub use scalar::{Field, Real, Scalar};

use num_rational::BigRational;

pub type RealMatrix = Matrix<f64>;
pub type ExactMatrix = Matrix<BigRational>;
pub type IntMatrix = Matrix<i64>;
