//! Maximum likelihood degree of the beta-stochastic blockmodel.
//!
//! The likelihood equations of a block specification `M(n_1, ..., n_k)` are
//! the linear system `A (p - u) = 0` in the dyad probabilities together with
//! the quadratic binomials generating the model's toric ideal. This crate
//! builds those equations, counts their complex solutions by homotopy
//! continuation, evaluates the closed-form degree, verifies the
//! vertex-contraction factorization of the solution set, and fits the MLE.

pub mod binomials;
pub mod blockmodel;
pub mod error;
pub mod factorization;
pub mod homotopy;
pub mod likelihood;
pub mod linalg;
pub mod mldeg;
pub mod mle;
pub mod scalar;

pub use error::{Error, Result};

/// Exact scalar used for kernels and rank computations.
pub type Rational = num_rational::BigRational;
pub type C64 = num_complex::Complex<f64>;
pub type SquareSystem64 = likelihood::SquareSystem<f64>;
pub type SolutionSet64 = homotopy::SolutionSet<f64>;
pub type MleFit64 = mle::MleFit<f64>;
