//! Amplified large sieve inequalities.
//!
//! Two sieves share one proof pattern: build an amplifier that is large on
//! every sifted object, bound its mean square by a dual large sieve
//! inequality, and optimize the amplifier weights by Cauchy–Schwarz.
//!
//! * [`residue`]: integers `n <= N` avoiding residue classes `Ω_p`, with the
//!   bounds `Δ/H`, `Δ/K` and `ΔA/B²` evaluated exactly.
//! * [`harmonic`]: the harmonic and dual large sieve forms and their common
//!   operator norm.
//! * [`sato_tate`]: Chebyshev polynomials orthonormal for the Sato–Tate
//!   measure, quadrature, and minorant polynomials.
//! * [`modform`]: weighted ensembles of Hecke eigenvalue systems and the
//!   variance and sieve bounds over them.
//!
//! Numeric routines are generic over [`Scalar`]; the aliases below fix the
//! exact instance used for reports.

pub mod arith;
mod error;
pub mod exp_sum;
pub mod harmonic;
pub mod linalg;
pub mod modform;
pub mod residue;
pub mod sato_tate;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{parse_rational, Scalar};

/// Exact scalar used for every reported bound.
pub type Rational = num_rational::BigRational;
pub use num_complex::Complex64;

pub use residue::ExactSieveBoundReport;
pub type FloatSieveBoundReport = residue::SieveBoundReport<f64>;
pub type ExactChebyPoly = sato_tate::ChebyPoly<Rational>;
pub type ExactChebySeries = sato_tate::ChebySeries<Rational>;
pub type ExactMinorantPoly = sato_tate::MinorantPoly<Rational>;
