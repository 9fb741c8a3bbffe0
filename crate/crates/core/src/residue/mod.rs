//! The classical arithmetic large sieve, proved by amplification.
//!
//! Residue conditions [`OmegaSystem`] are turned into amplifiers at each
//! prime ([`prime_amplifier`]), glued along CRT ([`crt_amplifier`]), and
//! the resulting bounds `Δ/H`, `Δ/K`, `ΔA/B²` are evaluated exactly and
//! checked against the brute-force sifted set ([`verify_sieve`]).

mod amplifier;
mod bounds;
mod omega;

pub use amplifier::{crt_amplifier, fourier_coeffs, prime_amplifier, Amplifier, PrimeAmplifier};
pub use bounds::{
    default_delta, optimal_weights, sieve_bounds, sift_bruteforce, squarefree_sum, verify_sieve, weighted_moments,
    ExactSieveBoundReport, SieveBoundReport, SieveVerification,
};
pub use omega::OmegaSystem;

pub use crate::exp_sum::ramanujan_sum;
