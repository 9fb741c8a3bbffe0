//! Sieving eigenvalue systems of modular forms.
//!
//! An [`Ensemble`] is a finite family of weighted forms with eigenvalues
//! `λ_f(p) ∈ [-2, 2]`; expectations are weighted sums. Real Hecke data can
//! be loaded from CSV, and [`synthetic_ensemble`] draws independent
//! Sato–Tate eigenvalues, the model in which the large sieve constant is 1.

mod ensemble;
mod sieve;
mod weyl;

pub use ensemble::{load_ensemble, load_ensemble_reader, sato_tate_quantile, synthetic_ensemble, Ensemble, Form};
pub use sieve::{
    amplifier_moments, cor1_check, cor2_bound, cor2_bound_weighted, sign_change_experiment, sign_change_parameters,
    Cor1Report, LocalPolys, SieveExperimentReport, SignChangeReport,
};
pub use weyl::{weyl_extreme, weyl_ratio, WeylCoefficients};
