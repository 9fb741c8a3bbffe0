//! Amplifiers for the residue sieve.
//!
//! At a prime `p`, expanding `1_{Ω_p}` in additive characters and dropping
//! the constant term gives coefficients `β(p, a)` on the units with
//! `Σ*_a β(p,a) e(an/p) = c_p = |Ω_p|/p` whenever `n mod p ∉ Ω_p`. Products
//! over `p | q` (via CRT) give amplifiers for squarefree `q`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::{factorize, is_prime, mod_inverse};
use crate::exp_sum::{e_an_q, e_frac};
use crate::scalar::{json, Scalar};
use crate::{Error, Result};

/// Fourier coefficients `α(p, a) = (1/p) Σ_{x ∈ Ω} e(-ax/p)` for
/// `a = 0..p`, normalized so that `1_Ω(n) = Σ_a α(p,a) e(an/p)`.
pub fn fourier_coeffs(p: u64, omega_p: &BTreeSet<u64>) -> Result<Vec<Complex64>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if let Some(&r) = omega_p.iter().find(|&&r| r >= p) {
        return Err(Error::ResidueOutOfRange { p, residue: r });
    }
    let inv_p = 1.0 / p as f64;
    Ok((0..p)
        .map(|a| {
            omega_p
                .iter()
                .map(|&x| e_frac(-(a as i128 * x as i128), p))
                .sum::<Complex64>()
                * inv_p
        })
        .collect())
}

/// Amplifier at a single prime.
#[derive(Debug, Clone, Serialize)]
pub struct PrimeAmplifier {
    pub p: u64,
    /// `β(p, a)` for `a = 1..p`, index `a - 1`.
    #[serde(skip)]
    pub beta: Vec<Complex64>,
    #[serde(serialize_with = "json::scalar")]
    pub c_p: BigRational,
    #[serde(serialize_with = "json::scalar")]
    pub cost: BigRational,
}

impl PrimeAmplifier {
    pub fn coeff(&self, a: u64) -> Complex64 {
        match a % self.p {
            0 => Complex64::zero(),
            r => self.beta[(r - 1) as usize],
        }
    }

    /// `Σ*_a β(p,a) e(an/p)`.
    pub fn evaluate(&self, n: i64) -> Complex64 {
        (1..self.p).map(|a| self.coeff(a) * e_an_q(a as i64, n, self.p)).sum()
    }

    /// Floating-point `Σ*_a |β(p,a)|²`, to be compared with the exact cost.
    pub fn cost_f64(&self) -> f64 {
        self.beta.iter().map(|b| b.norm_sqr()).sum()
    }
}

pub fn prime_amplifier(p: u64, omega_p: &BTreeSet<u64>) -> Result<PrimeAmplifier> {
    if omega_p.len() as u64 >= p {
        return Err(Error::FullResidueSet { p, size: omega_p.len() });
    }
    let alpha = fourier_coeffs(p, omega_p)?;
    let c_p = BigRational::from_ratio(omega_p.len() as i64, p as i64);
    let cost = &c_p * (BigRational::one() - &c_p);
    Ok(PrimeAmplifier {
        p,
        beta: alpha[1..].iter().map(|a| -a).collect(),
        c_p,
        cost,
    })
}

/// Amplifier at a squarefree modulus, indexed by the units mod `q`.
#[derive(Debug, Clone, Serialize)]
pub struct Amplifier {
    pub q: u64,
    /// `(a, γ(q, a))` over the units `a` mod `q`, ascending.
    #[serde(skip)]
    pub beta: Vec<(u64, Complex64)>,
    #[serde(serialize_with = "json::scalar")]
    pub detect_value: BigRational,
    #[serde(serialize_with = "json::scalar")]
    pub cost: BigRational,
}

impl Amplifier {
    pub fn evaluate(&self, n: i64) -> Complex64 {
        self.beta.iter().map(|&(a, b)| b * e_an_q(a as i64, n, self.q)).sum()
    }

    pub fn cost_f64(&self) -> f64 {
        self.beta.iter().map(|(_, b)| b.norm_sqr()).sum()
    }
}

/// Glues prime amplifiers along `(Z/qZ)^× ≅ Π_{p|q} (Z/pZ)^×`, scaling by
/// `Π ξ_p`. Under the identification `a ↦ (a · (q/p)^{-1} mod p)_p`,
/// `e(an/q) = Π_p e(a_p n/p)`, so detection values and costs multiply.
pub fn crt_amplifier(
    q: u64,
    per_prime: &BTreeMap<u64, PrimeAmplifier>,
    weights: &BTreeMap<u64, BigRational>,
) -> Result<Amplifier> {
    let primes: Vec<u64> = factorize(q)
        .into_iter()
        .map(|(p, e)| if e == 1 { Ok(p) } else { Err(Error::NotSquarefree(q)) })
        .collect::<Result<_>>()?;
    let mut detect = BigRational::one();
    let mut cost = BigRational::one();
    let mut scale = 1.0;
    let mut locals = Vec::with_capacity(primes.len());
    for &p in &primes {
        let amp = per_prime.get(&p).ok_or(Error::MissingPrime(p))?;
        let xi = weights.get(&p).cloned().unwrap_or_else(BigRational::one);
        if xi.is_negative() {
            return Err(Error::NegativeWeight { p, weight: xi.render() });
        }
        detect *= &xi * &amp.c_p;
        cost *= &xi * &xi * &amp.cost;
        scale *= Scalar::to_f64(&xi);
        let cofactor_inv = mod_inverse((q / p) % p, p).expect("squarefree cofactor is a unit");
        locals.push((amp, cofactor_inv));
    }
    let beta = (1..=q)
        .filter(|a| a.gcd(&q) == 1)
        .map(|a| {
            let v = locals
                .iter()
                .map(|(amp, inv)| amp.coeff(a % amp.p * inv % amp.p))
                .product::<Complex64>();
            (a, v * scale)
        })
        .collect();
    Ok(Amplifier {
        q,
        beta,
        detect_value: detect,
        cost,
    })
}
