//! Harmonic and dual large sieve forms over Farey fractions `a/q`, `q <= Q`.
//!
//! Both forms are quadratic forms of one operator `M = (e(an/q))`, so their
//! best constants coincide with the top eigenvalue of the `N × N` Gram
//! matrix `M*M`, whose `(n, n')` entry is `Σ_{q<=Q} c_q(n - n')`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use serde::Serialize;

use crate::arith::squarefree_up_to;
use crate::exp_sum::{e_an_q, ramanujan_sum};
use crate::linalg::{top_eigenpair, POWER_MAX_ITERATIONS, POWER_TOLERANCE};
use crate::residue::{crt_amplifier, prime_amplifier, OmegaSystem, PrimeAmplifier};
use crate::{Error, Result};

/// Largest `N` or `|Farey(Q)|` accepted by [`gram_extreme`].
pub const MAX_GRAM_DIM: usize = 2000;

/// The points `(q, a)` with `q <= Q`, `1 <= a <= q`, `gcd(a, q) = 1`;
/// `q = 1` is represented by `a = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FareyIndex {
    q: u64,
    points: Vec<(u64, u64)>,
}

impl FareyIndex {
    pub fn new(q: u64) -> Self {
        let points = (1..=q)
            .flat_map(|m| (1..=m).filter(move |a| a.gcd(&m) == 1).map(move |a| (m, a)))
            .collect();
        Self { q, points }
    }

    pub fn bound(&self) -> u64 {
        self.q
    }

    pub fn points(&self) -> &[(u64, u64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, q: u64, a: u64) -> Option<usize> {
        let a = if q == 1 { 1 } else { a % q };
        self.points.binary_search(&(q, a)).ok()
    }
}

/// `(a_n)_{1 <= n <= N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCoeffs(pub Vec<Complex64>);

/// `(β(q, a))` indexed by a Farey set.
#[derive(Debug, Clone, PartialEq)]
pub struct FareyCoeffs {
    pub index: FareyIndex,
    pub values: Vec<Complex64>,
}

impl FareyCoeffs {
    pub fn zeros(q: u64) -> Self {
        let index = FareyIndex::new(q);
        let values = vec![Complex64::default(); index.len()];
        Self { index, values }
    }

    /// `A(n) = Σ_{q<=Q} Σ*_a β(q,a) e(an/q)`.
    pub fn evaluate(&self, n: i64) -> Complex64 {
        self.index
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&(q, a), b)| b * e_an_q(a as i64, n, q))
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// `Σ_{q<=Q} Σ*_a |Σ_n a_n e(an/q)|² / Σ |a_n|²`.
pub fn hls_ratio(a: &SequenceCoeffs, q: u64) -> Result<f64> {
    let denom = norm_sqr(&a.0);
    if denom == 0.0 {
        return Err(Error::ZeroVector);
    }
    let lhs: f64 = FareyIndex::new(q)
        .points()
        .iter()
        .map(|&(m, r)| {
            a.0.iter()
                .enumerate()
                .map(|(i, x)| x * e_an_q(r as i64, i as i64 + 1, m))
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum();
    Ok(lhs / denom)
}

/// `Σ_{n<=N} |Σ_{q,a} β(q,a) e(an/q)|² / Σ |β(q,a)|²`.
pub fn dls_ratio(beta: &FareyCoeffs, n: u64) -> Result<f64> {
    let denom = beta.norm_sqr();
    if denom == 0.0 {
        return Err(Error::ZeroVector);
    }
    let lhs: f64 = (1..=n as i64).map(|m| beta.evaluate(m).norm_sqr()).sum();
    Ok(lhs / denom)
}

/// Gram matrix `G[n][n'] = Σ_{q<=Q} c_q(n - n')`, row-major `N × N`.
pub fn gram_matrix(n: u64, q: u64) -> Vec<f64> {
    let dim = n as usize;
    // Toeplitz: tabulate the diagonals once.
    let diag: Vec<f64> = (0..dim as i64)
        .map(|k| (1..=q).map(|m| ramanujan_sum(m, k)).sum::<i64>() as f64)
        .collect();
    let mut g = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            g[i * dim + j] = diag[i.abs_diff(j)];
        }
    }
    g
}

/// Operator norm shared by both forms: the top eigenvalue of the Gram
/// matrix, to relative tolerance `1e-8`.
pub fn gram_extreme(n: u64, q: u64) -> Result<f64> {
    let dim = n as usize;
    let farey: usize = (1..=q).map(crate::arith::euler_phi).sum::<u64>() as usize;
    for d in [dim, farey] {
        if d > MAX_GRAM_DIM {
            return Err(Error::DimensionOverflow {
                dim: d,
                limit: MAX_GRAM_DIM,
            });
        }
    }
    let g = gram_matrix(n, q);
    top_eigenpair(
        dim,
        |x, y| {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = g[i * dim..(i + 1) * dim].iter().zip(x).map(|(a, b)| a * b).sum();
            }
        },
        POWER_TOLERANCE,
        POWER_MAX_ITERATIONS,
    )
    .map(|(l, _)| l)
}

/// The full amplifier family of a residue sieve as one Farey vector:
/// `γ(q, a)` on squarefree `q <= Q` (zero elsewhere), with weights `ξ_p`.
pub fn amplifier_family(omega: &OmegaSystem, weights: &BTreeMap<u64, BigRational>) -> Result<FareyCoeffs> {
    let per_prime: BTreeMap<u64, PrimeAmplifier> = omega
        .iter()
        .map(|(p, s)| prime_amplifier(p, s).map(|a| (p, a)))
        .collect::<Result<_>>()?;
    let mut out = FareyCoeffs::zeros(omega.bound());
    for q in squarefree_up_to(omega.bound()) {
        let amp = crt_amplifier(q, &per_prime, weights)?;
        for (a, b) in amp.beta {
            let idx = out.index.position(q, a).expect("unit lies in the Farey index");
            out.values[idx] = b;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residue::{optimal_weights, sieve_bounds, sift_bruteforce, weighted_moments, ExactSieveBoundReport};
    use crate::Scalar;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// Gram matrix built from the exponentials directly, independent of the
    /// Ramanujan-sum route.
    fn exponential_gram(n: u64, q: u64) -> Vec<f64> {
        let farey = FareyIndex::new(q);
        let dim = n as usize;
        let mut g = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let s: Complex64 = farey
                    .points()
                    .iter()
                    .map(|&(m, a)| e_an_q(a as i64, i as i64 - j as i64, m))
                    .sum();
                assert!(s.im.abs() < 1e-9);
                g[i * dim + j] = s.re;
            }
        }
        g
    }

    #[test]
    fn farey_sizes() {
        assert_eq!(FareyIndex::new(1).points(), &[(1, 1)]);
        let f = FareyIndex::new(20);
        assert_eq!(f.len(), 128);
        assert_eq!(f.position(1, 0), Some(0));
        assert_eq!(f.position(4, 3), Some(5));
        assert_eq!(f.position(4, 2), None);
    }

    #[test]
    fn gram_matrix_matches_exponential_sums() {
        for (n, q) in [(1, 1), (5, 2), (10, 3), (12, 7)] {
            let a = gram_matrix(n, q);
            let b = exponential_gram(n, q);
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
        }
    }

    #[test]
    fn hls_examples() {
        let one = SequenceCoeffs(vec![Complex64::new(1.0, 0.0)]);
        assert!((hls_ratio(&one, 1).unwrap() - 1.0).abs() < 1e-12);
        // a_n = 1 on n <= 5, Q = 2: |Σ 1|² + |Σ (-1)^n|² = 25 + 1.
        let ones = SequenceCoeffs(vec![Complex64::new(1.0, 0.0); 5]);
        let r = hls_ratio(&ones, 2).unwrap();
        assert!((r - 26.0 / 5.0).abs() < 1e-12 && r <= 8.0);
        assert!(matches!(
            hls_ratio(&SequenceCoeffs(vec![Complex64::default(); 3]), 2),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn dls_examples() {
        let mut b = FareyCoeffs::zeros(1);
        b.values[0] = Complex64::new(1.0, 0.0);
        for n in [1, 7, 30] {
            assert!((dls_ratio(&b, n).unwrap() - n as f64).abs() < 1e-12);
        }
        assert!(matches!(dls_ratio(&FareyCoeffs::zeros(3), 4), Err(Error::ZeroVector)));

        let omega = OmegaSystem::zero(3).unwrap();
        let fam = amplifier_family(&omega, &BTreeMap::new()).unwrap();
        assert!(dls_ratio(&fam, 30).unwrap() <= 38.0);
    }

    #[test]
    fn gram_examples() {
        assert!((gram_extreme(1, 1).unwrap() - 1.0).abs() < 1e-12);
        let v = gram_extreme(10, 3).unwrap();
        assert!(v <= 18.0 + 1e-6);
        let v = gram_extreme(50, 7).unwrap();
        assert!(v <= 98.0 + 1e-6);
        assert!(matches!(gram_extreme(2001, 2), Err(Error::DimensionOverflow { .. })));
        assert!(matches!(gram_extreme(10, 100), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn random_ratios_stay_below_operator_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (n, q) in [(10u64, 3u64), (20, 5), (50, 7)] {
            let g = gram_extreme(n, q).unwrap();
            assert!(g <= (n - 1 + q * q) as f64 + 1e-6);
            let farey = FareyIndex::new(q);
            for _ in 0..30 {
                let a = SequenceCoeffs(random_vec(&mut rng, n as usize));
                let b = FareyCoeffs {
                    index: farey.clone(),
                    values: random_vec(&mut rng, farey.len()),
                };
                assert!(hls_ratio(&a, q).unwrap() <= g + 1e-6);
                assert!(dls_ratio(&b, n).unwrap() <= g + 1e-6);
            }
        }
    }

    #[test]
    fn conjugation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_vec(&mut rng, 15);
        let ac: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
        let x = hls_ratio(&SequenceCoeffs(a), 6).unwrap();
        let y = hls_ratio(&SequenceCoeffs(ac), 6).unwrap();
        assert!((x - y).abs() < 1e-9);
        let idx = FareyIndex::new(6);
        let b = random_vec(&mut rng, idx.len());
        // conj(A(n)) comes from conj(β(q, -a)).
        let bc = idx
            .points()
            .iter()
            .map(|&(q, a)| b[idx.position(q, q - a).unwrap()].conj())
            .collect();
        let x = dls_ratio(
            &FareyCoeffs {
                index: idx.clone(),
                values: b,
            },
            15,
        )
        .unwrap();
        let y = dls_ratio(&FareyCoeffs { index: idx, values: bc }, 15).unwrap();
        assert!((x - y).abs() < 1e-9);
    }

    #[test]
    fn amplification_chain_is_numerically_tight() {
        // |S| B₁² <= Σ_{n<=N} |A(n)|² <= ‖G‖ A₁, with A(n) = B₁ on S.
        for (omega, n) in [
            (OmegaSystem::zero(3).unwrap(), 30u64),
            (OmegaSystem::zero(7).unwrap(), 60),
            (OmegaSystem::squares(11).unwrap(), 200),
            (OmegaSystem::random(13, 4).unwrap(), 150),
        ] {
            let rep: ExactSieveBoundReport = sieve_bounds(&omega, n, None);
            let sifted = sift_bruteforce(&omega, n);
            let g = gram_extreme(n, omega.bound()).unwrap();
            for weights in [BTreeMap::new(), optimal_weights(&omega)] {
                let fam = amplifier_family(&omega, &weights).unwrap();
                let (a1, b1) = weighted_moments(&omega, &weights);
                let (a1, b1) = (Scalar::to_f64(&a1), Scalar::to_f64(&b1));
                assert!((fam.norm_sqr() - a1).abs() < 1e-8 * a1.max(1.0));
                for &m in &sifted {
                    assert!((fam.evaluate(m as i64) - Complex64::from(b1)).norm() < 1e-8);
                }
                let total: f64 = (1..=n as i64).map(|m| fam.evaluate(m).norm_sqr()).sum();
                assert!(sifted.len() as f64 * b1 * b1 <= total + 1e-6);
                assert!(total <= g * a1 + 1e-6);
            }
            assert!(sifted.len() as f64 <= g / Scalar::to_f64(&rep.h) + 1e-9);
        }
    }
}
