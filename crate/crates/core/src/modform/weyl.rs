use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::Integer;

use super::ensemble::{Ensemble, Form};
use crate::arith::factorize;
use crate::arith::friable_up_to;
use crate::harmonic::MAX_GRAM_DIM;
use crate::linalg::{top_eigenpair, POWER_MAX_ITERATIONS, POWER_TOLERANCE};
use crate::sato_tate::lambda_from_factors;
use crate::{Error, Result};

/// Coefficients `α(m)` on `Ψ_q(N, Q)`: `m <= N`, every prime factor at most
/// `Q`, and `gcd(m, q) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylCoefficients {
    n: u64,
    q: u64,
    level_q: u64,
    coeffs: BTreeMap<u64, Complex64>,
    factors: BTreeMap<u64, Vec<(u64, u32)>>,
}

impl WeylCoefficients {
    pub fn new(n: u64, q: u64, level_q: u64, coeffs: BTreeMap<u64, Complex64>) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for &m in coeffs.keys() {
            if m == 0 {
                return Err(Error::OutsideSupport(0));
            }
            let f = factorize(m);
            let inside = m <= n && level_q.gcd(&m) == 1 && f.iter().all(|&(p, _)| p <= q);
            if !inside {
                return Err(Error::OutsideSupport(m));
            }
            factors.insert(m, f);
        }
        Ok(Self {
            n,
            q,
            level_q,
            coeffs,
            factors,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn level_q(&self) -> u64 {
        self.level_q
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &a)| (m, a))
    }

    pub fn get(&self, m: u64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.values().map(|a| a.norm_sqr()).sum()
    }

    /// `1 + N/q`.
    pub fn scale(&self) -> f64 {
        1.0 + self.n as f64 / self.level_q as f64
    }

    /// `Σ_m α(m) Λ_m(f)`.
    pub fn evaluate(&self, form: &Form) -> Result<Complex64> {
        self.coeffs.iter().try_fold(Complex64::default(), |acc, (m, a)| {
            Ok(acc + a * lambda_of(form, &self.factors[m])?)
        })
    }
}

/// `Λ_m(f)` from a factorization of `m`, reporting the form on failure.
pub(crate) fn lambda_of(form: &Form, factors: &[(u64, u32)]) -> Result<f64> {
    lambda_from_factors(factors, form.local()).map_err(|e| match e {
        Error::MissingLocalValue(p) => Error::IncompleteEnsemble {
            form: form.id().to_string(),
            p,
        },
        other => other,
    })
}

/// `E|Σ_m α(m) Λ_m|² / ((1 + N/q) Σ|α(m)|²)`: the implied constant of the
/// large sieve over the ensemble, measured for one coefficient vector.
pub fn weyl_ratio(ens: &Ensemble, alpha: &WeylCoefficients) -> Result<f64> {
    let norm = alpha.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    check_level(ens, alpha.level_q)?;
    let mut lhs = 0.0;
    for f in ens.forms() {
        lhs += f.weight() * alpha.evaluate(f)?.norm_sqr();
    }
    Ok(lhs / (alpha.scale() * norm))
}

fn check_level(ens: &Ensemble, level_q: u64) -> Result<()> {
    if ens.level_q() != level_q {
        return Err(Error::Invalid(format!(
            "coefficients are set up for level {level_q}, ensemble has level {}",
            ens.level_q()
        )));
    }
    Ok(())
}

/// Largest [`weyl_ratio`] over all `α` supported on `Ψ_q(N, Q)`, together
/// with a maximizing coefficient vector.
///
/// This is the top eigenvalue of `G[m][m'] = Σ_f w_f Λ_m(f) Λ_{m'}(f)`
/// divided by `1 + N/q`.
pub fn weyl_extreme(ens: &Ensemble, n: u64, q: u64) -> Result<(f64, WeylCoefficients)> {
    let support = friable_up_to(n, q, ens.level_q());
    let dim = support.len();
    if dim > MAX_GRAM_DIM {
        return Err(Error::DimensionOverflow {
            dim,
            limit: MAX_GRAM_DIM,
        });
    }
    let factors: Vec<Vec<(u64, u32)>> = support.members().iter().map(|&m| factorize(m)).collect();
    let forms = ens.forms();
    let mut rows = Vec::with_capacity(forms.len() * dim);
    for f in forms {
        for fac in &factors {
            rows.push(lambda_of(f, fac)?);
        }
    }
    let weights: Vec<f64> = forms.iter().map(Form::weight).collect();
    let matvec = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (row, w) in rows.chunks_exact(dim).zip(&weights) {
            let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            for (yi, a) in y.iter_mut().zip(row) {
                *yi += w * s * a;
            }
        }
    };
    let (top, vec) = top_eigenpair(dim, matvec, POWER_TOLERANCE, POWER_MAX_ITERATIONS)?;
    let coeffs = support
        .members()
        .iter()
        .zip(vec)
        .map(|(&m, v)| (m, Complex64::new(v, 0.0)))
        .collect();
    let alpha = WeylCoefficients::new(n, q, ens.level_q(), coeffs)?;
    Ok((top / alpha.scale(), alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::friable_up_to;
    use crate::modform::synthetic_ensemble;
    use crate::sato_tate::{hecke_extend, lambda_big, LocalTuple};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(pairs: &[(u64, f64)]) -> BTreeMap<u64, Complex64> {
        pairs.iter().map(|&(m, a)| (m, Complex64::new(a, 0.0))).collect()
    }

    #[test]
    fn support_is_validated() {
        assert!(WeylCoefficients::new(10, 3, 1, real(&[(1, 1.0), (9, 1.0)])).is_ok());
        assert!(matches!(
            WeylCoefficients::new(10, 3, 1, real(&[(5, 1.0)])),
            Err(Error::OutsideSupport(5))
        ));
        assert!(matches!(
            WeylCoefficients::new(10, 3, 1, real(&[(12, 1.0)])),
            Err(Error::OutsideSupport(12))
        ));
        assert!(matches!(
            WeylCoefficients::new(10, 3, 2, real(&[(4, 1.0)])),
            Err(Error::OutsideSupport(4))
        ));
        assert!(WeylCoefficients::new(10, 3, 1, real(&[(0, 1.0)])).is_err());
    }

    #[test]
    fn constant_coefficient() {
        let e = synthetic_ensemble(20, 7, 101, 1).unwrap();
        let a = WeylCoefficients::new(50, 7, 101, real(&[(1, 2.0)])).unwrap();
        let r = weyl_ratio(&e, &a).unwrap();
        assert!((r - 1.0 / (1.0 + 50.0 / 101.0)).abs() < 1e-12);
        let zero = WeylCoefficients::new(50, 7, 101, real(&[(1, 0.0)])).unwrap();
        assert!(matches!(weyl_ratio(&e, &zero), Err(Error::ZeroVector)));
        let other = WeylCoefficients::new(50, 7, 1, real(&[(1, 1.0)])).unwrap();
        assert!(weyl_ratio(&e, &other).is_err());
    }

    #[test]
    fn indicator_of_small_support() {
        let e = synthetic_ensemble(10_000, 10, 1_000_003, 11).unwrap();
        let a = WeylCoefficients::new(3, 3, 1_000_003, real(&[(1, 1.0), (2, 1.0), (3, 1.0)])).unwrap();
        let r = weyl_ratio(&e, &a).unwrap();
        let want = 1.0 / a.scale();
        // Cross terms E(Λ_m Λ_m') have standard error 1/100 each.
        assert!((r - want).abs() < 6.0 * 0.01, "{r}");
    }

    #[test]
    fn adversarial_coefficients_reach_the_gram_eigenvalue() {
        let e = synthetic_ensemble(30, 7, 1, 4).unwrap();
        let (top, alpha) = weyl_extreme(&e, 30, 7).unwrap();
        assert!((weyl_ratio(&e, &alpha).unwrap() - top).abs() < 1e-6 * top);

        // Dense oracle.
        let support = friable_up_to(30, 7, 1);
        let dim = support.len();
        let mut g = vec![0.0; dim * dim];
        for f in e.forms() {
            let v: Vec<f64> = support
                .members()
                .iter()
                .map(|&m| lambda_big(m, f.local()).unwrap())
                .collect();
            for i in 0..dim {
                for j in 0..dim {
                    g[i * dim + j] += f.weight() * v[i] * v[j];
                }
            }
        }
        let eig = nalgebra::DMatrix::from_row_slice(dim, dim, &g).symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        assert!((top * alpha.scale() - max).abs() < 1e-6 * max);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let coeffs = support
                .members()
                .iter()
                .map(|&m| {
                    (
                        m,
                        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    )
                })
                .collect();
            let a = WeylCoefficients::new(30, 7, 1, coeffs).unwrap();
            assert!(weyl_ratio(&e, &a).unwrap() <= top + 1e-9);
        }
    }

    #[test]
    fn synthetic_orthonormality() {
        let e = synthetic_ensemble(10_000, 7, 1, 21).unwrap();
        let psi = friable_up_to(50, 7, 1);
        let vals: Vec<Vec<f64>> = e
            .forms()
            .iter()
            .map(|f| {
                psi.members()
                    .iter()
                    .map(|&m| lambda_big(m, f.local()).unwrap())
                    .collect()
            })
            .collect();
        let tol = 5.0 / 100.0;
        for i in 0..psi.len() {
            for j in 0..psi.len() {
                let got: f64 = e.forms().iter().zip(&vals).map(|(f, v)| f.weight() * v[i] * v[j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (got - want).abs() <= tol,
                    "m={} m'={}: {got}",
                    psi.members()[i],
                    psi.members()[j]
                );
            }
        }
    }

    #[test]
    fn weyl_dimension_limit() {
        let e = synthetic_ensemble(2, 100, 1, 4).unwrap();
        assert!(matches!(
            weyl_extreme(&e, 100_000, 100),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    proptest! {
        #[test]
        fn factorization_matches_hecke_recursion(
            m in 1u64..=100,
            xs in proptest::collection::vec(-2.0f64..=2.0, 25),
        ) {
            let primes = crate::arith::primes_up_to(100);
            let t: LocalTuple = primes.iter().zip(&xs).map(|(p, &x)| (p, x)).collect();
            let direct = lambda_big(m, &t).unwrap();
            let product: f64 = factorize(m)
                .iter()
                .map(|&(p, k)| hecke_extend(t.get(p).unwrap(), k as usize).unwrap())
                .product();
            prop_assert_eq!(direct, product);
            // λ(p^{j+1}) = λ(p) λ(p^j) - λ(p^{j-1}).
            for (p, k) in factorize(m) {
                let x = t.get(p).unwrap();
                let mut prev = 1.0;
                let mut cur = x;
                for _ in 1..k {
                    let next = x * cur - prev;
                    prev = cur;
                    cur = next;
                }
                prop_assert!((cur - hecke_extend(x, k as usize).unwrap()).abs() < 1e-12);
            }
        }
    }
}
