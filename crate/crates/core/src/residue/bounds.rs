use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::Serialize;

use crate::arith::{factorize, squarefree_up_to};
use crate::scalar::{json, Scalar};

use super::OmegaSystem;

/// The three upper bounds for the sifted set and the sums they come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct SieveBoundReport<T: Scalar> {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "Delta", serialize_with = "json::scalar")]
    pub delta: T,
    /// `Σ♭_{q<=Q} Π_{p|q} |Ω_p| / (p - |Ω_p|)`.
    #[serde(rename = "H", serialize_with = "json::scalar")]
    pub h: T,
    /// `Σ_{p<=Q} |Ω_p| / p`.
    #[serde(rename = "K", serialize_with = "json::scalar")]
    pub k: T,
    /// `Σ♭ Π c_p (1 - c_p)`: cost of the unweighted amplifier.
    #[serde(rename = "A", serialize_with = "json::scalar")]
    pub a: T,
    /// `Σ♭ Π c_p`: its detection value.
    #[serde(rename = "B", serialize_with = "json::scalar")]
    pub b: T,
    #[serde(serialize_with = "json::scalar")]
    pub bound_als: T,
    /// `Δ / K`; absent when no prime carries a condition.
    #[serde(serialize_with = "json::opt_scalar")]
    pub bound_rls: Option<T>,
    #[serde(serialize_with = "json::scalar")]
    pub bound_weaker: T,
    pub sifted_count: Option<u64>,
}

pub type ExactSieveBoundReport = SieveBoundReport<BigRational>;

/// `Δ = Q² - 1 + N`.
pub fn default_delta<T: Scalar>(n: u64, q: u64) -> T {
    let q = T::from_int(q as i64);
    q.clone() * q - T::one() + T::from_int(n as i64)
}

/// Evaluates `H`, `K`, `A`, `B` and the bounds `Δ/H`, `Δ/K`, `ΔA/B²`.
/// `delta` overrides the default `Q² - 1 + N`.
pub fn sieve_bounds<T: Scalar>(omega: &OmegaSystem, n: u64, delta: Option<T>) -> SieveBoundReport<T> {
    let q_bound = omega.bound();
    let delta = delta.unwrap_or_else(|| default_delta(n, q_bound));
    let c: BTreeMap<u64, T> = omega
        .primes()
        .map(|p| (p, T::from_ratio(omega.size(p) as i64, p as i64)))
        .collect();
    let h_local: BTreeMap<u64, T> = omega
        .primes()
        .map(|p| (p, T::from_ratio(omega.size(p) as i64, (p - omega.size(p)) as i64)))
        .collect();
    let cost_local: BTreeMap<u64, T> = c
        .iter()
        .map(|(&p, cp)| (p, cp.clone() * (T::one() - cp.clone())))
        .collect();

    let h = squarefree_sum(q_bound, &h_local);
    let a = squarefree_sum(q_bound, &cost_local);
    let b = squarefree_sum(q_bound, &c);
    let k = c.values().fold(T::zero(), |acc, x| acc + x.clone());

    let bound_als = delta.clone() / h.clone();
    let bound_rls = (k > T::zero()).then(|| delta.clone() / k.clone());
    let bound_weaker = delta.clone() * a.clone() / (b.clone() * b.clone());
    SieveBoundReport {
        n,
        q: q_bound,
        delta,
        h,
        k,
        a,
        b,
        bound_als,
        bound_rls,
        bound_weaker,
        sifted_count: None,
    }
}

/// `Σ♭_{q<=Q} Π_{p|q} f(p)` for a function given on the primes `<= Q`.
pub fn squarefree_sum<T: Scalar>(q_bound: u64, local: &BTreeMap<u64, T>) -> T {
    squarefree_up_to(q_bound)
        .into_iter()
        .map(|q| factorize(q).iter().fold(T::one(), |acc, (p, _)| acc * local[p].clone()))
        .fold(T::zero(), |acc, x| acc + x)
}

/// `ξ_p = p / (p - |Ω_p|) = 1 / (1 - c_p)`, the weights for which the
/// weighted bound `Δ A₁/B₁²` collapses to `Δ / H`.
pub fn optimal_weights<T: Scalar>(omega: &OmegaSystem) -> BTreeMap<u64, T> {
    omega
        .primes()
        .map(|p| (p, T::from_ratio(p as i64, (p - omega.size(p)) as i64)))
        .collect()
}

/// `(A₁, B₁)` for the amplifier scaled by `ξ_q = Π_{p|q} ξ_p`:
/// `A₁ = Σ♭ Π ξ_p² c_p(1-c_p)` and `B₁ = Σ♭ Π ξ_p c_p`.
pub fn weighted_moments<T: Scalar>(omega: &OmegaSystem, xi: &BTreeMap<u64, T>) -> (T, T) {
    let mut cost = BTreeMap::new();
    let mut detect = BTreeMap::new();
    for p in omega.primes() {
        let c = T::from_ratio(omega.size(p) as i64, p as i64);
        let x = xi.get(&p).cloned().unwrap_or_else(T::one);
        cost.insert(p, x.clone() * x.clone() * c.clone() * (T::one() - c.clone()));
        detect.insert(p, x * c);
    }
    (
        squarefree_sum(omega.bound(), &cost),
        squarefree_sum(omega.bound(), &detect),
    )
}

/// `{n <= N : n mod p ∉ Ω_p for all p <= Q}` by direct residue filtering.
pub fn sift_bruteforce(omega: &OmegaSystem, n: u64) -> Vec<u64> {
    let tables: Vec<(u64, Vec<bool>)> = omega
        .iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(p, s)| {
            let mut t = vec![false; p as usize];
            for &r in s {
                t[r as usize] = true;
            }
            (p, t)
        })
        .collect();
    (1..=n)
        .filter(|&m| tables.iter().all(|(p, t)| !t[(m % p) as usize]))
        .collect()
}

/// Brute-force count checked against every bound.
#[derive(Debug, Clone, Serialize)]
pub struct SieveVerification {
    #[serde(flatten)]
    pub report: ExactSieveBoundReport,
    pub count: u64,
    /// `|S| <= Δ/H`.
    pub als_holds: bool,
    /// `|S| <= Δ/K`, when `K > 0`.
    pub rls_holds: Option<bool>,
    /// `Δ/H <= ΔA/B²`.
    pub weaker_dominates: bool,
    pub pass: bool,
}

/// Runs the sieve and evaluates the bounds, comparing exactly.
///
/// The inequalities are theorems, so a failed flag points at an
/// implementation defect rather than at the inputs.
pub fn verify_sieve(omega: &OmegaSystem, n: u64, delta: Option<BigRational>) -> SieveVerification {
    let sifted = sift_bruteforce(omega, n);
    let count = sifted.len() as u64;
    let mut report: ExactSieveBoundReport = sieve_bounds(omega, n, delta);
    report.sifted_count = Some(count);
    let count_r = BigRational::from_int(count as i64);
    let als_holds = count_r <= report.bound_als;
    let rls_holds = report.bound_rls.as_ref().map(|b| &count_r <= b);
    let weaker_dominates = report.bound_als <= report.bound_weaker;
    let pass = als_holds && rls_holds.unwrap_or(true) && weaker_dominates;
    SieveVerification {
        report,
        count,
        als_holds,
        rls_holds,
        weaker_dominates,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn hand_evaluated_example() {
        let omega = OmegaSystem::zero(3).unwrap();
        let rep: ExactSieveBoundReport = sieve_bounds(&omega, 30, None);
        assert_eq!(rep.h, r(5, 2));
        assert_eq!(rep.k, r(5, 6));
        assert_eq!(rep.a, r(53, 36));
        assert_eq!(rep.b, r(11, 6));
        assert_eq!(rep.delta, r(38, 1));
        assert_eq!(rep.bound_als, r(76, 5));
        assert_eq!(rep.bound_rls, Some(r(228, 5)));
        assert_eq!(rep.bound_weaker.clone() / rep.delta.clone(), r(53, 121));
        assert!(rep.bound_weaker / rep.delta >= r(2, 5));
    }

    #[test]
    fn float_instance_agrees_with_exact() {
        let omega = OmegaSystem::random(60, 4).unwrap();
        let exact: ExactSieveBoundReport = sieve_bounds(&omega, 1000, None);
        let float: SieveBoundReport<f64> = sieve_bounds(&omega, 1000, None);
        let rel = |a: &BigRational, b: f64| (Scalar::to_f64(a) / b - 1.0).abs();
        assert!(rel(&exact.h, float.h) < 1e-12);
        assert!(rel(&exact.bound_weaker, float.bound_weaker) < 1e-12);
        let single: SieveBoundReport<f32> = sieve_bounds(&omega, 1000, None);
        assert!((single.bound_als as f64 / float.bound_als - 1.0).abs() < 1e-5);
    }

    #[test]
    fn no_primes_means_no_sieving() {
        let omega = OmegaSystem::empty(1).unwrap();
        let rep: ExactSieveBoundReport = sieve_bounds(&omega, 17, None);
        assert_eq!(rep.h, r(1, 1));
        assert_eq!(rep.delta, r(17, 1));
        assert_eq!(rep.bound_als, r(17, 1));
        assert_eq!(rep.bound_rls, None);

        let v = verify_sieve(&OmegaSystem::empty(20).unwrap(), 50, None);
        assert_eq!(v.count, 50);
        assert_eq!(v.report.k, r(0, 1));
        assert_eq!(v.report.bound_als, r(50 + 399, 1));
        assert!(v.pass && v.rls_holds.is_none());
    }

    #[test]
    fn delta_override() {
        let omega = OmegaSystem::zero(3).unwrap();
        let rep: ExactSieveBoundReport = sieve_bounds(&omega, 30, Some(r(30, 1)));
        assert_eq!(rep.bound_als, r(12, 1));
    }

    #[test]
    fn optimal_weight_examples() {
        let w: BTreeMap<u64, BigRational> = optimal_weights(&OmegaSystem::zero(7).unwrap());
        assert_eq!(w[&5], r(5, 4));
        assert_eq!(w[&5].clone() * r(1, 5), r(1, 4));
        let w: BTreeMap<u64, BigRational> = optimal_weights(&OmegaSystem::empty(7).unwrap());
        assert!(w.values().all(|x| *x == r(1, 1)));
        let o = OmegaSystem::from_json_str(r#"{"Q": 3, "sets": {"3": [0, 2]}}"#).unwrap();
        let w: BTreeMap<u64, BigRational> = optimal_weights(&o);
        assert_eq!(w[&3], r(3, 1));
    }

    #[test]
    fn sift_examples() {
        let omega = OmegaSystem::zero(3).unwrap();
        assert_eq!(sift_bruteforce(&omega, 30), vec![1, 5, 7, 11, 13, 17, 19, 23, 25, 29]);
        assert_eq!(
            sift_bruteforce(&OmegaSystem::empty(10).unwrap(), 12),
            (1..=12).collect::<Vec<_>>()
        );
        let v = verify_sieve(&omega, 30, None);
        assert!(v.pass);
        assert_eq!(v.count, 10);
    }

    #[test]
    fn squares_sieve_within_bound() {
        let omega = OmegaSystem::squares(100).unwrap();
        let v = verify_sieve(&omega, 10_000, None);
        let s = sift_bruteforce(&omega, 10_000);
        assert!((1..=100u64).all(|k| s.contains(&(k * k))));
        assert!(v.pass);
    }

    #[test]
    fn random_systems_pass_verification() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for trial in 0..20 {
            let q = rng.random_range(1..=200);
            let n = rng.random_range(1..=200);
            let v = verify_sieve(&OmegaSystem::random(q, trial).unwrap(), n, None);
            assert!(v.pass, "Q={q} N={n}");
        }
    }

    fn random_weights(omega: &OmegaSystem, rng: &mut ChaCha8Rng) -> BTreeMap<u64, BigRational> {
        omega
            .primes()
            .map(|p| (p, r(rng.random_range(1..50), rng.random_range(1..50))))
            .collect()
    }

    #[test]
    fn cauchy_schwarz_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for sys in 0..50 {
            let omega = OmegaSystem::random(rng.random_range(1..40), 1000 + sys).unwrap();
            let rep: ExactSieveBoundReport = sieve_bounds(&omega, 1, None);
            let inv_h = BigRational::from_int(1) / rep.h.clone();
            for _ in 0..20 {
                let (a1, b1) = weighted_moments(&omega, &random_weights(&omega, &mut rng));
                assert!(a1 / (b1.clone() * b1) >= inv_h);
            }
            let (a1, b1) = weighted_moments(&omega, &optimal_weights::<BigRational>(&omega));
            assert_eq!(a1, rep.h);
            assert_eq!(b1, rep.h);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bounds_dominate_sifted_count(q in 1u64..60, n in 1u64..400, seed in 0u64..1000) {
            let v = verify_sieve(&OmegaSystem::random(q, seed).unwrap(), n, None);
            prop_assert!(v.pass);
        }
    }
}
