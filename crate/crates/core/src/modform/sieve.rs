use std::collections::BTreeMap;

use num_complex::Complex64;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ensemble::{Ensemble, Form};
use super::weyl::WeylCoefficients;
use crate::arith::{factorize, friable_up_to, primes_up_to};
use crate::sato_tate::{horner, MinorantPoly};
use crate::scalar::{json, Scalar};
use crate::{Error, Result};

/// Local polynomials `Y_p` for the primes `p <= Q`, all of degree `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPolys {
    q: u64,
    s: usize,
    polys: BTreeMap<u64, MinorantPoly<BigRational>>,
}

impl LocalPolys {
    pub fn new(q: u64, s: usize, polys: BTreeMap<u64, MinorantPoly<BigRational>>) -> Result<Self> {
        for (&p, y) in &polys {
            if !crate::arith::is_prime(p) {
                return Err(Error::NotPrime(p));
            }
            if p > q {
                return Err(Error::PrimeAboveBound { p, bound: q });
            }
            if y.degree() != s {
                return Err(Error::DegreeMismatch {
                    p,
                    expected: s,
                    found: y.degree(),
                });
            }
        }
        Ok(Self { q, s, polys })
    }

    /// The same polynomial at every prime `p <= Q` not dividing `level_q`.
    pub fn uniform(q: u64, level_q: u64, y: &MinorantPoly<BigRational>) -> Self {
        let polys = primes_up_to(q)
            .iter()
            .filter(|p| level_q.gcd(p) == 1)
            .map(|p| (p, y.clone()))
            .collect();
        Self {
            q,
            s: y.degree(),
            polys,
        }
    }

    pub fn bound(&self) -> u64 {
        self.q
    }

    pub fn degree(&self) -> usize {
        self.s
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn get(&self, p: u64) -> Option<&MinorantPoly<BigRational>> {
        self.polys.get(&p)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &MinorantPoly<BigRational>)> + '_ {
        self.polys.iter().map(|(&p, y)| (p, y))
    }

    fn check_level(&self, ens: &Ensemble) -> Result<()> {
        match self.polys.keys().find(|p| ens.level_q().gcd(p) != 1) {
            Some(&p) => Err(Error::Invalid(format!("prime {p} divides the level {}", ens.level_q()))),
            None => Ok(()),
        }
    }
}

/// Outcome of [`cor1_check`].
#[derive(Debug, Clone, Serialize)]
pub struct Cor1Report {
    pub label: String,
    pub level_q: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    pub s: usize,
    pub num_forms: usize,
    pub total_mass: f64,
    /// `E((Σ_p Y_p(λ_f(p)) - β_{p,0})²)`.
    pub lhs: f64,
    pub lhs_normalized: f64,
    pub lhs_standard_error: f64,
    #[serde(serialize_with = "json::scalar")]
    pub sigma2_sum: BigRational,
    /// `1 + Q^s / q`.
    pub scale: f64,
    /// `lhs / (scale · Σ σ_p²)`; absent when every `Y_p` is constant.
    pub ratio: Option<f64>,
    pub log_factor_flag: bool,
}

/// Variance of `Σ_p Y_p(λ_f(p))` over the ensemble, through the large sieve
/// with `α(p^j) = β_{p,j}` for `1 <= j <= s`.
pub fn cor1_check(ens: &Ensemble, ys: &LocalPolys) -> Result<Cor1Report> {
    ys.check_level(ens)?;
    let s = ys.degree();
    let n = ys
        .bound()
        .checked_pow(s as u32)
        .ok_or_else(|| Error::Invalid(format!("Q^s overflows for Q = {}, s = {s}", ys.bound())))?;
    let mut coeffs = BTreeMap::new();
    for (p, y) in ys.iter() {
        for (j, b) in y.beta().iter().enumerate().skip(1) {
            coeffs.insert(p.pow(j as u32), Complex64::new(b.to_f64(), 0.0));
        }
    }
    let alpha = WeylCoefficients::new(n, ys.bound(), ens.level_q(), coeffs)?;
    let values = ens
        .forms()
        .iter()
        .map(|f| alpha.evaluate(f).map(|z| z.norm_sqr()))
        .collect::<Result<Vec<_>>>()?;
    let (lhs, se) = ens.weighted_stats(&values);
    let sigma2_sum = ys.iter().fold(BigRational::zero(), |acc, (_, y)| acc + y.sigma2());
    let scale = 1.0 + n as f64 / ens.level_q() as f64;
    let ratio = (!sigma2_sum.is_zero()).then(|| lhs / (scale * sigma2_sum.to_f64()));
    Ok(Cor1Report {
        label: ens.label().to_string(),
        level_q: ens.level_q(),
        q: ys.bound(),
        s,
        num_forms: ens.len(),
        total_mass: ens.total_mass(),
        lhs,
        lhs_normalized: lhs / ens.total_mass(),
        lhs_standard_error: se,
        sigma2_sum,
        scale,
        ratio,
        log_factor_flag: ens.log_factor_flag(),
    })
}

/// Outcome of [`cor2_bound`]: the empirical probability that every `Y_p`
/// falls to `β_{p,0} - δ_p`, next to the amplified bound for it.
#[derive(Debug, Clone, Serialize)]
pub struct SieveExperimentReport {
    pub label: String,
    pub level_q: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub s: usize,
    pub sieved_primes: usize,
    pub num_forms: usize,
    pub total_mass: f64,
    pub weight_k: Option<u32>,
    pub log_factor_flag: bool,
    pub event_count: usize,
    /// Raw `Σ_{f in event} w_f`.
    pub probability: f64,
    pub probability_normalized: f64,
    pub probability_standard_error: f64,
    /// `Σ_{m ∈ Ψ_q(N, Q)} Π_{p | m} δ_p² / σ_p²`.
    #[serde(rename = "H", serialize_with = "json::scalar")]
    pub h: BigRational,
    /// The same sum over squarefree `m`, i.e. the amplifier support.
    #[serde(rename = "H_squarefree", serialize_with = "json::scalar")]
    pub h_squarefree: BigRational,
    #[serde(rename = "A1", serialize_with = "json::scalar")]
    pub a1: BigRational,
    #[serde(rename = "B1", serialize_with = "json::scalar")]
    pub b1: BigRational,
    /// `E|Amp|²`.
    pub amp_second_moment: f64,
    /// `1 + N^s / q`.
    pub scale: f64,
    /// `E|Amp|² / ((1 + N^s/q) A₁)`.
    pub ls_const: f64,
    /// `ls_const · (1 + N^s/q) · A₁ / B₁²`.
    pub bound: f64,
    /// `(1 + N^s/q) / H`.
    pub bound_unit_const: f64,
    /// `probability / bound`.
    pub ratio: f64,
    /// `P · B₁² <= E|Amp|²`.
    pub chain_holds: bool,
}

struct Local {
    p: u64,
    y: MinorantPoly<BigRational>,
    mono: Vec<BigRational>,
    threshold: BigRational,
    threshold_f: f64,
    beta0: f64,
    xi: f64,
}

impl Local {
    /// `Y_p(x) <= β_{p,0} - δ_p`, settled exactly near the threshold.
    fn in_event(&self, x: f64) -> bool {
        let y = self.y.series().eval_f64(x);
        if (y - self.threshold_f).abs() > 1e-9 {
            return y < self.threshold_f;
        }
        let xr = BigRational::from_float(x).expect("eigenvalues are finite");
        horner(&self.mono, &xr) <= self.threshold
    }
}

fn prepare(ens: &Ensemble, ys: &LocalPolys, xi: &BTreeMap<u64, BigRational>) -> Result<Vec<Local>> {
    ys.check_level(ens)?;
    ys.iter()
        .map(|(p, y)| {
            if y.sigma2().is_zero() {
                return Err(Error::Degenerate { p, reason: "σ² = 0" });
            }
            let x = xi.get(&p).ok_or(Error::MissingPrime(p))?;
            if *x < BigRational::zero() {
                return Err(Error::NegativeWeight { p, weight: x.render() });
            }
            Ok(Local {
                p,
                y: y.clone(),
                mono: y.series().monomial(),
                threshold: y.threshold(),
                threshold_f: y.threshold().to_f64(),
                beta0: y.beta0().to_f64(),
                xi: x.to_f64(),
            })
        })
        .collect()
}

/// `Ψ_q(N, Q)` restricted to the primes carrying a polynomial, with
/// factorizations.
fn support(ys: &LocalPolys, n: u64, level_q: u64) -> Vec<(u64, Vec<(u64, u32)>)> {
    friable_up_to(n, ys.bound(), level_q)
        .members()
        .iter()
        .map(|&m| (m, factorize(m)))
        .filter(|(_, f)| f.iter().all(|(p, _)| ys.get(*p).is_some()))
        .collect()
}

fn gamma_sum<'a>(ys: &LocalPolys, ms: impl Iterator<Item = &'a Vec<(u64, u32)>>) -> BigRational {
    let gamma: BTreeMap<u64, BigRational> = ys
        .iter()
        .map(|(p, y)| (p, y.gamma().unwrap_or_else(BigRational::zero)))
        .collect();
    ms.fold(BigRational::zero(), |acc, f| {
        acc + f.iter().fold(BigRational::one(), |g, (p, _)| g * &gamma[p])
    })
}

/// `A₁ = Σ_d Π_{p|d} ξ_p² σ_p²` and `B₁ = Σ_d Π_{p|d} ξ_p δ_p` over squarefree
/// `d <= N` built from the primes of `ys` and coprime to `level_q`.
pub fn amplifier_moments(
    ys: &LocalPolys,
    n: u64,
    level_q: u64,
    xi: &BTreeMap<u64, BigRational>,
) -> Result<(BigRational, BigRational)> {
    let mut a1 = BigRational::zero();
    let mut b1 = BigRational::zero();
    for (_, f) in support(ys, n, level_q)
        .iter()
        .filter(|(_, f)| f.iter().all(|&(_, k)| k == 1))
    {
        let mut a = BigRational::one();
        let mut b = BigRational::one();
        for &(p, _) in f {
            let y = ys.get(p).expect("support uses the primes of ys");
            let x = xi.get(&p).ok_or(Error::MissingPrime(p))?;
            a = a * x * x * y.sigma2();
            b = b * x * y.delta();
        }
        a1 += a;
        b1 += b;
    }
    Ok((a1, b1))
}

/// `ξ_p = δ_p / σ_p²`.
fn optimal_xi(ys: &LocalPolys) -> Result<BTreeMap<u64, BigRational>> {
    ys.iter()
        .map(|(p, y)| {
            if y.sigma2().is_zero() {
                return Err(Error::Degenerate { p, reason: "σ² = 0" });
            }
            Ok((p, y.delta().clone() / y.sigma2()))
        })
        .collect()
}

/// Probability that `Y_p(λ_f(p)) <= β_{p,0} - δ_p` for every `p`, against the
/// amplified bound with the optimal weights `ξ_p = δ_p / σ_p²`.
pub fn cor2_bound(ens: &Ensemble, ys: &LocalPolys, n: u64) -> Result<SieveExperimentReport> {
    cor2_bound_weighted(ens, ys, n, &optimal_xi(ys)?)
}

/// [`cor2_bound`] with explicit amplifier weights `ξ_p >= 0`.
///
/// The amplifier is `Amp(f) = Σ_d Π_{p|d} ξ_p (β_{p,0} - Y_p(λ_f(p)))` over
/// squarefree `d <= N` from the sieved primes; on the event every factor is at
/// least `ξ_p δ_p`, so `Amp >= B₁` there.
pub fn cor2_bound_weighted(
    ens: &Ensemble,
    ys: &LocalPolys,
    n: u64,
    xi: &BTreeMap<u64, BigRational>,
) -> Result<SieveExperimentReport> {
    let locals = prepare(ens, ys, xi)?;
    let psi = support(ys, n, ens.level_q());
    let h = gamma_sum(ys, psi.iter().map(|(_, f)| f));
    let sqfree: Vec<&Vec<(u64, u32)>> = psi
        .iter()
        .map(|(_, f)| f)
        .filter(|f| f.iter().all(|&(_, k)| k == 1))
        .collect();
    let h_squarefree = gamma_sum(ys, sqfree.iter().copied());
    let (a1, b1) = amplifier_moments(ys, n, ens.level_q(), xi)?;

    // Positions of each d's primes in `locals`.
    let index: BTreeMap<u64, usize> = locals.iter().enumerate().map(|(i, l)| (l.p, i)).collect();
    let d_primes: Vec<Vec<usize>> = sqfree
        .iter()
        .map(|f| f.iter().map(|(p, _)| index[p]).collect())
        .collect();

    let mut events = Vec::with_capacity(ens.len());
    let mut amp2 = Vec::with_capacity(ens.len());
    let mut u = vec![0.0; locals.len()];
    for f in ens.forms() {
        let mut inside = true;
        for (slot, l) in u.iter_mut().zip(&locals) {
            let x = f.require(l.p)?;
            *slot = l.xi * (l.beta0 - l.y.series().eval_f64(x));
            inside &= l.in_event(x);
        }
        let amp: f64 = d_primes
            .iter()
            .map(|ps| ps.iter().map(|&i| u[i]).product::<f64>())
            .sum();
        events.push(if inside { 1.0 } else { 0.0 });
        amp2.push(amp * amp);
    }
    let (probability, probability_standard_error) = ens.weighted_stats(&events);
    let (amp_second_moment, _) = ens.weighted_stats(&amp2);

    let s = ys.degree();
    let scale = 1.0 + (n as f64).powi(s as i32) / ens.level_q() as f64;
    let (a1f, b1f) = (a1.to_f64(), b1.to_f64());
    let ls_const = amp_second_moment / (scale * a1f);
    let bound = ls_const * scale * a1f / (b1f * b1f);
    let mass = ens.total_mass();
    Ok(SieveExperimentReport {
        label: ens.label().to_string(),
        level_q: ens.level_q(),
        q: ys.bound(),
        n,
        s,
        sieved_primes: locals.len(),
        num_forms: ens.len(),
        total_mass: mass,
        weight_k: ens.weight_k(),
        log_factor_flag: ens.log_factor_flag(),
        event_count: events.iter().filter(|&&e| e > 0.0).count(),
        probability,
        probability_normalized: probability / mass,
        probability_standard_error,
        bound_unit_const: scale / h.to_f64(),
        h,
        h_squarefree,
        a1,
        b1,
        amp_second_moment,
        scale,
        ls_const,
        bound,
        ratio: probability / bound,
        chain_holds: probability * b1f * b1f <= amp_second_moment * (1.0 + 1e-12),
    })
}

/// `(Q, N, s)` for the sign-change experiment at level `q` and exponent `A`:
/// `Q = ⌊(ln q)^A⌋`, `s = 2`, `N = ⌊q^{1/2}⌋`.
pub fn sign_change_parameters(level_q: u64, a: f64) -> Result<(u64, u64, usize)> {
    if level_q < 3 {
        return Err(Error::Invalid(format!("level {level_q} is too small: need ln q > 1")));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Invalid(format!("exponent A = {a} must be positive")));
    }
    let q = (level_q as f64).ln().powf(a).floor() as u64;
    Ok((q, level_q.sqrt(), 2))
}

/// Outcome of [`sign_change_experiment`].
#[derive(Debug, Clone, Serialize)]
pub struct SignChangeReport {
    #[serde(rename = "A")]
    pub a: f64,
    pub level_q: u64,
    #[serde(rename = "Q")]
    pub q: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub s: usize,
    /// `Q < 2`: nothing to sieve, the report is the trivial one.
    pub no_sieve: bool,
    /// `(1/2)(1 - 1/A) - 0.1`.
    pub diagnostic_exponent: f64,
    /// `q^diagnostic_exponent`.
    pub diagnostic_threshold: f64,
    /// `H >= q^diagnostic_exponent`.
    pub diagnostic_holds: bool,
    /// The event counted by the sieve is exactly `λ_f(p) <= 0` for all `p <= Q`.
    pub event_matches_sign: bool,
    /// `P <= bound`.
    pub within_bound: bool,
    /// `P <= ls_const · (1 + N^s/q) / H`.
    pub within_h_bound: bool,
    pub sieve: SieveExperimentReport,
}

/// Forms with `λ_f(p) <= 0` at every `p <= (ln q)^A` (any fixed sign pattern
/// behaves the same), sieved with `Y = -1 + x/2 + x²/4` at each prime.
pub fn sign_change_experiment(ens: &Ensemble, a: f64) -> Result<SignChangeReport> {
    let (q, n, s) = sign_change_parameters(ens.level_q(), a)?;
    let y = MinorantPoly::<BigRational>::default_sign();
    let ys = if q >= 2 {
        LocalPolys::uniform(q, ens.level_q(), &y)
    } else {
        LocalPolys::new(q, s, BTreeMap::new())?
    };
    let sieve = cor2_bound(ens, &ys, n)?;
    let signs = ens.probability(|f: &Form| ys.iter().all(|(p, _)| f.lambda(p).is_some_and(|x| x <= 0.0)));
    let exponent = 0.5 * (1.0 - 1.0 / a) - 0.1;
    let threshold = (ens.level_q() as f64).powf(exponent);
    let h = sieve.h.to_f64();
    Ok(SignChangeReport {
        a,
        level_q: ens.level_q(),
        q,
        n,
        s,
        no_sieve: ys.is_empty(),
        diagnostic_exponent: exponent,
        diagnostic_threshold: threshold,
        diagnostic_holds: h >= threshold,
        event_matches_sign: signs == sieve.probability,
        within_bound: sieve.probability <= sieve.bound,
        within_h_bound: sieve.probability <= sieve.ls_const * sieve.scale / h,
        sieve,
    })
}
