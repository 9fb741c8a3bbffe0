//! Chebyshev polynomials `X_m(2cos θ) = sin((m+1)θ) / sin θ`, the Sato–Tate
//! measure `μ_ST = (1/π) √(1 - t²/4) dt` on `[-2, 2]`, and polynomials in the
//! `X_m` basis used as minorants of sign conditions.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Float, FloatConst, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::factorize;
use crate::scalar::{json, parse_rational, Scalar};
use crate::{Error, Result};

/// Composite Simpson panels in the θ-variable.
pub const ST_PANELS: usize = 2048;

/// `X_m` in the monomial basis, built from `X_{m+1} = x X_m - X_{m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyPoly<T: Scalar> {
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> ChebyPoly<T> {
    pub fn new(m: usize) -> Self {
        Self::family(m).pop().expect("family is non-empty")
    }

    /// `[X_0, ..., X_max]`.
    pub fn family(max: usize) -> Vec<Self> {
        let mut out: Vec<Self> = Vec::with_capacity(max + 1);
        out.push(Self {
            degree: 0,
            coeffs: vec![T::one()],
        });
        if max >= 1 {
            out.push(Self {
                degree: 1,
                coeffs: vec![T::zero(), T::one()],
            });
        }
        for m in 2..=max {
            let prev = &out[m - 1].coeffs;
            let prev2 = &out[m - 2].coeffs;
            let mut c = vec![T::zero(); m + 1];
            for (i, v) in prev.iter().enumerate() {
                c[i + 1] = c[i + 1].clone() + v.clone();
            }
            for (i, v) in prev2.iter().enumerate() {
                c[i] = c[i].clone() - v.clone();
            }
            out.push(Self { degree: m, coeffs: c });
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Monomial coefficients, constant term first.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, x: &T) -> T {
        horner(&self.coeffs, x)
    }
}

pub(crate) fn horner<T: Scalar>(coeffs: &[T], x: &T) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
}

fn check_range<F: Float>(x: F) -> Result<()> {
    let two = F::one() + F::one();
    if x.abs() > two || x.is_nan() {
        return Err(Error::OutOfRange(x.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// `X_m(x)` for `|x| <= 2` by the three-term recurrence.
pub fn cheby_eval<F: Float>(m: usize, x: F) -> Result<F> {
    check_range(x)?;
    Ok(cheby_values(m, x)[m])
}

/// `[X_0(x), ..., X_m(x)]` without range checks.
pub fn cheby_values<F: Float>(m: usize, x: F) -> Vec<F> {
    let mut v = Vec::with_capacity(m + 1);
    v.push(F::one());
    if m >= 1 {
        v.push(x);
    }
    for k in 2..=m {
        let next = x * v[k - 1] - v[k - 2];
        v.push(next);
    }
    v
}

/// Nodes `t_i` and weights `w_i` with `Σ w_i f(t_i) ≈ ∫ f dμ_ST`.
///
/// Substituting `t = 2cos θ` turns the integral into
/// `(2/π) ∫_0^π f(2cos θ) sin²θ dθ`, integrated by composite Simpson.
pub fn st_nodes<F: Float + FloatConst>() -> Vec<(F, F)> {
    let n = ST_PANELS;
    let h = F::PI() / F::from(n).unwrap();
    let two = F::from(2.0).unwrap();
    let scale = two / F::PI() * h / F::from(3.0).unwrap();
    (0..=n)
        .map(|i| {
            let theta = h * F::from(i).unwrap();
            let simpson = if i == 0 || i == n {
                F::one()
            } else if i % 2 == 1 {
                F::from(4.0).unwrap()
            } else {
                two
            };
            let s = theta.sin();
            (two * theta.cos(), scale * simpson * s * s)
        })
        .collect()
}

/// Gauss rule for `μ_ST` with `n` nodes, `t_j = 2cos(jπ/(n+1))` and weights
/// `(2/(n+1)) sin²(jπ/(n+1))`; exact on polynomials of degree `< 2n`.
pub fn st_gauss_nodes<F: Float + FloatConst>(n: usize) -> Vec<(F, F)> {
    let two = F::from(2.0).unwrap();
    let m = F::from(n + 1).unwrap();
    (1..=n)
        .map(|j| {
            let theta = F::PI() * F::from(j).unwrap() / m;
            let s = theta.sin();
            (two * theta.cos(), two / m * s * s)
        })
        .collect()
}

/// `∫ f dμ_ST`.
pub fn st_integral<F, G>(f: G) -> F
where
    F: Float + FloatConst,
    G: Fn(F) -> F,
{
    st_nodes::<F>()
        .into_iter()
        .fold(F::zero(), |acc, (t, w)| acc + w * f(t))
}

/// `μ_ST([-2, x])`, clamped to `[0, 1]` outside the support.
pub fn st_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let theta = (x / 2.0).acos();
    1.0 - (2.0 * theta - (2.0 * theta).sin()) / std::f64::consts::TAU
}

/// `μ_ST({x : Y(x) <= t})`, with the crossings of `Y = t` located by
/// bracketing on a fine grid and bisection.
pub fn st_probability_below<T: Scalar>(y: &ChebySeries<T>, t: f64) -> f64 {
    const CELLS: usize = 4096;
    let g = |x: f64| y.eval_f64(x) - t;
    let mut cuts = vec![-2.0];
    let mut prev = -2.0;
    for i in 1..=CELLS {
        let x = -2.0 + 4.0 * i as f64 / CELLS as f64;
        if (g(prev) <= 0.0) != (g(x) <= 0.0) {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) <= 0.0) == (g(lo) <= 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = x;
    }
    cuts.push(2.0);
    cuts.windows(2)
        .filter(|w| g(0.5 * (w[0] + w[1])) <= 0.0)
        .map(|w| st_cdf(w[1]) - st_cdf(w[0]))
        .sum()
}

/// Local data `(x_p)_p` with every `|x_p| <= 2`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalTuple(BTreeMap<u64, f64>);

impl LocalTuple {
    pub fn new(values: BTreeMap<u64, f64>) -> Result<Self> {
        for &x in values.values() {
            check_range(x)?;
        }
        Ok(Self(values))
    }

    pub fn get(&self, p: u64) -> Option<f64> {
        self.0.get(&p).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.0.iter().map(|(&p, &x)| (p, x))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(u64, f64)> for LocalTuple {
    /// Panics on values outside `[-2, 2]`; use [`LocalTuple::new`] for
    /// untrusted input.
    fn from_iter<I: IntoIterator<Item = (u64, f64)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect()).expect("local values lie in [-2, 2]")
    }
}

/// `Λ_m(x) = Π_{p^k || m} X_k(x_p)`; `Λ_1 = 1`.
pub fn lambda_big(m: u64, t: &LocalTuple) -> Result<f64> {
    lambda_from_factors(&factorize(m), t)
}

/// [`lambda_big`] for an already factored `m`.
pub fn lambda_from_factors(factors: &[(u64, u32)], t: &LocalTuple) -> Result<f64> {
    factors.iter().try_fold(1.0, |acc, &(p, k)| {
        let x = t.get(p).ok_or(Error::MissingLocalValue(p))?;
        Ok(acc * hecke_extend(x, k as usize)?)
    })
}

/// `λ(p^j) = X_j(λ(p))`, the Hecke relation at a prime power.
pub fn hecke_extend(lambda_p: f64, j: usize) -> Result<f64> {
    cheby_eval(j, lambda_p)
}

/// `Y = β_0 X_0 + β_1 X_1 + ... + β_s X_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebySeries<T: Scalar> {
    beta: Vec<T>,
}

impl<T: Scalar> ChebySeries<T> {
    pub fn new(beta: Vec<T>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Invalid("a Chebyshev series needs at least β_0".into()));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    pub fn degree(&self) -> usize {
        self.beta.len() - 1
    }

    /// `β_0 = ∫ Y dμ_ST`.
    pub fn mean(&self) -> T {
        self.beta[0].clone()
    }

    /// `σ² = Σ_{i>=1} β_i² = ∫ Y² dμ_ST - (∫ Y dμ_ST)²`.
    pub fn variance(&self) -> T {
        self.beta[1..]
            .iter()
            .fold(T::zero(), |acc, b| acc + b.clone() * b.clone())
    }

    /// Monomial coefficients, constant term first.
    pub fn monomial(&self) -> Vec<T> {
        let basis = ChebyPoly::<T>::family(self.degree());
        let mut out = vec![T::zero(); self.beta.len()];
        for (b, x) in self.beta.iter().zip(&basis) {
            for (i, c) in x.coeffs().iter().enumerate() {
                out[i] = out[i].clone() + b.clone() * c.clone();
            }
        }
        out
    }

    pub fn eval(&self, x: &T) -> T {
        horner(&self.monomial(), x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        cheby_values(self.degree(), x)
            .iter()
            .zip(&self.beta)
            .map(|(v, b)| v * b.to_f64())
            .sum()
    }
}

/// A Chebyshev series `Y` together with a gap `δ > 0`; the associated
/// condition set is `{x : Y(x) <= β_0 - δ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorantPoly<T: Scalar> {
    series: ChebySeries<T>,
    delta: T,
}

impl<T: Scalar> MinorantPoly<T> {
    pub fn new(beta: Vec<T>, delta: T) -> Result<Self> {
        if delta <= T::zero() {
            return Err(Error::Invalid(format!(
                "gap δ must be positive, got {}",
                delta.render()
            )));
        }
        Ok(Self {
            series: ChebySeries::new(beta)?,
            delta,
        })
    }

    /// `Y = -(3/4) X_0 + (1/2) X_1 + (1/4) X_2 = -1 + x/2 + x²/4` with
    /// `δ = 1/4`: lies below `sgn` and satisfies `Y <= -1` on `[-2, 0]`.
    pub fn default_sign() -> Self {
        Self::new(
            vec![T::from_ratio(-3, 4), T::from_ratio(1, 2), T::from_ratio(1, 4)],
            T::from_ratio(1, 4),
        )
        .expect("valid built-in polynomial")
    }

    pub fn series(&self) -> &ChebySeries<T> {
        &self.series
    }

    pub fn beta(&self) -> &[T] {
        self.series.beta()
    }

    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    pub fn delta(&self) -> &T {
        &self.delta
    }

    pub fn beta0(&self) -> T {
        self.series.mean()
    }

    pub fn sigma2(&self) -> T {
        self.series.variance()
    }

    /// `γ = δ² / σ²`, absent for constant polynomials.
    pub fn gamma(&self) -> Option<T> {
        let s = self.sigma2();
        (!s.is_zero()).then(|| self.delta.clone() * self.delta.clone() / s)
    }

    /// `β_0 - δ`, the level below which `Y` signals the condition.
    pub fn threshold(&self) -> T {
        self.beta0() - self.delta.clone()
    }
}

#[derive(Serialize, Deserialize)]
struct MinorantJson {
    beta: Vec<String>,
    delta: String,
}

impl MinorantPoly<BigRational> {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: MinorantJson = serde_json::from_str(s)?;
        let beta = j.beta.iter().map(|b| parse_rational(b)).collect::<Result<_>>()?;
        Self::new(beta, parse_rational(&j.delta)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&MinorantJson {
            beta: self.beta().iter().map(Scalar::render).collect(),
            delta: self.delta.render(),
        })
        .expect("minorant serializes")
    }
}

/// Target function that a minorant must lie below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `sgn(x)`, with the condition region `[-2, 0]`.
    Sign,
}

impl Target {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Target::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Pieces `(lo, hi, value)` on which the target is constant; the
    /// single point `0` is its own piece.
    fn pieces(&self) -> Vec<(BigRational, BigRational, BigRational)> {
        match self {
            Target::Sign => {
                let r = |n| BigRational::from_int(n);
                vec![(r(-2), r(0), r(-1)), (r(0), r(0), r(0)), (r(0), r(2), r(1))]
            }
        }
    }

    /// The region on which the minorant must drop below `β_0 - δ`.
    fn event_region(&self) -> (BigRational, BigRational) {
        match self {
            Target::Sign => (BigRational::from_int(-2), BigRational::zero()),
        }
    }
}

/// Outcome of [`verify_minorant`].
#[derive(Debug, Clone, Serialize)]
pub struct MinorantReport {
    pub target: Target,
    pub degree: usize,
    #[serde(serialize_with = "json::scalar_seq")]
    pub beta: Vec<BigRational>,
    #[serde(serialize_with = "json::scalar")]
    pub beta0: BigRational,
    pub beta0_quadrature: f64,
    #[serde(serialize_with = "json::scalar")]
    pub delta: BigRational,
    #[serde(serialize_with = "json::scalar")]
    pub sigma2: BigRational,
    pub sigma2_quadrature: f64,
    #[serde(serialize_with = "json::opt_scalar")]
    pub gamma: Option<BigRational>,
    pub grid_points: usize,
    pub critical_points: Vec<f64>,
    /// Critical points were found in closed form (degree <= 3).
    pub critical_points_closed_form: bool,
    /// Candidate extrema were compared in exact arithmetic (degree <= 2).
    pub exact_confirmation: bool,
    /// `Y <= target` everywhere checked.
    pub minorizes: bool,
    pub witness: Option<f64>,
    /// `min (target - Y)` over the checked points.
    pub min_gap: f64,
    /// Checked points where `Y` touches the target.
    pub contact_points: Vec<f64>,
    /// `β_0 > -1`.
    pub beta0_above_minus_one: bool,
    /// `Y <= β_0 - δ` on the whole condition region.
    pub detects_event: bool,
    pub pass: bool,
}

const GRID_SLACK: f64 = 1e-12;

/// Checks a minorant against a target on a uniform grid, at the closed-form
/// critical points of `Y`, and (for degree <= 2) exactly at every candidate
/// extremum; recomputes `β_0` and `σ²` by quadrature.
pub fn verify_minorant(y: &MinorantPoly<BigRational>, target: Target, grid: usize) -> MinorantReport {
    let series = y.series();
    let mono = series.monomial();
    let deg = y.degree();
    let grid = grid.max(2);

    let beta0_quadrature = st_integral(|t: f64| series.eval_f64(t));
    let second = st_integral(|t: f64| series.eval_f64(t).powi(2));
    let sigma2_quadrature = second - beta0_quadrature * beta0_quadrature;

    let crit = critical_points(&mono);
    let critical_points: Vec<f64> = crit.iter().map(|c| c.to_f64()).collect();
    let exact = deg <= 2;

    let mut points: Vec<f64> = (0..grid).map(|i| -2.0 + 4.0 * i as f64 / (grid - 1) as f64).collect();
    points.extend([-2.0, 0.0, 2.0]);
    points.extend(critical_points.iter().copied());

    let mut min_gap = f64::INFINITY;
    let mut witness = None;
    let mut contact_points = Vec::new();
    for &x in &points {
        let gap = target.value(x) - series.eval_f64(x);
        if gap < min_gap {
            min_gap = gap;
        }
        if gap < -GRID_SLACK && witness.is_none() {
            witness = Some(x);
        }
        if gap.abs() <= GRID_SLACK && !contact_points.contains(&x) {
            contact_points.push(x);
        }
    }
    contact_points.sort_by(f64::total_cmp);

    // On each constant piece the supremum of Y sits at an endpoint or at a
    // critical point; with rational candidates the comparison is exact.
    let mut minorizes = witness.is_none();
    if exact {
        for (lo, hi, value) in target.pieces() {
            if let Some(c) = candidates(&crit, &lo, &hi)
                .into_iter()
                .find(|c| horner(&mono, c) > value)
            {
                minorizes = false;
                witness.get_or_insert(c.to_f64());
            }
        }
    }

    let (lo, hi) = target.event_region();
    let threshold = y.threshold();
    let detects_event = if exact {
        candidates(&crit, &lo, &hi)
            .iter()
            .all(|c| horner(&mono, c) <= threshold)
    } else {
        let t = threshold.to_f64();
        points
            .iter()
            .filter(|&&x| x >= lo.to_f64() && x <= hi.to_f64())
            .all(|&x| series.eval_f64(x) <= t + GRID_SLACK)
    };

    let beta0 = y.beta0();
    let beta0_above_minus_one = beta0 > BigRational::from_int(-1);
    MinorantReport {
        target,
        degree: deg,
        beta: y.beta().to_vec(),
        beta0: beta0.clone(),
        beta0_quadrature,
        delta: y.delta().clone(),
        sigma2: y.sigma2(),
        sigma2_quadrature,
        gamma: y.gamma(),
        grid_points: grid,
        critical_points,
        critical_points_closed_form: deg <= 3,
        exact_confirmation: exact,
        minorizes,
        witness,
        min_gap,
        contact_points,
        beta0_above_minus_one,
        detects_event,
        pass: minorizes && beta0_above_minus_one && detects_event,
    }
}

fn candidates(crit: &[Critical], lo: &BigRational, hi: &BigRational) -> Vec<BigRational> {
    let mut c = vec![lo.clone(), hi.clone()];
    c.extend(crit.iter().filter_map(|p| match p {
        Critical::Exact(x) if x >= lo && x <= hi => Some(x.clone()),
        _ => None,
    }));
    c
}

enum Critical {
    Exact(BigRational),
    Approx(f64),
}

impl Critical {
    fn to_f64(&self) -> f64 {
        match self {
            Critical::Exact(x) => Scalar::to_f64(x),
            Critical::Approx(x) => *x,
        }
    }
}

/// Real roots of `Y'` inside `[-2, 2]`, for `deg Y <= 3`.
fn critical_points(mono: &[BigRational]) -> Vec<Critical> {
    let two = BigRational::from_int(2);
    let inside = |x: f64| (-2.0..=2.0).contains(&x);
    match mono.len() {
        3 if !mono[2].is_zero() => {
            let x = -mono[1].clone() / (two * mono[2].clone());
            if inside(Scalar::to_f64(&x)) {
                vec![Critical::Exact(x)]
            } else {
                vec![]
            }
        }
        4 => {
            // Y' = 3d x² + 2c x + b
            let (b, c, d) = (mono[1].to_f64(), mono[2].to_f64(), mono[3].to_f64());
            let (qa, qb, qc) = (3.0 * d, 2.0 * c, b);
            let mut roots = Vec::new();
            if qa == 0.0 {
                if qb != 0.0 {
                    roots.push(-qc / qb);
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    roots.push((-qb - s) / (2.0 * qa));
                    roots.push((-qb + s) / (2.0 * qa));
                }
            }
            roots.into_iter().filter(|&x| inside(x)).map(Critical::Approx).collect()
        }
        _ => vec![],
    }
}

/// Samples `(x, Y(x), target(x))` for plotting.
pub fn minorant_graph(y: &MinorantPoly<BigRational>, target: Target, points: usize) -> Vec<(f64, f64, f64)> {
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let x = -2.0 + 4.0 * i as f64 / (points - 1) as f64;
            (x, y.series().eval_f64(x), target.value(x))
        })
        .collect()
}
