//! Additive characters `e(x) = exp(2πi x)` at rational points.

use num_complex::Complex64;
use num_integer::Integer;

use crate::arith::{euler_phi, mobius};

/// `e(num/den)`, reducing `num` modulo `den` in integers before the
/// floating-point evaluation.
pub fn e_frac(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64 / den as f64;
    Complex64::from_polar(1.0, std::f64::consts::TAU * r)
}

/// `e(a n / q)` for `a, n` of arbitrary sign.
pub fn e_an_q(a: i64, n: i64, q: u64) -> Complex64 {
    e_frac(a as i128 * n as i128, q)
}

/// Ramanujan sum `c_q(n) = Σ*_{a mod q} e(an/q)` through the closed form
/// `μ(q/g) φ(q) / φ(q/g)` with `g = gcd(q, n)`.
pub fn ramanujan_sum(q: u64, n: i64) -> i64 {
    assert!(q >= 1, "modulus must be positive");
    let g = q.gcd(&n.unsigned_abs());
    let g = if n == 0 { q } else { g };
    let r = q / g;
    i64::from(mobius(r)) * (euler_phi(q) / euler_phi(r)) as i64
}
