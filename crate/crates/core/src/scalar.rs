//! Scalar abstraction shared by the exact and floating-point code paths.
//!
//! Every bound in the sieve reports is a rational function of the input
//! data, so the same routine can run over [`BigRational`] (exact
//! comparisons, the default for reports) or over `f64`/`f32` (fast sweeps).

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// An ordered field element usable by the generic sieve and polynomial code.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Neg<Output = Self> {
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Human and machine readable rendering: `"num/den"` for rationals,
    /// the shortest round-trip decimal for floats.
    fn render(&self) -> String;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

macro_rules! impl_float_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $f / den as $f
            }

            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $f
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn render(&self) -> String {
                format!("{:?}", self)
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Parse `"n"` or `"n/d"` (optionally signed, surrounding whitespace allowed).
pub fn parse_rational(s: &str) -> crate::Result<BigRational> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad(s))?;
            let d: BigInt = d.trim().parse().map_err(|_| bad(s))?;
            if d.is_zero() {
                return Err(crate::Error::Parse(format!("zero denominator in {s:?}")));
            }
            BigRational::new(n, d)
        }
        None => BigRational::from_integer(t.parse().map_err(|_| bad(s))?),
    };
    Ok(parsed)
}

fn bad(s: &str) -> crate::Error {
    crate::Error::Parse(format!("not a rational number: {s:?}"))
}

/// Serde adapters that emit a scalar as `{"exact": "num/den", "approx": 1.5}`.
pub mod json {
    use serde::ser::SerializeStruct;
    use serde::Serializer;

    use super::Scalar;

    pub fn scalar<T: Scalar, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Scalar", 2)?;
        st.serialize_field("exact", &v.render())?;
        st.serialize_field("approx", &v.to_f64())?;
        st.end()
    }

    pub fn opt_scalar<T: Scalar, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => scalar(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn scalar_seq<T: Scalar, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.render()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_rendering_keeps_denominator() {
        assert_eq!(BigRational::from_ratio(76, 5).render(), "76/5");
        assert_eq!(BigRational::from_int(38).render(), "38/1");
        assert_eq!(BigRational::from_ratio(6, -4).render(), "-3/2");
    }

    #[test]
    fn parse_accepts_integers_and_fractions() {
        assert_eq!(parse_rational("-3/4").unwrap(), BigRational::from_ratio(-3, 4));
        assert_eq!(parse_rational(" 7 ").unwrap(), BigRational::from_int(7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn float_and_rational_agree() {
        let r = BigRational::from_ratio(53, 121);
        assert!((Scalar::to_f64(&r) - f64::from_ratio(53, 121)).abs() < 1e-15);
        assert_eq!(f32::from_rational(&r), 53.0f32 / 121.0);
    }
}
