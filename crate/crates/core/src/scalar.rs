//! Scalar abstraction letting the Poisson machinery run either in IEEE
//! floats or in exact rational arithmetic. Exactness removes tolerance
//! debates for the small worked chains; floats carry the large partitions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// Field scalar: `f64` (approximate) or [`BigRational`] (exact).
pub trait Scalar:
    Clone + PartialOrd + std::fmt::Debug + Signed + for<'a> std::ops::AddAssign<&'a Self>
{
    /// True when arithmetic in this scalar is exact.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;
    fn from_int(n: i64) -> Self;
    fn to_float(&self) -> f64;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn to_float(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_float(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational from a float (every finite f64 is a dyadic rational).
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Parse "p/q" or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q == BigInt::from(0) {
            return None;
        }
        Some(BigRational::new(p, q))
    } else if let Ok(n) = s.parse::<BigInt>() {
        Some(BigRational::from_integer(n))
    } else {
        s.parse::<f64>().ok().and_then(rational_from_f64)
    }
}
