use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Number type used for weights, probabilities and stationary measures.
///
/// Implemented for `f32`, `f64` and [`BigRational`]. Exact types report a
/// zero tolerance so every consistency check becomes an equality.
pub trait Scalar:
    Num + Signed + Clone + PartialOrd + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    /// `eps` for floating types (never below a few ulps), zero for exact ones.
    fn tolerance(eps: f64) -> Self;

    /// Parses a decimal (`0.05`, `-1.5e-3`) or, for exact types, a fraction (`3/7`).
    fn parse_decimal(s: &str) -> Option<Self>;

    fn from_u64_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits the scalar type")
    }
}

/// Floating point scalars: the ones that can be sampled and taken logarithms of.
pub trait Real: Scalar + Float {}

impl Real for f32 {}
impl Real for f64 {}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn tolerance(eps: f64) -> Self {
                (eps as $t).max(<$t>::EPSILON * 16.0)
            }

            fn parse_decimal(s: &str) -> Option<Self> {
                s.trim().parse::<$t>().ok().filter(|v| v.is_finite())
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance(_eps: f64) -> Self {
        BigRational::zero()
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        parse_rational(s.trim())
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(digits);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_difference<S: Scalar>(a: &S, b: &S) -> f64 {
    let scale = a.abs().to_f64().max(b.abs().to_f64());
    if scale == 0.0 {
        return 0.0;
    }
    (a.clone() - b.clone()).abs().to_f64() / scale
}

pub(crate) fn sum_in_order<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> S {
    values.into_iter().fold(S::zero(), |acc, v| acc + v.clone())
}
