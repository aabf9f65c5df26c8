//! Scalar abstraction shared by the work-function and bound code.
//!
//! Verdicts are always computed with [`Rational`](crate::Rational), but the same
//! closed forms and the S∞ schedule are useful in floating point when drawing
//! curves or doing quick exploration, so the math is written once against
//! [`Scalar`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive};

/// A totally (or, for floats, partially) ordered field element.
pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync {
    /// `numer / denom`. Panics on a zero denominator.
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_u64(value: u64) -> Self;

    /// Nearest `f64`, for display and plotting only.
    fn approx_f64(&self) -> f64;

    /// `true` when arithmetic on this type is exact (rationals).
    const EXACT: bool;

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

macro_rules! impl_float_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn from_ratio(numer: i64, denom: i64) -> Self {
                assert!(denom != 0, "zero denominator");
                numer as $t / denom as $t
            }
            fn from_u64(value: u64) -> Self {
                value as $t
            }
            fn approx_f64(&self) -> f64 {
                *self as f64
            }
            const EXACT: bool = false;
        }
    )*};
}

impl_float_scalar!(f32, f64);

macro_rules! impl_ratio_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for Ratio<$t> {
            fn from_ratio(numer: i64, denom: i64) -> Self {
                Ratio::new(numer as $t, denom as $t)
            }
            fn from_u64(value: u64) -> Self {
                Ratio::from_integer(<$t>::try_from(value).expect("integer out of range"))
            }
            fn approx_f64(&self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
            const EXACT: bool = true;
        }
    )*};
}

impl_ratio_scalar!(i64, i128);

impl Scalar for BigRational {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_u64(value: u64) -> Self {
        Ratio::from_integer(BigInt::from(value))
    }

    fn approx_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    const EXACT: bool = true;
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"0.375"` into an exact
/// rational. Returns `None` on malformed input or a zero denominator.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() { BigInt::from(0) } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = Ratio::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Formats a rational as an exact decimal when its denominator has only the
/// prime factors 2 and 5, otherwise as `p/q`.
pub fn format_exact(value: &BigRational) -> String {
    let denom = value.denom().clone();
    let mut rest = denom.clone();
    let (two, five, zero) = (BigInt::from(2), BigInt::from(5), BigInt::from(0));
    let mut twos = 0usize;
    let mut fives = 0usize;
    while &rest % &two == zero {
        rest /= &two;
        twos += 1;
    }
    while &rest % &five == zero {
        rest /= &five;
        fives += 1;
    }
    if rest != BigInt::from(1) {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let places = twos.max(fives);
    if places == 0 {
        return value.numer().to_string();
    }
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.numer() * (&scale / &denom);
    let negative = scaled < zero;
    let digits = scaled.abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    format!("{}{}.{}", if negative { "-" } else { "" }, int_part, frac_part)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn parses_fraction_and_decimal() {
        assert_eq!(parse_rational("3/2"), Some(r(3, 2)));
        assert_eq!(parse_rational("0.375"), Some(r(3, 8)));
        assert_eq!(parse_rational("2"), Some(r(2, 1)));
        assert_eq!(parse_rational("-0.5"), Some(r(-1, 2)));
        assert_eq!(parse_rational(".5"), Some(r(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn formats_terminating_decimals_exactly() {
        assert_eq!(format_exact(&r(1, 10)), "0.1");
        assert_eq!(format_exact(&r(3, 8)), "0.375");
        assert_eq!(format_exact(&r(7, 1)), "7");
        assert_eq!(format_exact(&r(-1, 20)), "-0.05");
        assert_eq!(format_exact(&r(1, 3)), "1/3");
    }

    #[test]
    fn format_then_parse_is_identity() {
        for (n, d) in [(1, 10), (3, 8), (123, 1000), (5, 7), (-9, 4), (0, 1)] {
            let v = r(n, d);
            assert_eq!(parse_rational(&format_exact(&v)), Some(v));
        }
    }

    #[test]
    fn float_and_ratio_agree_on_small_values() {
        let a = <f64 as Scalar>::from_ratio(6, 5);
        let b = <Ratio<i64> as Scalar>::from_ratio(6, 5);
        assert!((a - b.approx_f64()).abs() < 1e-15);
        assert_eq!(r(2, 3).approx_f64(), 2.0 / 3.0);
    }
}
