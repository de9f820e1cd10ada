//! Scalar regimes: exact rationals and IEEE doubles.
//!
//! Every pointwise construction in [`crate::algebra`] is generic over
//! [`Scalar`]. The exact regime is used wherever a sign or zero decision is
//! made; the float regime feeds the integrator.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact and equality decidable.
    const EXACT: bool;

    fn from_i64(n: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// `(hi, lo)` with `hi = to_f64()` and `hi + lo` approximating the value
    /// to about twice the working precision. Floats have `lo = 0`.
    fn split_f64(&self) -> (f64, f64);

    /// Real cube root, if representable in this regime.
    fn cube_root(&self) -> Option<Self>;

    /// Zero test. Exact scalars ignore `tol`; floats compare `|x| <= tol`.
    fn near_zero(&self, tol: f64) -> bool;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }

    fn cube(&self) -> Self {
        self.clone() * self.clone() * self.clone()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn split_f64(&self) -> (f64, f64) {
        (*self, 0.0)
    }

    fn cube_root(&self) -> Option<Self> {
        Some(self.cbrt())
    }

    fn near_zero(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Rational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn split_f64(&self) -> (f64, f64) {
        let hi = Scalar::to_f64(self);
        match Rational::from_float(hi) {
            Some(h) => (hi, Scalar::to_f64(&(self - h))),
            None => (hi, 0.0),
        }
    }

    fn cube_root(&self) -> Option<Self> {
        let n = exact_icbrt(self.numer())?;
        let d = exact_icbrt(self.denom())?;
        Some(Rational::new(n, d))
    }

    fn near_zero(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

fn exact_icbrt(n: &BigInt) -> Option<BigInt> {
    let r = if n.is_negative() {
        -(-n).cbrt()
    } else {
        n.cbrt()
    };
    (&r * &r * &r == *n).then_some(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty number")]
    Empty,
    #[error("malformed rational {0:?}: expected \"n\" or \"n/m\" with decimal integers")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("expected {expected} comma-separated values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("malformed number {0:?}")]
    BadNumber(String),
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

/// Parses `"n"` or `"n/m"` with decimal integers (an optional sign on `n`).
pub fn parse_rational(s: &str) -> Result<Rational, ParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseError::Empty);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let num = parse_int(num).ok_or_else(|| ParseError::Malformed(s.to_string()))?;
    let den = match den {
        Some(d) if d.starts_with(['-', '+']) => return Err(ParseError::Malformed(s.to_string())),
        Some(d) => parse_int(d).ok_or_else(|| ParseError::Malformed(s.to_string()))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(ParseError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(num, den))
}

/// Parses exactly `n` comma-separated rationals.
pub fn parse_rational_list(s: &str, n: usize) -> Result<Vec<Rational>, ParseError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != n {
        return Err(ParseError::Arity {
            expected: n,
            got: parts.len(),
        });
    }
    parts.into_iter().map(parse_rational).collect()
}

/// Canonical string form used in JSON output: `"n"` or `"n/m"`.
pub fn rational_to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_i64(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("6/4").unwrap(), rational(3, 2));
        assert_eq!(parse_rational(" -1/3 ").unwrap(), rational(-1, 3));
        assert_eq!(parse_rational("+2").unwrap(), int(2));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["x", "1.5", "1/", "/2", "1/-2", "--1", "", "1e3", "0x10"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should be rejected");
        }
        assert_eq!(
            parse_rational("1/0"),
            Err(ParseError::ZeroDenominator("1/0".into()))
        );
    }

    #[test]
    fn list_arity() {
        assert!(parse_rational_list("1,0,0,-1", 4).is_ok());
        assert_eq!(
            parse_rational_list("1,0,0", 4),
            Err(ParseError::Arity {
                expected: 4,
                got: 3
            })
        );
        assert!(parse_rational_list("1,0,0,x", 4).is_err());
    }

    #[test]
    fn exact_cube_roots() {
        assert_eq!(rational(-8, 27).cube_root(), Some(rational(-2, 3)));
        assert_eq!(int(0).cube_root(), Some(int(0)));
        assert_eq!(int(2).cube_root(), None);
        assert_eq!(rational(1, 9).cube_root(), None);
    }

    #[test]
    fn split_carries_the_rounding_residual() {
        let third = rational(1, 3);
        let (hi, lo) = third.split_f64();
        assert_eq!(hi, 1.0 / 3.0);
        assert!(lo != 0.0 && lo.abs() < 1e-16);
        let back = Rational::from_float(hi).unwrap() + Rational::from_float(lo).unwrap();
        assert!(Scalar::to_f64(&(back - third)).abs() < 1e-31);
        assert_eq!(rational(3, 4).split_f64(), (0.75, 0.0));
        assert_eq!(0.1f64.split_f64(), (0.1, 0.0));
    }

    #[test]
    fn display_round_trips() {
        for s in ["0", "-1", "7/3", "-22/7"] {
            assert_eq!(rational_to_string(&parse_rational(s).unwrap()), s);
        }
    }
}
