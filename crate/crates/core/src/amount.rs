//! Exact rational quantities for the volume and money path.
//!
//! Every intermediate value (base populations, annual volumes, monthly
//! means, cost products) is an [`ExactAmount`]; rounding happens only at
//! the points the report contract names, through [`ExactAmount::round_half_up`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("invalid decimal literal {0:?}")]
    InvalidLiteral(String),
    #[error("cannot round negative amount {0}")]
    NegativeRounding(String),
    #[error("amount {0} does not fit the target integer type")]
    Overflow(String),
}

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactAmount(BigRational);

fn pow10(exp: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u32), exp as usize)
}

impl ExactAmount {
    pub fn zero() -> Self {
        ExactAmount(BigRational::zero())
    }

    pub fn from_integer<T: Into<BigInt>>(value: T) -> Self {
        ExactAmount(BigRational::from_integer(value.into()))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn from_ratio<T: Into<BigInt>, U: Into<BigInt>>(numer: T, denom: U) -> Self {
        ExactAmount(BigRational::new(numer.into(), denom.into()))
    }

    /// Parses a plain decimal literal: optional sign, digits, optional
    /// `.` followed by digits. No exponents, no grouping separators.
    pub fn parse_decimal(text: &str) -> Result<Self, AmountError> {
        let invalid = || AmountError::InvalidLiteral(text.to_string());
        let (negative, body) = match text.as_bytes().first() {
            Some(b'-') => (true, &text[1..]),
            Some(b'+') => (false, &text[1..]),
            _ => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(invalid());
        }
        if body.ends_with('.') && frac_part.is_empty() {
            return Err(invalid());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(invalid());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut numer: BigInt = digits.parse().map_err(|_| invalid())?;
        if negative {
            numer = -numer;
        }
        let denom = pow10(frac_part.len() as u32);
        Ok(ExactAmount(BigRational::new(numer, denom)))
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Divides by a positive integer.
    pub fn div_int(&self, divisor: u64) -> Self {
        assert!(divisor > 0, "division by zero");
        ExactAmount(&self.0 / BigRational::from_integer(BigInt::from(divisor)))
    }

    /// Rounds to `decimals` fractional digits, ties away from zero.
    ///
    /// The value is scaled by `10^decimals`, floored after adding one half,
    /// and scaled back. Only non-negative inputs are accepted.
    pub fn round_half_up(&self, decimals: u32) -> Result<ExactAmount, AmountError> {
        if self.is_negative() {
            return Err(AmountError::NegativeRounding(self.to_string()));
        }
        let scale = pow10(decimals);
        let scaled = &self.0 * BigRational::from_integer(scale.clone());
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let rounded = (scaled + half).floor().to_integer();
        Ok(ExactAmount(BigRational::new(rounded, scale)))
    }

    /// Half-up rounding to an integer, ties away from zero in both
    /// directions. Used for signed presentation values such as deltas.
    pub fn round_half_away_signed(&self) -> BigInt {
        let magnitude = ExactAmount(self.0.abs())
            .round_half_up(0)
            .expect("magnitude is non-negative")
            .0
            .to_integer();
        if self.is_negative() {
            -magnitude
        } else {
            magnitude
        }
    }

    /// Rounds half-up to an integer and converts it to `u64`.
    pub fn round_to_u64(&self) -> Result<u64, AmountError> {
        let rounded = self.round_half_up(0)?;
        rounded
            .0
            .to_integer()
            .to_u64()
            .ok_or_else(|| AmountError::Overflow(self.to_string()))
    }

    /// Number of fractional digits of the shortest terminating decimal
    /// expansion, or `None` if the expansion does not terminate.
    pub fn fraction_digits(&self) -> Option<u32> {
        let mut denom = self.0.denom().clone();
        let two = BigInt::from(2);
        let five = BigInt::from(5);
        let (mut twos, mut fives) = (0u32, 0u32);
        while denom.is_even() {
            denom /= &two;
            twos += 1;
        }
        while (&denom % &five).is_zero() {
            denom /= &five;
            fives += 1;
        }
        denom.is_one().then(|| twos.max(fives))
    }

    /// Exact decimal rendering when the expansion terminates.
    pub fn to_decimal_string(&self) -> Option<String> {
        let digits = self.fraction_digits()?;
        Some(self.render_fixed(digits))
    }

    /// Renders with exactly `digits` fractional digits. The value must be
    /// representable at that precision; otherwise it is rounded half-up on
    /// its magnitude first.
    pub fn render_fixed(&self, digits: u32) -> String {
        let scale = pow10(digits);
        let scaled = (&self.0.abs() * BigRational::from_integer(scale.clone()) + BigRational::new(BigInt::one(), BigInt::from(2)))
            .floor()
            .to_integer();
        let (int_part, frac_part) = scaled.div_rem(&scale);
        let sign = if self.is_negative() && !scaled.is_zero() { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            let frac = frac_part.to_string();
            format!("{sign}{int_part}.{}{frac}", "0".repeat(digits as usize - frac.len()))
        }
    }

    pub fn to_integer_checked(&self) -> Option<BigInt> {
        self.is_integer().then(|| self.0.to_integer())
    }

    pub fn sign(&self) -> Sign {
        self.0.numer().sign()
    }
}

impl fmt::Display for ExactAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_decimal_string() {
            Some(s) => f.write_str(&s),
            None => write!(f, "{}/{}", self.0.numer(), self.0.denom()),
        }
    }
}

impl fmt::Debug for ExactAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactAmount({self})")
    }
}

impl FromStr for ExactAmount {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExactAmount::parse_decimal(s)
    }
}

impl Add for &ExactAmount {
    type Output = ExactAmount;
    fn add(self, rhs: &ExactAmount) -> ExactAmount {
        ExactAmount(&self.0 + &rhs.0)
    }
}

impl Add for ExactAmount {
    type Output = ExactAmount;
    fn add(self, rhs: ExactAmount) -> ExactAmount {
        ExactAmount(self.0 + rhs.0)
    }
}

impl Sub for &ExactAmount {
    type Output = ExactAmount;
    fn sub(self, rhs: &ExactAmount) -> ExactAmount {
        ExactAmount(&self.0 - &rhs.0)
    }
}

impl Mul for &ExactAmount {
    type Output = ExactAmount;
    fn mul(self, rhs: &ExactAmount) -> ExactAmount {
        ExactAmount(&self.0 * &rhs.0)
    }
}

impl Mul for ExactAmount {
    type Output = ExactAmount;
    fn mul(self, rhs: ExactAmount) -> ExactAmount {
        ExactAmount(self.0 * rhs.0)
    }
}

impl std::iter::Sum for ExactAmount {
    fn sum<I: Iterator<Item = ExactAmount>>(iter: I) -> Self {
        iter.fold(ExactAmount::zero(), |acc, x| acc + x)
    }
}

impl PartialEq<u64> for ExactAmount {
    fn eq(&self, other: &u64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<u64> for ExactAmount {
    fn partial_cmp(&self, other: &u64) -> Option<Ordering> {
        self.0.partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

// Terminating values serialize as decimal strings; the rest as "n/d".
impl Serialize for ExactAmount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactAmount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        if let Some((n, d)) = text.split_once('/') {
            let numer: BigInt = n.parse().map_err(serde::de::Error::custom)?;
            let denom: BigInt = d.parse().map_err(serde::de::Error::custom)?;
            if denom.is_zero() {
                return Err(serde::de::Error::custom("zero denominator"));
            }
            return Ok(ExactAmount(BigRational::new(numer, denom)));
        }
        ExactAmount::parse_decimal(&text).map_err(serde::de::Error::custom)
    }
}
