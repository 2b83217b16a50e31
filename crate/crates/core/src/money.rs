//! Exact decimal money arithmetic on a fixed micro-unit grid.
//!
//! Contract accounting and the closed-form game analysis run entirely on
//! integer micro-units (10⁻⁶ of a currency unit) so that sums, transfers,
//! and the worked examples stay exact. Floating-point analysis code
//! converts at the boundary with [`Money::to_f64`] / [`Money::from_f64`].

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Micro-units per whole currency unit.
pub const MONEY_SCALE: i64 = 1_000_000;

/// A signed amount of money in micro-units.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_micros(micros: i64) -> Self {
        Money(micros)
    }

    pub fn from_units(units: i64) -> Self {
        Money(units.checked_mul(MONEY_SCALE).expect("money overflow"))
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / MONEY_SCALE as f64
    }

    /// Rounds to the nearest micro-unit, halves away from zero.
    /// Panics on non-finite or out-of-range input; see [`Money::try_from_f64`].
    pub fn from_f64(value: f64) -> Self {
        Self::try_from_f64(value).expect("money value not finite or out of range")
    }

    pub fn try_from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        let micros = (value * MONEY_SCALE as f64).round();
        if micros.abs() >= i64::MAX as f64 {
            return None;
        }
        Some(Money(micros as i64))
    }

    pub fn mul_int(self, k: u32) -> Self {
        Money(self.0.checked_mul(i64::from(k)).expect("money overflow"))
    }

    /// `self · num / den`, computed in 128-bit and rounded half away from zero.
    pub fn mul_div(self, num: u64, den: u64) -> Self {
        assert!(den != 0, "money mul_div by zero");
        let wide = i128::from(self.0) * i128::from(num);
        let den = i128::from(den);
        let q = (wide.unsigned_abs() * 2 + den.unsigned_abs()) / (den.unsigned_abs() * 2);
        let q = i128::try_from(q).expect("money overflow");
        let signed = if wide < 0 { -q } else { q };
        Money(i64::try_from(signed).expect("money overflow"))
    }

    /// Scales by a finite factor, rounding to the nearest micro-unit.
    pub fn mul_f64(self, factor: f64) -> Self {
        assert!(factor.is_finite(), "money scale factor must be finite");
        let micros = (self.0 as f64 * factor).round();
        assert!(micros.abs() < i64::MAX as f64, "money overflow");
        Money(micros as i64)
    }

    /// Rounds up to the next whole currency unit.
    pub fn ceil_units(self) -> Self {
        let q = self.0.div_euclid(MONEY_SCALE);
        let r = self.0.rem_euclid(MONEY_SCALE);
        if r == 0 {
            self
        } else {
            Money((q + 1).checked_mul(MONEY_SCALE).expect("money overflow"))
        }
    }

    pub fn checked_add(self, rhs: Self) -> Option<Self> {
        self.0.checked_add(rhs.0).map(Money)
    }

    pub fn checked_sub(self, rhs: Self) -> Option<Self> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn abs(self) -> Self {
        Money(self.0.abs())
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        self.checked_add(rhs).expect("money overflow")
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        self.checked_sub(rhs).expect("money overflow")
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(self.0.checked_neg().expect("money overflow"))
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        *self = *self + rhs;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        *self = *self - rhs;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let units = abs / MONEY_SCALE as u64;
        let frac = abs % MONEY_SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{units}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{units}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({self})")
    }
}

// On the wire money is a plain JSON number; parsing quantizes to the
// micro-unit grid, which is lossless for any value written by this crate.
impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        Money::try_from_f64(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("money value out of range: {raw}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_round_trip_is_exact() {
        let m = Money::from_f64(1.41);
        assert_eq!(m.micros(), 1_410_000);
        assert_eq!(m.to_string(), "1.41");
        assert_eq!(Money::from_f64(-0.6).micros(), -600_000);
        assert_eq!(Money::from_f64(0.0), Money::ZERO);
    }

    #[test]
    fn display_trims_trailing_zeros() {
        assert_eq!(Money::from_micros(4_800_000).to_string(), "4.8");
        assert_eq!(Money::from_micros(1).to_string(), "0.000001");
        assert_eq!(Money::from_micros(-1_500_000).to_string(), "-1.5");
        assert_eq!(Money::from_units(36_000).to_string(), "36000");
    }

    #[test]
    fn mul_div_rounds_half_away_from_zero() {
        let one = Money::from_units(1);
        assert_eq!(one.mul_div(1, 2).micros(), 500_000);
        assert_eq!(Money::from_micros(3).mul_div(1, 2).micros(), 2);
        assert_eq!(Money::from_micros(-3).mul_div(1, 2).micros(), -2);
        assert_eq!(Money::from_units(6).mul_div(2, 3), Money::from_units(4));
    }

    #[test]
    fn ceil_units_rounds_up() {
        assert_eq!(Money::from_f64(14_400.0).ceil_units(), Money::from_units(14_400));
        assert_eq!(Money::from_f64(0.2).ceil_units(), Money::from_units(1));
        assert_eq!(Money::from_f64(-1.5).ceil_units(), Money::from_units(-1));
    }

    #[test]
    fn serde_as_number() {
        let m = Money::from_f64(4.8);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "4.8");
        let back: Money = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<Money>("1e300").is_err());
    }
}
