use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::AngleError;

/// A point of the circle R/Z with rational coordinate `numerator / denominator`.
///
/// Always stored in lowest terms with `0 <= numerator < denominator`, so
/// derived equality is exact equality on the circle.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalAngle {
    num: BigUint,
    den: BigUint,
}

impl RationalAngle {
    /// Reduces `p / q` modulo 1. Negative numerators wrap around.
    pub fn new(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Self, AngleError> {
        let p = p.into();
        let q = q.into();
        if q.is_zero() {
            return Err(AngleError::ZeroDenominator);
        }
        let (p, q) = if q.sign() == Sign::Minus { (-p, -q) } else { (p, q) };
        let r = p.mod_floor(&q);
        let (_, r) = r.into_parts();
        let (_, q) = q.into_parts();
        Ok(Self::reduce(r, q))
    }

    /// Fast constructor for small fractions; `q` must be nonzero.
    pub fn from_u64(p: u64, q: u64) -> Self {
        assert!(q != 0, "zero denominator");
        let p = p % q;
        let g = p.gcd(&q);
        RationalAngle {
            num: BigUint::from(p / g),
            den: BigUint::from(q / g),
        }
    }

    pub fn zero() -> Self {
        RationalAngle {
            num: BigUint::zero(),
            den: BigUint::one(),
        }
    }

    fn reduce(p: BigUint, q: BigUint) -> Self {
        if p.is_zero() {
            return Self::zero();
        }
        let g = p.gcd(&q);
        RationalAngle {
            num: p / &g,
            den: q / g,
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    /// `m * self mod 1` for any integer `m`, including negative ones.
    pub fn mul(&self, m: i64) -> RationalAngle {
        let mm = BigUint::from(m.unsigned_abs()) % &self.den;
        let mut p = (&self.num * mm) % &self.den;
        if m < 0 && !p.is_zero() {
            p = &self.den - p;
        }
        Self::reduce(p, self.den.clone())
    }

    /// Sum on the circle.
    pub fn add(&self, other: &RationalAngle) -> RationalAngle {
        let den = &self.den * &other.den;
        let num = (&self.num * &other.den + &other.num * &self.den) % &den;
        Self::reduce(num, den)
    }

    /// Value in [0, 1) as a double.
    pub fn to_f64(&self) -> f64 {
        if let (Some(p), Some(q)) = (self.num.to_u64(), self.den.to_u64()) {
            if q < (1u64 << 53) {
                return p as f64 / q as f64;
            }
        }
        let scaled: BigUint = (&self.num << 64u32) / &self.den;
        scaled.to_f64().unwrap_or(0.0) / 2f64.powi(64)
    }

    /// Exact preperiod and period under `theta -> m * theta`.
    pub fn orbit_signature(&self, m: i64) -> Result<OrbitSignature, AngleError> {
        if m.unsigned_abs() < 2 {
            return Err(AngleError::SmallMultiplier(m));
        }
        let q = &self.den;
        let step = {
            let r = BigInt::from(m).mod_floor(&BigInt::from(q.clone()));
            r.into_parts().1
        };
        let mut seen: HashMap<BigUint, u32> = HashMap::new();
        let mut p = self.num.clone();
        let mut i = 0u32;
        loop {
            if let Some(&first) = seen.get(&p) {
                return Ok(OrbitSignature {
                    preperiod: first,
                    period: i - first,
                    multiplier_base: m,
                });
            }
            seen.insert(p.clone(), i);
            p = (&p * &step) % q;
            i += 1;
        }
    }

    /// True when `m^period * theta == theta` for some period, i.e. the preperiod is zero.
    pub fn is_periodic(&self, m: i64) -> bool {
        self.orbit_signature(m)
            .map(|s| s.preperiod == 0)
            .unwrap_or(false)
    }

    fn cmp_value(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }

    /// File-name friendly rendering, `p_q`.
    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.num, self.den)
    }
}

impl Ord for RationalAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl PartialOrd for RationalAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for RationalAngle {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || AngleError::Parse(s.to_string());
        let (p, q) = match s.split_once(['/', '_']) {
            Some((p, q)) => (p, q),
            None => (s, "1"),
        };
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        RationalAngle::new(p, q)
    }
}

impl Serialize for RationalAngle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalAngle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Preperiod and period of an angle under `theta -> m * theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrbitSignature {
    pub preperiod: u32,
    pub period: u32,
    pub multiplier_base: i64,
}

/// `m * theta mod 1`.
pub fn mul(theta: &RationalAngle, m: i64) -> RationalAngle {
    theta.mul(m)
}

/// Exact `(preperiod, period)` of `theta` under multiplication by `m`, `|m| >= 2`.
pub fn orbit_signature(theta: &RationalAngle, m: i64) -> Result<OrbitSignature, AngleError> {
    theta.orbit_signature(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(p: u64, q: u64) -> RationalAngle {
        RationalAngle::from_u64(p, q)
    }

    #[test]
    fn mul_examples() {
        assert_eq!(mul(&a(1, 3), 2), a(2, 3));
        assert_eq!(mul(&a(1, 6), -2), a(2, 3));
        assert_eq!(mul(&a(1, 2), -2), RationalAngle::zero());
    }

    #[test]
    fn orbit_signature_examples() {
        let s = orbit_signature(&a(1, 3), 2).unwrap();
        assert_eq!((s.preperiod, s.period), (0, 2));
        let s = orbit_signature(&a(1, 4), 2).unwrap();
        assert_eq!((s.preperiod, s.period), (2, 1));
        // 1/6 -> 2/3 -> 2/3 under -2
        let s = orbit_signature(&a(1, 6), -2).unwrap();
        assert_eq!((s.preperiod, s.period), (1, 1));
        assert!(orbit_signature(&a(1, 6), 1).is_err());
        assert!(orbit_signature(&a(1, 6), -1).is_err());
    }

    #[test]
    fn construction_normalizes() {
        assert_eq!(RationalAngle::new(-1, 3).unwrap(), a(2, 3));
        assert_eq!(RationalAngle::new(7, 3).unwrap(), a(1, 3));
        assert_eq!(RationalAngle::new(2, -6).unwrap(), a(2, 3));
        assert_eq!(RationalAngle::new(4, 2).unwrap(), RationalAngle::zero());
        assert!(RationalAngle::new(1, 0).is_err());
    }

    #[test]
    fn parse_and_display() {
        let t: RationalAngle = "3/12".parse().unwrap();
        assert_eq!(t.to_string(), "1/4");
        assert_eq!(t.file_stem(), "1_4");
        assert_eq!("1_4".parse::<RationalAngle>().unwrap(), t);
        assert!("x/2".parse::<RationalAngle>().is_err());
    }

    #[test]
    fn ordering_is_numeric() {
        let mut v = vec![a(2, 3), a(1, 6), a(1, 2), RationalAngle::zero()];
        v.sort();
        assert_eq!(v, vec![RationalAngle::zero(), a(1, 6), a(1, 2), a(2, 3)]);
    }

    #[test]
    fn big_denominator_to_f64() {
        let t = RationalAngle::new(
            BigInt::from(1u64 << 62) + 1,
            BigInt::from(1u64 << 63) * BigInt::from(2u32),
        )
        .unwrap();
        assert!((t.to_f64() - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn mul_then_signature_shifts_preperiod(p in 0u64..500, q in 1u64..500, m in prop::sample::select(vec![-3i64, -2, 2, 3, 4])) {
            let t = a(p, q);
            let s = orbit_signature(&t, m).unwrap();
            let s2 = orbit_signature(&mul(&t, m), m).unwrap();
            prop_assert_eq!(s2.preperiod, s.preperiod.saturating_sub(1));
            prop_assert_eq!(s2.period, s.period);
        }

        #[test]
        fn mul_denominator_divides(p in 0u64..1000, q in 1u64..1000, m in -7i64..7) {
            let t = a(p, q);
            let r = mul(&t, m);
            prop_assert!((t.denominator() % r.denominator()).is_zero());
        }
    }
}
