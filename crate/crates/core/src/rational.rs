//! Exact rational scalar used throughout the model layer and the LP engine.
//!
//! Wraps [`num_rational::BigRational`] so that model files can carry `"p/q"`
//! strings (plain integers allowed as shorthand) and so that results print in
//! the same format.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

/// Arbitrary-precision rational number, serialized as `"p/q"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(pub BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact conversion from a finite `f64` (every finite float is rational).
    pub fn from_f64_exact(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rat)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rat(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    /// Best rational approximation of `x` with denominator at most `max_den`,
    /// by continued-fraction convergents (Stern-Brocot descent).
    pub fn approximate_f64(x: f64, max_den: u64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let exact = BigRational::from_float(x)?;
        let cap = BigInt::from(max_den);
        if exact.denom().magnitude() <= cap.magnitude() {
            return Some(Rat(exact));
        }
        // Continued fraction expansion of |x|.
        let neg = x < 0.0;
        let mut frac = exact.abs();
        let (mut h0, mut k0) = (BigInt::zero(), BigInt::one());
        let (mut h1, mut k1) = (BigInt::one(), BigInt::zero());
        for _ in 0..64 {
            let a = frac.to_integer();
            let h2 = &a * &h1 + &h0;
            let k2 = &a * &k1 + &k0;
            if k2 > cap {
                break;
            }
            h0 = h1;
            k0 = k1;
            h1 = h2;
            k1 = k2;
            let rem = &frac - BigRational::from_integer(a);
            if rem.is_zero() {
                break;
            }
            frac = rem.recip();
        }
        if k1.is_zero() {
            return None;
        }
        let mut r = BigRational::new(h1, k1);
        if neg {
            r = -r;
        }
        Some(Rat(r))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator: {e}"))?;
            let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator: {e}"))?;
            if d.is_zero() {
                return Err("zero denominator".into());
            }
            Ok(Rat(BigRational::new(n, d)))
        } else {
            let n = BigInt::from_str(s).map_err(|e| format!("bad rational '{s}': {e}"))?;
            Ok(Rat(BigRational::from_integer(n)))
        }
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\" string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat(BigRational::from_integer(BigInt::from(v))))
            }
        }
        deserializer.deserialize_any(V)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((self.0).$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat((self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Rat> for &'a Rat {
    type Output = Rat;
    fn div(self, rhs: &'a Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(&self.0 / &rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl AddAssign for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl<'a> AddAssign<&'a Rat> for Rat {
    fn add_assign(&mut self, rhs: &'a Rat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        self.0 -= rhs.0;
    }
}

impl<'a> SubAssign<&'a Rat> for Rat {
    fn sub_assign(&mut self, rhs: &'a Rat) {
        self.0 -= &rhs.0;
    }
}

/// Dot product of two equal-length rational slices.
pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Rat::zero();
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Sum of a rational slice.
pub fn sum(xs: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for x in xs {
        acc += x;
    }
    acc
}

/// Convert a slice to f64, elementwise.
pub fn to_f64_vec(xs: &[Rat]) -> Vec<f64> {
    xs.iter().map(Rat::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["1/8", "-3/7", "5", "0", "-12"] {
            let r: Rat = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        // Non-canonical input normalizes.
        let r: Rat = "2/4".parse().unwrap();
        assert_eq!(r, Rat::frac(1, 2));
        assert_eq!(r.to_string(), "1/2");
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!("3/0".parse::<Rat>().is_err());
    }

    #[test]
    fn serde_accepts_integer_shorthand() {
        let v: Vec<Rat> = serde_json::from_str(r#"["1/8", 2, "-3"]"#).unwrap();
        assert_eq!(v, vec![Rat::frac(1, 8), Rat::from_int(2), Rat::from_int(-3)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["1/8","2","-3"]"#);
    }

    #[test]
    fn continued_fraction_snap() {
        let r = Rat::approximate_f64(1.0 / 3.0, 1_000_000).unwrap();
        assert_eq!(r, Rat::frac(1, 3));
        let r = Rat::approximate_f64(0.125, 1_000_000).unwrap();
        assert_eq!(r, Rat::frac(1, 8));
        let r = Rat::approximate_f64(-37.0 / 500.0, 1_000_000).unwrap();
        assert_eq!(r, Rat::frac(-37, 500));
        let pi = Rat::approximate_f64(std::f64::consts::PI, 1000).unwrap();
        assert!((pi.to_f64() - std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn arithmetic() {
        let a = Rat::frac(1, 2);
        let b = Rat::frac(1, 6);
        assert_eq!(&a + &b, Rat::frac(2, 3));
        assert_eq!(&a - &b, Rat::frac(1, 3));
        assert_eq!(&a * &b, Rat::frac(1, 12));
        assert_eq!(&a / &b, Rat::from_int(3));
        assert_eq!(dot(&[a.clone(), b.clone()], &[Rat::from_int(2), Rat::from_int(6)]), Rat::from_int(2));
        assert_eq!(sum(&[a, b]), Rat::frac(2, 3));
    }
}
