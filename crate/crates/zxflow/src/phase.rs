//! Exact spider phases as rational multiples of pi.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

/// A phase `num/den * pi`, stored as a reduced fraction normalized to `[0, 2)`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase {
    num: i64,
    den: i64,
}

impl Phase {
    pub const ZERO: Phase = Phase { num: 0, den: 1 };
    pub const PI: Phase = Phase { num: 1, den: 1 };

    /// Phase `num/den * pi`, reduced and normalized into `[0, 2)`.
    pub fn new(num: i64, den: i64) -> Phase {
        assert!(den != 0, "phase denominator must be nonzero");
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        num = num.rem_euclid(2 * den);
        Phase { num, den }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    /// Multiple of pi/2.
    pub fn is_clifford(&self) -> bool {
        self.den == 1 || self.den == 2
    }

    /// Multiple of pi.
    pub fn is_pauli(&self) -> bool {
        self.den == 1
    }

    /// Odd multiple of pi/2 (i.e. pi/2 or 3pi/2).
    pub fn is_odd_half(&self) -> bool {
        self.den == 2
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Value in radians.
    pub fn radians(&self) -> f64 {
        std::f64::consts::PI * self.num as f64 / self.den as f64
    }

    /// `e^{i * self}` as a complex number.
    pub fn cis(&self) -> num_complex::Complex64 {
        // exact on the Clifford values to avoid spurious tolerance loss
        match (self.num, self.den) {
            (0, 1) => num_complex::Complex64::new(1.0, 0.0),
            (1, 1) => num_complex::Complex64::new(-1.0, 0.0),
            (1, 2) => num_complex::Complex64::new(0.0, 1.0),
            (3, 2) => num_complex::Complex64::new(0.0, -1.0),
            _ => num_complex::Complex64::from_polar(1.0, self.radians()),
        }
    }
}

impl Add for Phase {
    type Output = Phase;
    fn add(self, rhs: Phase) -> Phase {
        Phase::new(self.num * rhs.den + rhs.num * self.den, self.den * rhs.den)
    }
}

impl Sub for Phase {
    type Output = Phase;
    fn sub(self, rhs: Phase) -> Phase {
        Phase::new(self.num * rhs.den - rhs.num * self.den, self.den * rhs.den)
    }
}

impl Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase::new(-self.num, self.den)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phase({}pi)", self)
    }
}

impl std::str::FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> Result<Phase, String> {
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (
                n.trim().parse::<i64>().map_err(|e| e.to_string())?,
                d.trim().parse::<i64>().map_err(|e| e.to_string())?,
            ),
            None => (s.trim().parse::<i64>().map_err(|e| e.to_string())?, 1),
        };
        if d == 0 {
            return Err("zero denominator".into());
        }
        Ok(Phase::new(n, d))
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format!("{}/{}", self.num, self.den))
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Phase, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
