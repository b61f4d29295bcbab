//! Exact rational helpers: depth values in (1/e)Z and p-power torsion in Q/Z.
//!
//! All depths, valuations and character values in this crate are exact
//! rationals; nothing in the data plane is ever a float.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::fmt;
use std::ops::{Add, Neg};

use crate::error::{Error, Result};

/// Exact rational number used for valuations and depths.
pub type Rat = Ratio<i64>;

/// Parses a rational from the `"a/b"` (or `"a"`) wire form.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let d: i64 = den
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if d == 0 {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rat::new(n, d))
}

/// Formats a rational in the `"a/b"` wire form (`"a"` when integral).
pub fn format_rat(r: Rat) -> String {
    if r.denom() == &1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// An element of Q/Z, stored as the unique representative in [0, 1).
///
/// Character values land here: the additive character of the base field
/// takes values in the p-power torsion of Q/Z.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct QZ(Rat);

impl QZ {
    pub fn zero() -> Self {
        QZ(Rat::zero())
    }

    /// Reduces a rational modulo 1.
    pub fn from_rat(r: Rat) -> Self {
        let mut f = r.fract();
        if f.is_negative() {
            f += Rat::new(1, 1);
        }
        QZ(f)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// The representative in [0, 1).
    pub fn rep(&self) -> Rat {
        self.0
    }
}

impl Add for QZ {
    type Output = QZ;
    fn add(self, rhs: QZ) -> QZ {
        QZ::from_rat(self.0 + rhs.0)
    }
}

impl Neg for QZ {
    type Output = QZ;
    fn neg(self) -> QZ {
        QZ::from_rat(-self.0)
    }
}

impl fmt::Debug for QZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod 1", format_rat(self.0))
    }
}

impl fmt::Display for QZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rat(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3", "-2", "1/2", "-7/3"] {
            assert_eq!(format_rat(parse_rat(s).unwrap()), s);
        }
        assert_eq!(parse_rat("4/2").unwrap(), Rat::new(2, 1));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn qz_wraps_into_unit_interval() {
        let a = QZ::from_rat(Rat::new(3, 5));
        let b = QZ::from_rat(Rat::new(4, 5));
        assert_eq!((a + b).rep(), Rat::new(2, 5));
        assert_eq!((-a).rep(), Rat::new(2, 5));
        assert!(QZ::from_rat(Rat::new(5, 1)).is_zero());
    }
}
