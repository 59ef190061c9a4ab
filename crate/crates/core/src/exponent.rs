//! Extended exponents with exact rational arithmetic.
//!
//! Integrability exponents live in (0, inf]. They are kept as exact rationals
//! so that Hoelderian relations (reciprocal sums, with 1/inf = 0) and power
//! rescalings can be checked without floating tolerance.

use crate::error::{Error, Result};
use num::rational::Ratio;
use num::{One, Signed, Zero};
use std::fmt;
use std::str::FromStr;

/// An exponent in (0, inf].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exp {
    Finite(Ratio<i64>),
    Inf,
}

impl Exp {
    pub const INF: Exp = Exp::Inf;

    pub fn new(num: i64, den: i64) -> Result<Exp> {
        if den == 0 {
            return Err(Error::InvalidExponent(format!("{num}/{den}: zero denominator")));
        }
        let r = Ratio::new(num, den);
        if r <= Ratio::zero() {
            return Err(Error::InvalidExponent(format!("{num}/{den}: must be positive")));
        }
        Ok(Exp::Finite(r))
    }

    pub fn int(v: i64) -> Exp {
        Exp::new(v, 1).expect("positive integer exponent")
    }

    pub fn ratio(r: Ratio<i64>) -> Result<Exp> {
        Exp::new(*r.numer(), *r.denom())
    }

    pub fn is_inf(self) -> bool {
        matches!(self, Exp::Inf)
    }

    pub fn value(self) -> f64 {
        match self {
            Exp::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exp::Inf => f64::INFINITY,
        }
    }

    /// Reciprocal with the convention 1/inf = 0. Exact.
    pub fn recip(self) -> Ratio<i64> {
        match self {
            Exp::Finite(r) => r.recip(),
            Exp::Inf => Ratio::zero(),
        }
    }

    /// Exponent whose reciprocal is `r`; `r = 0` maps to inf.
    pub fn from_recip(r: Ratio<i64>) -> Result<Exp> {
        if r.is_zero() {
            Ok(Exp::Inf)
        } else if r.is_negative() {
            Err(Error::InvalidExponent(format!("reciprocal {r} is negative")))
        } else {
            Ok(Exp::Finite(r.recip()))
        }
    }

    /// Rescaled exponent `self / theta` for theta in (0, 1]; inf stays inf.
    pub fn div_by(self, theta: Ratio<i64>) -> Result<Exp> {
        if theta <= Ratio::zero() || theta > Ratio::one() {
            return Err(Error::InvalidExponent(format!("scale theta={theta} not in (0,1]")));
        }
        match self {
            Exp::Finite(r) => Exp::ratio(r / theta),
            Exp::Inf => Ok(Exp::Inf),
        }
    }

    /// Smallest exponent making `1/self + 1/other = 1/result` hold; inf if
    /// both operands are inf.
    pub fn holder(self, other: Exp) -> Result<Exp> {
        Exp::from_recip(self.recip() + other.recip())
    }

    /// Conjugate exponent `1/self + 1/self' = 1`; requires self >= 1.
    pub fn conjugate(self) -> Result<Exp> {
        let r = self.recip();
        if r > Ratio::one() {
            return Err(Error::InvalidExponent(format!(
                "conjugate of {self} needs an exponent >= 1"
            )));
        }
        Exp::from_recip(Ratio::one() - r)
    }

    pub fn min(self, other: Exp) -> Exp {
        match (self, other) {
            (Exp::Inf, b) => b,
            (a, Exp::Inf) => a,
            (Exp::Finite(a), Exp::Finite(b)) => Exp::Finite(a.min(b)),
        }
    }

    pub fn ge_one(self) -> bool {
        match self {
            Exp::Inf => true,
            Exp::Finite(r) => r >= Ratio::one(),
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::Inf => write!(f, "inf"),
            Exp::Finite(r) => {
                if r.denom() == &1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

impl FromStr for Exp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Exp> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exp::Inf);
        }
        let bad = |s: &str| Error::InvalidExponent(format!("cannot parse exponent '{s}'"));
        if let Some((a, b)) = s.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| bad(s))?;
            let den: i64 = b.trim().parse().map_err(|_| bad(s))?;
            Exp::new(num, den)
        } else {
            let num: i64 = s.parse().map_err(|_| bad(s))?;
            Exp::new(num, 1)
        }
    }
}

/// The Whitney-average exponent slot: either a genuine exponent or the
/// `none` sentinel that skips averaging and realizes the classical scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Avg {
    /// No Whitney stage; the norm is the classical one.
    Classical,
    Exp(Exp),
}

impl Avg {
    pub fn exponent(self) -> Option<Exp> {
        match self {
            Avg::Classical => None,
            Avg::Exp(e) => Some(e),
        }
    }

    pub fn div_by(self, theta: Ratio<i64>) -> Result<Avg> {
        match self {
            Avg::Classical => Ok(Avg::Classical),
            Avg::Exp(e) => Ok(Avg::Exp(e.div_by(theta)?)),
        }
    }
}

impl fmt::Display for Avg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Avg::Classical => write!(f, "none"),
            Avg::Exp(e) => write!(f, "{e}"),
        }
    }
}

impl FromStr for Avg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Avg> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            Ok(Avg::Classical)
        } else {
            Ok(Avg::Exp(s.parse()?))
        }
    }
}

/// Checks the exact reciprocal relation `1/e0 = 1/e1 + 1/e2`.
pub fn holder_relation(coordinate: &'static str, e0: Exp, e1: Exp, e2: Exp) -> Result<()> {
    if e0.recip() != e1.recip() + e2.recip() {
        return Err(Error::HolderViolation {
            coordinate,
            detail: format!("1/{e0} != 1/{e1} + 1/{e2}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_relation_is_exact() {
        let p0 = Exp::int(2);
        let p1 = Exp::int(4);
        let p2 = Exp::int(4);
        assert!(holder_relation("p", p0, p1, p2).is_ok());
        assert!(holder_relation("p", p0, p1, Exp::new(9, 2).unwrap()).is_err());
        // 1/2 = 1/2 + 1/inf
        assert!(holder_relation("p", p0, p0, Exp::Inf).is_ok());
        // inf side: 1/inf = 1/inf + 1/inf
        assert!(holder_relation("p", Exp::Inf, Exp::Inf, Exp::Inf).is_ok());
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exp::int(2).conjugate().unwrap(), Exp::int(2));
        assert_eq!(Exp::int(4).conjugate().unwrap(), Exp::new(4, 3).unwrap());
        assert_eq!(Exp::int(1).conjugate().unwrap(), Exp::Inf);
        assert!(Exp::new(1, 2).unwrap().conjugate().is_err());
    }

    #[test]
    fn rescale_divides_exactly() {
        let third = Ratio::new(1, 3);
        assert_eq!(Exp::int(2).div_by(third).unwrap(), Exp::int(6));
        assert_eq!(Exp::Inf.div_by(third).unwrap(), Exp::Inf);
        assert_eq!(
            Exp::new(4, 3).unwrap().div_by(Ratio::new(2, 3)).unwrap(),
            Exp::int(2)
        );
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["2", "4/3", "inf", "1/2"] {
            let e: Exp = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        let r: Avg = "none".parse().unwrap();
        assert_eq!(r, Avg::Classical);
        assert!("0".parse::<Exp>().is_err());
        assert!("-2".parse::<Exp>().is_err());
        assert!("x".parse::<Exp>().is_err());
    }

    #[test]
    fn min_and_banach_threshold() {
        assert_eq!(Exp::Inf.min(Exp::int(3)), Exp::int(3));
        assert!(Exp::int(1).ge_one());
        assert!(!Exp::new(1, 2).unwrap().ge_one());
    }
}
