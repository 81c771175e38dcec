//! Extended reals `[-∞, +∞]`.
//!
//! Relative entropies and GBLL objectives are genuinely extended-real
//! valued (`D(P‖μ) = +∞` whenever `P` escapes the support of `μ`), so
//! infinities are carried as explicit variants rather than sentinel
//! floats. Comparisons and arithmetic below never produce NaN; the one
//! combination without a sensible value, `+∞ + (−∞)`, panics because it
//! always indicates a logic error upstream.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// An extended real number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    /// Wraps a float, mapping IEEE infinities onto the explicit variants.
    ///
    /// Panics on NaN.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtReal cannot represent NaN");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Returns the finite value or panics with `msg`.
    pub fn expect_finite(self, msg: &str) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            other => panic!("{msg}: value is {other}"),
        }
    }

    /// Collapses to `f64`, mapping the infinite variants to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Multiplies by a strictly positive scalar (sign-preserving, so the
    /// infinite variants are untouched).
    pub fn scale(self, s: f64) -> Self {
        assert!(s > 0.0 && s.is_finite(), "scale factor must be positive");
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * s),
            inf => inf,
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        let rank = |v: &ExtReal| match v {
            NegInf => -1,
            Finite(_) => 0,
            PosInf => 1,
        };
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (a, b) => rank(a).partial_cmp(&rank(b)),
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        use ExtReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PosInf, NegInf) | (NegInf, PosInf) => {
                panic!("ExtReal: +∞ + (−∞) is undefined")
            }
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::ExtReal::{self, *};

    #[test]
    fn ordering() {
        assert!(NegInf < Finite(-1e300));
        assert!(Finite(1e300) < PosInf);
        assert!(Finite(1.0) < Finite(2.0));
        assert!(PosInf == PosInf);
    }

    #[test]
    fn arithmetic() {
        assert_eq!(Finite(1.0) + Finite(2.0), Finite(3.0));
        assert_eq!(PosInf + Finite(-5.0), PosInf);
        assert_eq!(Finite(3.0) - PosInf, NegInf);
        assert_eq!(-NegInf, PosInf);
        assert_eq!(PosInf.scale(2.5), PosInf);
    }

    #[test]
    #[should_panic]
    fn opposite_infinities_panic() {
        let _ = PosInf + NegInf;
    }

    #[test]
    fn from_f64_maps_infinities() {
        assert_eq!(ExtReal::from_f64(f64::INFINITY), PosInf);
        assert_eq!(ExtReal::from_f64(f64::NEG_INFINITY), NegInf);
        assert_eq!(ExtReal::from_f64(0.5), Finite(0.5));
    }

    #[test]
    fn max_min() {
        assert_eq!(Finite(1.0).max(NegInf), Finite(1.0));
        assert_eq!(Finite(1.0).min(PosInf), Finite(1.0));
    }
}
