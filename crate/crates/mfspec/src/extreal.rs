use std::cmp::Ordering;
use std::fmt;

/// Extended real number with dedicated infinity variants.
///
/// Suprema over level sets and Bowen-equation roots legitimately take the
/// values `-inf` and `+inf`; keeping them as enum variants rather than IEEE
/// infinities keeps NaN out of downstream arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

use ExtendedReal::*;

impl ExtendedReal {
    /// Wraps a finite value. Panics on NaN or IEEE infinities.
    pub fn finite(x: f64) -> Self {
        assert!(x.is_finite(), "ExtendedReal::finite got {x}");
        Finite(x)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            Finite(x) => Some(*x),
            _ => None,
        }
    }

    /// Finite value or panic; for contexts where finiteness was already checked.
    pub fn unwrap_finite(&self) -> f64 {
        self.as_finite().expect("expected a finite value")
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

    /// Guarded addition of a finite shift.
    pub fn add_finite(self, shift: f64) -> Self {
        assert!(shift.is_finite());
        match self {
            Finite(x) => Self::finite(x + shift),
            inf => inf,
        }
    }

    /// Absolute difference, infinite when exactly one side is infinite.
    pub fn abs_diff(self, other: Self) -> ExtendedReal {
        match (self, other) {
            (Finite(a), Finite(b)) => Self::finite((a - b).abs()),
            (NegInfinity, NegInfinity) | (PosInfinity, PosInfinity) => Self::finite(0.0),
            _ => PosInfinity,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let rank = |v: &ExtendedReal| match v {
            NegInfinity => 0u8,
            Finite(_) => 1,
            PosInfinity => 2,
        };
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (a, b) => rank(a).partial_cmp(&rank(b)),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInfinity => write!(f, "-inf"),
            PosInfinity => write!(f, "inf"),
            Finite(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Self::finite(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering() {
        assert!(NegInfinity < Finite(-1e300));
        assert!(Finite(1e300) < PosInfinity);
        assert!(Finite(1.0) < Finite(2.0));
        assert_eq!(NegInfinity.max(Finite(0.0)), Finite(0.0));
        assert_eq!(PosInfinity.min(Finite(0.0)), Finite(0.0));
    }

    #[test]
    #[should_panic]
    fn rejects_nan() {
        let _ = ExtendedReal::finite(f64::NAN);
    }

    #[test]
    fn display() {
        assert_eq!(NegInfinity.to_string(), "-inf");
        assert_eq!(Finite(0.5).to_string(), "0.5");
    }
}
