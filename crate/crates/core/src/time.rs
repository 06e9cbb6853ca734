//! Exact time values and firing intervals.

use std::cmp::Ordering;
use std::fmt;

use num::rational::Ratio;
use num::{Integer, Signed, Zero};

/// Exact rational time value.
pub type Rat = Ratio<i64>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

/// A firing interval with independently open or closed bounds.
///
/// An infinite upper bound is always stored as strict, so `[0,∞[` has a
/// single representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TimeInterval {
    pub lower: Rat,
    pub lower_strict: bool,
    pub upper: Option<Rat>,
    pub upper_strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntervalError {
    #[error("negative lower bound {0}")]
    NegativeLower(Rat),
    #[error("empty interval: lower bound {lower} exceeds upper bound {upper}")]
    Empty { lower: Rat, upper: Rat },
}

impl TimeInterval {
    pub fn new(
        lower: Rat,
        lower_strict: bool,
        upper: Option<Rat>,
        upper_strict: bool,
    ) -> Result<Self, IntervalError> {
        if lower.is_negative() {
            return Err(IntervalError::NegativeLower(lower));
        }
        if let Some(u) = upper {
            let empty = match lower.cmp(&u) {
                Ordering::Greater => true,
                Ordering::Equal => lower_strict || upper_strict,
                Ordering::Less => false,
            };
            if empty {
                return Err(IntervalError::Empty { lower, upper: u });
            }
        }
        Ok(TimeInterval {
            lower,
            lower_strict,
            upper,
            upper_strict: upper.is_none() || upper_strict,
        })
    }

    /// `[lo, hi]`
    pub fn closed(lo: i64, hi: i64) -> Self {
        Self::new(rat(lo), false, Some(rat(hi)), false).expect("closed interval")
    }

    /// `[v, v]`
    pub fn point(v: Rat) -> Self {
        Self::new(v, false, Some(v), false).expect("point interval")
    }

    /// `[lo, ∞[`
    pub fn from_lower(lo: i64) -> Self {
        Self::new(rat(lo), false, None, true).expect("unbounded interval")
    }

    /// The default interval of unconstrained transitions, `[0, ∞[`.
    pub fn unbounded() -> Self {
        Self::from_lower(0)
    }

    pub fn is_point(&self) -> bool {
        self.upper == Some(self.lower)
    }

    pub fn is_unbounded(&self) -> bool {
        self.upper.is_none()
    }

    pub fn contains(&self, x: Rat) -> bool {
        let above = if self.lower_strict {
            x > self.lower
        } else {
            x >= self.lower
        };
        let below = match self.upper {
            None => true,
            Some(u) if self.upper_strict => x < u,
            Some(u) => x <= u,
        };
        above && below
    }

    /// Intersection, or `None` when empty.
    pub fn intersect(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let (lower, lower_strict) = match self.lower.cmp(&other.lower) {
            Ordering::Greater => (self.lower, self.lower_strict),
            Ordering::Less => (other.lower, other.lower_strict),
            Ordering::Equal => (self.lower, self.lower_strict || other.lower_strict),
        };
        let (upper, upper_strict) = match (self.upper, other.upper) {
            (None, None) => (None, true),
            (Some(u), None) => (Some(u), self.upper_strict),
            (None, Some(u)) => (Some(u), other.upper_strict),
            (Some(a), Some(b)) => match a.cmp(&b) {
                Ordering::Less => (Some(a), self.upper_strict),
                Ordering::Greater => (Some(b), other.upper_strict),
                Ordering::Equal => (Some(a), self.upper_strict || other.upper_strict),
            },
        };
        TimeInterval::new(lower, lower_strict, upper, upper_strict).ok()
    }

    /// Finite bounds of the interval, used for computing a common time scale.
    pub fn bounds(&self) -> impl Iterator<Item = Rat> {
        std::iter::once(self.lower).chain(self.upper)
    }
}

impl Default for TimeInterval {
    fn default() -> Self {
        Self::unbounded()
    }
}

pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_strict { ']' } else { '[' };
        match self.upper {
            None => write!(f, "{}{},...[", open, fmt_rat(&self.lower)),
            Some(u) => {
                let close = if self.upper_strict { '[' } else { ']' };
                write!(
                    f,
                    "{}{},{}{}",
                    open,
                    fmt_rat(&self.lower),
                    fmt_rat(&u),
                    close
                )
            }
        }
    }
}

/// Least common multiple of the denominators of `values`.
pub fn common_scale<I: IntoIterator<Item = Rat>>(values: I) -> i64 {
    values.into_iter().fold(1i64, |acc, r| acc.lcm(r.denom()))
}

/// Scales `r` by `scale`, which must clear its denominator.
pub fn scaled(r: Rat, scale: i64) -> i64 {
    let v = r * rat(scale);
    debug_assert!(v.is_integer());
    v.to_integer()
}

pub fn is_zero(r: &Rat) -> bool {
    r.is_zero()
}
