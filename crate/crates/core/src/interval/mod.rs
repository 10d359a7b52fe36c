//! Closed real intervals with outward rounding.
//!
//! [`Interval`] is the scalar workhorse of every bound in the crate. The
//! operator overloads never fail: division by an interval containing zero
//! yields the whole real line. Callers that must reject that case use
//! [`Interval::checked_div`].

mod complex;
mod elem;
pub(crate) mod matrix;
pub mod round;

pub use complex::CInterval;
pub use elem::ElemFn;
pub use matrix::{dot_enclosure, IntervalMatrix};

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use round::*;

#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const ENTIRE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    /// Builds `[lo, hi]`.
    ///
    /// # Panics
    /// On NaN endpoints or `lo > hi`; both indicate a logic error upstream.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(
            !lo.is_nan() && !hi.is_nan() && lo <= hi,
            "invalid interval endpoints [{lo}, {hi}]"
        );
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            Err(Error::Domain(format!("invalid interval endpoints [{lo}, {hi}]")))
        } else {
            Ok(Interval { lo, hi })
        }
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        Interval::new(x, x)
    }

    /// Hull of two values given in any order.
    pub fn hull_of(a: f64, b: f64) -> Self {
        Interval::new(a.min(b), a.max(b))
    }

    /// Symmetric interval `[-r, r]`.
    pub fn symmetric(r: f64) -> Self {
        Interval::new(-r.abs(), r.abs())
    }

    /// Rigorous enclosure of `m ± r`.
    pub fn mid_rad(m: f64, r: f64) -> Self {
        Interval::new(sub_down(m, r.abs()), add_up(m, r.abs()))
    }

    /// Enclosure of `p/q` for integers, exact when representable.
    pub fn ratio(p: i64, q: i64) -> Self {
        Interval::point(p as f64).checked_div(Interval::point(q as f64)).expect("nonzero denominator")
    }

    pub fn pi() -> Self {
        elem::pi()
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }
    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        if self.lo == f64::NEG_INFINITY || self.hi == f64::INFINITY {
            if self.lo.is_finite() {
                return f64::MAX;
            }
            if self.hi.is_finite() {
                return f64::MIN;
            }
            return 0.0;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the radius about [`Interval::mid`].
    pub fn rad(self) -> f64 {
        let m = self.mid();
        sub_up(self.hi, m).max(sub_up(m, self.lo))
    }

    pub fn width(self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Largest absolute value in the interval.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn overlaps(self, other: Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Interval strictly positive: `lo > 0`.
    pub fn is_positive(self) -> bool {
        self.lo > 0.0
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval { lo: 0.0, hi: self.mag() }
        }
    }

    /// Square; tighter than `x * x` when the interval straddles zero.
    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval { lo: mul_down(a.lo, a.lo), hi: mul_up(a.hi, a.hi) }
    }

    pub fn powi(self, n: u32) -> Interval {
        if n == 0 {
            return Interval::ONE;
        }
        if n.is_multiple_of(2) {
            let a = self.abs();
            return Interval { lo: pow_down(a.lo, n), hi: pow_up(a.hi, n) };
        }
        // odd powers are monotone increasing
        let lo = if self.lo >= 0.0 { pow_down(self.lo, n) } else { -pow_up(-self.lo, n) };
        let hi = if self.hi >= 0.0 { pow_up(self.hi, n) } else { -pow_down(-self.hi, n) };
        Interval { lo, hi }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }

    /// Lower endpoint clamped at zero; used for radicands that are
    /// analytically nonnegative.
    pub fn clamp_nonneg(self) -> Interval {
        Interval { lo: self.lo.max(0.0), hi: self.hi.max(0.0) }
    }

    pub fn scale(self, c: f64) -> Interval {
        self * Interval::point(c)
    }

    pub fn recip(self) -> Interval {
        Interval::ONE / self
    }

    /// Division that refuses divisors containing zero.
    pub fn checked_div(self, rhs: Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!("division by interval {rhs} containing zero")));
        }
        Ok(div_nonzero(self, rhs))
    }

    /// Outward-rounded arithmetic selected at run time.
    pub fn arith(self, rhs: Interval, op: ArithOp) -> Result<Interval> {
        match op {
            ArithOp::Add => Ok(self + rhs),
            ArithOp::Sub => Ok(self - rhs),
            ArithOp::Mul => Ok(self * rhs),
            ArithOp::Div => self.checked_div(rhs),
        }
    }

    /// Upper bound as a thin interval, used when only an upper estimate
    /// is meaningful (norm bounds).
    pub fn upper(self) -> Interval {
        Interval::point(self.hi)
    }

    /// `[0, hi]`: everything that is nonnegative and below the upper endpoint.
    pub fn below(self) -> Interval {
        Interval { lo: 0.0, hi: self.hi.max(0.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

fn pow_down(a: f64, n: u32) -> f64 {
    (1..n).fold(a, |acc, _| mul_down(acc, a))
}

fn pow_up(a: f64, n: u32) -> f64 {
    (1..n).fold(a, |acc, _| mul_up(acc, a))
}

fn div_nonzero(a: Interval, b: Interval) -> Interval {
    let c = [
        (a.lo, b.lo),
        (a.lo, b.hi),
        (a.hi, b.lo),
        (a.hi, b.hi),
    ];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in c {
        // infinite divisor endpoints contribute 0 limits handled by div_*.
        lo = lo.min(div_down(x, y));
        hi = hi.max(div_up(x, y));
    }
    if lo.is_nan() || hi.is_nan() {
        return Interval::ENTIRE;
    }
    Interval { lo, hi }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "[{:.*e}, {:.*e}]", p, self.lo, p, self.hi),
            None => write!(f, "[{:e}, {:e}]", self.lo, self.hi),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, rhs.lo), hi: add_up(self.hi, rhs.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: sub_down(self.lo, rhs.hi), hi: sub_up(self.hi, rhs.lo) }
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b) = (self, rhs);
        if a.lo >= 0.0 && b.lo >= 0.0 {
            return Interval { lo: mul_down(a.lo, b.lo), hi: mul_up(a.hi, b.hi) };
        }
        let lo = mul_down(a.lo, b.lo)
            .min(mul_down(a.lo, b.hi))
            .min(mul_down(a.hi, b.lo))
            .min(mul_down(a.hi, b.hi));
        let hi = mul_up(a.lo, b.lo)
            .max(mul_up(a.lo, b.hi))
            .max(mul_up(a.hi, b.lo))
            .max(mul_up(a.hi, b.hi));
        Interval { lo, hi }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if rhs.contains_zero() {
            Interval::ENTIRE
        } else {
            div_nonzero(self, rhs)
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<f64> for Interval {
            type Output = Interval;
            #[inline]
            fn $f(self, rhs: f64) -> Interval { $tr::$f(self, Interval::point(rhs)) }
        }
        impl $tr<Interval> for f64 {
            type Output = Interval;
            #[inline]
            fn $f(self, rhs: Interval) -> Interval { $tr::$f(Interval::point(self), rhs) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign for Interval {
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}
impl SubAssign for Interval {
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}
impl MulAssign for Interval {
    fn mul_assign(&mut self, rhs: Interval) {
        *self = *self * rhs;
    }
}

impl Sum for Interval {
    fn sum<I: Iterator<Item = Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Interval> for Interval {
    fn sum<I: Iterator<Item = &'a Interval>>(iter: I) -> Interval {
        iter.fold(Interval::ZERO, |a, b| a + *b)
    }
}

/// Endpoints are written with 17 significant digits, which round-trips
/// binary64 exactly.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format_f64(self.lo), format_f64(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let [lo, hi]: [String; 2] = Deserialize::deserialize(d)?;
        let lo = parse_f64(&lo).map_err(D::Error::custom)?;
        let hi = parse_f64(&hi).map_err(D::Error::custom)?;
        Interval::try_new(lo, hi).map_err(D::Error::custom)
    }
}
