//! Elementary-function enclosures.
//!
//! Transcendental functions come from the platform libm, whose results are
//! within one ULP of the exact value for the functions used here; every
//! endpoint is pushed outward by [`LIBM_ULPS`] ULPs to absorb that error.
//! Square roots use exactly rounded directed primitives instead.

use super::round::*;
use super::Interval;
use crate::error::{Error, Result};

const LIBM_ULPS: u32 = 2;

/// Rigorous enclosure of π. The binary64 constant lies below π by about
/// 1.2e-16, less than one ULP.
pub(super) fn pi() -> Interval {
    let p = std::f64::consts::PI;
    Interval::new(p, p.next_up())
}

#[inline]
fn lo_libm(x: f64) -> f64 {
    widen_down(x, LIBM_ULPS)
}

#[inline]
fn hi_libm(x: f64) -> f64 {
    widen_up(x, LIBM_ULPS)
}

/// Elementary functions selectable at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFn {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Atan,
    Cosh,
    Sinh,
    Sech,
}

impl Interval {
    /// Apply an elementary function, reporting domain violations as errors.
    pub fn apply(self, f: ElemFn) -> Result<Interval> {
        match f {
            ElemFn::Sqrt => self.checked_sqrt(),
            ElemFn::Ln => self.checked_ln(),
            ElemFn::Exp => Ok(self.exp()),
            ElemFn::Sin => Ok(self.sin()),
            ElemFn::Cos => Ok(self.cos()),
            ElemFn::Atan => Ok(self.atan()),
            ElemFn::Cosh => Ok(self.cosh()),
            ElemFn::Sinh => Ok(self.sinh()),
            ElemFn::Sech => Ok(self.sech()),
        }
    }

    pub fn checked_sqrt(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!("sqrt of {self} with negative part")));
        }
        Ok(self.sqrt())
    }

    /// Square root of the nonnegative part of the interval.
    ///
    /// # Panics
    /// If the interval is entirely negative.
    pub fn sqrt(self) -> Interval {
        assert!(self.hi >= 0.0, "sqrt of negative interval {self}");
        Interval::new(sqrt_down(self.lo.max(0.0)), sqrt_up(self.hi))
    }

    pub fn exp(self) -> Interval {
        let lo = if self.lo == f64::NEG_INFINITY { 0.0 } else { lo_libm(self.lo.exp()).max(0.0) };
        let hi = if self.hi == f64::INFINITY { f64::INFINITY } else { hi_libm(self.hi.exp()) };
        Interval::new(lo, hi)
    }

    pub fn checked_ln(self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(Error::Domain(format!("ln of {self} with negative part")));
        }
        if self.hi == 0.0 {
            return Err(Error::Domain("ln of [0,0]".into()));
        }
        let lo = if self.lo == 0.0 { f64::NEG_INFINITY } else { lo_libm(self.lo.ln()) };
        Ok(Interval::new(lo, hi_libm(self.hi.ln())))
    }

    pub fn ln(self) -> Interval {
        self.checked_ln().expect("ln domain")
    }

    pub fn atan(self) -> Interval {
        let half_pi_hi = (pi() * 0.5).hi;
        Interval::new(lo_libm(self.lo.atan()).max(-half_pi_hi), hi_libm(self.hi.atan()).min(half_pi_hi))
    }

    pub fn cosh(self) -> Interval {
        let a = self.abs();
        let at = |t: f64| {
            let e = Interval::point(t).exp();
            (e + e.recip()) * 0.5
        };
        let lo = if a.lo == 0.0 { 1.0 } else { at(a.lo).lo.max(1.0) };
        let hi = if a.hi.is_finite() { at(a.hi).hi } else { f64::INFINITY };
        Interval::new(lo, hi)
    }

    pub fn sinh(self) -> Interval {
        let at = |t: f64| -> Interval {
            if t.abs() < 0.5 {
                // exp-difference cancels badly here; libm sinh is a few ULPs accurate
                let s = t.sinh();
                Interval::new(widen_down(s, 4), widen_up(s, 4))
            } else if t.is_infinite() {
                Interval::point(t)
            } else {
                let e = Interval::point(t).exp();
                (e - e.recip()) * 0.5
            }
        };
        Interval::new(at(self.lo).lo, at(self.hi).hi)
    }

    pub fn sech(self) -> Interval {
        let c = self.cosh();
        Interval::new(div_down(1.0, c.hi), div_up(1.0, c.lo).min(1.0))
    }

    pub fn tanh(self) -> Interval {
        let at = |t: f64| {
            let s = t.tanh();
            Interval::new(widen_down(s, 4).max(-1.0), widen_up(s, 4).min(1.0))
        };
        Interval::new(at(self.lo).lo, at(self.hi).hi)
    }

    pub fn cos(self) -> Interval {
        if !self.is_finite() || self.width() >= 6.0 {
            return Interval::new(-1.0, 1.0);
        }
        // critical points of cos are integer multiples of pi
        let turns = self / pi();
        let (mut lo, mut hi) = endpoint_hull(self, f64::cos);
        for k in turns.lo.ceil() as i64..=turns.hi.floor() as i64 {
            if k.rem_euclid(2) == 0 {
                hi = 1.0;
            } else {
                lo = -1.0;
            }
        }
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    pub fn sin(self) -> Interval {
        if !self.is_finite() || self.width() >= 6.0 {
            return Interval::new(-1.0, 1.0);
        }
        // critical points of sin sit at pi/2 + k*pi
        let turns = self / pi() - 0.5;
        let (mut lo, mut hi) = endpoint_hull(self, f64::sin);
        for k in turns.lo.ceil() as i64..=turns.hi.floor() as i64 {
            if k.rem_euclid(2) == 0 {
                hi = 1.0;
            } else {
                lo = -1.0;
            }
        }
        Interval::new(lo.max(-1.0), hi.min(1.0))
    }

    /// `sin(pi * x)` with exact reduction of `x` modulo 2.
    pub fn sinpi(self) -> Interval {
        (reduce_mod2(self) * pi()).sin()
    }

    /// `cos(pi * x)` with exact reduction of `x` modulo 2.
    pub fn cospi(self) -> Interval {
        (reduce_mod2(self) * pi()).cos()
    }
}

fn endpoint_hull(x: Interval, f: fn(f64) -> f64) -> (f64, f64) {
    let a = f(x.lo);
    let b = f(x.hi);
    (lo_libm(a.min(b)), hi_libm(a.max(b)))
}

/// Shift by an even integer so the midpoint lands in `[-1, 1]`. The shift is
/// exact for arguments below 2^52 in magnitude.
fn reduce_mod2(x: Interval) -> Interval {
    if !x.is_finite() || x.mag() >= 4.0e15 {
        return x;
    }
    let shift = 2.0 * (x.mid() * 0.5).round();
    x - shift
}
