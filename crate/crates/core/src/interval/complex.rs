//! Rectangular complex intervals, only as much as the Bessel enclosures need.

use std::ops::{Add, Mul, Neg, Sub};

use super::Interval;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CInterval {
    pub re: Interval,
    pub im: Interval,
}

impl CInterval {
    pub const ZERO: CInterval = CInterval { re: Interval::ZERO, im: Interval::ZERO };
    pub const ONE: CInterval = CInterval { re: Interval::ONE, im: Interval::ZERO };

    pub fn new(re: Interval, im: Interval) -> Self {
        CInterval { re, im }
    }

    pub fn real(re: Interval) -> Self {
        CInterval { re, im: Interval::ZERO }
    }

    pub fn conj(self) -> Self {
        CInterval { re: self.re, im: -self.im }
    }

    pub fn norm_sqr(self) -> Interval {
        self.re.sqr() + self.im.sqr()
    }

    pub fn abs(self) -> Interval {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: Interval) -> Self {
        CInterval { re: self.re * s, im: self.im * s }
    }

    pub fn checked_div(self, rhs: CInterval) -> Result<CInterval> {
        let den = rhs.norm_sqr();
        if den.contains_zero() {
            return Err(Error::Domain("complex division by an interval containing 0".into()));
        }
        let num = self * rhs.conj();
        Ok(CInterval { re: num.re.checked_div(den)?, im: num.im.checked_div(den)? })
    }

    pub fn recip(self) -> Result<CInterval> {
        CInterval::ONE.checked_div(self)
    }

    pub fn exp(self) -> CInterval {
        let m = self.re.exp();
        CInterval { re: m * self.im.cos(), im: m * self.im.sin() }
    }

    /// Principal argument, restricted to the open right half plane where it
    /// equals `atan(im/re)`.
    pub fn arg(self) -> Result<Interval> {
        if self.re.lo() <= 0.0 {
            return Err(Error::Domain("argument only supported for Re z > 0".into()));
        }
        Ok(self.im.checked_div(self.re)?.atan())
    }

    /// Principal logarithm for `Re z > 0`.
    pub fn ln(self) -> Result<CInterval> {
        let arg = self.arg()?;
        Ok(CInterval { re: self.norm_sqr().checked_ln()? * 0.5, im: arg })
    }

    /// Principal square root for `Re z > 0`.
    pub fn sqrt(self) -> Result<CInterval> {
        let half_arg = self.arg()? * 0.5;
        let m = self.abs().sqrt();
        Ok(CInterval { re: m * half_arg.cos(), im: m * half_arg.sin() })
    }

    pub fn powi(self, n: u32) -> CInterval {
        let mut acc = CInterval::ONE;
        let mut base = self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }

    pub fn contains(self, re: f64, im: f64) -> bool {
        self.re.contains(re) && self.im.contains(im)
    }
}

impl Add for CInterval {
    type Output = CInterval;
    fn add(self, r: CInterval) -> CInterval {
        CInterval { re: self.re + r.re, im: self.im + r.im }
    }
}

impl Sub for CInterval {
    type Output = CInterval;
    fn sub(self, r: CInterval) -> CInterval {
        CInterval { re: self.re - r.re, im: self.im - r.im }
    }
}

impl Neg for CInterval {
    type Output = CInterval;
    fn neg(self) -> CInterval {
        CInterval { re: -self.re, im: -self.im }
    }
}

impl Mul for CInterval {
    type Output = CInterval;
    fn mul(self, r: CInterval) -> CInterval {
        CInterval {
            re: self.re * r.re - self.im * r.im,
            im: self.re * r.im + self.im * r.re,
        }
    }
}
