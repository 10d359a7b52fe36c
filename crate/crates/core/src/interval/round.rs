//! Directed rounding without touching the FPU control word.
//!
//! Each primitive computes the round-to-nearest result and then recovers the
//! sign of the rounding error through an error-free transformation (TwoSum
//! for addition, FMA residuals for products, quotients and square roots).
//! When the error is provably zero the result is returned unchanged, which
//! keeps point intervals thin through exact operations. When an error-free
//! transformation is unreliable (underflow range) the result is nudged by one
//! ULP unconditionally.

/// Below this magnitude FMA residuals may lose exactness to gradual underflow.
const TINY: f64 = 1.0e-290;

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
pub fn add_down(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        if s == f64::INFINITY && a.is_finite() && b.is_finite() {
            return f64::MAX;
        }
        return s;
    }
    if e < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        if s == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
            return f64::MIN;
        }
        return s;
    }
    if e > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

#[inline]
pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

/// Sign of the exact product error `a*b - fl(a*b)`, or `None` when it cannot be
/// recovered exactly.
#[inline]
fn mul_err_sign(a: f64, b: f64, p: f64) -> Option<f64> {
    if p.abs() < TINY {
        None
    } else {
        Some(a.mul_add(b, -p))
    }
}

#[inline]
pub fn mul_down(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        if p == f64::INFINITY && a.is_finite() && b.is_finite() {
            return f64::MAX;
        }
        return p;
    }
    match mul_err_sign(a, b, p) {
        Some(e) if e >= 0.0 => p,
        _ => p.next_down(),
    }
}

#[inline]
pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        if p == f64::NEG_INFINITY && a.is_finite() && b.is_finite() {
            return f64::MIN;
        }
        return p;
    }
    match mul_err_sign(a, b, p) {
        Some(e) if e <= 0.0 => p,
        _ => p.next_up(),
    }
}

/// Sign of `a/b - fl(a/b)` as `+1`, `0` or `-1`; `None` if not recoverable.
#[inline]
fn div_err_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    if q.abs() < TINY || a.abs() < TINY || !b.is_finite() {
        return None;
    }
    let r = (-q).mul_add(b, a);
    Some(if r == 0.0 { 0.0 } else { r.signum() * b.signum() })
}

#[inline]
pub fn div_down(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_infinite() && a.is_finite() {
        return if q > 0.0 { f64::MAX } else { q };
    }
    if !q.is_finite() {
        return q;
    }
    if b.is_infinite() {
        return if q == 0.0 && (a < 0.0) != (b < 0.0) { -f64::MIN_POSITIVE } else { q.next_down().min(q) };
    }
    match div_err_sign(a, b, q) {
        Some(s) if s >= 0.0 => q,
        _ => q.next_down(),
    }
}

#[inline]
pub fn div_up(a: f64, b: f64) -> f64 {
    if a == 0.0 && b != 0.0 {
        return 0.0;
    }
    let q = a / b;
    if q.is_infinite() && a.is_finite() {
        return if q < 0.0 { f64::MIN } else { q };
    }
    if !q.is_finite() {
        return q;
    }
    if b.is_infinite() {
        return if q == 0.0 && (a < 0.0) == (b < 0.0) { f64::MIN_POSITIVE } else { q.next_up().max(q) };
    }
    match div_err_sign(a, b, q) {
        Some(s) if s <= 0.0 => q,
        _ => q.next_up(),
    }
}

#[inline]
pub fn sqrt_down(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if !s.is_finite() {
        return s;
    }
    if x < TINY {
        return s.next_down().max(0.0);
    }
    let r = (-s).mul_add(s, x);
    if r < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub fn sqrt_up(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = x.sqrt();
    if !s.is_finite() {
        return s;
    }
    if x < TINY {
        return s.next_up();
    }
    let r = (-s).mul_add(s, x);
    if r > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Step `k` ULPs downward; used around library transcendental functions whose
/// error is bounded by a small number of ULPs but not correctly rounded.
#[inline]
pub fn widen_down(x: f64, k: u32) -> f64 {
    let mut y = x;
    for _ in 0..k {
        y = y.next_down();
    }
    y
}

#[inline]
pub fn widen_up(x: f64, k: u32) -> f64 {
    let mut y = x;
    for _ in 0..k {
        y = y.next_up();
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_operations_stay_exact() {
        assert_eq!(add_down(1.0, 2.0), 3.0);
        assert_eq!(add_up(1.0, 2.0), 3.0);
        assert_eq!(mul_down(3.0, 0.5), 1.5);
        assert_eq!(mul_up(3.0, 0.5), 1.5);
        assert_eq!(div_down(1.0, 4.0), 0.25);
        assert_eq!(sqrt_up(4.0), 2.0);
        assert_eq!(sqrt_down(4.0), 2.0);
    }

    #[test]
    fn inexact_operations_bracket() {
        let lo = div_down(1.0, 3.0);
        let hi = div_up(1.0, 3.0);
        assert!(lo < hi);
        assert_eq!(lo.next_up(), hi);
        // 3*lo < 1 < 3*hi, checked with an FMA residual
        assert!(lo.mul_add(3.0, -1.0) < 0.0);
        assert!(hi.mul_add(3.0, -1.0) > 0.0);
        let a = 0.1;
        let b = 0.2;
        assert!(add_down(a, b) < add_up(a, b));
        let s2lo = sqrt_down(2.0);
        let s2hi = sqrt_up(2.0);
        assert!(s2lo.mul_add(s2lo, -2.0) < 0.0 && s2hi.mul_add(s2hi, -2.0) > 0.0);
    }

    #[test]
    fn negative_divisors() {
        let lo = div_down(1.0, -3.0);
        let hi = div_up(1.0, -3.0);
        assert!(lo < hi && lo < -0.333 && hi > -0.3334);
        assert!(lo.mul_add(-3.0, -1.0) > 0.0 || lo * -3.0 > 1.0 - 1e-16);
    }

    #[test]
    fn overflow_is_one_sided() {
        assert_eq!(mul_down(1e300, 1e300), f64::MAX);
        assert_eq!(mul_up(1e300, 1e300), f64::INFINITY);
        assert_eq!(add_down(f64::MAX, f64::MAX), f64::MAX);
    }
}
