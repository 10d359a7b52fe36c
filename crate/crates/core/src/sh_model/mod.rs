//! Swift-Hohenberg model data: symbols, the nonlinearity, and the analytic
//! constants that enter the bounds.
//!
//! The equation is `(I + Δ)² u + μu + ν₁u² + ν₂u³ = 0` on the plane.

pub mod bessel;

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::seqspace::{Side, SymSequence};
use crate::symmetry::{GroupName, OrbitTable};

pub use bessel::SupSearch;

/// Parameters of one problem instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SHParams {
    pub mu: Interval,
    pub nu1: Interval,
    pub nu2: Interval,
    /// Half-width of the computational square `(-d, d)²`.
    pub d: f64,
    /// Order of the target dihedral group.
    pub j: u32,
}

impl SHParams {
    pub fn new(mu: Interval, nu1: Interval, nu2: Interval, d: f64, j: u32) -> Result<Self> {
        if mu.lo() <= 0.0 {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("half-width d must be positive, got {d}")));
        }
        if j < 1 {
            return Err(Error::Domain("group order j must be at least 1".into()));
        }
        Ok(SHParams { mu, nu1, nu2, d, j })
    }

    /// Parameters given as exact binary64 values.
    pub fn from_f64(mu: f64, nu1: f64, nu2: f64, d: f64, j: u32) -> Result<Self> {
        Self::new(Interval::point(mu), Interval::point(nu1), Interval::point(nu2), d, j)
    }
}

/// The Fourier multipliers used by the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    /// `(1 - 4π²|ξ|²)² + μ`, the linear part of the equation.
    L,
    /// `-4π²|ξ|² - 1`, the symbol of `Δ - I`.
    L0,
    /// `(1 - 4π²|ξ|²)² + 1`.
    L1,
    /// `2πξ₂`, the modulus of the symbol of `∂_{x₂}`.
    LPartial,
}

/// `4π²|ξ|²`.
pub fn radial(xi: [Interval; 2]) -> Interval {
    (Interval::pi() * 2.0).sqr() * (xi[0].sqr() + xi[1].sqr())
}

/// Evaluate a symbol at the frequency `ξ`.
pub fn symbol(kind: SymbolKind, xi: [Interval; 2], mu: Interval) -> Interval {
    match kind {
        SymbolKind::L => (Interval::ONE - radial(xi)).sqr() + mu,
        SymbolKind::L0 => -radial(xi) - Interval::ONE,
        SymbolKind::L1 => (Interval::ONE - radial(xi)).sqr() + Interval::ONE,
        SymbolKind::LPartial => Interval::pi() * 2.0 * xi[1],
    }
}

/// `l(n/(2d))` for an index `n`.
pub fn l_at(n: (i32, i32), d: f64, mu: Interval) -> Interval {
    let two_d = Interval::point(2.0 * d);
    let xi = [Interval::point(n.0 as f64) / two_d, Interval::point(n.1 as f64) / two_d];
    symbol(SymbolKind::L, xi, mu)
}

/// `L U`.
pub fn apply_l(u: &SymSequence, mu: Interval) -> SymSequence {
    u.apply_symbol(|xi| symbol(SymbolKind::L, xi, mu))
}

/// `L⁻¹ U`; the symbol never vanishes since `l ≥ μ > 0`.
pub fn apply_l_inv(u: &SymSequence, mu: Interval) -> SymSequence {
    u.apply_symbol(|xi| symbol(SymbolKind::L, xi, mu).recip())
}

/// `U * U` at full support.
pub fn square(u0: &SymSequence) -> Result<SymSequence> {
    u0.convolve(u0, 2 * u0.order())
}

/// `F(U₀) = LU₀ + ν₁U₀² + ν₂U₀³` at its exact order `3N₀`.
pub fn residual_f(u0: &SymSequence, p: &SHParams) -> Result<SymSequence> {
    residual_f_from_square(u0, &square(u0)?, p)
}

/// As [`residual_f`], reusing a precomputed square.
pub fn residual_f_from_square(u0: &SymSequence, u2: &SymSequence, p: &SHParams) -> Result<SymSequence> {
    let n3 = 3 * u0.order();
    let u3 = u2.convolve(u0, n3)?;
    let lu = apply_l(u0, p.mu).with_order(n3)?;
    lu.add(&u2.scale(p.nu1).with_order(n3)?)?.add(&u3.scale(p.nu2))
}

/// `V₀ = 2ν₁U₀ + 3ν₂U₀²` and the related sequences.
#[derive(Clone, Debug)]
pub struct Linearization {
    /// Full `V₀`, of order `2N₀`.
    pub v0: SymSequence,
    /// `π^{2N} V₀` on the order-`2N` table.
    pub v0n: SymSequence,
    /// `W = 2ν₁δ + 6ν₂U₀`.
    pub w: SymSequence,
}

pub fn v0_and_w(u0: &SymSequence, p: &SHParams, n: usize) -> Result<Linearization> {
    v0_and_w_from_square(u0, &square(u0)?, p, n)
}

pub fn v0_and_w_from_square(u0: &SymSequence, u2: &SymSequence, p: &SHParams, n: usize) -> Result<Linearization> {
    let two = Interval::point(2.0);
    let v0 = u0.scale(two * p.nu1).with_order(u2.order())?.add(&u2.scale(Interval::point(3.0) * p.nu2))?;
    let v0n = v0.project(2 * n as i64, Side::Inside).with_order(2 * n)?;
    let delta = SymSequence::delta(u0.table().clone(), u0.d(), (0, 0), two * p.nu1)?;
    let w = delta.add(&u0.scale(Interval::point(6.0) * p.nu2))?;
    Ok(Linearization { v0, v0n, w })
}

/// `κ` with `‖uv‖₂ ≤ κ‖u‖₂‖v‖_l`: the square root of
/// `(2√μ + (1+μ)(2π - 2 atan √μ)) / (8 μ^{3/2} (1+μ))`.
pub fn kappa(mu: Interval) -> Interval {
    kappa_squared(mu).sqrt()
}

pub fn kappa_squared(mu: Interval) -> Interval {
    let s = mu.sqrt();
    let one_mu = Interval::ONE + mu;
    let num = s * 2.0 + one_mu * (Interval::pi() * 2.0 - s.atan() * 2.0);
    num / (mu * s * 8.0 * one_mu)
}

/// `‖1/l₀‖₂ = 1/(2√π)`.
pub fn inv_l0_norm() -> Interval {
    (Interval::pi().sqrt() * 2.0).recip()
}

/// Exponential decay constants of the Green's kernel of `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConstants {
    pub a: Interval,
    pub b_re: Interval,
    pub b_im: Interval,
    pub c0: Interval,
    pub c1: Interval,
    pub c12: Interval,
    pub c2: Interval,
}

/// `a = √(√(1+μ) - 1)/2`.
pub fn decay_rate(mu: Interval) -> Interval {
    ((Interval::ONE + mu).sqrt() - Interval::ONE).clamp_nonneg().sqrt() * 0.5
}

/// `(Re b, Im b)` with `b = √2 a - i √μ/(2√2 a)`.
pub fn decay_b(mu: Interval, a: Interval) -> (Interval, Interval) {
    let r2 = Interval::point(2.0).sqrt();
    (r2 * a, -(mu.sqrt() / (r2 * a * 2.0)))
}

type C0Key = (u64, u64, u64, u64, u64);

fn c0_cache() -> &'static Mutex<HashMap<C0Key, Interval>> {
    static CACHE: OnceLock<Mutex<HashMap<C0Key, Interval>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Certified enclosure of `C0 = sup_r e^{√2 a r}|Im K0(br)|/√μ`.
///
/// Results are memoized per `(μ, search)` since the search dominates the
/// cost of the constants.
pub fn c0_enclosure(mu: Interval, search: &SupSearch) -> Result<Interval> {
    let key = (mu.lo().to_bits(), mu.hi().to_bits(), search.tol.to_bits(), search.tail_factor.to_bits(), search.origin_cell.to_bits());
    if let Some(v) = c0_cache().lock().map_err(|_| Error::Inconsistency("C0 cache poisoned".into()))?.get(&key) {
        return Ok(*v);
    }
    let a = decay_rate(mu);
    let (b_re, b_im) = decay_b(mu, a);
    let weight = bessel::BesselWeight::new(a, b_re, b_im, mu)?;
    let c0 = bessel::sup_enclosure(&weight, a, search)?;
    c0_cache().lock().map_err(|_| Error::Inconsistency("C0 cache poisoned".into()))?.insert(key, c0);
    Ok(c0)
}

pub fn decay_constants(p: &SHParams, search: &SupSearch) -> Result<DecayConstants> {
    let a = decay_rate(p.mu);
    if a.lo() <= 0.0 {
        return Err(Error::Domain(format!("decay rate {a} is not positive")));
    }
    let (b_re, b_im) = decay_b(p.mu, a);
    let c0 = c0_enclosure(p.mu, search)?;
    let (c1, c12, c2) = c_constants(a, p.d);
    Ok(DecayConstants { a, b_re, b_im, c0, c1, c12, c2 })
}

/// The rational-exponential constants `C1(d)`, `C12(d)` and `C2(d)`.
pub fn c_constants(a: Interval, d: f64) -> (Interval, Interval, Interval) {
    let d = Interval::point(d);
    let one = Interval::ONE;
    let ad = a * d;
    let e2 = (-(ad * 2.0)).exp();
    let e1 = (-ad).exp();
    let inv_e = (-one).exp();
    let gap = one - e1;
    let a2 = a.sqr();
    let k = inv_e * 2.0 + one;
    let shared = (one + e2) / a + d * 2.0 + e2 * (d * 4.0 + e2 / a);

    let c1 = ((ad * 2.0 + one + e2) / a2 + e2 * (d * 4.0 + e2 / a) + ((one + e2) / a + d * 2.0) * k / (a * gap)) * 4.0
        + k.sqr() * 4.0 / (a2 * gap.sqr())
        + (shared + k / (a * gap)) * 2.0 / a;
    let c12 = (d * 2.0 + (a * 2.0).recip())
        * (d * 2.0
            + (one + e2) / (a * 2.0)
            + (d * 2.0 + (e2 + 3.0) / (a * 2.0)) / gap
            + (inv_e * 4.0 + one + e2) / (a * 2.0 * gap.sqr()))
        * 8.0;
    let c2 = (shared + (inv_e * 2.0 + e2) / (a * gap)) * 2.0 / a;
    (c1, c12, c2)
}

/// Fourier coefficients of `𝟙_Ω cosh(2a x₁)`, `𝟙_Ω cosh(2a x₂)` and
/// `𝟙_Ω cosh(2a x₁) cosh(2a x₂)`, on the D2 table of order `n`.
pub struct CoshSequences {
    pub e1: SymSequence,
    pub e2: SymSequence,
    pub e12: SymSequence,
}

/// `∫_{-d}^{d} cosh(αx) cos(π k x/d) dx = 2α sinh(αd)(-1)^k / (α² + (πk/d)²)`.
fn cosh_moment(alpha: Interval, d: f64, k: i32) -> Interval {
    let freq = Interval::pi() * (k as f64) / d;
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    alpha * 2.0 * (alpha * d).sinh() * sign / (alpha.sqr() + freq.sqr())
}

pub fn e_sequences(a: Interval, d: f64, n: usize) -> Result<CoshSequences> {
    if a.lo() <= 0.0 {
        return Err(Error::Domain(format!("decay rate {a} must be positive")));
    }
    let table = OrbitTable::shared(GroupName::D2, n)?;
    let alpha = a * 2.0;
    let moments: Vec<Interval> = (0..=n as i32).map(|k| cosh_moment(alpha, d, k)).collect();
    let two_d = Interval::point(2.0 * d);
    let m = |k: i32| moments[k.unsigned_abs() as usize];
    let e1 = table.reps().iter().map(|&(p, q)| if q == 0 { m(p) / two_d } else { Interval::ZERO }).collect();
    let e2 = table.reps().iter().map(|&(p, q)| if p == 0 { m(q) / two_d } else { Interval::ZERO }).collect();
    let e12 = table.reps().iter().map(|&(p, q)| m(p) * m(q) / two_d.sqr()).collect();
    Ok(CoshSequences {
        e1: SymSequence::from_coeffs(table.clone(), d, e1)?,
        e2: SymSequence::from_coeffs(table.clone(), d, e2)?,
        e12: SymSequence::from_coeffs(table, d, e12)?,
    })
}

/// Split a sequence into its even and odd parts in `x₂`.
///
/// For D2 and D4 data the odd part is identically zero.
pub fn x2_parity_split(v: &SymSequence) -> (SymSequence, SymSequence) {
    if v.is_even() {
        let zero = v.scale(Interval::ZERO);
        return (v.clone(), zero);
    }
    let even = v.map(|(p, q), h| (h + v.get((p, -q))) * 0.5);
    let odd = v.map(|(p, q), h| (h - v.get((p, -q))) * 0.5);
    (even, odd)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    #[test]
    fn symbol_values() {
        let mu = Interval::point(0.24);
        let z = [Interval::ZERO, Interval::ZERO];
        assert!(symbol(SymbolKind::L, z, mu).contains(1.24));
        assert!(symbol(SymbolKind::L0, z, mu).contains(-1.0));
        // 4π²|ξ|² = 1 at |ξ| = 1/(2π)
        let r = (Interval::pi() * 2.0).recip();
        let v = symbol(SymbolKind::L, [r, Interval::ZERO], mu);
        assert!(v.contains(0.24) && v.width() < 1e-14);
    }

    fn close(x: Interval, v: f64) -> bool {
        (x.mid() - v).abs() < 1e-13 * v.abs().max(1.0) && x.width() < 1e-12
    }

    #[test]
    fn decay_rate_matches_closed_form() {
        let a = decay_rate(Interval::point(0.24));
        assert!(close(a, 0.168_488_035_603_425_254));
        let (re, im) = decay_b(Interval::point(0.24), a);
        assert!(close(re, 0.238_278_065_047_964_900));
        assert!(close(im, -1.027_996_321_142_737_452));
    }

    #[test]
    fn kappa_values() {
        assert!(close(kappa(Interval::point(0.24)), 2.559_570_926_064_835_565));
        assert!(close(kappa(Interval::point(0.2)), 2.940_621_682_528_718_572));
        assert!(close(kappa(Interval::point(0.28)), 2.275_360_067_181_518_572));
    }

    #[test]
    fn cosh_sequences_limit() {
        let s = e_sequences(Interval::point(1e-8), 5.0, 3).unwrap();
        assert!((s.e1.get((0, 0)).mid() - 1.0).abs() < 1e-6);
        assert!(s.e1.get((2, 0)).mag() < 1e-6);
        assert_eq!(s.e1.get((1, 1)), Interval::ZERO);
        assert!((s.e12.get((0, 0)).mid() - 1.0).abs() < 1e-6);
    }
}
