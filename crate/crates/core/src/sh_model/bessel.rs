//! Enclosures of the decay constant `C0`.
//!
//! `C0` is the supremum over `r ≥ 0` of
//! `f(r) = e^{√2 a r} |Im K0(b r)| / √μ`, which equals the modulus of
//! `(K0(br) - K0(b̄r)) / (2i√μ)` because `K0(z̄)` is the conjugate of `K0(z)`.
//! The supremum is certified by branch and bound: cells of `r` are enclosed
//! with interval evaluations of `K0` and bisected until every cell is either
//! dominated by a proven lower bound or within the requested tolerance.
//!
//! `K0(z)` is enclosed by its ascending series for small `|z|` and by the
//! Hankel expansion with the explicit remainder bound valid for
//! `|arg z| ≤ π/2` otherwise. Since `Re b = √2 a`, the exponential weight
//! cancels the decay of `e^{-z}` exactly, so on the expansion branch the two
//! factors are combined analytically.

use crate::error::{Error, Result};
use crate::interval::{CInterval, Interval};
use crate::par;

const SERIES_TERMS: usize = 160;
const HANKEL_TERMS: usize = 48;

/// Euler-Mascheroni constant, enclosed.
fn euler_gamma() -> Interval {
    let g = 0.577_215_664_901_532_9_f64;
    Interval::new(g.next_down(), g.next_up())
}

/// Knobs for the branch-and-bound search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupSearch {
    /// Tail cut-off as a multiple of `1/a` (the cut-off is `R* = factor / a`).
    pub tail_factor: f64,
    /// Absolute tolerance on the width of the final enclosure.
    pub tol: f64,
    /// Modulus of `z = br` where the series gives way to the expansion.
    pub switch_modulus: f64,
    /// Width of the first cell, treated analytically near `r = 0`.
    pub origin_cell: f64,
    /// Maximum number of bisection rounds.
    pub max_rounds: usize,
}

impl Default for SupSearch {
    fn default() -> Self {
        SupSearch { tail_factor: 20.0, tol: 1e-4, switch_modulus: 8.0, origin_cell: 1e-3, max_rounds: 60 }
    }
}

/// Precomputed data for one value of `b`.
pub struct BesselWeight {
    b: CInterval,
    b_abs: Interval,
    sqrt_mu: Interval,
    weight_rate: Interval,
    ln_half_b: CInterval,
    /// `c_k = (b²/4)^k / (k!)²`
    series: Vec<CInterval>,
    /// `H_k c_k` with harmonic numbers `H_k`
    series_h: Vec<CInterval>,
    /// `a_k(0) b^{-k}` for the Hankel expansion, and `|a_k(0)|`
    hankel: Vec<CInterval>,
    hankel_abs: Vec<Interval>,
    prefactor: CInterval,
}

impl BesselWeight {
    /// `a > 0` is the decay rate and `b = √2 a - i b_im`.
    pub fn new(a: Interval, b_re: Interval, b_im: Interval, mu: Interval) -> Result<Self> {
        let b = CInterval::new(b_re, b_im);
        if b_re.lo() <= 0.0 || a.lo() <= 0.0 || mu.lo() <= 0.0 {
            return Err(Error::Domain("decay constants need a > 0, Re b > 0 and mu > 0".into()));
        }
        let beta = (b * b).scale(Interval::point(0.25));
        let mut series = Vec::with_capacity(SERIES_TERMS);
        let mut series_h = Vec::with_capacity(SERIES_TERMS);
        let mut c = CInterval::ONE;
        let mut h = Interval::ZERO;
        for k in 0..SERIES_TERMS {
            if k > 0 {
                let kk = Interval::point(k as f64);
                c = (c * beta).scale(kk.sqr().recip());
                h += kk.recip();
            }
            series.push(c);
            series_h.push(c.scale(h));
        }
        let binv = b.recip()?;
        let mut hankel = Vec::with_capacity(HANKEL_TERMS);
        let mut hankel_abs = Vec::with_capacity(HANKEL_TERMS);
        let mut ak = Interval::ONE;
        let mut bk = CInterval::ONE;
        for k in 0..HANKEL_TERMS {
            if k > 0 {
                let odd = Interval::point((2 * k - 1) as f64);
                ak = -(ak * odd.sqr()) / Interval::point(8.0 * k as f64);
                bk = bk * binv;
            }
            hankel.push(bk.scale(ak));
            hankel_abs.push(ak.abs());
        }
        let half_pi = Interval::pi() * 0.5;
        let prefactor = b.sqrt()?.recip()?.scale(half_pi.sqrt());
        Ok(BesselWeight {
            b,
            b_abs: b.abs(),
            sqrt_mu: mu.sqrt(),
            weight_rate: b_re,
            ln_half_b: b.scale(Interval::point(0.5)).ln()?,
            series,
            series_h,
            hankel,
            hankel_abs,
            prefactor,
        })
    }

    /// Limit of `f` at `r = 0`, namely `|arg b| / √μ`.
    pub fn value_at_origin(&self) -> Interval {
        self.b.arg().map(|t| t.abs() / self.sqrt_mu).unwrap_or(Interval::ENTIRE)
    }

    /// Sums `Σ c_k ρ^k` and `Σ H_k c_k ρ^k` from index `first`, with tail
    /// remainder, for `ρ = r² ≥ 0`.
    fn power_sums(&self, rho: Interval, first: usize) -> Result<(CInterval, CInterval)> {
        let t_mag = self.series[1].abs().hi() * rho.hi();
        let mut s0 = CInterval::ZERO;
        let mut s1 = CInterval::ZERO;
        let mut p = Interval::ONE;
        for k in first..SERIES_TERMS {
            s0 = s0 + self.series[k].scale(p);
            s1 = s1 + self.series_h[k].scale(p);
            let q = t_mag / ((k + 1) as f64).powi(2);
            let last = self.series[k].abs().hi() * rho.hi().powi((k - first) as i32);
            if k > first + 2 && q <= 0.25 {
                // terms beyond k shrink at least geometrically with ratio q
                // (2q once the harmonic factor is included)
                let tail0 = last * q / (1.0 - q);
                let tail1 = last * (k + 1) as f64 * q / (1.0 - 2.0 * q);
                if tail1 < 1e-17 * (1.0 + s1.abs().lo().max(s0.abs().lo())) || k + 1 == SERIES_TERMS {
                    let e0 = Interval::symmetric(tail0 * 1.0001);
                    let e1 = Interval::symmetric(tail1 * 1.0001);
                    return Ok((s0 + CInterval::new(e0, e0), s1 + CInterval::new(e1, e1)));
                }
            }
            p *= rho;
        }
        Err(Error::Domain(format!("K0 series did not converge for r^2 <= {}", rho.hi())))
    }

    /// Enclosure of `K0(b r)` by the ascending series, `r > 0`.
    fn k0_series(&self, r: Interval) -> Result<CInterval> {
        let (i0, s) = self.power_sums(r.sqr(), 0)?;
        let ln = self.ln_half_b + CInterval::real(r.checked_ln()? + euler_gamma());
        Ok(s - ln * i0)
    }

    /// Enclosure of `e^{Re(b) r} K0(b r)` by the Hankel expansion.
    fn weighted_k0_hankel(&self, r: Interval) -> Result<CInterval> {
        let zmin = self.b_abs.lo() * r.lo();
        // pick the truncation with the smallest remainder
        let mut best = (1usize, f64::INFINITY);
        for l in 1..HANKEL_TERMS {
            let chi = std::f64::consts::PI.sqrt() * (l as f64 / 2.0 + 1.0).sqrt();
            let bound = 2.0 * chi * (0.25 / zmin).exp() * self.hankel_abs[l].hi() / zmin.powi(l as i32);
            if bound < best.1 {
                best = (l, bound);
            }
        }
        let (l, bound) = best;
        let rinv = r.recip();
        let mut sum = CInterval::ZERO;
        let mut rp = Interval::ONE;
        for k in 0..l {
            sum = sum + self.hankel[k].scale(rp);
            rp *= rinv;
        }
        let e = Interval::symmetric(bound * 1.0001 + f64::MIN_POSITIVE);
        sum = sum + CInterval::new(e, e);
        let unit = CInterval::new(Interval::ZERO, -(self.b.im * r)).exp();
        Ok((self.prefactor * unit * sum).scale(r.sqrt().recip()))
    }

    /// Enclosure of `f` over a cell `r ⊂ (0, ∞)`.
    pub fn eval(&self, r: Interval, switch_modulus: f64) -> Result<Interval> {
        if r.lo() <= 0.0 {
            return Err(Error::Domain("cells must avoid r = 0; use eval_origin_cell".into()));
        }
        let zmin = self.b_abs.lo() * r.lo();
        let im = if zmin >= switch_modulus {
            self.weighted_k0_hankel(r)?.im
        } else {
            self.k0_series(r)?.im * (self.weight_rate * r).exp()
        };
        Ok(im.abs() / self.sqrt_mu)
    }

    /// Enclosure of `f` over `[0, δ]`, where the logarithm is handled through
    /// `r² ln r`, which is monotone near the origin.
    pub fn eval_origin_cell(&self, delta: f64) -> Result<Interval> {
        let c = self.b_abs * 0.5;
        if !(delta > 0.0 && c.hi() * delta < (-0.5f64).exp()) {
            return Err(Error::Config(format!("origin cell width {delta} too large")));
        }
        let r = Interval::new(0.0, delta);
        let rho = r.sqr();
        // I0 = 1 + r² G and S = r² H with G, H from the shifted sums
        let (g, hs) = self.power_sums(rho, 1)?;
        // r² ln(|b| r / 2) ∈ [-h(δ), 0] with h(x) = x² ln(1/(c x)) increasing on (0, δ]
        let d2 = Interval::point(delta).sqr();
        let h_delta = d2 * (c * delta).ln().abs();
        let r2_log = Interval::new(-h_delta.hi(), 0.0) + Interval::new(0.0, d2.hi()) * euler_gamma();
        let theta = self.ln_half_b.im;
        let im_k0 = -(theta * (Interval::ONE + rho * g.re)) - r2_log * g.im + rho * hs.im;
        Ok(im_k0.abs() * (self.weight_rate * r).exp() / self.sqrt_mu)
    }

    /// Majorant of `f` on `[r_star, ∞)`, from the one-term expansion.
    pub fn tail_bound(&self, r_star: f64) -> Interval {
        let z = self.b_abs.lo() * r_star;
        let rem = std::f64::consts::FRAC_PI_8 * (0.25 / z).exp() / z;
        let pref = (Interval::pi() / (self.b_abs * 2.0 * r_star)).sqrt();
        (pref * (1.0 + rem * 1.0001) / self.sqrt_mu).upper()
    }
}

/// Certified enclosure of `sup_{r ≥ 0} f(r)`.
pub fn sup_enclosure(w: &BesselWeight, a: Interval, cfg: &SupSearch) -> Result<Interval> {
    let r_star = cfg.tail_factor / a.lo();
    let delta = cfg.origin_cell;
    let origin = w.eval_origin_cell(delta)?;
    let mut lower = w.value_at_origin().lo();
    let mut upper = origin.hi();
    // graded initial cells: fine near the peak, coarse in the far field
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut x = delta;
    let mut step = delta;
    while x < r_star {
        let y = (x + step).min(r_star);
        cells.push((x, y));
        x = y;
        step = (step * 1.5).min(0.25 * (1.0 + x));
    }
    for _ in 0..cfg.max_rounds {
        if cells.is_empty() {
            break;
        }
        let evals = par::map_slice(&cells, |&(lo, hi)| {
            let cell = w.eval(Interval::new(lo, hi), cfg.switch_modulus);
            let probe = w.eval(Interval::point(0.5 * (lo + hi)), cfg.switch_modulus);
            (cell, probe)
        });
        let mut next = Vec::new();
        for (&(lo, hi), (cell, probe)) in cells.iter().zip(evals) {
            if let Ok(p) = probe {
                lower = lower.max(p.lo());
            }
            match cell {
                Ok(v) if v.hi() <= lower + cfg.tol => upper = upper.max(v.hi()),
                _ => {
                    let m = 0.5 * (lo + hi);
                    next.push((lo, m));
                    next.push((m, hi));
                }
            }
        }
        cells = next;
    }
    for &(lo, hi) in &cells {
        let v = w.eval(Interval::new(lo, hi), cfg.switch_modulus)?;
        upper = upper.max(v.hi());
    }
    let tail = w.tail_bound(r_star);
    if tail.hi() >= lower {
        return Err(Error::Config(format!(
            "tail majorant {} beyond R* = {r_star} does not fall below the supremum estimate {lower}; \
             increase the tail factor",
            tail.hi()
        )));
    }
    Ok(Interval::new(lower, upper.max(lower)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh_model::{decay_b, decay_rate};

    fn weight(mu: f64) -> (BesselWeight, Interval) {
        let mu = Interval::point(mu);
        let a = decay_rate(mu);
        let (re, im) = decay_b(mu, a);
        (BesselWeight::new(a, re, im, mu).unwrap(), a)
    }

    #[test]
    fn pointwise_values_match_oracle() {
        let (w, _) = weight(0.24);
        // high-precision values of e^{√2 a r}|Im K0(br)|/√μ
        let f0 = w.value_at_origin();
        assert!((f0.mid() - 2.741_447_796_347_73).abs() < 1e-6);
        let v = w.eval(Interval::point(1e-8), 8.0).unwrap();
        assert!((v.mid() - 2.741_447_796_347_73).abs() < 1e-6);
        // both branches agree where they overlap
        let r = Interval::point(9.0);
        let s = w.eval(r, 1e9).unwrap();
        let h = w.eval(r, 1.0).unwrap();
        assert!(s.overlaps(h), "series {s} vs expansion {h}");
        assert!(s.width() < 1e-8 && h.width() < 1e-6);
    }

    #[test]
    fn origin_cell_is_consistent() {
        let (w, _) = weight(0.24);
        let c = w.eval_origin_cell(1e-3).unwrap();
        assert!(c.contains(w.value_at_origin().mid()));
        assert!(c.contains(w.eval(Interval::point(1e-3), 8.0).unwrap().mid()));
    }

    #[test]
    fn supremum_encloses_oracle() {
        let (w, a) = weight(0.24);
        let c0 = sup_enclosure(&w, a, &SupSearch::default()).unwrap();
        assert!(c0.contains(2.825_019_396_905_879), "{c0}");
        assert!(c0.width() < 2e-4, "{c0:?}");
    }
}
