//! Certified bounds entering the radii polynomial.
//!
//! Every function here returns an [`Interval`] whose upper endpoint is the
//! quantity used downstream. Matrix norms are taken in the orthonormal basis
//! of the reduced tables, so they are `ℓ²` operator norms. Bordered matrices
//! use the coordinates of [`BorderedMatrix`], where the sequence component is
//! scaled by `√|Ω₀|`; their 2-norms are therefore norms on `ℝ × L²`.

use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::approx::{self, BorderedMatrix};
use crate::error::{Error, Result};
use crate::interval::{dot_enclosure, Interval, IntervalMatrix};
use crate::quadrature::{self, Angle, RadialSymbol};
use crate::seqspace::{Side, SymSequence};
use crate::sh_model::{self, DecayConstants, Linearization, SHParams, SymbolKind};
use crate::symmetry::{GroupName, OrbitTable};

/// Which radii-polynomial theorem a bound set feeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// The lattice group is the full symmetry group (`j ∈ {2, 4}`).
    Plain,
    /// A lattice subgroup isolates the solution; rotation averaging adds `Yₛ`, `Zₛ`.
    Symmetrized,
    /// No lattice subgroup isolates the solution; an unfolding parameter is added.
    Bordered,
}

/// `Z₂(r) = slope·r + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Z2Coeffs {
    pub slope: Interval,
    pub intercept: Interval,
}

impl Z2Coeffs {
    pub fn at(&self, r: Interval) -> Interval {
        self.slope * r + self.intercept
    }
}

/// Everything the radii check needs, plus named intermediate enclosures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub variant: Variant,
    pub y0: Interval,
    pub ys: Interval,
    pub z1: Interval,
    pub zs: Interval,
    pub z2: Z2Coeffs,
    /// Parameters the bounds were computed for.
    pub params: SHParams,
    /// `(N₀, N, N₁)`.
    pub orders: (usize, usize, usize),
    /// Intermediate quantities (`Z11`, `Zu`, `norm_B`, ...), kept for diagnostics.
    pub components: BTreeMap<String, Interval>,
}

impl BoundSet {
    /// Whether every headline enclosure has a finite upper endpoint.
    pub fn is_finite(&self) -> bool {
        [self.y0, self.ys, self.z1, self.zs, self.z2.slope, self.z2.intercept]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Spectral norm of the nonnegative matrix `[[z11, z12], [z13, z14]]`.
///
/// With `A` that matrix, the largest eigenvalue of `AᵀA` is
/// `(p + q + √((p − q)² + 4s²))/2` where `p, q` are the squared column norms
/// and `s` the column inner product. Each entry enters monotonically, so the
/// interval evaluation is an upper bound for the block operator norm.
pub fn combine_phi(z11: Interval, z12: Interval, z13: Interval, z14: Interval) -> Interval {
    let p = z11.sqr() + z13.sqr();
    let q = z12.sqr() + z14.sqr();
    let s = z11 * z12 + z13 * z14;
    let disc = ((p - q).sqr() + s.sqr() * 4.0).clamp_nonneg().sqrt();
    ((p + q + disc) * 0.5).clamp_nonneg().sqrt()
}

/// `ℛ_{k,j}`, the modulus of `Σ_{p<k} e^{2πip/j}` with the sine sum started at 1
/// (its `p = 0` term vanishes). `k` is reduced modulo `j`.
pub fn r_kj(k: i64, j: u32) -> Interval {
    assert!(j >= 2, "rotation order must be at least 2");
    let k = k.rem_euclid(j as i64) as u32;
    let (mut c, mut s) = (Interval::ZERO, Interval::ZERO);
    for p in 0..k {
        let (cp, sp) = Angle::turn(p, j).cos_sin();
        c += cp;
        if p >= 1 {
            s += sp;
        }
    }
    (c.sqr() + s.sqr()).sqrt()
}

/// `Σ_{k<j} ℛ_{k,j}`.
pub fn r_sum(j: u32) -> Interval {
    (0..j as i64).map(|k| r_kj(k, j)).sum()
}

/// The two index sums of the `Yₛ` bound: `Σ_{k,p} ℛ²_{p−k}` and
/// `Σ_{k,c,p} ℛ_{c−k}(ℛ_{k−p} + ℛ_{k−c})`.
pub fn ys_index_sums(j: u32) -> (Interval, Interval) {
    let r: Vec<Interval> = (0..j as i64).map(|k| r_kj(k, j)).collect();
    let at = |k: i64| r[k.rem_euclid(j as i64) as usize];
    let jj = j as i64;
    let mut s1 = Interval::ZERO;
    let mut s2 = Interval::ZERO;
    for k in 0..jj {
        for p in 0..jj {
            s1 += at(p - k).sqr();
        }
        for c in 0..jj {
            let outer = at(c - k);
            let inner: Interval = (0..jj).map(|p| at(k - p)).sum::<Interval>() + at(k - c) * jj as f64;
            s2 += outer * inner;
        }
    }
    (s1, s2)
}

/// `max 1/|l(ñ)|` over indices outside the `N` square.
///
/// `|l|` is radially unimodal with its minimum `μ` on `4π²|ξ|² = 1`, so the
/// maximum over the complement sits on its inner ring `|ñ| = (N+1)/(2d)`
/// when that ring lies beyond the minimum, and is `1/μ` otherwise.
pub fn tail_inv_l(n: usize, d: f64, mu: Interval) -> Interval {
    let xi = Interval::point((n + 1) as f64) / Interval::point(2.0 * d);
    let s = sh_model::radial([xi, Interval::ZERO]);
    if s.lo() >= 1.0 {
        sh_model::symbol(SymbolKind::L, [xi, Interval::ZERO], mu).recip()
    } else {
        mu.recip()
    }
}

fn vec_norm(v: &[Interval]) -> Interval {
    dot_enclosure(v, v).clamp_nonneg().sqrt()
}

fn max_one(x: Interval) -> Interval {
    x.max(Interval::ONE)
}

fn checked_root(x: Interval, what: &str) -> Result<Interval> {
    if x.hi() < 0.0 {
        return Err(Error::Inconsistency(format!("{what}: negative radicand {x}")));
    }
    Ok(x.clamp_nonneg().sqrt())
}

fn check_orders(u0: &SymSequence, n: usize) -> Result<()> {
    if n == 0 || n > u0.order() {
        return Err(Error::Config(format!("need 0 < N <= N0, got N={n}, N0={}", u0.order())));
    }
    Ok(())
}

/// `π^N 𝕍 π_N 𝕍 π^N = π^N(V*V)π^N − (π^N 𝕍 π^N)²` for the convolution by `v`.
///
/// `v` must have order at most `2N` so that every product term is resolved.
fn tail_gram(v: &SymSequence, n: usize) -> Result<IntervalMatrix> {
    let c = v.conv_operator_matrix(n)?;
    let vv = v.convolve(v, 2 * n)?;
    vv.conv_operator_matrix(n)?.sub(&c.matmul(&c)?)
}

/// `‖B^N F(U₀)‖` assembled with the tail `‖π_N F(U₀)‖₂`.
fn residual_split(u0: &SymSequence, p: &SHParams, n: usize) -> Result<(Vec<Interval>, Interval)> {
    let f = sh_model::residual_f(u0, p)?;
    let head = f.project(n as i64, Side::Inside).with_order(n)?.orthonormal_coords();
    let tail = f.project(n as i64, Side::Outside).norm2();
    Ok((head, tail))
}

/// `𝒴₀ = √|Ω₀| (‖B^N π^N F‖₂² + ‖π_N F‖₂²)^{1/2}`.
pub fn bound_y0(u0: &SymSequence, bn: &IntervalMatrix, p: &SHParams, n: usize) -> Result<Interval> {
    check_orders(u0, n)?;
    let (head, tail) = residual_split(u0, p, n)?;
    let bf = bn.matvec(&head)?;
    Ok(u0.domain_area().sqrt() * (dot_enclosure(&bf, &bf) + tail.sqr()).clamp_nonneg().sqrt())
}

/// `𝒴₀` for the bordered system: the residual has a vanishing scalar part.
pub fn bound_y0_bordered(u0: &SymSequence, bn: &BorderedMatrix, p: &SHParams, n: usize) -> Result<Interval> {
    check_orders(u0, n)?;
    let (head, tail) = residual_split(u0, p, n)?;
    let scale = u0.domain_area().sqrt();
    let mut x = vec![Interval::ZERO];
    x.extend(head.iter().map(|v| *v * scale));
    let bf = bn.to_matrix().matvec(&x)?;
    Ok((dot_enclosure(&bf, &bf) + u0.domain_area() * tail.sqr()).clamp_nonneg().sqrt())
}

/// The four blocks of `Z₁` before combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Z1Blocks {
    pub z11: Interval,
    pub z12: Interval,
    pub z13: Interval,
    pub z14: Interval,
}

impl Z1Blocks {
    pub fn combined(&self) -> Interval {
        combine_phi(self.z11, self.z12, self.z13, self.z14)
    }
}

/// `Z₁,₃` and `Z₁,₄`, shared by both Z₁ lemmas, plus the tail Gram matrix.
fn z1_lower_blocks(lin: &Linearization, mu: Interval, n: usize) -> Result<(Interval, Interval, IntervalMatrix)> {
    let v = &lin.v0n;
    let gram = tail_gram(v, n)?;
    let table = OrbitTable::shared(v.group(), n)?;
    let inv_l: Vec<Interval> = table.reps().iter().map(|&m| sh_model::l_at(m, v.d(), mu).recip()).collect();
    let scaled = IntervalMatrix::from_fn(gram.rows(), gram.cols(), |i, k| gram.get(i, k) * inv_l[i] * inv_l[k]);
    let z13 = scaled.norm2_upper().upper().clamp_nonneg().sqrt();
    let z14 = tail_inv_l(n, v.d(), mu) * v.norm1();
    Ok((z13, z14, gram))
}

/// `Z₁,₁ … Z₁,₄` for the plain finite section `M^N = π^N + V₀^N L⁻¹`.
pub fn z1_blocks_plain(lin: &Linearization, bn: &IntervalMatrix, mu: Interval, n: usize) -> Result<Z1Blocks> {
    let m = approx::galerkin_operator(&lin.v0n, mu, n)?;
    if m.rows() != bn.rows() {
        return Err(Error::Shape(format!("B^N has size {} but the section has {}", bn.rows(), m.rows())));
    }
    let (z13, z14, gram) = z1_lower_blocks(lin, mu, n)?;
    let defect = IntervalMatrix::identity(m.rows()).sub(&bn.matmul(&m)?)?;
    let z11 = defect.norm2_upper().upper();
    let bqb = bn.matmul(&gram)?.matmul(&bn.transpose())?;
    let z12 = tail_inv_l(n, lin.v0n.d(), mu) * bqb.norm2_upper().upper().clamp_nonneg().sqrt();
    debug!("Z1 blocks: {z11} {z12} {z13} {z14}");
    Ok(Z1Blocks { z11, z12, z13, z14 })
}

/// The `𝒵ᵤ` bound on the periodization error of `L⁻¹` against `v₀^N`.
///
/// The cosh sequences live on the D2 table; D4 data is paired on that table
/// and reflection-only data restricts them instead.
pub fn bound_zu(v0n: &SymSequence, dc: &DecayConstants, n: usize) -> Result<Interval> {
    if v0n.coeffs().iter().all(|c| *c == Interval::ZERO) {
        return Ok(Interval::ZERO);
    }
    let d = v0n.d();
    let e = sh_model::e_sequences(dc.a, d, 4 * n)?;
    let (v, e1, e2, e12) = match v0n.group() {
        GroupName::D4 => (v0n.restrict_group(GroupName::D2)?, e.e1, e.e2, e.e12),
        GroupName::D2 => (v0n.clone(), e.e1, e.e2, e.e12),
        GroupName::Z2xZ1 => (
            v0n.clone(),
            e.e1.restrict_group(GroupName::Z2xZ1)?,
            e.e2.restrict_group(GroupName::Z2xZ1)?,
            e.e12.restrict_group(GroupName::Z2xZ1)?,
        ),
        g => return Err(Error::UnsupportedGroup(format!("no cosh pairing for {g}"))),
    };
    let area = v.domain_area();
    let ad = dc.a * d;
    let e_2ad = (-(ad * 2.0)).exp();
    let e_4ad = (-(ad * 4.0)).exp();
    let c0sq = dc.c0.sqr();
    let pre = c0sq * e_2ad * area / dc.a.sqr();
    let post = e_4ad * c0sq * area;
    let sum12 = e1.add(&e2)?;
    let weighted = e1.scale(dc.c1).add(&e12.scale(dc.c12))?.add(&e2.scale(dc.c2))?;
    let pair = |x: &SymSequence, k: &SymSequence| -> Result<Interval> {
        let conv = x.convolve(k, x.order())?;
        x.inner2(&conv)
    };
    let zu1 = checked_root(pre * pair(&v, &sum12)?, "Zu,1")?;
    let (even, odd) = sh_model::x2_parity_split(&v);
    let mut zu2 = Interval::ZERO;
    for part in [&even, &odd] {
        if part.coeffs().iter().all(|c| *c == Interval::ZERO) {
            continue;
        }
        zu2 += checked_root(pre * pair(part, &sum12)? + post * pair(part, &weighted)?, "Zu,2")?;
    }
    Ok((zu1.sqr() + zu2.sqr()).sqrt())
}

/// `𝒵₁ = Z₁ + max{1,‖B^N‖}(𝒵ᵤ + ‖V₀ − V₀^N‖₁/μ)` with `Z₁ = φ(Z₁,₁, …, Z₁,₄)`.
pub fn bound_z1_plain(blocks: &Z1Blocks, lin: &Linearization, norm_b: Interval, zu: Interval, mu: Interval, n: usize) -> Interval {
    let spill = lin.v0.project(2 * n as i64, Side::Outside).norm1() / mu;
    blocks.combined() + max_one(norm_b) * (zu + spill)
}

/// Spectral data of the bordered approximate inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BorderedNorms {
    /// `‖b₁₂‖₂`.
    pub b12: Interval,
    /// `‖b₂₂‖₂`.
    pub b22: Interval,
    /// `max{1, ‖B^N‖}`, the norm of the full operator including the tail identity.
    pub full: Interval,
}

pub fn bordered_norms(bn: &BorderedMatrix) -> BorderedNorms {
    BorderedNorms {
        b12: vec_norm(&bn.row),
        b22: bn.block.norm2_upper().upper(),
        full: max_one(bn.to_matrix().norm2_upper().upper()),
    }
}

/// `C_B = (‖b₁₂‖² + max{1,‖b₂₂‖}²)^{1/2}`.
pub fn bound_cb(bn: &BorderedMatrix) -> Interval {
    let norms = bordered_norms(bn);
    (norms.b12.sqr() + max_one(norms.b22).sqr()).sqrt()
}

/// `B` restricted to its sequence columns: the map `(0, x) ↦ B(0, x)`.
pub fn sequence_columns(bn: &BorderedMatrix) -> IntervalMatrix {
    let full = bn.to_matrix();
    full.block(0, 1, full.rows(), full.cols() - 1)
}

/// `Z₁,₁ … Z₁,₄` for the bordered section `[[0, b*], [b, I + V₀^N L⁻¹]]`.
pub fn z1_blocks_bordered(
    u0: &SymSequence,
    lin: &Linearization,
    bn: &BorderedMatrix,
    p: &SHParams,
    n: usize,
    rho: Interval,
) -> Result<Z1Blocks> {
    let mu = p.mu;
    let m = approx::bordered_operator(u0, &lin.v0n, p, n, rho)?;
    let b = bn.to_matrix();
    if m.rows() != b.rows() {
        return Err(Error::Shape(format!("B^N has size {} but the section has {}", b.rows(), m.rows())));
    }
    let (z13, z14, gram) = z1_lower_blocks(lin, mu, n)?;
    let z11 = IntervalMatrix::identity(m.rows()).sub(&b.matmul(&m)?)?.norm2_upper().upper();
    // the border of M(0,U0) lives on π^N, so only the convolution survives π_N
    let cols = sequence_columns(bn);
    let bqb = cols.matmul(&gram)?.matmul(&cols.transpose())?;
    let z12 = tail_inv_l(n, u0.d(), mu) * bqb.norm2_upper().upper().clamp_nonneg().sqrt();
    debug!("bordered Z1 blocks: {z11} {z12} {z13} {z14}");
    Ok(Z1Blocks { z11, z12, z13, z14 })
}

/// Bordered `𝒵₁ = Z₁ + C_B 𝒵ᵤ + ‖𝔹‖ φ(0, t, t, ‖V₀^N − V₀‖₁/μ)` with
/// `t = (√|Ω₀|/ρ)‖∂₂U₀^N − ∂₂U₀‖₂`.
#[allow(clippy::too_many_arguments)]
pub fn bound_z1_bordered(
    blocks: &Z1Blocks,
    u0: &SymSequence,
    lin: &Linearization,
    norms: &BorderedNorms,
    cb: Interval,
    zu: Interval,
    mu: Interval,
    n: usize,
    rho: Interval,
) -> Result<Interval> {
    let d_tail = u0.project(n as i64, Side::Outside).derivative(1)?.norm2();
    let t = u0.domain_area().sqrt() / rho * d_tail;
    let spill = lin.v0.project(2 * n as i64, Side::Outside).norm1() / mu;
    Ok(blocks.combined() + cb * zu + norms.full * combine_phi(Interval::ZERO, t, t, spill))
}

/// Rotation defects `φ(K u₀, R_{2π/j})` for the multipliers the bounds use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationDefects {
    /// `φ(u₀)`.
    pub u0: Interval,
    /// `φ(𝕃₀u₀)` with `𝕃₀ = Δ − I`.
    pub l0u0: Interval,
    /// `φ(𝕃₁u₀)` with `𝕃₁ = (I + Δ)² + I`; only needed by the bordered bounds.
    pub l1u0: Interval,
    /// Whether every quadrature met its tolerance.
    pub tol_met: bool,
}

impl RotationDefects {
    pub fn zero() -> Self {
        RotationDefects { u0: Interval::ZERO, l0u0: Interval::ZERO, l1u0: Interval::ZERO, tol_met: true }
    }
}

/// Compute the rotation defects of `u₀` at the angle `2π/j`, truncating the
/// overlap quadrature at `n1`.
pub fn rotation_defects(u0: &SymSequence, j: u32, mu: Interval, n1: usize, tol: f64, with_l1: bool) -> Result<RotationDefects> {
    let theta = Angle::turn(1, j);
    let l0u = u0.apply_symbol(|xi| sh_model::symbol(SymbolKind::L0, xi, mu));
    let (a, b) = crate::par::join(
        || quadrature::phi_rotation(u0, theta, n1, tol),
        || quadrature::phi_rotation(&l0u, theta, n1, tol),
    );
    let (a, b) = (a?, b?);
    let c = if with_l1 {
        let l1u = u0.apply_symbol(|xi| sh_model::symbol(SymbolKind::L1, xi, mu));
        Some(quadrature::phi_rotation(&l1u, theta, n1, tol)?)
    } else {
        None
    };
    Ok(RotationDefects {
        u0: a.value,
        l0u0: b.value,
        l1u0: c.map_or(Interval::ZERO, |r| r.value),
        tol_met: a.tol_met && b.tol_met && c.is_none_or(|r| r.tol_met),
    })
}

/// `𝒴ₛ,₁ + 𝒴ₛ,₂`; the caller multiplies by `max{1,‖B^N‖}` or `C_B`.
pub fn bound_ys_core(u0: &SymSequence, j: u32, p: &SHParams, phi: &RotationDefects) -> Interval {
    let (s1, s2) = ys_index_sums(j);
    let jf = Interval::point(j as f64);
    let inv_l0 = sh_model::inv_l0_norm();
    let ys1 = inv_l0 * p.nu1.abs() / (jf.sqr() * 2.0) * phi.u0 * phi.l0u0 * s1;
    let ys2 = inv_l0 * p.nu2.abs() / jf.powi(3) * u0.norm1() * phi.u0 * phi.l0u0 * s2;
    ys1 + ys2
}

/// `𝒴ₛ = factor·(𝒴ₛ,₁ + 𝒴ₛ,₂)`.
pub fn bound_ys(u0: &SymSequence, j: u32, p: &SHParams, phi: &RotationDefects, factor: Interval) -> Interval {
    factor * bound_ys_core(u0, j, p, phi)
}

/// `2κ(|ν₁| + 3|ν₂|‖U₀‖₁)(1/j)φ(u₀)Σℛ`, the convolution part of `Zₛ`.
fn zs_convolution(u0: &SymSequence, j: u32, p: &SHParams, phi_u0: Interval) -> Interval {
    let kappa = sh_model::kappa(p.mu);
    kappa * 2.0 * (p.nu1.abs() + p.nu2.abs() * 3.0 * u0.norm1()) / j as f64 * phi_u0 * r_sum(j)
}

/// `𝒵ₛ = 2κ max{1,‖B^N‖}(|ν₁| + 3|ν₂|‖U₀‖₁)(1/j)φ(u₀)Σℛ`.
pub fn bound_zs(u0: &SymSequence, j: u32, p: &SHParams, phi: &RotationDefects, norm_b: Interval) -> Interval {
    max_one(norm_b) * zs_convolution(u0, j, p, phi.u0)
}

/// Bordered `𝒵ₛ = ‖𝔹‖ φ(0, 𝒵ₛ,₁, 𝒵ₛ,₁, 𝒵ₛ,₂)`.
pub fn bound_zs_bordered(
    u0: &SymSequence,
    j: u32,
    p: &SHParams,
    phi: &RotationDefects,
    norms: &BorderedNorms,
    rho: Interval,
    kappa_partial: Interval,
) -> Interval {
    let zs1 = kappa_partial / (rho * j as f64) * phi.l1u0 * r_sum(j);
    let zs2 = zs_convolution(u0, j, p, phi.u0);
    norms.full * combine_phi(Interval::ZERO, zs1, zs1, zs2)
}

/// `κ_∂ ≥ ‖l_∂/l₁‖₂`.
pub fn kappa_partial() -> Result<Interval> {
    quadrature::symbol_ratio_l2(RadialSymbol::Dx2, RadialSymbol::L1, 200.0)
}

/// `‖𝕎 C*‖₂` for `𝕎` the convolution by `w` and `C` a matrix acting on the
/// order-`n` section: the square root of `‖C (W*W) C*‖₂`, which accounts for
/// the part of `𝕎C*` leaving the section.
fn conv_after(w: &SymSequence, c: &IntervalMatrix, n: usize) -> Result<Interval> {
    let ww = w.convolve(w, 2 * n)?;
    let g = ww.conv_operator_matrix(n)?;
    let prod = c.matmul(&g)?.matmul(&c.transpose())?;
    Ok(prod.norm2_upper().upper().clamp_nonneg().sqrt())
}

/// Extra `Z₂` terms from rotation averaging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Z2Extra<'a> {
    None,
    /// `𝒵₂,₂` with the rotation defect and order `j`.
    Symmetrized { j: u32, phi: &'a RotationDefects },
    /// `𝒵₂,₂` plus the bordered `𝒵₂,₃`, `𝒵₂,₄`.
    Bordered { j: u32, phi: &'a RotationDefects, b12: Interval },
}

/// `𝒵₂,₂ = 6κ²|ν₂| max{1,‖B‖} φ(u₀) Σℛ / j`, the averaging defect of the cubic term.
pub fn bound_z22(j: u32, p: &SHParams, phi: &RotationDefects, norm_b: Interval) -> Interval {
    sh_model::kappa_squared(p.mu) * 6.0 * p.nu2.abs() / j as f64 * max_one(norm_b) * phi.u0 * r_sum(j)
}

/// Affine coefficients of `𝒵₂`.
///
/// `norm_b` is `‖B^N‖` (plain) or `‖𝔹‖` (bordered) and `cols` the matrix whose
/// composition with `𝕎` is measured (`B^N`, or the sequence columns of the
/// bordered inverse).
pub fn bound_z2(w: &SymSequence, cols: &IntervalMatrix, norm_b: Interval, p: &SHParams, n: usize, extra: Z2Extra<'_>) -> Result<Z2Coeffs> {
    let mu = p.mu;
    let kappa = sh_model::kappa(mu);
    let k2 = sh_model::kappa_squared(mu);
    let nb = max_one(norm_b);
    let w_l1 = w.norm1();
    let wb = conv_after(w, cols, n)?;
    let mut slope = p.nu2.abs() * 3.0 * k2 / mu * nb;
    let mut intercept = kappa / mu * (p.nu1.abs() * 2.0).max((wb.sqr() + w_l1.sqr()).sqrt());
    let z22 = |j: u32, phi: &RotationDefects| bound_z22(j, p, phi, norm_b);
    match extra {
        Z2Extra::None => {}
        Z2Extra::Symmetrized { j, phi } => intercept += z22(j, phi),
        Z2Extra::Bordered { j, phi, b12 } => {
            // ‖𝕎‖₂ ≤ ‖W‖₁
            let z23 = kappa / mu * (w_l1.sqr() * 2.0).sqrt();
            let z24 = k2 * 6.0 * p.nu2.abs() / j as f64 * phi.u0 * r_sum(j);
            let m = max_one(b12);
            slope += m * z23;
            intercept += z22(j, phi) + m * z24;
        }
    }
    Ok(Z2Coeffs { slope, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::OrbitTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(x: Interval, v: f64, tol: f64) -> bool {
        (x.mid() - v).abs() <= tol && x.rad() <= tol
    }

    fn random_seq(group: GroupName, order: usize, d: f64, amp: f64, seed: u64) -> SymSequence {
        let table = OrbitTable::shared(group, order).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = table
            .reps()
            .iter()
            .map(|&(a, b)| {
                let decay = 0.5f64.powi(a.abs().max(b.abs()));
                Interval::point(amp * decay * rng.gen_range(-1.0..1.0))
            })
            .collect();
        SymSequence::from_coeffs(table, d, c).unwrap()
    }

    fn zero_seq(group: GroupName, order: usize, d: f64) -> SymSequence {
        SymSequence::zeros(OrbitTable::shared(group, order).unwrap(), d).unwrap()
    }

    #[test]
    fn combiner_examples() {
        let z = Interval::ZERO;
        let o = Interval::ONE;
        assert!(combine_phi(o, z, z, z).contains(1.0));
        assert_eq!(combine_phi(z, z, z, z).hi(), 0.0);
        assert!(close(combine_phi(o, o, o, o), 2.0, 1e-14));
        // diagonal: the larger entry
        assert!(close(combine_phi(Interval::point(3.0), z, z, Interval::point(2.0)), 3.0, 1e-14));
    }

    #[test]
    fn combiner_bounds_dense_block_norms() {
        // a random 2x2 block operator with 3x3 blocks
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = nalgebra::DMatrix::<f64>::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
            let nrm = |r: usize, c: usize| Interval::point(m.view((r, c), (3, 3)).into_owned().singular_values().max() * (1.0 + 1e-12));
            let phi = combine_phi(nrm(0, 0), nrm(0, 3), nrm(3, 0), nrm(3, 3));
            assert!(m.singular_values().max() <= phi.hi());
        }
    }

    #[test]
    fn rotation_sums() {
        assert_eq!(r_kj(0, 5).hi(), 0.0);
        assert!(close(r_kj(1, 7), 1.0, 1e-14));
        assert!(close(r_kj(2, 4), 2f64.sqrt(), 1e-14));
        // indices reduce modulo j
        assert_eq!(r_kj(-2, 4), r_kj(2, 4));
        assert_eq!(r_kj(6, 4), r_kj(2, 4));
        for j in [3u32, 5, 6, 12] {
            let direct: f64 = (0..j)
                .map(|k| {
                    let c: f64 = (0..k).map(|p| (2.0 * std::f64::consts::PI * p as f64 / j as f64).cos()).sum();
                    let s: f64 = (1..k).map(|p| (2.0 * std::f64::consts::PI * p as f64 / j as f64).sin()).sum();
                    c.hypot(s)
                })
                .sum();
            assert!(close(r_sum(j), direct, 1e-12), "j={j}");
        }
    }

    #[test]
    fn tail_maximum_shrinks_with_n() {
        let mu = Interval::point(0.24);
        // the inner ring lies before the symbol minimum: 1/μ
        assert!(close(tail_inv_l(2, 20.0, mu), 1.0 / 0.24, 1e-12));
        let mut prev = f64::INFINITY;
        for n in 5..40 {
            let t = tail_inv_l(n, 20.0, mu);
            assert!(t.hi() <= prev);
            prev = t.hi();
        }
        // spot check against the symbol at n = 30
        let s = (2.0 * std::f64::consts::PI * 31.0 / 40.0).powi(2);
        assert!(close(tail_inv_l(30, 20.0, mu), 1.0 / ((1.0 - s).powi(2) + 0.24), 1e-12));
    }

    #[test]
    fn y0_vanishes_and_grows_with_nonlinearity() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 6.0, 2).unwrap();
        let zero = zero_seq(GroupName::D2, 4, 6.0);
        let bn = approx::build_bn(&zero, &p, 3).unwrap();
        assert!(bound_y0(&zero, &bn, &p, 3).unwrap().hi() < 1e-150);

        let u0 = random_seq(GroupName::D2, 4, 6.0, 0.5, 1);
        let bn = approx::build_bn(&u0, &p, 3).unwrap();
        let y = bound_y0(&u0, &bn, &p, 3).unwrap();
        let p2 = SHParams::from_f64(0.24, -3.2, 2.0, 6.0, 2).unwrap();
        let y2 = bound_y0(&u0, &bn, &p2, 3).unwrap();
        assert!(y2.lo() > y.hi(), "{y} {y2}");
    }

    #[test]
    fn y0_matches_dense_recomputation() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 6.0, 2).unwrap();
        let u0 = random_seq(GroupName::D2, 3, 6.0, 0.4, 2);
        let bn = approx::build_bn(&u0, &p, 2).unwrap();
        let y = bound_y0(&u0, &bn, &p, 2).unwrap();
        let f = sh_model::residual_f(&u0, &p).unwrap();
        let head: Vec<f64> = f.project(2, Side::Inside).with_order(2).unwrap().orthonormal_coords().iter().map(|v| v.mid()).collect();
        let b = bn.mid_matrix();
        let bf = &b * nalgebra::DVector::from_vec(head);
        let tail = f.project(2, Side::Outside).norm2().mid();
        let expect = 12.0 * (bf.norm_squared() + tail * tail).sqrt();
        assert!(close(y, expect, 1e-12 * expect.max(1.0)), "{y} vs {expect}");
    }

    #[test]
    fn z1_vanishes_for_linear_problem() {
        let p = SHParams::from_f64(0.24, 0.0, 0.0, 6.0, 2).unwrap();
        let u0 = random_seq(GroupName::D2, 3, 6.0, 0.4, 3);
        let lin = sh_model::v0_and_w(&u0, &p, 3).unwrap();
        let bn = IntervalMatrix::identity(OrbitTable::shared(GroupName::D2, 3).unwrap().len());
        let blocks = z1_blocks_plain(&lin, &bn, p.mu, 3).unwrap();
        assert!(blocks.combined().hi() < 1e-13);
        let z1 = bound_z1_plain(&blocks, &lin, Interval::ONE, Interval::ZERO, p.mu, 3);
        assert!(z1.hi() < 1e-13, "{z1}");
    }

    #[test]
    fn z14_is_below_young_bound() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 6.0, 2).unwrap();
        let u0 = random_seq(GroupName::D2, 3, 6.0, 0.4, 4);
        let lin = sh_model::v0_and_w(&u0, &p, 3).unwrap();
        let bn = approx::build_bn(&u0, &p, 3).unwrap();
        let blocks = z1_blocks_plain(&lin, &bn, p.mu, 3).unwrap();
        assert!(blocks.z14.hi() <= (lin.v0n.norm1() / p.mu).hi());
        // with B^N the inverse of the midpoint section, Z11 is rounding-sized
        assert!(blocks.z11.hi() < 1e-10, "{}", blocks.z11);
    }

    fn decay(p: &SHParams) -> DecayConstants {
        sh_model::decay_constants(p, &sh_model::SupSearch::default()).unwrap()
    }

    #[test]
    fn zu_vanishes_and_decays_with_d() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 20.0, 2).unwrap();
        let dc = decay(&p);
        let zero = zero_seq(GroupName::D2, 4, 20.0);
        assert_eq!(bound_zu(&zero, &dc, 2).unwrap().hi(), 0.0);
        // one localized profile sampled on growing domains: its boundary
        // values shrink faster than the cosh weights grow
        let shape = approx::GuessShape { alpha: 0.5, beta: 0.5, ring_radius: 0.0 };
        let mut prev = f64::INFINITY;
        for d in [20.0, 30.0, 40.0] {
            let p = SHParams::from_f64(0.24, -1.6, 1.0, d, 2).unwrap();
            let dc = decay(&p);
            let n = (1.5 * d) as usize;
            let u0 = approx::initial_guess(2, shape, d, n).unwrap();
            let lin = sh_model::v0_and_w(&u0, &p, n).unwrap();
            let zu = bound_zu(&lin.v0n, &dc, n).unwrap();
            assert!(zu.hi() < prev, "d={d}: {zu}");
            prev = zu.hi();
        }
    }

    #[test]
    fn cosh_pairing_is_a_positive_form() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 5.0, 2).unwrap();
        let a = sh_model::decay_rate(p.mu);
        let e = sh_model::e_sequences(a, 5.0, 8).unwrap();
        let e1 = e.e1.restrict_group(GroupName::Z2xZ1).unwrap();
        for seed in 0..10 {
            let v = random_seq(GroupName::Z2xZ1, 2, 5.0, 1.0, 100 + seed);
            let val = v.inner2(&v.convolve(&e1, 2).unwrap()).unwrap();
            // full-grid quadratic form Σ conj(c_m) E_{m-k} c_k in the
            // exponential basis, c_m = ((h_m + h_-m) - i(h_m - h_-m))/2
            let vg = v.unfold();
            let eg = e1.unfold();
            let c = |m: (i32, i32)| {
                let (h, hn) = (vg.get(m).mid(), vg.get((-m.0, -m.1)).mid());
                ((h + hn) / 2.0, (hn - h) / 2.0)
            };
            let mut dense = 0.0;
            for m1 in -2..=2 {
                for m2 in -2..=2 {
                    for k1 in -2..=2i32 {
                        for k2 in -2..=2i32 {
                            let (a, b) = (c((m1, m2)), c((k1, k2)));
                            dense += eg.get((m1 - k1, m2 - k2)).mid() * (a.0 * b.0 + a.1 * b.1);
                        }
                    }
                }
            }
            assert!(val.hi() >= -1e-12, "{val}");
            assert!((val.mid() - dense).abs() < 1e-9 * dense.abs().max(1.0), "{val} vs {dense}");
        }
    }

    #[test]
    fn cb_examples() {
        let n = 3;
        let id = IntervalMatrix::identity(n);
        let bm = |row: Vec<Interval>| BorderedMatrix { corner: Interval::ZERO, row, col: vec![Interval::ZERO; n], block: id.clone() };
        assert!(close(bound_cb(&bm(vec![Interval::ZERO; n])), 1.0, 1e-14));
        let unit = vec![Interval::ONE, Interval::ZERO, Interval::ZERO];
        assert!(close(bound_cb(&bm(unit)), 2f64.sqrt(), 1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let row = (0..n).map(|_| Interval::point(rng.gen_range(-2.0..2.0))).collect();
            assert!(bound_cb(&bm(row)).lo() >= 1.0);
        }
    }

    fn d4_data() -> SymSequence {
        random_seq(GroupName::D4, 4, 6.0, 0.5, 11)
    }

    #[test]
    fn symmetric_data_has_no_rotation_defect() {
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 6.0, 4).unwrap();
        let u0 = d4_data();
        let phi = rotation_defects(&u0, 4, p.mu, 4, 1e-10, true).unwrap();
        assert!(phi.u0.hi() < 1e-12 && phi.l0u0.hi() < 1e-12 && phi.l1u0.hi() < 1e-12, "{phi:?}");
        assert!(bound_ys(&u0, 4, &p, &phi, Interval::point(3.0)).hi() < 1e-20);
        assert!(bound_zs(&u0, 4, &p, &phi, Interval::point(3.0)).hi() < 1e-10);
        // the same data viewed as reflection-only data in the bordered bounds
        let z = u0.restrict_group(GroupName::Z2xZ1).unwrap();
        let phi_z = rotation_defects(&z, 4, p.mu, 4, 1e-10, true).unwrap();
        let norms = BorderedNorms { b12: Interval::ONE, b22: Interval::ONE, full: Interval::point(2.0) };
        assert!(bound_zs_bordered(&z, 4, &p, &phi_z, &norms, Interval::ONE, Interval::ONE).hi() < 1e-10);
    }

    #[test]
    fn ys_is_linear_in_nu1_without_cubic_term() {
        let u0 = random_seq(GroupName::D2, 3, 6.0, 0.5, 12);
        let phi = RotationDefects { u0: Interval::point(0.3), l0u0: Interval::point(0.7), l1u0: Interval::ZERO, tol_met: true };
        let y = |nu1: f64| {
            let p = SHParams::from_f64(0.24, nu1, 0.0, 6.0, 6).unwrap();
            bound_ys(&u0, 6, &p, &phi, Interval::ONE)
        };
        let (a, b) = (y(-1.0), y(-2.5));
        assert!(close(b, 2.5 * a.mid(), 1e-13));
        // closed form of the ν₁ part
        let (s1, _) = ys_index_sums(6);
        let expect = 1.0 / (2.0 * std::f64::consts::PI.sqrt()) / 72.0 * 0.3 * 0.7 * s1.mid();
        assert!(close(a, expect, 1e-13));
    }

    #[test]
    fn zs_scales_with_amplitude_norm() {
        let u0 = random_seq(GroupName::D2, 3, 6.0, 0.5, 13);
        let half = u0.scale(Interval::point(0.5));
        let p = SHParams::from_f64(0.24, 0.0, 1.0, 6.0, 6).unwrap();
        let phi = RotationDefects { u0: Interval::point(0.2), l0u0: Interval::ZERO, l1u0: Interval::ZERO, tol_met: true };
        let a = bound_zs(&u0, 6, &p, &phi, Interval::point(2.0));
        let b = bound_zs(&half, 6, &p, &phi, Interval::point(2.0));
        assert!(close(b, 0.5 * a.mid(), 1e-13));
    }

    #[test]
    fn bordered_zs_scales_inversely_with_rho() {
        let u0 = random_seq(GroupName::Z2xZ1, 3, 6.0, 0.5, 14);
        let p = SHParams::from_f64(0.24, 0.0, 0.0, 6.0, 5).unwrap();
        let phi = RotationDefects { u0: Interval::point(0.2), l0u0: Interval::ZERO, l1u0: Interval::point(0.4), tol_met: true };
        let norms = BorderedNorms { b12: Interval::ONE, b22: Interval::ONE, full: Interval::point(1.5) };
        let kp = Interval::point(0.26);
        let a = bound_zs_bordered(&u0, 5, &p, &phi, &norms, Interval::ONE, kp);
        let b = bound_zs_bordered(&u0, 5, &p, &phi, &norms, Interval::point(2.0), kp);
        assert!(close(b, 0.5 * a.mid(), 1e-13));
        assert!(close(a, 1.5 * 0.26 / 5.0 * 0.4 * r_sum(5).mid(), 1e-13));
    }

    #[test]
    fn z2_shape() {
        let p = SHParams::from_f64(0.24, -1.6, 0.0, 6.0, 4).unwrap();
        let u0 = d4_data();
        let lin = sh_model::v0_and_w(&u0, &p, 3).unwrap();
        let bn = approx::build_bn(&u0, &p, 3).unwrap();
        let nb = bn.norm2_upper().upper();
        let phi = rotation_defects(&u0, 4, p.mu, 4, 1e-10, false).unwrap();
        let z2 = bound_z2(&lin.w, &bn, nb, &p, 3, Z2Extra::Symmetrized { j: 4, phi: &phi }).unwrap();
        assert_eq!(z2.slope.hi(), 0.0);
        let floor = sh_model::kappa(p.mu) * 3.2 / p.mu;
        assert!(z2.intercept.hi() >= floor.lo());
        let p = SHParams::from_f64(0.24, -1.6, 1.0, 6.0, 4).unwrap();
        let lin = sh_model::v0_and_w(&u0, &p, 3).unwrap();
        let plain = bound_z2(&lin.w, &bn, nb, &p, 3, Z2Extra::None).unwrap();
        let sym = bound_z2(&lin.w, &bn, nb, &p, 3, Z2Extra::Symmetrized { j: 4, phi: &phi }).unwrap();
        assert_eq!(plain, sym);
    }

    #[test]
    fn bordered_z1_in_the_small_amplitude_limit() {
        let d = 6.0;
        let p = SHParams::from_f64(0.24, -1.6, 1.0, d, 5).unwrap();
        let mut u0 = random_seq(GroupName::Z2xZ1, 3, d, 1e-6, 15);
        // make sure the x2-derivative is nonzero
        u0 = u0.add(&SymSequence::delta(u0.table().clone(), d, (0, 1), Interval::point(1e-6)).unwrap()).unwrap();
        let n = 3;
        let rho = approx::default_rho(&u0).unwrap();
        let lin = sh_model::v0_and_w(&u0, &p, n).unwrap();
        let bn = approx::build_bn_bordered(&u0, &p, n, rho).unwrap();
        let blocks = z1_blocks_bordered(&u0, &lin, &bn, &p, n, rho).unwrap();
        let norms = bordered_norms(&bn);
        let z1 = bound_z1_bordered(&blocks, &u0, &lin, &norms, bound_cb(&bn), Interval::ZERO, p.mu, n, rho).unwrap();
        assert!(z1.hi() < 1e-4, "{z1}");
    }
}
