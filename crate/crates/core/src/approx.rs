//! Non-rigorous construction of candidate solutions and approximate
//! inverses. Everything here runs in binary64; the results are converted to
//! thin intervals and only their exact values matter downstream.

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalMatrix};
use crate::par;
use crate::seqspace::{Side, SymSequence};
use crate::sh_model::{self, SHParams};
use crate::symmetry::{maximal_subgroup, GroupName, OrbitTable};

/// The rotation average `w₀ = (1/j) Σ_k u₀(R_{2πk/j} ·)` of a candidate
/// represented over a lattice subgroup. It is only ever evaluated pointwise.
#[derive(Clone, Debug)]
pub struct RotatedSum {
    base: SymSequence,
    j: u32,
}

impl RotatedSum {
    pub fn new(base: SymSequence, j: u32) -> Result<Self> {
        if j < 1 {
            return Err(Error::Domain("rotation count must be at least 1".into()));
        }
        Ok(RotatedSum { base, j })
    }

    pub fn base(&self) -> &SymSequence {
        &self.base
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// Whether the average is the base itself, which happens when every
    /// rotation by `2π/j` is already a symmetry of the representation.
    pub fn collapses(&self) -> bool {
        match self.base.group() {
            GroupName::D4 => 4 % self.j == 0,
            GroupName::D2 => 2 % self.j == 0,
            _ => self.j == 1,
        }
    }
}

/// `w₀` for a candidate over `maximal_subgroup(j)`.
pub fn symmetrize(u0: &SymSequence, j: u32) -> Result<RotatedSum> {
    let h = maximal_subgroup(j)?;
    if h.name() != u0.group() {
        return Err(Error::UnsupportedGroup(format!(
            "a D{j} candidate must be stored over {}, got {}",
            h.name(),
            u0.group()
        )));
    }
    RotatedSum::new(u0.clone(), j)
}

/// Parameters of the ring-of-spots starting profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessShape {
    pub alpha: f64,
    pub beta: f64,
    /// Radius of the ring on which the spots sit.
    pub ring_radius: f64,
}

impl Default for GuessShape {
    fn default() -> Self {
        GuessShape { alpha: 0.5, beta: 0.5, ring_radius: 0.0 }
    }
}

/// Ring of `j` sech spots, `α Σ_k sech(β|x - c_k|)`, with centres `c_k` on
/// the circle of radius `ring_radius` starting on the positive `x₂` axis.
///
/// The first centre lies on the mirror line of `x₁ ↦ -x₁`, so the profile is
/// invariant under the full dihedral group of order `2j`.
pub fn guess_profile(j: u32, shape: GuessShape, x: [f64; 2]) -> f64 {
    let mut acc = 0.0;
    for k in 0..j {
        let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / j as f64;
        let c = [shape.ring_radius * t.cos(), shape.ring_radius * t.sin()];
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        acc += 1.0 / (shape.beta * r).cosh();
    }
    shape.alpha * acc
}

/// Hartley coefficients of the sampled ring profile on `(-d, d)²`, reduced
/// to the table of `maximal_subgroup(j)` at order `n0`.
pub fn initial_guess(j: u32, shape: GuessShape, d: f64, n0: usize) -> Result<SymSequence> {
    let group = maximal_subgroup(j)?;
    let table = OrbitTable::shared(group.name(), n0)?;
    let samples = (4 * n0 + 4).max(64);
    let xs: Vec<f64> = (0..samples).map(|p| -d + 2.0 * d * p as f64 / samples as f64).collect();
    let values: Vec<Vec<f64>> = par::map_slice(&xs, |&x1| xs.iter().map(|&x2| guess_profile(j, shape, [x1, x2])).collect());
    let grid = sampled_hartley(&values, &xs, d, n0);
    symmetric_average(&grid, &table, d)
}

/// `h_m = (1/P²) Σ_x u(x) cas(π m·x/d)` on the sample grid, separably.
fn sampled_hartley(values: &[Vec<f64>], xs: &[f64], d: f64, n: usize) -> Vec<f64> {
    let side = 2 * n + 1;
    let o = n as i64;
    let trig: Vec<Vec<(f64, f64)>> = (-o..=o)
        .map(|m| xs.iter().map(|&x| (std::f64::consts::PI * m as f64 * x / d).sin_cos()).collect())
        .collect();
    // partial sums over x₂ for every x₁ sample: (Σ u cos, Σ u sin)
    let partial: Vec<Vec<(f64, f64)>> = par::map_slice(values, |row| {
        trig.iter()
            .map(|t| row.iter().zip(t).fold((0.0, 0.0), |(c, s), (u, (sn, cs))| (c + u * cs, s + u * sn)))
            .collect()
    });
    let scale = 1.0 / (xs.len() * xs.len()) as f64;
    let out = par::map_range(side * side, |idx| {
        let (a, b) = (idx / side, idx % side);
        let mut acc = 0.0;
        for (p, row) in partial.iter().enumerate() {
            let (s1, c1) = trig[a][p];
            let (c2, s2) = row[b];
            // cas(A + B) = cos A cos B - sin A sin B + sin A cos B + cos A sin B
            acc += c1 * c2 - s1 * s2 + s1 * c2 + c1 * s2;
        }
        acc * scale
    });
    out
}

/// Average a full coefficient grid over the orbits of `table`.
fn symmetric_average(grid: &[f64], table: &std::sync::Arc<OrbitTable>, d: f64) -> Result<SymSequence> {
    let n = table.order();
    let side = 2 * n + 1;
    let o = n as i32;
    let at = |m: (i32, i32)| grid[((m.0 + o) as usize) * side + (m.1 + o) as usize];
    let coeffs: Vec<f64> = (0..table.len())
        .map(|r| {
            let members = table.members(r);
            members.iter().map(|&m| at(m)).sum::<f64>() / members.len() as f64
        })
        .collect();
    SymSequence::from_points(table.clone(), d, &coeffs)
}

/// Outcome of a converged Newton run.
#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub solution: SymSequence,
    pub iterations: usize,
    /// `‖π^{N₀}F‖₂` before each step and after the last one.
    pub history: Vec<f64>,
}

const MAX_HALVINGS: u32 = 8;

/// Newton's method on the Galerkin projection `π^{N₀}F(U) = 0`.
///
/// Over the reflection group the projected problem inherits the continuous
/// `x₂`-translation symmetry, so its Jacobian is singular at solutions. The
/// iteration is then run on the system bordered by the phase condition
/// `(∂₂U_init, U − U_init) = 0` and an unfolding multiplier.
pub fn newton_galerkin(init: &SymSequence, p: &SHParams, tol: f64, maxiter: usize) -> Result<NewtonResult> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("Newton tolerance must be positive, got {tol}")));
    }
    let mut u = init.mid_sequence();
    let table = u.table().clone();
    let d = u.d();
    let border = if u.group() == GroupName::Z2xZ1 {
        let t = u.derivative(1)?;
        let x: Vec<f64> = t.orthonormal_coords().iter().map(|v| v.mid()).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        (norm > 0.0).then(|| DVector::from_iterator(x.len(), x.iter().map(|v| v / norm)))
    } else {
        None
    };
    let x_ref = coords(&u);
    let mut beta = 0.0;

    let residual = |u: &SymSequence, beta: f64| -> Result<DVector<f64>> {
        let f = sh_model::residual_f(u, p)?.with_order(u.order())?;
        let mut r = coords(&f);
        match &border {
            Some(t) => {
                r += t * beta;
                let phase = t.dot(&(coords(u) - &x_ref));
                Ok(DVector::from_iterator(r.len() + 1, std::iter::once(phase).chain(r.iter().copied())))
            }
            None => Ok(r),
        }
    };

    let mut r = residual(&u, beta)?;
    let mut history = vec![r.norm()];
    for it in 0..maxiter {
        if *history.last().unwrap() <= tol {
            return Ok(NewtonResult { solution: u, iterations: it, history });
        }
        let jac = jacobian(&u, p)?;
        let full = match &border {
            Some(t) => bordered_dense(t, t, 0.0, &jac),
            None => jac,
        };
        let step = full
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::Decomposition("singular Galerkin Jacobian".into()))?;
        let (db, dx) = match &border {
            Some(_) => (step[0], step.rows(1, step.len() - 1).into_owned()),
            None => (0.0, step),
        };
        let base = coords(&u);
        let current = r.norm();
        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let cand = from_coords(&table, d, &(&base - &dx * t))?;
            let cb = beta - db * t;
            let rc = residual(&cand, cb)?;
            if rc.norm() < current || halvings == MAX_HALVINGS {
                u = cand;
                beta = cb;
                r = rc;
                break;
            }
            t *= 0.5;
            halvings += 1;
        }
        history.push(r.norm());
        debug!("newton step {}: residual {:e} (damping {t})", it + 1, r.norm());
    }
    if *history.last().unwrap() <= tol {
        return Ok(NewtonResult { solution: u, iterations: maxiter, history });
    }
    Err(Error::Iteration { iterations: maxiter, history })
}

fn coords(u: &SymSequence) -> DVector<f64> {
    DVector::from_iterator(u.len(), u.orthonormal_coords().iter().map(|v| v.mid()))
}

fn from_coords(table: &std::sync::Arc<OrbitTable>, d: f64, x: &DVector<f64>) -> Result<SymSequence> {
    let iv: Vec<Interval> = x.iter().map(|&v| Interval::point(v)).collect();
    Ok(SymSequence::from_orthonormal(table.clone(), d, &iv)?.mid_sequence())
}

/// `π^{N₀}DF(U)π^{N₀}` in the orthonormal basis.
fn jacobian(u: &SymSequence, p: &SHParams) -> Result<DMatrix<f64>> {
    let two = Interval::point(2.0);
    let u2 = sh_model::square(u)?;
    let v = u.scale(two * p.nu1).with_order(u2.order())?.add(&u2.scale(Interval::point(3.0) * p.nu2))?;
    let mut jac = v.conv_operator_matrix(u.order())?.mid_matrix();
    for r in 0..u.len() {
        jac[(r, r)] += sh_model::l_at(u.table().rep(r), u.d(), p.mu).mid();
    }
    Ok(jac)
}

fn bordered_dense(row: &DVector<f64>, col: &DVector<f64>, corner: f64, block: &DMatrix<f64>) -> DMatrix<f64> {
    let n = block.nrows();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = corner;
    for i in 0..n {
        m[(0, i + 1)] = row[i];
        m[(i + 1, 0)] = col[i];
    }
    m.view_mut((1, 1), (n, n)).copy_from(block);
    m
}

/// Orthogonal projector onto the kernel of the per-line trace functionals
/// `h ↦ Σ_m (-1)^m m^k h_m`, `k = 0..3`, on `[-n, n]`.
fn line_projector(n: usize) -> DMatrix<f64> {
    let side = 2 * n + 1;
    let scale = n.max(1) as f64;
    // scaled monomials span the same row space with better conditioning
    let a = DMatrix::from_fn(side, 4, |i, k| {
        let m = i as f64 - n as f64;
        let sign = if (i + n).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (m / scale).powi(k as i32)
    });
    let q = a.qr().q();
    DMatrix::identity(side, side) - &q * q.transpose()
}

/// Project `U₀` onto coefficients whose function and first three normal
/// derivatives vanish on the boundary of the square.
///
/// Evaluating the trace conditions at `x₁ = ±d` turns them into the
/// functionals `Σ_{m₁} (-1)^{m₁} m₁^k h_{(m₁, m₂)} = 0` for every `m₂`, and
/// symmetrically in the other axis. The constraint set is a tensor product,
/// so the orthogonal projector on the full grid is `P ⊗ P` for the
/// one-dimensional projector `P`. It commutes with the lattice symmetries;
/// the final orbit average only removes rounding.
pub fn trace_project(u0: &SymSequence) -> Result<SymSequence> {
    if !u0.table().group().lattice_compatible() {
        return Err(Error::UnsupportedGroup(format!("{} has no square-lattice table", u0.group())));
    }
    let n = u0.order();
    let side = 2 * n + 1;
    let grid = u0.unfold();
    let h = DMatrix::from_fn(side, side, |a, b| grid.data()[a * side + b].mid());
    let proj = line_projector(n);
    let projected = &proj * h * &proj;
    let flat: Vec<f64> = (0..side * side).map(|i| projected[(i / side, i % side)]).collect();
    symmetric_average(&flat, u0.table(), u0.d())
}

/// `π^N(I + V₀ L⁻¹)π^N` in the orthonormal basis of the order-`n` table.
pub fn galerkin_operator(v0: &SymSequence, mu: Interval, n: usize) -> Result<IntervalMatrix> {
    let table = OrbitTable::shared(v0.group(), n)?;
    let conv = v0.conv_operator_matrix(n)?;
    let inv_l: Vec<Interval> = table.reps().iter().map(|&m| sh_model::l_at(m, v0.d(), mu).recip()).collect();
    let size = table.len();
    Ok(IntervalMatrix::from_fn(size, size, |i, j| {
        let v = conv.get(i, j) * inv_l[j];
        if i == j {
            v + Interval::ONE
        } else {
            v
        }
    }))
}

fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = m.clone().lu();
    let inv = lu.try_inverse().ok_or_else(|| Error::Decomposition("approximate inverse: singular matrix".into()))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("approximate inverse has non-finite entries".into()));
    }
    Ok(inv)
}

/// Floating approximate inverse of [`galerkin_operator`], as thin intervals.
pub fn build_bn(u0: &SymSequence, p: &SHParams, n: usize) -> Result<IntervalMatrix> {
    let lin = sh_model::v0_and_w(u0, p, n)?;
    build_bn_from_v0(&lin.v0, p.mu, n)
}

pub fn build_bn_from_v0(v0: &SymSequence, mu: Interval, n: usize) -> Result<IntervalMatrix> {
    let m = galerkin_operator(v0, mu, n)?.mid_matrix();
    let inv = invert(&m)?;
    info!("approximate inverse of size {} built", inv.nrows());
    Ok(IntervalMatrix::from_point(&inv))
}

/// Approximate inverse of the bordered finite section, split into blocks.
///
/// Coordinates are `(β, √|Ω₀| x)` with `x` orthonormal sequence coordinates,
/// so the matrix 2-norm is the operator norm on `ℝ × ℓ²` with the
/// `(|β|² + |Ω₀|‖W‖₂²)^{1/2}` norm.
#[derive(Clone, Debug)]
pub struct BorderedMatrix {
    pub corner: Interval,
    /// `b₁₂`, acting on the sequence component.
    pub row: Vec<Interval>,
    /// `b₂₁`, the image of the scalar component.
    pub col: Vec<Interval>,
    pub block: IntervalMatrix,
}

impl BorderedMatrix {
    pub fn size(&self) -> usize {
        self.row.len()
    }

    /// The full `(n+1) × (n+1)` matrix.
    pub fn to_matrix(&self) -> IntervalMatrix {
        let n = self.size();
        IntervalMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => self.corner,
            (0, j) => self.row[j - 1],
            (i, 0) => self.col[i - 1],
            (i, j) => self.block.get(i - 1, j - 1),
        })
    }

    fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows() - 1;
        BorderedMatrix {
            corner: Interval::point(m[(0, 0)]),
            row: (0..n).map(|j| Interval::point(m[(0, j + 1)])).collect(),
            col: (0..n).map(|i| Interval::point(m[(i + 1, 0)])).collect(),
            block: IntervalMatrix::from_fn(n, n, |i, j| Interval::point(m[(i + 1, j + 1)])),
        }
    }
}

/// `√|Ω₀| ∂₂U₀^N / ρ` in orthonormal coordinates of the order-`n` table.
pub fn x2_border(u0: &SymSequence, n: usize, rho: Interval) -> Result<Vec<Interval>> {
    let du = u0.project(n as i64, Side::Inside).with_order(n)?.derivative(1)?;
    let s = u0.domain_area().sqrt() / rho;
    Ok(du.orthonormal_coords().into_iter().map(|v| v * s).collect())
}

/// `ρ = ‖∂₂u₀‖_{L²} = √|Ω₀| ‖∂₂U₀‖₂`, which gives the border unit length.
pub fn default_rho(u0: &SymSequence) -> Result<Interval> {
    let du = u0.derivative(1)?;
    Ok(u0.domain_area().sqrt() * du.norm2())
}

/// The bordered section `[[0, bᵀ], [b, I + V₀L⁻¹]]` with `b` from [`x2_border`].
pub fn bordered_operator(u0: &SymSequence, v0: &SymSequence, p: &SHParams, n: usize, rho: Interval) -> Result<IntervalMatrix> {
    let block = galerkin_operator(v0, p.mu, n)?;
    let b = x2_border(u0, n, rho)?;
    let size = block.rows();
    Ok(IntervalMatrix::from_fn(size + 1, size + 1, |i, j| match (i, j) {
        (0, 0) => Interval::ZERO,
        (0, j) => b[j - 1],
        (i, 0) => b[i - 1],
        (i, j) => block.get(i - 1, j - 1),
    }))
}

pub fn build_bn_bordered(u0: &SymSequence, p: &SHParams, n: usize, rho: Interval) -> Result<BorderedMatrix> {
    if u0.group() != GroupName::Z2xZ1 {
        return Err(Error::UnsupportedGroup(format!("bordered systems need Z2xZ1 data, got {}", u0.group())));
    }
    if !(rho.lo() > 0.0) {
        return Err(Error::Domain(format!("border scale rho must be positive, got {rho}")));
    }
    let lin = sh_model::v0_and_w(u0, p, n)?;
    let m = bordered_operator(u0, &lin.v0, p, n, rho)?.mid_matrix();
    Ok(BorderedMatrix::from_dense(&invert(&m)?))
}
