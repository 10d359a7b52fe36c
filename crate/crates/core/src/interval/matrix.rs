//! Dense interval matrices and rigorous norm bounds.
//!
//! Products use midpoint-radius arithmetic: the midpoint product runs in
//! ordinary floating point (row blocks in parallel), and a single a-priori
//! bound covers both the rounding error of that product and the propagated
//! radii. This keeps interval products within a small factor of the cost of
//! a plain `f64` product.

use nalgebra::DMatrix;

use super::round::*;
use super::Interval;
use crate::error::{Error, Result};
use crate::par;

const UNIT_ROUNDOFF: f64 = 1.1102230246251565e-16; // 2^-53
const SUBNORMAL_MIN: f64 = 5e-324;

/// Dense row-major matrix of intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

/// Rounding-error factor for a length-`n` floating dot product, slightly
/// above `n*u/(1-n*u)`.
pub(crate) fn gamma(n: usize) -> f64 {
    (n as f64 + 6.0) * UNIT_ROUNDOFF * 1.0001
}

/// Twice-working-precision accumulator for sums of exact products.
///
/// Products are split with FMA and partial sums with two-sum, so the
/// rounded total carries an error of about one ulp plus a term quadratic
/// in the unit roundoff.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedDot {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    terms: usize,
}

impl CompensatedDot {
    #[inline]
    pub(crate) fn add(&mut self, x: f64, y: f64) {
        let p = x * y;
        let perr = x.mul_add(y, -p);
        let (s, serr) = two_sum(self.sum, p);
        self.sum = s;
        self.comp += serr + perr;
        self.abs_sum += p.abs();
        self.terms += 1;
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.sum.is_finite() && self.comp.is_finite() && self.abs_sum.is_finite()
    }

    pub(crate) fn enclosure(&self) -> Interval {
        let n = self.terms;
        if n == 0 {
            return Interval::ZERO;
        }
        let res = self.sum + self.comp;
        let g = gamma(n);
        let abs_sum = self.abs_sum * (1.0 + g);
        let r = (UNIT_ROUNDOFF * res.abs() + g * g * abs_sum) * (1.0 + 8.0 * UNIT_ROUNDOFF)
            + 8.0 * n as f64 * SUBNORMAL_MIN;
        Interval::new(sub_down(res, r), add_up(res, r))
    }
}

/// Enclosure of `sum a_i b_i`.
///
/// Uses the midpoint-radius bound when every input is finite and exact
/// interval summation otherwise.
pub fn dot_enclosure(a: &[Interval], b: &[Interval]) -> Interval {
    assert_eq!(a.len(), b.len(), "dot product length mismatch");
    let n = a.len();
    if n == 0 {
        return Interval::ZERO;
    }
    let mut s = 0.0;
    let mut tau = 0.0;
    let mut abs_sum = 0.0;
    let mut all_thin = true;
    let mut any_product = false;
    for (x, y) in a.iter().zip(b) {
        let (xm, xr) = (x.mid(), x.rad());
        let (ym, yr) = (y.mid(), y.rad());
        any_product |= xm != 0.0 && ym != 0.0;
        s += xm * ym;
        abs_sum += (xm * ym).abs();
        if xr != 0.0 || yr != 0.0 {
            all_thin = false;
            tau += xm.abs() * yr + xr * (ym.abs() + yr);
        }
    }
    if !(s.is_finite() && tau.is_finite() && abs_sum.is_finite()) {
        return a.iter().zip(b).map(|(x, y)| *x * *y).sum();
    }
    if all_thin && n == 1 {
        return a[0] * b[0];
    }
    if all_thin && !any_product {
        // every term has an exact zero factor
        return Interval::ZERO;
    }
    if all_thin {
        let mut acc = CompensatedDot::default();
        for (x, y) in a.iter().zip(b) {
            acc.add(x.mid(), y.mid());
        }
        if acc.is_finite() {
            return acc.enclosure();
        }
    }
    let g = gamma(n);
    let r = radius_bound(tau, abs_sum, g, n);
    Interval::new(sub_down(s, r), add_up(s, r))
}

#[inline]
pub(crate) fn radius_bound(tau: f64, abs_sum: f64, g: f64, n: usize) -> f64 {
    let core = tau * (1.0 + g) + 2.0 * g * abs_sum;
    core * (1.0 + 8.0 * UNIT_ROUNDOFF) + 8.0 * n as f64 * SUBNORMAL_MIN
}

impl IntervalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntervalMatrix { rows, cols, data: vec![Interval::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Interval::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Interval + Sync + Send) -> Self {
        let data = par::map_range(rows * cols, |k| f(k / cols.max(1), k % cols.max(1)));
        IntervalMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    /// Thin interval matrix with the entries of a floating-point matrix.
    pub fn from_point(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Interval::point(m[(i, j)]))
    }

    pub fn diagonal(d: &[Interval]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }
    pub fn entries(&self) -> &[Interval] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[Interval] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(Interval) -> Interval + Sync + Send) -> Self {
        IntervalMatrix { rows: self.rows, cols: self.cols, data: par::map_slice(&self.data, |x| f(*x)) }
    }

    pub fn scale(&self, s: Interval) -> Self {
        self.map(|x| x * s)
    }

    fn zip(&self, other: &Self, f: impl Fn(Interval, Interval) -> Interval) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(IntervalMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// Midpoint matrix and a rigorous entrywise radius matrix.
    pub fn mid_rad_parts(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mid = DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid());
        let rad = DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).rad());
        (mid, rad)
    }

    pub fn mid_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mid())
    }

    /// Enclosure of the matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if !(self.is_finite() && other.is_finite()) {
            return Ok(self.matmul_naive(other));
        }
        let (am, ar) = self.mid_rad_parts();
        let (bm, br) = other.mid_rad_parts();
        let a_thin = ar.iter().all(|&x| x == 0.0);
        let b_thin = br.iter().all(|&x| x == 0.0);
        let am_abs = am.abs();
        let bm_abs = bm.abs();

        let prod = |x: &DMatrix<f64>, y: &DMatrix<f64>| row_blocked_gemm(x, y);
        let mid = prod(&am, &bm);
        let abs_prod = prod(&am_abs, &bm_abs);
        let tau = match (a_thin, b_thin) {
            (true, true) => None,
            (true, false) => Some(prod(&am_abs, &br)),
            (false, true) => Some(prod(&ar, &bm_abs)),
            (false, false) => {
                let b_mag = &bm_abs + &br;
                Some(prod(&am_abs, &br) + prod(&ar, &b_mag))
            }
        };
        let g = gamma(self.cols);
        let n = self.cols;
        let rows = self.rows;
        let cols = other.cols;
        let data = par::map_range(rows * cols, |k| {
            let (i, j) = (k / cols, k % cols);
            let s = mid[(i, j)];
            let t = tau.as_ref().map_or(0.0, |t| t[(i, j)]);
            let r = radius_bound(t, abs_prod[(i, j)], g, n);
            Interval::new(sub_down(s, r), add_up(s, r))
        });
        if data.iter().any(|x| !x.is_finite()) {
            return Ok(self.matmul_naive(other));
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    /// Entry-by-entry interval product; slow but valid for any inputs.
    pub fn matmul_naive(&self, other: &Self) -> Self {
        let bt = other.transpose();
        Self::from_fn(self.rows, other.cols, |i, j| {
            self.row(i).iter().zip(bt.row(j)).map(|(a, b)| *a * *b).sum()
        })
    }

    pub fn matvec(&self, v: &[Interval]) -> Result<Vec<Interval>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok(par::map_range(self.rows, |i| dot_enclosure(self.row(i), v)))
    }

    /// Entrywise magnitudes rounded up, as a floating matrix.
    fn mag_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mag())
    }

    /// Upper bound of the induced 1-norm (maximum column sum).
    pub fn norm1_upper(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.cols {
            let s = (0..self.rows).fold(0.0, |acc, i| add_up(acc, self.get(i, j).mag()));
            best = best.max(s);
        }
        best
    }

    /// Upper bound of the induced infinity-norm (maximum row sum).
    pub fn norm_inf_upper(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(0.0, |acc, x| add_up(acc, x.mag())))
            .fold(0.0, f64::max)
    }

    pub fn frobenius_upper(&self) -> f64 {
        let s = self.data.iter().fold(0.0, |acc, x| add_up(acc, mul_up(x.mag(), x.mag())));
        sqrt_up(s)
    }

    /// Enclosure whose upper endpoint bounds the spectral norm of every point
    /// matrix contained in `self`.
    ///
    /// Takes the smallest of `sqrt(|M|_1 |M|_inf)`, the Frobenius norm and a
    /// Gram-iteration bound on the midpoint (plus the radius matrix norm).
    /// The lower endpoint is the largest guaranteed entry magnitude.
    pub fn norm2_upper(&self) -> Interval {
        if self.rows == 0 || self.cols == 0 {
            return Interval::ZERO;
        }
        let lower = self.data.iter().map(|x| x.mig()).fold(0.0, f64::max);
        if !self.is_finite() {
            return Interval::new(lower, f64::INFINITY);
        }
        let mut best = sqrt_up(mul_up(self.norm1_upper(), self.norm_inf_upper()));
        best = best.min(self.frobenius_upper());
        if self.rows.max(self.cols) > 1 {
            let (mid, rad) = self.mid_rad_parts();
            let rad_m = IntervalMatrix::from_point(&rad);
            let rad_bound = sqrt_up(mul_up(rad_m.norm1_upper(), rad_m.norm_inf_upper()))
                .min(rad_m.frobenius_upper());
            if let Some(g) = gram_norm_bound(&mid) {
                best = best.min(add_up(g, rad_bound));
            }
        }
        Interval::new(lower.min(best), best)
    }

    /// Bound computed only from `sqrt(|M|_1 |M|_inf)`.
    pub fn norm2_upper_simple(&self) -> f64 {
        sqrt_up(mul_up(self.norm1_upper(), self.norm_inf_upper()))
    }

    /// `|M|` entrywise as intervals, useful for monotone majorants.
    pub fn abs_matrix(&self) -> Self {
        let m = self.mag_matrix();
        IntervalMatrix::from_point(&m)
    }

    /// Principal submatrix / block copy.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self::from_fn(nr, nc, |i, j| self.get(r0 + i, c0 + j))
    }
}

/// Floating product `x*y`, split into row blocks evaluated in parallel.
fn row_blocked_gemm(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = x.nrows();
    let threads = par::threads();
    if threads <= 1 || rows < 64 {
        return x * y;
    }
    let block = rows.div_ceil(threads * 2).max(16);
    let starts: Vec<usize> = (0..rows).step_by(block).collect();
    let parts = par::map_slice(&starts, |&r0| {
        let len = block.min(rows - r0);
        x.rows(r0, len) * y
    });
    let mut out = DMatrix::zeros(rows, y.ncols());
    for (r0, p) in starts.iter().zip(parts) {
        out.rows_mut(*r0, p.nrows()).copy_from(&p);
    }
    out
}

/// Upper bound of the spectral norm of a floating matrix by Gram iteration,
/// `||M||_2^(2^k) = ||G_k||_2` with `G_1 = M^T M`, `G_{i+1} = G_i^2`.
/// Each Gram matrix is held as an interval enclosure scaled by a power of two.
fn gram_norm_bound(m: &DMatrix<f64>) -> Option<f64> {
    let mi = IntervalMatrix::from_point(m);
    let n = m.nrows().max(m.ncols());
    let steps = if n <= 200 { 8 } else if n <= 800 { 6 } else { 5 };
    let (small, big) = if m.nrows() < m.ncols() {
        (mi.clone(), mi.transpose())
    } else {
        (mi.transpose(), mi.clone())
    };
    // small is k x n with k <= n so small * big is the smaller Gram matrix
    let mut g = small.matmul(&big).ok()?;
    let mut log2_scale: i64 = 0;
    let mut best = f64::INFINITY;
    for step in 1..=steps {
        // bound at this level: ||M|| <= (2^L ||G||)^(1/2^step)
        let gn = sqrt_up(mul_up(g.norm1_upper(), g.norm_inf_upper())).min(g.frobenius_upper());
        if !gn.is_finite() {
            break;
        }
        let root = nth_root_pow2_up(gn, log2_scale, step);
        best = best.min(root);
        if step == steps {
            break;
        }
        let next = g.matmul(&g).ok()?;
        let peak = next.entries().iter().map(|x| x.mag()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Some(0.0);
        }
        let e = peak.log2().floor() as i32;
        let factor = 2f64.powi(-e);
        g = next.map(|x| x * factor);
        log2_scale = 2 * log2_scale + e as i64;
    }
    best.is_finite().then_some(best)
}

/// Upper bound of `(2^l * x)^(1/2^k)`.
fn nth_root_pow2_up(x: f64, l: i64, k: u32) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut r = x;
    for _ in 0..k {
        r = sqrt_up(r);
    }
    // 2^(l / 2^k), enclosed through exp/ln
    let expo = Interval::point(l as f64) / Interval::point(2f64.powi(k as i32));
    let ln2 = Interval::point(2.0).ln();
    let factor = (expo * ln2).exp();
    mul_up(r, factor.hi())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norm() {
        let n = IntervalMatrix::identity(3).norm2_upper();
        assert!(n.hi() >= 1.0 && n.hi() <= 1.0 + 1e-12, "{n}");
    }

    #[test]
    fn diagonal_norm() {
        let d = IntervalMatrix::diagonal(&[Interval::point(2.0), Interval::point(3.0)]);
        let n = d.norm2_upper();
        assert!(n.hi() >= 3.0 && n.hi() <= 3.0 + 1e-9, "{n}");
    }

    #[test]
    fn rank_one_norm() {
        let u = [0.6, 0.8];
        let v = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let m = IntervalMatrix::from_fn(2, 2, |i, j| Interval::point(u[i] * v[j]));
        let n = m.norm2_upper();
        assert!(n.hi() >= 1.0 - 1e-15 && n.hi() <= m.norm2_upper_simple() + 1e-15);
    }

    #[test]
    fn product_encloses_exact() {
        let a = IntervalMatrix::from_fn(3, 2, |i, j| Interval::new(i as f64, i as f64 + 0.5 + j as f64));
        let b = IntervalMatrix::from_fn(2, 2, |i, j| Interval::point(0.1 * (i + 2 * j) as f64 - 0.15));
        let c = a.matmul(&b).unwrap();
        let naive = a.matmul_naive(&b);
        for i in 0..3 {
            for j in 0..2 {
                assert!(c.get(i, j).overlaps(naive.get(i, j)));
                // midpoint-radius may be wider, never narrower than the true range
                let lo = naive.get(i, j);
                assert!(c.get(i, j).lo() <= lo.lo() + 1e-12 && c.get(i, j).hi() >= lo.hi() - 1e-12);
            }
        }
    }

    #[test]
    fn dot_of_thirds() {
        let third = Interval::ONE.checked_div(Interval::point(3.0)).unwrap();
        let d = dot_enclosure(&[third, third, third], &[Interval::ONE; 3]);
        assert!(d.contains(1.0) && d.width() < 1e-14);
    }
}
