//! Symmetry-reduced Fourier sequences on the square `(-d, d)^2`.
//!
//! # Coefficient convention
//!
//! A real function `u = Σ_m c_m e^{iπ m·x/d}` is stored through its Hartley
//! coefficients `h_m = Re c_m - Im c_m`, so that `u = Σ_m h_m cas(π m·x/d)`
//! with `cas = cos + sin`. For groups containing the point reflection `-I`
//! (D2 and D4) the coefficients `c_m` are real and `h = c`. For the
//! reflection group the Hartley form keeps every coefficient real while still
//! representing functions that are not even in `x2`, which is what makes the
//! `x2`-derivative a real linear map.
//!
//! In Hartley form the weighted `ℓ²` norm and inner product are the plain
//! ones on `h`; the `ℓ¹` norm uses `|c_m| = sqrt((h_m² + h_{-m}²)/2)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::matrix::{gamma, radius_bound, CompensatedDot};
use crate::interval::round::{add_up, sub_down};
use crate::interval::{dot_enclosure, Interval, IntervalMatrix};
use crate::par;
use crate::symmetry::{grid_pos, shell, GroupName, Index, OrbitTable};

/// Full coefficient grid on `[-M, M]^2`, row-major in `(n1, n2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    order: usize,
    data: Vec<Interval>,
}

impl Grid {
    pub fn zeros(order: usize) -> Self {
        let side = 2 * order + 1;
        Grid { order, data: vec![Interval::ZERO; side * side] }
    }

    pub fn from_fn(order: usize, f: impl Fn(Index) -> Interval + Sync + Send) -> Self {
        let side = 2 * order + 1;
        let o = order as i32;
        let data = par::map_range(side * side, |p| f(((p / side) as i32 - o, (p % side) as i32 - o)));
        Grid { order, data }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[Interval] {
        &self.data
    }

    /// Coefficient at `m`, zero outside the grid.
    #[inline]
    pub fn get(&self, m: Index) -> Interval {
        let o = self.order as i32;
        if m.0.abs() > o || m.1.abs() > o {
            Interval::ZERO
        } else {
            self.data[grid_pos(self.order, m)]
        }
    }

    pub fn set(&mut self, m: Index, v: Interval) {
        let p = grid_pos(self.order, m);
        self.data[p] = v;
    }

    /// `m ↦ g(-m)`.
    pub fn negated(&self) -> Grid {
        let mut d = self.data.clone();
        d.reverse();
        Grid { order: self.order, data: d }
    }

    /// Collapse onto orbit representatives, rejecting grids that are not
    /// symmetric beyond `tol` (in addition to interval widths).
    pub fn reduce(&self, table: &Arc<OrbitTable>, d: f64, tol: f64) -> Result<SymSequence> {
        let mut coeffs = Vec::with_capacity(table.len());
        for r in 0..table.len() {
            let rep = table.rep(r);
            let v = self.get(rep);
            for &m in table.members(r) {
                let w = self.get(m);
                let gap = (v - w).mig();
                if gap > tol {
                    return Err(Error::SymmetryViolation(format!(
                        "coefficient at {m:?} differs from its representative {rep:?} by {gap:e}"
                    )));
                }
            }
            coeffs.push(v);
        }
        // anything beyond the table's truncation must vanish
        let t = table.order() as i32;
        let o = self.order as i32;
        if o > t {
            for a in -o..=o {
                for b in -o..=o {
                    if shell((a, b)) > t && self.get((a, b)).mig() > tol {
                        return Err(Error::SymmetryViolation(format!(
                            "nonzero coefficient at {:?} beyond truncation {t}",
                            (a, b)
                        )));
                    }
                }
            }
        }
        SymSequence::from_coeffs(table.clone(), d, coeffs)
    }
}

/// Full (non-symmetric) convolution of two grids, truncated to `out_order`.
///
/// Every output coefficient is an exact sum of products, enclosed with the
/// midpoint-radius dot product.
pub fn convolve_grids(a: &Grid, b: &Grid, out_order: usize, only: Option<&[Index]>) -> Grid {
    let (am, ar) = split(a);
    let (bm, br) = split(b);
    let thin = ar.iter().all(|&x| x == 0.0) && br.iter().all(|&x| x == 0.0);
    let ma = a.order as i32;
    let mb = b.order as i32;
    let sa = 2 * a.order + 1;
    let sb = 2 * b.order + 1;
    let eval = |n: Index| -> Interval {
        let k1lo = (-mb).max(n.0 - ma);
        let k1hi = mb.min(n.0 + ma);
        let k2lo = (-mb).max(n.1 - ma);
        let k2hi = mb.min(n.1 + ma);
        if k1lo > k1hi || k2lo > k2hi {
            return Interval::ZERO;
        }
        if thin {
            let mut acc = CompensatedDot::default();
            for k1 in k1lo..=k1hi {
                let arow = ((n.0 - k1 + ma) as usize) * sa;
                let brow = ((k1 + mb) as usize) * sb;
                for k2 in k2lo..=k2hi {
                    acc.add(am[arow + (n.1 - k2 + ma) as usize], bm[brow + (k2 + mb) as usize]);
                }
            }
            if acc.is_finite() {
                return acc.enclosure();
            }
        }
        let mut s = 0.0;
        let mut abs_sum = 0.0;
        let mut tau = 0.0;
        let mut count = 0usize;
        for k1 in k1lo..=k1hi {
            let arow = ((n.0 - k1 + ma) as usize) * sa;
            let brow = ((k1 + mb) as usize) * sb;
            for k2 in k2lo..=k2hi {
                let ia = arow + (n.1 - k2 + ma) as usize;
                let ib = brow + (k2 + mb) as usize;
                let p = am[ia] * bm[ib];
                s += p;
                abs_sum += p.abs();
                if !thin {
                    tau += am[ia].abs() * br[ib] + ar[ia] * (bm[ib].abs() + br[ib]);
                }
            }
            count += (k2hi - k2lo + 1) as usize;
        }
        if !(s.is_finite() && abs_sum.is_finite() && tau.is_finite()) {
            return exact_sum(a, b, n, (k1lo, k1hi, k2lo, k2hi));
        }
        enclose(s, tau, abs_sum, count)
    };
    match only {
        None => Grid::from_fn(out_order, eval),
        Some(idx) => {
            let mut g = Grid::zeros(out_order);
            let vals = par::map_slice(idx, |&n| eval(n));
            for (&n, v) in idx.iter().zip(vals) {
                g.set(n, v);
            }
            g
        }
    }
}

fn exact_sum(a: &Grid, b: &Grid, n: Index, r: (i32, i32, i32, i32)) -> Interval {
    let mut acc = Interval::ZERO;
    for k1 in r.0..=r.1 {
        for k2 in r.2..=r.3 {
            acc += a.get((n.0 - k1, n.1 - k2)) * b.get((k1, k2));
        }
    }
    acc
}

fn enclose(s: f64, tau: f64, abs_sum: f64, n: usize) -> Interval {
    let r = radius_bound(tau, abs_sum, gamma(n), n);
    Interval::new(sub_down(s, r), add_up(s, r))
}

fn split(g: &Grid) -> (Vec<f64>, Vec<f64>) {
    let m = g.data.iter().map(|x| x.mid()).collect();
    let r = g.data.iter().map(|x| x.rad()).collect();
    (m, r)
}

/// Which part of a sequence [`SymSequence::project`] keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// Symmetric Fourier sequence stored on orbit representatives.
#[derive(Clone, Debug)]
pub struct SymSequence {
    table: Arc<OrbitTable>,
    d: f64,
    coeffs: Vec<Interval>,
}

impl PartialEq for SymSequence {
    fn eq(&self, o: &Self) -> bool {
        self.group() == o.group() && self.order() == o.order() && self.d == o.d && self.coeffs == o.coeffs
    }
}

impl SymSequence {
    pub fn zeros(table: Arc<OrbitTable>, d: f64) -> Result<Self> {
        let n = table.len();
        Self::from_coeffs(table, d, vec![Interval::ZERO; n])
    }

    pub fn from_coeffs(table: Arc<OrbitTable>, d: f64, coeffs: Vec<Interval>) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("half-width d={d} must be positive")));
        }
        if coeffs.len() != table.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} representatives",
                coeffs.len(),
                table.len()
            )));
        }
        Ok(SymSequence { table, d, coeffs })
    }

    pub fn from_points(table: Arc<OrbitTable>, d: f64, values: &[f64]) -> Result<Self> {
        Self::from_coeffs(table, d, values.iter().map(|&v| Interval::point(v)).collect())
    }

    /// Sequence equal to `value` on the orbit of `n` and zero elsewhere.
    pub fn delta(table: Arc<OrbitTable>, d: f64, n: Index, value: Interval) -> Result<Self> {
        let r = table
            .rep_of(n)
            .ok_or_else(|| Error::Shape(format!("index {n:?} outside the table")))?;
        let mut s = Self::zeros(table, d)?;
        s.coeffs[r] = value;
        Ok(s)
    }

    pub fn table(&self) -> &Arc<OrbitTable> {
        &self.table
    }
    pub fn group(&self) -> GroupName {
        self.table.group_name()
    }
    pub fn order(&self) -> usize {
        self.table.order()
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn coeffs(&self) -> &[Interval] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Interval] {
        &mut self.coeffs
    }
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Whether the stored coefficients equal the complex ones (`-I` in group).
    pub fn is_even(&self) -> bool {
        self.group() != GroupName::Z2xZ1
    }

    /// Coefficient at any index (zero outside the truncation).
    pub fn get(&self, m: Index) -> Interval {
        self.table.rep_of(m).map_or(Interval::ZERO, |r| self.coeffs[r])
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.coeffs.iter().map(|x| x.mid()).collect()
    }

    /// Same sequence with point (thin) midpoints.
    pub fn mid_sequence(&self) -> SymSequence {
        let c = self.coeffs.iter().map(|x| Interval::point(x.mid())).collect();
        SymSequence { table: self.table.clone(), d: self.d, coeffs: c }
    }

    /// `|Ω₀| = 4d²`.
    pub fn domain_area(&self) -> Interval {
        Interval::point(2.0 * self.d).sqr()
    }

    fn check_compatible(&self, o: &SymSequence) -> Result<()> {
        if self.group() != o.group() {
            return Err(Error::Shape(format!("groups differ: {} vs {}", self.group(), o.group())));
        }
        if self.d != o.d {
            return Err(Error::Shape(format!("half-widths differ: {} vs {}", self.d, o.d)));
        }
        Ok(())
    }

    /// Re-express on a table of a different truncation order (padding with
    /// zeros or truncating).
    pub fn with_order(&self, order: usize) -> Result<SymSequence> {
        if order == self.order() {
            return Ok(self.clone());
        }
        let table = OrbitTable::shared(self.group(), order)?;
        let n = table.len().min(self.len());
        let mut c = vec![Interval::ZERO; table.len()];
        c[..n].copy_from_slice(&self.coeffs[..n]);
        SymSequence::from_coeffs(table, self.d, c)
    }

    /// Re-express over a subgroup's table (e.g. D4 data viewed as D2 data).
    pub fn restrict_group(&self, name: GroupName) -> Result<SymSequence> {
        if name == self.group() {
            return Ok(self.clone());
        }
        let ok = matches!(
            (self.group(), name),
            (GroupName::D4, GroupName::D2) | (GroupName::D4, GroupName::Z2xZ1) | (GroupName::D2, GroupName::Z2xZ1)
        );
        if !ok {
            return Err(Error::UnsupportedGroup(format!("{name} is not a subgroup of {}", self.group())));
        }
        let table = OrbitTable::shared(name, self.order())?;
        let c = table.reps().iter().map(|&m| self.get(m)).collect();
        SymSequence::from_coeffs(table, self.d, c)
    }

    pub fn unfold(&self) -> Grid {
        self.unfold_to(self.order())
    }

    /// Full grid of order `m`, zero-padded or truncated.
    pub fn unfold_to(&self, m: usize) -> Grid {
        Grid::from_fn(m, |n| self.get(n))
    }

    pub fn map(&self, f: impl Fn(Index, Interval) -> Interval) -> SymSequence {
        let c = self.table.reps().iter().zip(&self.coeffs).map(|(&m, &v)| f(m, v)).collect();
        SymSequence { table: self.table.clone(), d: self.d, coeffs: c }
    }

    pub fn scale(&self, s: Interval) -> SymSequence {
        self.map(|_, v| v * s)
    }

    fn zip_with(&self, o: &SymSequence, f: impl Fn(Interval, Interval) -> Interval) -> Result<SymSequence> {
        self.check_compatible(o)?;
        let order = self.order().max(o.order());
        let a = self.with_order(order)?;
        let b = o.with_order(order)?;
        let c = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| f(*x, *y)).collect();
        SymSequence::from_coeffs(a.table.clone(), self.d, c)
    }

    pub fn add(&self, o: &SymSequence) -> Result<SymSequence> {
        self.zip_with(o, |x, y| x + y)
    }

    pub fn sub(&self, o: &SymSequence) -> Result<SymSequence> {
        self.zip_with(o, |x, y| x - y)
    }

    /// Weighted `ℓ¹` norm `Σ α_n |c_n|`.
    pub fn norm1(&self) -> Interval {
        if self.is_even() {
            return self
                .coeffs
                .iter()
                .zip(self.table.weights())
                .map(|(v, &w)| v.abs() * w as f64)
                .sum();
        }
        (0..self.len())
            .map(|r| {
                let h = self.coeffs[r];
                let hn = self.coeffs[self.table.neg_rep(r)];
                ((h.sqr() + hn.sqr()) * 0.5).sqrt() * self.table.weight(r) as f64
            })
            .sum()
    }

    /// Weighted `ℓ²` norm.
    pub fn norm2(&self) -> Interval {
        self.inner2_unchecked(self).clamp_nonneg().sqrt()
    }

    pub fn norm_p(&self, p: u8) -> Result<Interval> {
        match p {
            1 => Ok(self.norm1()),
            2 => Ok(self.norm2()),
            _ => Err(Error::Domain(format!("only p in {{1, 2}} is supported, got {p}"))),
        }
    }

    /// Weighted inner product `Σ α_n u_n v_n`.
    pub fn inner2(&self, o: &SymSequence) -> Result<Interval> {
        self.check_compatible(o)?;
        if self.order() != o.order() {
            return Err(Error::Shape(format!("orders differ: {} vs {}", self.order(), o.order())));
        }
        Ok(self.inner2_unchecked(o))
    }

    fn inner2_unchecked(&self, o: &SymSequence) -> Interval {
        let a: Vec<Interval> =
            self.coeffs.iter().zip(self.table.weights()).map(|(v, &w)| *v * w as f64).collect();
        let n = a.len().min(o.coeffs.len());
        dot_enclosure(&a[..n], &o.coeffs[..n])
    }

    /// Keep (`Inside`) or drop (`Outside`) representatives with `max(|n1|,|n2|) ≤ n`.
    pub fn project(&self, n: i64, side: Side) -> SymSequence {
        let k = if n < 0 { 0 } else { self.table.prefix_len(n as usize) };
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(r, &v)| match (side, r < k) {
                (Side::Inside, true) | (Side::Outside, false) => v,
                _ => Interval::ZERO,
            })
            .collect();
        SymSequence { table: self.table.clone(), d: self.d, coeffs: c }
    }

    /// `π^N U` re-expressed on the order-`N` table.
    pub fn truncate(&self, n: usize) -> Result<SymSequence> {
        self.with_order(n.min(self.order()))?.with_order(n)
    }

    /// Multiply entry `n` by `sym(n / (2d))`.
    pub fn apply_symbol(&self, sym: impl Fn([Interval; 2]) -> Interval + Sync + Send) -> SymSequence {
        let two_d = Interval::point(2.0 * self.d);
        let vals = par::map_range(self.len(), |r| {
            let m = self.table.rep(r);
            let xi = [Interval::point(m.0 as f64) / two_d, Interval::point(m.1 as f64) / two_d];
            self.coeffs[r] * sym(xi)
        });
        SymSequence { table: self.table.clone(), d: self.d, coeffs: vals }
    }

    /// `∂/∂x_axis` of the represented function; only defined over the
    /// reflection group where the derivative stays in the same class.
    pub fn derivative(&self, axis: usize) -> Result<SymSequence> {
        if self.group() != GroupName::Z2xZ1 {
            return Err(Error::UnsupportedGroup(format!(
                "derivatives leave the {} class; restrict to Z2xZ1 first",
                self.group()
            )));
        }
        if axis == 0 {
            return Err(Error::UnsupportedGroup("the x1-derivative is odd in x1".into()));
        }
        let pi_d = Interval::pi() / self.d;
        let c = (0..self.len())
            .map(|r| {
                let m = self.table.rep(r);
                let freq = if axis == 0 { m.0 } else { m.1 };
                -(pi_d * freq as f64) * self.coeffs[self.table.neg_rep(r)]
            })
            .collect();
        SymSequence::from_coeffs(self.table.clone(), self.d, c)
    }

    /// `U * V` truncated to `out_order`; exact when `out_order` is at least
    /// the sum of the input orders.
    pub fn convolve(&self, o: &SymSequence, out_order: usize) -> Result<SymSequence> {
        self.check_compatible(o)?;
        let table = OrbitTable::shared(self.group(), out_order)?;
        let a = self.unfold();
        let b = o.unfold();
        let reps = table.reps();
        if self.is_even() {
            let x = convolve_grids(&a, &b, out_order, Some(reps));
            let c = reps.iter().map(|&m| x.get(m)).collect();
            return SymSequence::from_coeffs(table, self.d, c);
        }
        // Hartley product: h'' = ((X - PX) + (Y + PY)) / 2 with X = a*b,
        // Y = (Pa)*b and (Pg)_m = g_{-m}
        let pa = a.negated();
        let (x, y) = par::join(
            || convolve_grids(&a, &b, out_order, Some(reps)),
            || convolve_grids(&pa, &b, out_order, Some(reps)),
        );
        let c = (0..table.len())
            .map(|r| {
                let m = table.rep(r);
                let mneg = table.rep(table.neg_rep(r));
                ((x.get(m) - x.get(mneg)) + (y.get(m) + y.get(mneg))) * 0.5
            })
            .collect();
        SymSequence::from_coeffs(table, self.d, c)
    }

    /// Kernel `K(m, k)` with `(U*V)_m = Σ_k K(m,k) V_k`.
    #[inline]
    fn kernel(&self, g: &Grid, m: Index, k: Index) -> Interval {
        if self.is_even() {
            g.get((m.0 - k.0, m.1 - k.1))
        } else {
            (g.get((m.0 - k.0, m.1 - k.1)) + g.get((k.0 - m.0, k.1 - m.1)) + g.get((m.0 + k.0, m.1 + k.1))
                - g.get((-m.0 - k.0, -m.1 - k.1)))
                * 0.5
        }
    }

    /// Matrix of `V ↦ U * V` on `π^N`, in the basis `e_n/√α_n` so that its
    /// spectral norm is the `ℓ²` operator norm.
    pub fn conv_operator_matrix(&self, n: usize) -> Result<IntervalMatrix> {
        let table = OrbitTable::shared(self.group(), n)?;
        let g = self.unfold();
        let size = table.len();
        let sqrt_w: Vec<Interval> = table.weights().iter().map(|&w| Interval::point(w as f64).sqrt()).collect();
        Ok(IntervalMatrix::from_fn(size, size, |i, j| {
            let m = table.rep(i);
            let s: Interval = table.members(j).iter().map(|&k| self.kernel(&g, m, k)).sum();
            if table.weight(i) == table.weight(j) {
                s
            } else {
                s * sqrt_w[i] / sqrt_w[j]
            }
        }))
    }

    /// Coefficients in the orthonormal basis `e_n/√α_n` (`x_n = √α_n u_n`).
    pub fn orthonormal_coords(&self) -> Vec<Interval> {
        self.coeffs
            .iter()
            .zip(self.table.weights())
            .map(|(v, &w)| if w == 1 { *v } else { *v * Interval::point(w as f64).sqrt() })
            .collect()
    }

    /// Inverse of [`SymSequence::orthonormal_coords`].
    pub fn from_orthonormal(table: Arc<OrbitTable>, d: f64, x: &[Interval]) -> Result<SymSequence> {
        let c = x
            .iter()
            .zip(table.weights())
            .map(|(v, &w)| if w == 1 { *v } else { *v / Interval::point(w as f64).sqrt() })
            .collect();
        SymSequence::from_coeffs(table, d, c)
    }

    pub fn to_document(&self) -> SequenceDocument {
        SequenceDocument {
            group: self.group().to_string(),
            d: self.d,
            order: self.order(),
            rows: self.table.reps().iter().zip(&self.coeffs).map(|(&(a, b), &v)| (a, b, v)).collect(),
        }
    }

    pub fn from_document(doc: &SequenceDocument) -> Result<SymSequence> {
        let name: GroupName = doc.group.parse()?;
        let table = OrbitTable::shared(name, doc.order)?;
        let mut s = SymSequence::zeros(table.clone(), doc.d)?;
        for &(a, b, v) in &doc.rows {
            let r = table
                .rep_of((a, b))
                .ok_or_else(|| Error::Format(format!("row {:?} outside order {}", (a, b), doc.order)))?;
            if table.rep(r) != (a, b) {
                return Err(Error::Format(format!("row {:?} is not a representative", (a, b))));
            }
            s.coeffs[r] = v;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<SymSequence> {
        let doc: SequenceDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }
}

/// Serialized form of a [`SymSequence`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SequenceDocument {
    pub group: String,
    pub d: f64,
    pub order: usize,
    pub rows: Vec<(i32, i32, Interval)>,
}
