//! Rigorous integrals and point evaluations used by the bounds.
//!
//! Overlap integrals `∫ w(y) w(R_θ y) dy` are evaluated in closed form: the
//! product of two Hartley modes integrates over a centrally symmetric convex
//! polygon to the cosine transform of its indicator, which has an exact
//! edge-sum expression. Symbol ratio norms reduce to a radial integral that
//! is enclosed by Taylor expansion with a Cauchy-estimate remainder.

use crate::approx::RotatedSum;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::par;
use crate::seqspace::{Side, SymSequence};
use crate::symmetry::rotate_point;

/// A planar point with enclosed coordinates.
pub type Point = [Interval; 2];

/// The rotation angle `2π·num/den`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Angle {
    num: i64,
    den: i64,
}

impl Angle {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::Domain(format!("angle denominator must be positive, got {den}")));
        }
        Ok(Angle { num: num.rem_euclid(den), den })
    }

    /// The `k`-th rotation of `D_j`, `2πk/j`.
    pub fn turn(k: u32, j: u32) -> Self {
        let j = j.max(1) as i64;
        Angle { num: (k as i64).rem_euclid(j), den: j }
    }

    pub fn zero() -> Self {
        Angle { num: 0, den: 1 }
    }

    /// `(num, den)` with `θ = 2π·num/den` and `0 ≤ num < den`.
    pub fn fraction(self) -> (i64, i64) {
        (self.num, self.den)
    }

    /// Number of quarter turns when the angle is a multiple of `π/2`.
    pub fn quarter_turns(self) -> Option<u32> {
        (4 * self.num % self.den == 0).then(|| (4 * self.num / self.den) as u32)
    }

    /// The angle reduced modulo `π/2`, as a fraction of a quarter turn in `[0, 1)`.
    fn quarter_fraction(self) -> (i64, i64) {
        ((4 * self.num).rem_euclid(self.den), self.den)
    }

    pub fn radians(self) -> Interval {
        Interval::pi() * Interval::ratio(2 * self.num, self.den)
    }

    /// `(cos θ, sin θ)`, exact at quarter turns.
    pub fn cos_sin(self) -> (Interval, Interval) {
        match self.quarter_turns() {
            Some(0) => (Interval::ONE, Interval::ZERO),
            Some(1) => (Interval::ZERO, Interval::ONE),
            Some(2) => (-Interval::ONE, Interval::ZERO),
            Some(_) => (Interval::ZERO, -Interval::ONE),
            None => {
                let t = Interval::ratio(2 * self.num, self.den);
                (t.cospi(), t.sinpi())
            }
        }
    }

    /// Rotate a point counterclockwise by this angle.
    pub fn rotate(self, x: Point) -> Point {
        match self.quarter_turns() {
            Some(q) => rotate_point(x, q, 4),
            None => {
                let (c, s) = self.cos_sin();
                [c * x[0] - s * x[1], s * x[0] + c * x[1]]
            }
        }
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;

    fn neg(self) -> Angle {
        Angle { num: (-self.num).rem_euclid(self.den), den: self.den }
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if !(3..=8).contains(&vertices.len()) {
            return Err(Error::Shape(format!("polygon with {} vertices", vertices.len())));
        }
        let poly = ConvexPolygon { vertices };
        // orientation test on midpoints: every turn must be non-clockwise
        let n = poly.vertices.len();
        for i in 0..n {
            let [p, q, r] = [0, 1, 2].map(|s| poly.vertices[(i + s) % n].map(|c| c.mid()));
            let turn = (q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0]);
            if turn < -1e-9 * (1.0 + p[0].abs() + p[1].abs()).powi(2) {
                return Err(Error::Shape("vertices are not convex and counterclockwise".into()));
            }
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// `(p, q)` pairs of consecutive vertices.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> Interval {
        self.edges().map(|(p, q)| cross(p, q)).sum::<Interval>() * 0.5
    }

    /// `∫_P |y|² dy`.
    pub fn polar_moment(&self) -> Interval {
        self.edges()
            .map(|(p, q)| {
                let s = dot(p, p) + dot(p, q) + dot(q, q);
                cross(p, q) * s / 12.0
            })
            .sum()
    }

    /// Upper bound on `max |y|` over the polygon.
    pub fn radius(&self) -> f64 {
        self.vertices.iter().map(|v| dot(*v, *v).sqrt().hi()).fold(0.0, f64::max)
    }

    /// `∫_P cos(v·y) dy`, valid for polygons symmetric under `y ↦ -y`.
    pub fn cosine_transform(&self, v: Point) -> Interval {
        let vv = dot(v, v);
        let r = self.radius();
        let vr = vv.sqrt().hi() * r;
        if vr < SMALL_FREQUENCY {
            // cos x = 1 - x²/2 + [0, x⁴/24]
            let area = self.area();
            return area - vv * self.polar_moment() * 0.25 + Interval::new(0.0, (area * vr.powi(4) / 24.0).hi());
        }
        let sum: Interval = self
            .edges()
            .map(|(p, q)| {
                let e = sub(q, p);
                let c = [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5];
                let normal = [e[1], -e[0]];
                dot(v, normal) * dot(v, c).sin() * sinc(dot(v, e) * 0.5)
            })
            .sum();
        sum / vv
    }
}

/// Below this value of `|v|·radius` the cosine transform switches to its
/// Taylor expansion, avoiding the `1/|v|²` cancellation.
const SMALL_FREQUENCY: f64 = 1e-3;

fn cross(p: Point, q: Point) -> Interval {
    p[0] * q[1] - p[1] * q[0]
}

fn dot(p: Point, q: Point) -> Interval {
    p[0] * q[0] + p[1] * q[1]
}

fn sub(p: Point, q: Point) -> Point {
    [p[0] - q[0], p[1] - q[1]]
}

/// `sin(x)/x`, with a Taylor enclosure near the origin.
pub fn sinc(x: Interval) -> Interval {
    if x.mag() < 0.5 {
        sinc_series(x)
    } else {
        x.sin() / x
    }
}

fn sinc_series(x: Interval) -> Interval {
    // Σ_{k<8} (-x²)^k/(2k+1)! with the alternating remainder bounded by the next term
    let x2 = x.sqr();
    let mut term = Interval::ONE;
    let mut sum = Interval::ONE;
    for k in 1..8u32 {
        term = -term * x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
        sum += term;
    }
    let next = (term * x2 / (16.0 * 17.0)).mag();
    (sum + Interval::symmetric(next)).min(Interval::ONE)
}

/// `Ω₀ ∩ R_θ Ω₀` for the square `Ω₀ = (-d, d)²`.
///
/// The intersection has the four-fold symmetry of the square, so `θ` is
/// reduced modulo `π/2` first; at quarter turns the square is returned.
pub fn square_intersection(theta: Angle, d: f64) -> ConvexPolygon {
    let d_iv = Interval::point(d);
    let (num, den) = theta.quarter_fraction();
    if num == 0 {
        let corners = [(1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0)];
        return ConvexPolygon {
            vertices: corners.iter().map(|&(a, b)| [d_iv * a, d_iv * b]).collect(),
        };
    }
    // reduced angle φ ∈ (0, π/2): on the edge x₁ = d the rotated square
    // cuts x₂ ∈ [-d tan(π/4 - φ/2), d tan(φ/2)]
    let t = Interval::ratio(num, 2 * den);
    let (c, s) = (t.cospi(), t.sinpi());
    let tan_half = s / (Interval::ONE + c);
    let tan_comp = c / (Interval::ONE + s);
    let first = [[d_iv, -(d_iv * tan_comp)], [d_iv, d_iv * tan_half]];
    let mut vertices = Vec::with_capacity(8);
    for q in 0..4 {
        for v in first {
            vertices.push(rotate_point(v, q, 4));
        }
    }
    ConvexPolygon { vertices }
}

/// Outcome of a quadrature with a requested tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureReport {
    pub value: Interval,
    /// Whether the enclosure radius is at most the requested tolerance.
    pub tol_met: bool,
}

impl QuadratureReport {
    fn new(value: Interval, tol: f64) -> Self {
        QuadratureReport { value, tol_met: value.rad() <= tol }
    }
}

/// `∫ w(y) w(R_θ y) dy` over the square, with `w = γ†(W)` extended by zero.
///
/// The integrand is supported on `Ω₀ ∩ R_{-θ}Ω₀`. Writing `w` in Hartley
/// form, every pair of modes `(m, k)` contributes `h_m h_k F_P(ω_m - R_θᵀω_k)`
/// where `F_P` is the polygon cosine transform; the sine parts integrate to
/// zero by central symmetry. The result is exact up to rounding, so `tol`
/// only decides the reported status.
pub fn overlap_integral(w: &SymSequence, theta: Angle, tol: f64) -> Result<QuadratureReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let d = w.d();
    let poly = square_intersection(-theta, d);
    let grid = w.unfold();
    let o = grid.order() as i32;
    let modes: Vec<((i32, i32), Interval)> = (-o..=o)
        .flat_map(|a| (-o..=o).map(move |b| (a, b)))
        .map(|m| (m, grid.get(m)))
        .filter(|(_, h)| *h != Interval::ZERO)
        .collect();
    if modes.is_empty() {
        return Ok(QuadratureReport::new(Interval::ZERO, tol));
    }

    let pi_d = Interval::pi() / d;
    let (c, s) = theta.cos_sin();
    let freq = |m: (i32, i32)| [pi_d * m.0 as f64, pi_d * m.1 as f64];
    let left: Vec<Point> = modes.iter().map(|(m, _)| freq(*m)).collect();
    // R_θᵀ ω_k
    let right: Vec<Point> = left.iter().map(|w| [c * w[0] + s * w[1], c * w[1] - s * w[0]]).collect();
    let tables = EdgeTables::new(&poly, &left, &right);

    let rows = par::map_range(modes.len(), |a| {
        let ha = modes[a].1;
        let mut acc = Interval::ZERO;
        for (b, (_, hb)) in modes.iter().enumerate() {
            let v = sub(left[a], right[b]);
            acc += ha * *hb * tables.transform(v, a, b);
        }
        acc
    });
    let value: Interval = rows.into_iter().sum();
    Ok(QuadratureReport::new(value, tol))
}

/// Per-mode trigonometric tables for the edge-sum transform, so that each
/// pair only needs addition formulas.
struct EdgeTables {
    edges: Vec<EdgeTable>,
    area: Interval,
    polar: Interval,
    radius: f64,
}

struct EdgeTable {
    // for a frequency x: sin(x·c), cos(x·c), x·e/2, sin(x·e/2), cos(x·e/2), x·n
    left: Vec<[Interval; 6]>,
    right: Vec<[Interval; 6]>,
}

impl EdgeTables {
    fn new(poly: &ConvexPolygon, left: &[Point], right: &[Point]) -> Self {
        let edges = poly
            .edges()
            .map(|(p, q)| {
                let e = sub(q, p);
                let half = [e[0] * 0.5, e[1] * 0.5];
                let mid = [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5];
                let normal = [e[1], -e[0]];
                let table = |xs: &[Point]| -> Vec<[Interval; 6]> {
                    par::map_slice(xs, |x| {
                        let a = dot(*x, mid);
                        let b = dot(*x, half);
                        [a.sin(), a.cos(), b, b.sin(), b.cos(), dot(*x, normal)]
                    })
                };
                EdgeTable { left: table(left), right: table(right) }
            })
            .collect();
        EdgeTables { edges, area: poly.area(), polar: poly.polar_moment(), radius: poly.radius() }
    }

    fn transform(&self, v: Point, a: usize, b: usize) -> Interval {
        let vv = dot(v, v);
        let vr = vv.sqrt().hi() * self.radius;
        if vr < SMALL_FREQUENCY {
            let tail = Interval::new(0.0, (self.area * vr.powi(4) / 24.0).hi());
            return self.area - vv * self.polar * 0.25 + tail;
        }
        let mut sum = Interval::ZERO;
        for t in &self.edges {
            let [sa, ka, ha, sha, kha, na] = t.left[a];
            let [sb, kb, hb, shb, khb, nb] = t.right[b];
            let sin_c = sa * kb - ka * sb;
            let arg = ha - hb;
            let sinc_e = if arg.mag() < 0.5 { sinc_series(arg) } else { (sha * khb - kha * shb) / arg };
            sum += (na - nb) * sin_c * sinc_e;
        }
        sum / vv
    }
}

/// Bound on `‖w − R_θ w‖₂` for `w = γ†(W)`.
///
/// At quarter turns the rotation acts on the lattice and the norm is
/// computed exactly from coefficients. Otherwise the overlap integral is
/// evaluated on the truncation `W^{N₁}` and the remainder enters through
/// `2√|Ω₀| ‖W − W^{N₁}‖₂`.
pub fn phi_rotation(w: &SymSequence, theta: Angle, n1: usize, tol: f64) -> Result<QuadratureReport> {
    if n1 > w.order() {
        return Err(Error::Domain(format!("N1={n1} exceeds the truncation {}", w.order())));
    }
    let sqrt_area = w.domain_area().sqrt();
    if let Some(q) = theta.quarter_turns() {
        let grid = w.unfold();
        let o = grid.order() as i32;
        let mut sq = Interval::ZERO;
        for a in -o..=o {
            for b in -o..=o {
                // (R w)_n = h_{R n}
                let rn = match q {
                    0 => (a, b),
                    1 => (-b, a),
                    2 => (-a, -b),
                    _ => (b, -a),
                };
                sq += (grid.get((a, b)) - grid.get(rn)).sqr();
            }
        }
        let value = sqrt_area * sq.sqrt();
        return Ok(QuadratureReport::new(value, tol));
    }
    let head = w.project(n1 as i64, Side::Inside);
    let tail = w.sub(&head)?;
    let head = head.with_order(n1)?;
    let overlap = overlap_integral(&head, theta, tol)?;
    let radicand = (w.domain_area() * head.norm2().sqr() - overlap.value) * 2.0;
    let value = radicand.clamp_nonneg().sqrt() + sqrt_area * tail.norm2() * 2.0;
    Ok(QuadratureReport { value, tol_met: overlap.tol_met })
}

/// Planar point from `f64` coordinates.
pub fn point(x1: f64, x2: f64) -> Point {
    [Interval::point(x1), Interval::point(x2)]
}

/// Enclosure of `∂₁^p ∂₂^q` of the periodic series `Σ h_m cas(π m·x/d)`,
/// ignoring the support cut-off.
pub fn eval_series(u: &SymSequence, x: Point, deriv: (u32, u32)) -> Interval {
    let grid = u.unfold();
    let o = grid.order() as i32;
    let d = u.d();
    let axis = |xi: Interval, p: u32| -> (Vec<Interval>, Vec<Interval>) {
        let t = xi / d;
        let w = Interval::pi() / d;
        (-o..=o)
            .map(|m| {
                let arg = t * m as f64;
                let (c, s) = (arg.cospi(), arg.sinpi());
                // p-th derivative of (cos, sin)(ω x) divided by ω^p cycles through
                // (c, s), (-s, c), (-c, -s), (s, -c)
                let (dc, ds) = match p % 4 {
                    0 => (c, s),
                    1 => (-s, c),
                    2 => (-c, -s),
                    _ => (s, -c),
                };
                let scale = (w * m as f64).powi(p);
                (dc * scale, ds * scale)
            })
            .unzip()
    };
    let (c1, s1) = axis(x[0], deriv.0);
    let (c2, s2) = axis(x[1], deriv.1);
    let even = u.is_even();
    let side = (2 * o + 1) as usize;
    let data = grid.data();
    let mut acc = Interval::ZERO;
    for a in 0..side {
        for b in 0..side {
            let h = data[a * side + b];
            if h == Interval::ZERO {
                continue;
            }
            // cas(A + B) = cos A cos B - sin A sin B + sin A cos B + cos A sin B
            let mut mode = c1[a] * c2[b] - s1[a] * s2[b];
            if !even {
                mode += s1[a] * c2[b] + c1[a] * s2[b];
            }
            acc += h * mode;
        }
    }
    acc
}

/// Where a point lies relative to the closed square.
fn support_status(x: Point, d: f64) -> Option<bool> {
    let inside = x.iter().all(|c| c.abs().hi() <= d);
    let outside = x.iter().any(|c| c.abs().lo() > d);
    if inside {
        Some(true)
    } else if outside {
        Some(false)
    } else {
        None
    }
}

fn with_support(u: &SymSequence, x: Point, f: impl FnOnce() -> Interval) -> Interval {
    match support_status(x, u.d()) {
        Some(true) => f(),
        Some(false) => Interval::ZERO,
        None => f().hull(Interval::ZERO),
    }
}

/// Enclosure of `γ†(U)(x)`: the series on the closed square, zero outside.
pub fn eval_trigpoly(u: &SymSequence, x: Point) -> Interval {
    with_support(u, x, || eval_series(u, x, (0, 0)))
}

/// Gradient of `γ†(U)` at `x`, with the same support convention.
pub fn eval_gradient(u: &SymSequence, x: Point) -> Point {
    [
        with_support(u, x, || eval_series(u, x, (1, 0))),
        with_support(u, x, || eval_series(u, x, (0, 1))),
    ]
}

/// Enclosure of `(1/j) Σ_k u₀(R_{2πk/j} x)`.
pub fn eval_rotated_sum(w0: &RotatedSum, x: Point) -> Interval {
    let j = w0.j();
    let sum: Interval = (0..j).map(|k| eval_trigpoly(w0.base(), rotate_point(x, k, j))).sum();
    sum / j as f64
}

/// Gradient of the rotation average: `(1/j) Σ_k R_kᵀ ∇u₀(R_k x)`.
pub fn eval_rotated_gradient(w0: &RotatedSum, x: Point) -> Point {
    let j = w0.j();
    let mut acc = [Interval::ZERO; 2];
    for k in 0..j {
        let g = eval_gradient(w0.base(), rotate_point(x, k, j));
        let back = rotate_point(g, (j - k) % j, j);
        acc[0] += back[0];
        acc[1] += back[1];
    }
    [acc[0] / j as f64, acc[1] / j as f64]
}

/// Radially symmetric multipliers (or `2πξ₂`) entering symbol ratio norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialSymbol {
    Zero,
    One,
    /// `2πξ₂`, the modulus of the `x₂`-derivative symbol.
    Dx2,
    /// `(1 - 4π²|ξ|²)² + μ`.
    L(Interval),
    /// `-4π²|ξ|² - 1`.
    L0,
    /// `(1 - 4π²|ξ|²)² + 1`.
    L1,
}

const TAYLOR_ORDER: usize = 30;

/// Enclosure of `‖num/den‖_{L²(ℝ²)}`.
///
/// With `s = 4π²|ξ|²` the angular integral gives
/// `(1/4π) ∫₀^∞ g(s)/den(s)² ds` where `g = 1` for a constant numerator and
/// `g = s/2` for `2πξ₂`. The radial integral up to `S = 4π²R²` is split into
/// cells a fixed fraction of the distance to the nearest complex pole wide;
/// on each cell the Taylor polynomial at the midpoint is integrated exactly
/// and the remainder is bounded by a Cauchy estimate. Beyond `S` an explicit
/// majorant is used.
pub fn symbol_ratio_l2(num: RadialSymbol, den: RadialSymbol, tail_r: f64) -> Result<Interval> {
    let weight = match num {
        RadialSymbol::Zero => return Ok(Interval::ZERO),
        RadialSymbol::One => Weight::One,
        RadialSymbol::Dx2 => Weight::HalfS,
        other => return Err(Error::UnsupportedSymbol(format!("numerator {other:?}"))),
    };
    let den = match den {
        RadialSymbol::L(mu) if mu.lo() > 0.0 => Denominator::Quartic(mu),
        RadialSymbol::L1 => Denominator::Quartic(Interval::ONE),
        RadialSymbol::L0 => Denominator::Linear,
        other => return Err(Error::UnsupportedSymbol(format!("denominator {other:?}"))),
    };
    if !(tail_r > 0.0 && tail_r.is_finite()) {
        return Err(Error::Domain(format!("tail radius must be positive, got {tail_r}")));
    }
    let big_s = (Interval::pi() * 2.0 * tail_r).sqr().lo();
    let tail = den.tail(weight, big_s)?;

    let mut cells = Vec::new();
    let mut s = 0.0f64;
    while s < big_s {
        let next = (s + 0.25 * den.pole_distance(s)).min(big_s);
        cells.push((s, next));
        s = next;
    }
    let pieces = par::map_slice(&cells, |&(a, b)| den.cell_integral(weight, a, b));
    let body: Interval = pieces.into_iter().sum();
    let total = (body + tail) / (Interval::pi() * 4.0);
    Ok(total.clamp_nonneg().sqrt())
}

#[derive(Clone, Copy, Debug)]
enum Weight {
    One,
    HalfS,
}

#[derive(Clone, Copy, Debug)]
enum Denominator {
    /// `(1 - s)² + c` with poles at `1 ± i√c`.
    Quartic(Interval),
    /// `-(1 + s)`, pole at `-1`.
    Linear,
}

impl Denominator {
    /// Distance from a real point to the nearest pole (heuristic step size).
    fn pole_distance(self, s: f64) -> f64 {
        match self {
            Denominator::Quartic(c) => ((s - 1.0).powi(2) + c.lo()).sqrt(),
            Denominator::Linear => s + 1.0,
        }
    }

    /// Rigorous lower bound on the pole distance over `[a, b]`.
    fn cell_distance(self, a: f64, b: f64) -> Interval {
        match self {
            Denominator::Quartic(c) => {
                let gap = if a <= 1.0 && 1.0 <= b { 0.0 } else { (1.0 - a).abs().min((b - 1.0).abs()) };
                (Interval::point(gap).sqr() + c).sqrt()
            }
            Denominator::Linear => Interval::point(a) + 1.0,
        }
    }

    /// Coefficients of `den(m + t)²` in `t`.
    fn squared_poly(self, m: Interval) -> Vec<Interval> {
        match self {
            Denominator::Quartic(c) => {
                let a = Interval::ONE - m;
                let p = [a.sqr() + c, -(a * 2.0), Interval::ONE];
                poly_mul(&p, &p)
            }
            Denominator::Linear => {
                let p = [Interval::ONE + m, Interval::ONE];
                poly_mul(&p, &p)
            }
        }
    }

    /// Power of `den` appearing in `|den|² ≥ (δ - ρ)^power`.
    fn power(self) -> u32 {
        match self {
            Denominator::Quartic(_) => 4,
            Denominator::Linear => 2,
        }
    }

    fn tail(self, w: Weight, s: f64) -> Result<Interval> {
        match (self, w) {
            // (1 - s)² + c ≥ (s - 1)²
            (Denominator::Quartic(_), Weight::One) => {
                let x = Interval::point(s) - 1.0;
                Ok((x.powi(3) * 3.0).recip().below())
            }
            (Denominator::Quartic(_), Weight::HalfS) => {
                let x = Interval::point(s) - 1.0;
                Ok(((x.sqr() * 4.0).recip() + (x.powi(3) * 6.0).recip()).below())
            }
            // ∫_S^∞ (1 + s)^{-2} ds = 1/(1 + S) exactly
            (Denominator::Linear, Weight::One) => Ok((Interval::point(s) + 1.0).recip()),
            (Denominator::Linear, Weight::HalfS) => {
                Err(Error::UnsupportedSymbol("s/(1+s)² is not integrable at infinity".into()))
            }
        }
    }

    fn cell_integral(self, w: Weight, a: f64, b: f64) -> Interval {
        let m = Interval::point(0.5 * (a + b));
        let tl = Interval::point(a) - m;
        let tr = Interval::point(b) - m;
        let g: Vec<Interval> = match w {
            Weight::One => vec![Interval::ONE],
            Weight::HalfS => vec![m * 0.5, Interval::point(0.5)],
        };
        let coeffs = series_quotient(&g, &self.squared_poly(m), TAYLOR_ORDER);
        let mut sum = Interval::ZERO;
        let (mut pl, mut pr) = (tl, tr);
        for (k, c) in coeffs.iter().enumerate() {
            sum += *c * (pr - pl) / (k + 1) as f64;
            pl *= tl;
            pr *= tr;
        }
        // Cauchy estimate with radius ρ = δ/2 around any point of the cell
        // δ - ρ = ρ, and halving is exact
        let rho = Interval::point(self.cell_distance(a, b).lo() * 0.5);
        let g_max = match w {
            Weight::One => Interval::ONE,
            Weight::HalfS => (Interval::point(b) + rho) * 0.5,
        };
        let coef_bound = g_max / rho.powi(self.power() + TAYLOR_ORDER as u32);
        let k1 = (TAYLOR_ORDER + 1) as f64;
        let moment = (tr.abs().powi(TAYLOR_ORDER as u32 + 1) + tl.abs().powi(TAYLOR_ORDER as u32 + 1)) / k1;
        sum + Interval::symmetric((coef_bound * moment).hi())
    }
}

fn poly_mul(p: &[Interval], q: &[Interval]) -> Vec<Interval> {
    let mut out = vec![Interval::ZERO; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += *a * *b;
        }
    }
    out
}

/// First `n` Taylor coefficients of `g/p`.
fn series_quotient(g: &[Interval], p: &[Interval], n: usize) -> Vec<Interval> {
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = g.get(k).copied().unwrap_or(Interval::ZERO);
        for i in 1..p.len().min(k + 1) {
            acc -= p[i] * q[k - i];
        }
        q.push(acc / p[0]);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{GroupName, OrbitTable};

    fn random_sequence(group: GroupName, order: usize, d: f64, seed: u64) -> SymSequence {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let table = OrbitTable::shared(group, order).unwrap();
        let v: Vec<f64> = (0..table.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SymSequence::from_points(table, d, &v).unwrap()
    }

    #[test]
    fn octagon_area() {
        let oct = square_intersection(Angle::new(1, 8).unwrap(), 1.0);
        assert_eq!(oct.vertices().len(), 8);
        let exact = 8.0 * (2f64.sqrt() - 1.0);
        assert!(oct.area().contains(exact) && oct.area().width() < 1e-13);
        let sq = square_intersection(Angle::zero(), 2.0);
        assert_eq!(sq.area(), Interval::point(16.0));
        assert_eq!(square_intersection(Angle::new(1, 4).unwrap(), 2.0), sq);
        // θ and π/2 − θ give mirror images with equal area
        let a = square_intersection(Angle::new(1, 10).unwrap(), 1.5).area();
        let b = square_intersection(Angle::new(3, 20).unwrap(), 1.5).area();
        assert!(a.overlaps(b));
    }

    #[test]
    fn polygon_transform_matches_square_formula() {
        let sq = square_intersection(Angle::zero(), 1.0);
        for v in [[0.3f64, -1.7], [2.0, 0.0], [1e-5, 2e-5], [5.0, 4.0]] {
            let exact = 4.0 * v[0].sin() / v[0] * v[1].sin() / v[1];
            let exact = if v[1] == 0.0 { 4.0 * v[0].sin() / v[0] } else { exact };
            let f = sq.cosine_transform(point(v[0], v[1]));
            assert!((f.mid() - exact).abs() < 1e-10, "{v:?}: {f} vs {exact}");
            assert!(f.width() < 1e-9);
        }
        let oct = square_intersection(Angle::new(1, 12).unwrap(), 1.0);
        assert!(oct.cosine_transform(point(0.0, 0.0)).contains(oct.area().mid()));
    }

    #[test]
    fn overlap_at_zero_is_parseval() {
        let w = random_sequence(GroupName::D2, 4, 3.0, 7);
        let r = overlap_integral(&w, Angle::zero(), 1e-8).unwrap();
        let parseval = w.domain_area() * w.norm2().sqr();
        assert!(r.value.overlaps(parseval), "{} vs {}", r.value, parseval);
        assert!(r.tol_met);
    }

    #[test]
    fn overlap_of_constant_is_area() {
        let table = OrbitTable::shared(GroupName::Z2xZ1, 3).unwrap();
        let w = SymSequence::delta(table, 2.0, (0, 0), Interval::ONE).unwrap();
        let theta = Angle::new(1, 5).unwrap();
        let r = overlap_integral(&w, theta, 1e-10).unwrap();
        let area = square_intersection(theta, 2.0).area();
        assert!(r.value.overlaps(area) && r.value.width() < 1e-10);
    }

    #[test]
    fn phi_vanishes_for_invariant_data() {
        let w = random_sequence(GroupName::D4, 3, 2.0, 3);
        let r = phi_rotation(&w, Angle::new(1, 4).unwrap(), 3, 1e-8).unwrap();
        assert_eq!(r.value.lo(), 0.0);
        assert!(r.value.hi() < 1e-12);
        let z = phi_rotation(&w, Angle::zero(), 3, 1e-8).unwrap();
        assert!(z.value.hi() < 1e-12);
    }

    #[test]
    fn trigpoly_support_and_constant() {
        let table = OrbitTable::shared(GroupName::D2, 2).unwrap();
        let u = SymSequence::delta(table, 1.0, (0, 0), Interval::point(2.5)).unwrap();
        let inner = eval_trigpoly(&u, point(0.2, -0.3));
        assert!(inner.contains(2.5) && inner.width() < 1e-14);
        assert_eq!(eval_trigpoly(&u, point(2.0, 0.0)), Interval::ZERO);
        let edge = eval_trigpoly(&u, [Interval::new(0.9, 1.1), Interval::ZERO]);
        assert!(edge.contains(0.0) && edge.contains(2.5));
    }

    #[test]
    fn radial_norms() {
        let l0 = symbol_ratio_l2(RadialSymbol::One, RadialSymbol::L0, 50.0).unwrap();
        let exact = 0.5 / std::f64::consts::PI.sqrt();
        assert!(l0.contains(exact) && l0.width() < 1e-10, "{l0}");
        let mu = Interval::point(0.24);
        let l = symbol_ratio_l2(RadialSymbol::One, RadialSymbol::L(mu), 200.0).unwrap();
        let k2 = crate::sh_model::kappa_squared(mu);
        let via_kappa = (k2 / (Interval::pi() * 2.0)).sqrt();
        assert!(l.overlaps(via_kappa) && l.width() < 1e-9, "{l} vs {via_kappa}");
        let kd = symbol_ratio_l2(RadialSymbol::Dx2, RadialSymbol::L1, 200.0).unwrap();
        assert!(kd.contains(0.258_397_693_268_509_88), "{kd}");
        assert_eq!(symbol_ratio_l2(RadialSymbol::Zero, RadialSymbol::L1, 1.0).unwrap(), Interval::ZERO);
        assert!(matches!(
            symbol_ratio_l2(RadialSymbol::Dx2, RadialSymbol::L0, 10.0),
            Err(Error::UnsupportedSymbol(_))
        ));
    }
}
