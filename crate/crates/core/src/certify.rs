//! End-to-end proof runs: configuration, regime dispatch, bound assembly,
//! the radii-polynomial check and the certificate record.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{self, GuessShape, RotatedSum};
use crate::bounds::{self, BoundSet, RotationDefects, Variant, Z2Coeffs, Z2Extra};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::par;
use crate::quadrature::{self, point, Point};
use crate::seqspace::SymSequence;
use crate::sh_model::{self, SHParams, SupSearch};
use crate::symmetry::{maximal_subgroup, GroupName};

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Order of the dihedral group `D_j`.
    pub j: u32,
    pub mu: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Half-width of the square `(-d, d)²`.
    pub d: f64,
    /// Truncation of the candidate.
    pub n0: usize,
    /// Size of the finite section of the approximate inverse.
    pub n: usize,
    /// Truncation used inside the rotation-overlap quadrature.
    pub n1: usize,
    /// Border scale of the bordered system; `None` picks `‖∂₂u₀‖₂`.
    pub rho: Option<f64>,
    pub quad_tol: f64,
    pub newton_tol: f64,
    pub newton_maxiter: usize,
    /// Width tolerance of the `C₀` supremum search.
    pub c0_tol: f64,
    pub guess: GuessShape,
    /// Candidate file to certify instead of running the construction.
    pub seed: Option<PathBuf>,
    pub candidate_out: Option<PathBuf>,
    pub certificate_out: Option<PathBuf>,
    pub trace_projection: bool,
    /// Compute the rotation-averaging bounds even when `j ∈ {2, 4}`.
    pub force_symmetrized: bool,
    /// Point where `w₀` is shown to be nonzero (bordered runs).
    pub witness: Option<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            j: 2,
            mu: 0.24,
            nu1: -1.6,
            nu2: 1.0,
            d: 20.0,
            n0: 40,
            n: 30,
            n1: 40,
            rho: None,
            quad_tol: 1e-8,
            newton_tol: 1e-11,
            newton_maxiter: 30,
            c0_tol: 1e-4,
            guess: GuessShape::default(),
            seed: None,
            candidate_out: None,
            certificate_out: None,
            trace_projection: true,
            force_symmetrized: false,
            witness: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

fn is_unset(value: &str) -> bool {
    value.is_empty() || value.eq_ignore_ascii_case("none") || value.eq_ignore_ascii_case("auto")
}

impl RunConfig {
    /// Parse a flat `key = value` file; `#` starts a comment. Keys not
    /// present keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Set one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "j" => self.j = parse_num(key, value)?,
            "mu" => self.mu = parse_num(key, value)?,
            "nu1" => self.nu1 = parse_num(key, value)?,
            "nu2" => self.nu2 = parse_num(key, value)?,
            "d" => self.d = parse_num(key, value)?,
            "n0" => self.n0 = parse_num(key, value)?,
            "n" => self.n = parse_num(key, value)?,
            "n1" => self.n1 = parse_num(key, value)?,
            "rho" => self.rho = if is_unset(value) { None } else { Some(parse_num(key, value)?) },
            "quad_tol" => self.quad_tol = parse_num(key, value)?,
            "newton_tol" => self.newton_tol = parse_num(key, value)?,
            "newton_maxiter" => self.newton_maxiter = parse_num(key, value)?,
            "c0_tol" => self.c0_tol = parse_num(key, value)?,
            "alpha" => self.guess.alpha = parse_num(key, value)?,
            "beta" => self.guess.beta = parse_num(key, value)?,
            "ring_radius" => self.guess.ring_radius = parse_num(key, value)?,
            "seed" => self.seed = if is_unset(value) { None } else { Some(PathBuf::from(value)) },
            "candidate_out" => self.candidate_out = if is_unset(value) { None } else { Some(PathBuf::from(value)) },
            "certificate_out" => self.certificate_out = if is_unset(value) { None } else { Some(PathBuf::from(value)) },
            "trace_projection" => self.trace_projection = parse_bool(key, value)?,
            "force_symmetrized" => self.force_symmetrized = parse_bool(key, value)?,
            "witness" => {
                self.witness = if is_unset(value) {
                    None
                } else {
                    let (a, b) = value
                        .split_once(',')
                        .ok_or_else(|| Error::Config(format!("`witness`: expected `x1,x2`, got `{value}`")))?;
                    Some([parse_num(key, a.trim())?, parse_num(key, b.trim())?])
                }
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; [`RunConfig::parse`] inverts it.
    pub fn to_kv(&self) -> String {
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("j", self.j.to_string());
        put("mu", format!("{:?}", self.mu));
        put("nu1", format!("{:?}", self.nu1));
        put("nu2", format!("{:?}", self.nu2));
        put("d", format!("{:?}", self.d));
        put("n0", self.n0.to_string());
        put("n", self.n.to_string());
        put("n1", self.n1.to_string());
        put("rho", self.rho.map_or("auto".into(), |r| format!("{r:?}")));
        put("quad_tol", format!("{:?}", self.quad_tol));
        put("newton_tol", format!("{:?}", self.newton_tol));
        put("newton_maxiter", self.newton_maxiter.to_string());
        put("c0_tol", format!("{:?}", self.c0_tol));
        put("alpha", format!("{:?}", self.guess.alpha));
        put("beta", format!("{:?}", self.guess.beta));
        put("ring_radius", format!("{:?}", self.guess.ring_radius));
        put("seed", path(&self.seed));
        put("candidate_out", path(&self.candidate_out));
        put("certificate_out", path(&self.certificate_out));
        put("trace_projection", self.trace_projection.to_string());
        put("force_symmetrized", self.force_symmetrized.to_string());
        put("witness", self.witness.map_or("none".into(), |[a, b]| format!("{a:?},{b:?}")));
        s
    }

    /// Check the invariants; run before any computation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.j < 2 {
            return fail(format!("group order j={} must be at least 2", self.j));
        }
        if self.j == 3 {
            return Err(Error::UnsupportedGroup(
                "j = 3 lies outside the bordered theorem, which needs an odd order other than 3".into(),
            ));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return fail(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return fail(format!("d must be positive, got {}", self.d));
        }
        if !self.nu1.is_finite() || !self.nu2.is_finite() {
            return fail("nu1 and nu2 must be finite".into());
        }
        if self.n0 == 0 || self.n == 0 || self.n > self.n0 {
            return fail(format!("need 0 < N <= N0, got N={} N0={}", self.n, self.n0));
        }
        if self.n1 == 0 || self.n1 > self.n0 {
            return fail(format!("need 0 < N1 <= N0, got N1={} N0={}", self.n1, self.n0));
        }
        for (name, t) in [("quad_tol", self.quad_tol), ("newton_tol", self.newton_tol), ("c0_tol", self.c0_tol)] {
            if !(t > 0.0) {
                return fail(format!("{name} must be positive, got {t}"));
            }
        }
        if let Some(r) = self.rho {
            if !(r > 0.0) {
                return fail(format!("rho must be positive, got {r}"));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<SHParams> {
        SHParams::from_f64(self.mu, self.nu1, self.nu2, self.d, self.j)
    }

    /// SHA-256 of the canonical rendering, without the output paths.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.candidate_out = None;
        c.certificate_out = None;
        hex_digest(c.to_kv().as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// The theorem a run of order `j` goes through.
pub fn variant_for(j: u32) -> Result<Variant> {
    match j {
        0 | 1 => Err(Error::UnsupportedGroup(format!("j={j} has no dihedral pattern to prove"))),
        3 => Err(Error::UnsupportedGroup("j = 3 is excluded by the bordered theorem".into())),
        2 | 4 => Ok(Variant::Plain),
        j if j % 2 == 0 => Ok(Variant::Symmetrized),
        _ => Ok(Variant::Bordered),
    }
}

/// One radii-polynomial inequality `lhs < rhs`, judged at the upper end of
/// `lhs` against the lower end of `rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: Interval,
    pub rhs: Interval,
    /// `rhs.lo − lhs.hi`; positive exactly when the check passes.
    pub slack: f64,
    pub pass: bool,
}

impl Inequality {
    fn new(name: &str, lhs: Interval, rhs: Interval) -> Self {
        let slack = rhs.lo() - lhs.hi();
        Inequality { name: name.into(), lhs, rhs, slack, pass: lhs.hi() < rhs.lo() }
    }
}

/// Both radii-polynomial conditions at radius `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiiCheck {
    pub r: Interval,
    pub inequalities: Vec<Inequality>,
}

impl RadiiCheck {
    pub fn pass(&self) -> bool {
        self.inequalities.iter().all(|i| i.pass)
    }
}

fn radii_parts(y: Interval, z1: Interval, z2: Z2Coeffs, r: Interval) -> (Interval, Interval, Interval) {
    let z2r = z2.at(r);
    let gap = Interval::ONE - z1;
    (z2r * r.sqr() * 0.5 - gap * r + y, z2r * r, gap)
}

/// `½Z₂(r)r² − (1 − Z₁ − Zₛ)r + Y₀ + Yₛ < 0` and `Z₂(r)r < 1 − Z₁ − Zₛ`.
pub fn radii_check(b: &BoundSet, r: Interval) -> RadiiCheck {
    let (ys, zs) = match b.variant {
        Variant::Plain => (Interval::ZERO, Interval::ZERO),
        _ => (b.ys, b.zs),
    };
    let (poly, contr, gap) = radii_parts(b.y0 + ys, b.z1 + zs, b.z2, r);
    RadiiCheck {
        r,
        inequalities: vec![Inequality::new("radii_polynomial", poly, Interval::ZERO), Inequality::new("contraction", contr, gap)],
    }
}

const R_GRID: usize = 64;
const R_BISECTIONS: usize = 60;

/// Smallest radius passing [`radii_check`]: the first success on a log grid
/// over `[Y₀ + Yₛ, 1]`, refined by bisection against the preceding grid point.
pub fn find_r(b: &BoundSet) -> Option<Interval> {
    if !b.is_finite() {
        return None;
    }
    let y = match b.variant {
        Variant::Plain => b.y0,
        _ => b.y0 + b.ys,
    };
    let lo = y.hi().max(f64::MIN_POSITIVE);
    if lo >= 1.0 {
        return None;
    }
    let passes = |r: f64| radii_check(b, Interval::point(r)).pass();
    let (llo, lhi) = (lo.ln(), 0.0f64);
    let grid: Vec<f64> = (0..R_GRID).map(|i| (llo + (lhi - llo) * i as f64 / (R_GRID - 1) as f64).exp()).collect();
    let first = grid.iter().position(|&r| passes(r))?;
    let mut good = grid[first];
    if first > 0 {
        let mut bad = grid[first - 1];
        for _ in 0..R_BISECTIONS {
            let mid = (bad * good).sqrt();
            if !(mid > bad && mid < good) {
                break;
            }
            if passes(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    Some(Interval::point(good))
}

/// Radius at which a failed run is reported: the grid point with the
/// smallest polynomial value.
fn best_effort_r(b: &BoundSet) -> Interval {
    let y = (b.y0 + b.ys).hi();
    let lo = if y.is_finite() && y > 0.0 { y.min(0.5) } else { 1e-12 };
    let score = |r: f64| {
        let c = radii_check(b, Interval::point(r));
        c.inequalities[0].lhs.hi()
    };
    let grid = (0..R_GRID).map(|i| (lo.ln() * (1.0 - i as f64 / (R_GRID - 1) as f64)).exp());
    let best = grid.fold((f64::INFINITY, lo), |acc, r| {
        let s = score(r);
        if s < acc.0 {
            (s, r)
        } else {
            acc
        }
    });
    Interval::point(best.1)
}

/// Enclosure of `w₀(b) = (1/j)Σ_k u₀(R_{2πk/j} b)`; nonvanishing iff `0` is
/// outside it.
pub fn check_w0_nonzero(u0: &SymSequence, j: u32, b: Point) -> Result<Interval> {
    let w0 = RotatedSum::new(u0.clone(), j)?;
    Ok(quadrature::eval_rotated_sum(&w0, b))
}

const WITNESS_GRID: usize = 33;

/// Maximizer of `|u₀|` over a coarse grid of the square.
pub fn default_witness(u0: &SymSequence) -> [f64; 2] {
    let d = u0.d();
    let step = 2.0 * d / (WITNESS_GRID + 1) as f64;
    let coord = |i: usize| -d + step * (i + 1) as f64;
    let values = par::map_range(WITNESS_GRID * WITNESS_GRID, |k| {
        let x = [coord(k / WITNESS_GRID), coord(k % WITNESS_GRID)];
        (quadrature::eval_trigpoly(u0, point(x[0], x[1])).mid().abs(), x)
    });
    values.into_iter().fold((-1.0, [0.0, 0.0]), |acc, v| if v.0 > acc.0 { v } else { acc }).1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: [f64; 2],
    pub value: Interval,
    pub nonzero: bool,
}

/// The candidate produced by guess, Newton and trace projection.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub u0: SymSequence,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// `‖π^{N₀}F‖₂` at the Newton solution, before trace projection.
    pub galerkin_residual: f64,
    /// `‖F(U₀)‖₂` of the stored candidate, all modes included.
    pub residual: Interval,
    /// Whether Newton landed on the zero solution.
    pub trivial: bool,
}

const TRIVIAL_AMPLITUDE: f64 = 1e-8;

/// Run the construction pipeline of `cfg`.
pub fn build_candidate(cfg: &RunConfig) -> Result<Candidate> {
    cfg.validate()?;
    let p = cfg.params()?;
    let guess = approx::initial_guess(cfg.j, cfg.guess, cfg.d, cfg.n0).map_err(|e| e.at_stage("guess"))?;
    let newton = approx::newton_galerkin(&guess, &p, cfg.newton_tol, cfg.newton_maxiter).map_err(|e| e.at_stage("newton"))?;
    let u0 = if cfg.trace_projection {
        approx::trace_project(&newton.solution).map_err(|e| e.at_stage("trace_projection"))?
    } else {
        newton.solution.clone()
    };
    let residual = sh_model::residual_f(&u0, &p).map_err(|e| e.at_stage("residual"))?.norm2();
    let trivial = u0.norm1().hi() < TRIVIAL_AMPLITUDE;
    if trivial {
        warn!("Newton converged to the trivial solution");
    }
    info!("candidate: {} Newton steps, residual {}", newton.iterations, residual);
    let galerkin_residual = newton.history.last().copied().unwrap_or(f64::NAN);
    Ok(Candidate { u0, iterations: newton.iterations, history: newton.history, galerkin_residual, residual, trivial })
}

/// Check that a stored candidate fits the configuration.
pub fn check_candidate(cfg: &RunConfig, u0: &SymSequence) -> Result<()> {
    let want = maximal_subgroup(cfg.j)?.name();
    if u0.group() != want {
        return Err(Error::Config(format!("candidate is stored over {}, but D{} needs {want}", u0.group(), cfg.j)));
    }
    if u0.d() != cfg.d {
        return Err(Error::Config(format!("candidate half-width {} differs from d = {}", u0.d(), cfg.d)));
    }
    if u0.order() != cfg.n0 {
        return Err(Error::Config(format!("candidate order {} differs from N0 = {}", u0.order(), cfg.n0)));
    }
    Ok(())
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

/// Compute every bound for the candidate `u0`.
pub fn compute_bounds(u0: &SymSequence, cfg: &RunConfig) -> Result<(BoundSet, Option<Interval>, bool)> {
    let p = cfg.params()?;
    let (n, n1, j) = (cfg.n, cfg.n1, cfg.j);
    let mut variant = variant_for(j)?;
    if variant == Variant::Plain && cfg.force_symmetrized {
        variant = Variant::Symmetrized;
    }
    let mut comp = BTreeMap::new();
    let lin = stage("linearization", sh_model::v0_and_w(u0, &p, n))?;
    let dc = stage("constants", sh_model::decay_constants(&p, &SupSearch { tol: cfg.c0_tol, ..SupSearch::default() }))?;
    comp.insert("C0".to_string(), dc.c0);
    comp.insert("a".to_string(), dc.a);
    comp.insert("kappa".to_string(), sh_model::kappa(p.mu));
    let zu = stage("bound_Zu", bounds::bound_zu(&lin.v0n, &dc, n))?;
    comp.insert("Zu".to_string(), zu);

    let (y0, ys, z1, zs, z2, rho, tol_met);
    match variant {
        Variant::Plain | Variant::Symmetrized => {
            let bn = stage("approximate_inverse", approx::build_bn(u0, &p, n))?;
            let norm_b = bn.norm2_upper().upper();
            comp.insert("norm_B".to_string(), norm_b);
            let (ry0, rblocks) = par::join(|| bounds::bound_y0(u0, &bn, &p, n), || bounds::z1_blocks_plain(&lin, &bn, p.mu, n));
            y0 = stage("bound_Y0", ry0)?;
            let blocks = stage("bound_Z1", rblocks)?;
            record_blocks(&mut comp, &blocks);
            z1 = bounds::bound_z1_plain(&blocks, &lin, norm_b, zu, p.mu, n);
            let phi = if variant == Variant::Symmetrized {
                stage("rotation_defects", bounds::rotation_defects(u0, j, p.mu, n1, cfg.quad_tol, false))?
            } else {
                RotationDefects::zero()
            };
            record_phi(&mut comp, &phi);
            tol_met = phi.tol_met;
            let extra = if variant == Variant::Symmetrized { Z2Extra::Symmetrized { j, phi: &phi } } else { Z2Extra::None };
            z2 = stage("bound_Z2", bounds::bound_z2(&lin.w, &bn, norm_b, &p, n, extra))?;
            if variant == Variant::Symmetrized {
                comp.insert("Z22".to_string(), bounds::bound_z22(j, &p, &phi, norm_b));
                let factor = norm_b.max(Interval::ONE);
                ys = bounds::bound_ys(u0, j, &p, &phi, factor);
                zs = bounds::bound_zs(u0, j, &p, &phi, norm_b);
            } else {
                ys = Interval::ZERO;
                zs = Interval::ZERO;
            }
            rho = None;
        }
        Variant::Bordered => {
            let r = match cfg.rho {
                Some(r) => Interval::point(r),
                None => stage("border_scale", approx::default_rho(u0))?,
            };
            if !(r.lo() > 0.0) {
                return Err(Error::Domain(format!("border scale {r} is not positive; the candidate has no x2-derivative")).at_stage("border_scale"));
            }
            rho = Some(r);
            comp.insert("rho".to_string(), r);
            let bn = stage("approximate_inverse", approx::build_bn_bordered(u0, &p, n, r))?;
            let norms = bounds::bordered_norms(&bn);
            let cb = bounds::bound_cb(&bn);
            comp.insert("norm_B".to_string(), norms.full);
            comp.insert("norm_b12".to_string(), norms.b12);
            comp.insert("norm_b22".to_string(), norms.b22);
            comp.insert("C_B".to_string(), cb);
            let (ry0, rblocks) = par::join(
                || bounds::bound_y0_bordered(u0, &bn, &p, n),
                || bounds::z1_blocks_bordered(u0, &lin, &bn, &p, n, r),
            );
            y0 = stage("bound_Y0", ry0)?;
            let blocks = stage("bound_Z1", rblocks)?;
            record_blocks(&mut comp, &blocks);
            z1 = stage("bound_Z1", bounds::bound_z1_bordered(&blocks, u0, &lin, &norms, cb, zu, p.mu, n, r))?;
            let phi = stage("rotation_defects", bounds::rotation_defects(u0, j, p.mu, n1, cfg.quad_tol, true))?;
            record_phi(&mut comp, &phi);
            tol_met = phi.tol_met;
            let kp = stage("kappa_partial", bounds::kappa_partial())?;
            comp.insert("kappa_partial".to_string(), kp);
            ys = bounds::bound_ys(u0, j, &p, &phi, cb);
            zs = bounds::bound_zs_bordered(u0, j, &p, &phi, &norms, r, kp);
            comp.insert("Z22".to_string(), bounds::bound_z22(j, &p, &phi, norms.full));
            let cols = bounds::sequence_columns(&bn);
            z2 = stage("bound_Z2", bounds::bound_z2(&lin.w, &cols, norms.full, &p, n, Z2Extra::Bordered { j, phi: &phi, b12: norms.b12 }))?;
        }
    }
    let set = BoundSet { variant, y0, ys, z1, zs, z2, params: p, orders: (u0.order(), n, n1), components: comp };
    Ok((set, rho, tol_met))
}

fn record_blocks(comp: &mut BTreeMap<String, Interval>, b: &bounds::Z1Blocks) {
    comp.insert("Z11".to_string(), b.z11);
    comp.insert("Z12".to_string(), b.z12);
    comp.insert("Z13".to_string(), b.z13);
    comp.insert("Z14".to_string(), b.z14);
    comp.insert("Z1_blocks".to_string(), b.combined());
}

fn record_phi(comp: &mut BTreeMap<String, Interval>, phi: &RotationDefects) {
    comp.insert("phi_u0".to_string(), phi.u0);
    comp.insert("phi_L0u0".to_string(), phi.l0u0);
    comp.insert("phi_L1u0".to_string(), phi.l1u0);
}

/// Name of the block-norm combiner recorded in certificates.
pub const COMBINER: &str = "spectral norm of the 2x2 matrix of block norms";
/// How the mixed cosh sequence is obtained.
pub const E12_SOURCE: &str = "product of one-dimensional cosh moments";

/// The serialized proof record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofCertificate {
    pub config: RunConfig,
    pub config_digest: String,
    pub candidate_digest: String,
    pub group: GroupName,
    pub variant: Variant,
    pub rho: Option<Interval>,
    pub bounds: BoundSet,
    /// Radius found by the search, if any.
    pub r: Option<Interval>,
    /// Radii check at `r`, or at the most favourable probed radius when the
    /// search failed.
    pub check: RadiiCheck,
    pub witness: Option<Witness>,
    pub combiner: String,
    pub e12_source: String,
    pub quadrature_tol_met: bool,
    pub certified: bool,
    pub wall_clock_seconds: f64,
}

impl ProofCertificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Certify a given candidate.
pub fn certify_candidate(cfg: &RunConfig, u0: &SymSequence) -> Result<ProofCertificate> {
    let start = Instant::now();
    cfg.validate()?;
    stage("validate_candidate", check_candidate(cfg, u0))?;
    let group = maximal_subgroup(cfg.j)?.name();
    if variant_for(cfg.j)? != Variant::Plain {
        stage("symmetrize", approx::symmetrize(u0, cfg.j))?;
    }
    let (bounds, rho, tol_met) = compute_bounds(u0, cfg)?;
    let r = find_r(&bounds);
    let check = radii_check(&bounds, r.unwrap_or_else(|| best_effort_r(&bounds)));
    let witness = if bounds.variant == Variant::Bordered {
        let b = cfg.witness.unwrap_or_else(|| default_witness(u0));
        let value = stage("witness", check_w0_nonzero(u0, cfg.j, point(b[0], b[1])))?;
        Some(Witness { point: b, value, nonzero: !value.contains_zero() })
    } else {
        None
    };
    let certified =
        bounds.is_finite() && r.is_some() && check.pass() && witness.as_ref().is_none_or(|w| w.nonzero);
    info!("variant {:?}: certified = {certified}", bounds.variant);
    Ok(ProofCertificate {
        config: cfg.clone(),
        config_digest: cfg.digest(),
        candidate_digest: hex_digest(u0.to_json()?.as_bytes()),
        group,
        variant: bounds.variant,
        rho,
        bounds,
        r,
        check,
        witness,
        combiner: COMBINER.into(),
        e12_source: E12_SOURCE.into(),
        quadrature_tol_met: tol_met,
        certified,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Full pipeline: construct (or load) the candidate, then certify it.
pub fn run_proof(cfg: &RunConfig, candidate: Option<&SymSequence>) -> Result<ProofCertificate> {
    cfg.validate()?;
    match candidate {
        Some(u0) => certify_candidate(cfg, u0),
        None => {
            let c = build_candidate(cfg)?;
            certify_candidate(cfg, &c.u0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn toy_bounds(y0: f64, z1: f64, slope: f64, intercept: f64) -> BoundSet {
        BoundSet {
            variant: Variant::Plain,
            y0: Interval::point(y0),
            ys: Interval::ZERO,
            z1: Interval::point(z1),
            zs: Interval::ZERO,
            z2: Z2Coeffs { slope: Interval::point(slope), intercept: Interval::point(intercept) },
            params: SHParams::from_f64(0.24, -1.6, 1.0, 20.0, 2).unwrap(),
            orders: (4, 4, 4),
            components: BTreeMap::new(),
        }
    }

    #[test]
    fn radii_check_examples() {
        let b = toy_bounds(0.0, 0.0, 0.0, 1.0);
        let c = radii_check(&b, Interval::point(0.5));
        assert!(c.pass());
        assert!(c.inequalities[0].lhs.contains(-0.375));
        let bad = toy_bounds(0.0, 1.0, 0.0, 1.0);
        for r in [1e-8, 1e-3, 0.5] {
            assert!(!radii_check(&bad, Interval::point(r)).pass());
        }
        assert!(find_r(&bad).is_none());
    }

    #[test]
    fn find_r_on_toy_set() {
        let b = toy_bounds(1e-6, 0.5, 0.0, 100.0);
        assert!(radii_check(&b, Interval::point(1e-5)).pass());
        let r = find_r(&b).unwrap();
        // smaller root of 50 r² − 0.5 r + 1e-6
        let (a, bb, c) = (50.0f64, -0.5f64, 1e-6f64);
        let root = (-bb - (bb * bb - 4.0 * a * c).sqrt()) / (2.0 * a);
        assert!(r.mid() >= root && r.mid() <= 2.0 * root, "{r} vs {root}");
    }

    #[test]
    fn config_round_trip() {
        let mut c = RunConfig { j: 5, rho: Some(0.7), witness: Some([0.5, -1.25]), ..RunConfig::default() };
        c.seed = Some(PathBuf::from("seed.json"));
        let back = RunConfig::parse(&c.to_kv()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
        let text = "# comment\n j = 12 \nmu=0.2 # trailing\n";
        let p = RunConfig::parse(text).unwrap();
        assert_eq!((p.j, p.mu), (12, 0.2));
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("n = 50\nn0 = 40").unwrap().validate().is_err());
    }

    #[test]
    fn dispatch() {
        assert_eq!(variant_for(4).unwrap(), Variant::Plain);
        assert_eq!(variant_for(2).unwrap(), Variant::Plain);
        assert_eq!(variant_for(12).unwrap(), Variant::Symmetrized);
        assert_eq!(maximal_subgroup(12).unwrap().name(), GroupName::D4);
        assert_eq!(variant_for(5).unwrap(), Variant::Bordered);
        assert_eq!(maximal_subgroup(5).unwrap().name(), GroupName::Z2xZ1);
        assert!(variant_for(3).is_err());
        let cfg = RunConfig { j: 3, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::UnsupportedGroup(_))));
    }

    #[test]
    fn witness_on_zero_and_trivial_rotation() {
        let table = crate::symmetry::OrbitTable::shared(GroupName::Z2xZ1, 3).unwrap();
        let zero = SymSequence::zeros(table.clone(), 5.0).unwrap();
        assert!(check_w0_nonzero(&zero, 5, point(0.3, 0.1)).unwrap().contains_zero());
        let u = SymSequence::delta(table, 5.0, (1, 1), Interval::point(0.4)).unwrap();
        let x = point(0.7, -0.2);
        assert_eq!(check_w0_nonzero(&u, 1, x).unwrap(), quadrature::eval_trigpoly(&u, x));
    }
}
