//! `shdihedral`: batch front end for candidate construction and proof runs.
//!
//! Exit statuses are the machine contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | certified (or `approx`/`inspect` succeeded) |
//! | 1 | the run completed but the inequalities did not close |
//! | 2 | invalid configuration or unsupported group |
//! | 3 | unreadable or malformed input file |
//! | 4 | Newton iteration failed |
//! | 5 | any other stage failure |

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use shdihedral::certify::{self, ProofCertificate, RunConfig};
use shdihedral::quadrature::{self, point};
use shdihedral::seqspace::SymSequence;
use shdihedral::symmetry::shell;
use shdihedral::Error;

#[derive(Parser, Debug)]
#[command(name = "shdihedral", version, about = "Construct and certify localized dihedral Swift-Hohenberg patterns")]
struct Cli {
    /// Cap on worker threads (0 lets the runtime decide).
    #[arg(long, global = true, env = "SHDIHEDRAL_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a trace-projected candidate by Newton's method.
    Approx {
        #[command(flatten)]
        config: ConfigArgs,
        /// Where to write the candidate (overrides `candidate_out`).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute all bounds for a candidate and run the radii-polynomial check.
    Certify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Candidate to certify (overrides `seed`); without one the candidate is constructed first.
        #[arg(long)]
        candidate: Option<PathBuf>,
        /// Where to write the certificate (overrides `certificate_out`).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Summarize a candidate or certificate file.
    Inspect {
        file: PathBuf,
        /// Write samples of the candidate on a square grid as CSV.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 101)]
        grid_points: usize,
        /// Sample the average of `u0` over `j` equally spaced rotations instead of `u0` itself.
        #[arg(long)]
        rotations: Option<u32>,
    },
}

/// Flags mirroring the configuration keys; each overrides the config file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Rotation order of the target pattern (2, 4, other even, or odd >= 5).
    #[arg(long)]
    j: Option<String>,
    /// Bifurcation parameter, must be positive.
    #[arg(long)]
    mu: Option<String>,
    /// Quadratic coefficient.
    #[arg(long)]
    nu1: Option<String>,
    /// Cubic coefficient.
    #[arg(long)]
    nu2: Option<String>,
    /// Half-width of the square domain.
    #[arg(long)]
    d: Option<String>,
    /// Truncation order of the candidate.
    #[arg(long)]
    n0: Option<String>,
    /// Truncation order of the finite-dimensional inverse.
    #[arg(long)]
    n: Option<String>,
    /// Truncation order used in rotation overlap integrals.
    #[arg(long)]
    n1: Option<String>,
    /// Border scale for odd j, or `auto`.
    #[arg(long)]
    rho: Option<String>,
    /// Absolute tolerance for overlap quadrature.
    #[arg(long)]
    quad_tol: Option<String>,
    /// Stopping tolerance for Newton.
    #[arg(long)]
    newton_tol: Option<String>,
    /// Maximum number of Newton steps.
    #[arg(long)]
    newton_maxiter: Option<String>,
    /// Width target for the C0 supremum enclosure.
    #[arg(long)]
    c0_tol: Option<String>,
    /// Amplitude of the initial guess.
    #[arg(long)]
    alpha: Option<String>,
    /// Width parameter of the initial guess.
    #[arg(long)]
    beta: Option<String>,
    /// Radius of the ring of spots in the initial guess (0 for a single spot).
    #[arg(long)]
    ring_radius: Option<String>,
    /// Start Newton from this candidate file instead of a synthetic guess.
    #[arg(long)]
    seed: Option<String>,
    /// Project the candidate onto the trace-free subspace (true/false).
    #[arg(long)]
    trace_projection: Option<String>,
    /// Use the rotation-averaged pipeline even for j = 2 or 4 (true/false).
    #[arg(long)]
    force_symmetrized: Option<String>,
    /// Witness point `x1,x2` for odd `j`.
    #[arg(long)]
    witness: Option<String>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut cfg = RunConfig::parse(&text)?;
                // relative paths inside a config are relative to the file
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [&mut cfg.seed, &mut cfg.candidate_out, &mut cfg.certificate_out].into_iter().flatten() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
                cfg
            }
            None => RunConfig::default(),
        };
        let flags = [
            ("j", &self.j),
            ("mu", &self.mu),
            ("nu1", &self.nu1),
            ("nu2", &self.nu2),
            ("d", &self.d),
            ("n0", &self.n0),
            ("n", &self.n),
            ("n1", &self.n1),
            ("rho", &self.rho),
            ("quad_tol", &self.quad_tol),
            ("newton_tol", &self.newton_tol),
            ("newton_maxiter", &self.newton_maxiter),
            ("c0_tol", &self.c0_tol),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("ring_radius", &self.ring_radius),
            ("seed", &self.seed),
            ("trace_projection", &self.trace_projection),
            ("force_symmetrized", &self.force_symmetrized),
            ("witness", &self.witness),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.sets {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("`--set {kv}`: expected KEY=VALUE")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failure categories, one per nonzero exit status.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e.root() {
            Error::Config(_) | Error::UnsupportedGroup(_) => 2,
            Error::Format(_) => 3,
            Error::Iteration { .. } => 4,
            _ => 5,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() || err.downcast_ref::<serde_json::Error>().is_some() {
        return 3;
    }
    5
}

fn read_candidate(path: &Path) -> anyhow::Result<SymSequence> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SymSequence::from_json(&text)?)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Largest coefficient magnitude per max-norm shell, sampled at about eight shells.
fn decay_profile(u: &SymSequence) -> Vec<(i32, f64)> {
    let mut peak = vec![0.0f64; u.order() + 1];
    for (r, &n) in u.table().reps().iter().enumerate() {
        let s = shell(n) as usize;
        peak[s] = peak[s].max(u.coeffs()[r].mag());
    }
    let step = (u.order() / 8).max(1);
    peak.iter().enumerate().filter(|(s, _)| s % step == 0 || *s == u.order()).map(|(s, &v)| (s as i32, v)).collect()
}

fn print_decay(u: &SymSequence) {
    println!("coefficient decay (shell: max |U_n|):");
    for (s, v) in decay_profile(u) {
        println!("  {s:>4}: {v:.3e}");
    }
}

fn cmd_approx(config: &ConfigArgs, output: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg = config.resolve()?;
    let cand = certify::build_candidate(&cfg)?;
    println!("Newton steps: {}", cand.iterations);
    for (k, r) in cand.history.iter().enumerate() {
        println!("  step {k:>2}: residual {r:.3e}");
    }
    println!("Galerkin residual at the Newton solution: {:.3e}", cand.galerkin_residual);
    println!("full residual ||F(U0)||_2 after trace projection: {:.3e}", cand.residual.hi());
    if cand.trivial {
        println!("warning: trivial solution (the candidate is numerically zero)");
    }
    print_decay(&cand.u0);
    if let Some(path) = output.or(cfg.candidate_out.clone()) {
        write_file(&path, &cand.u0.to_json()?)?;
        println!("candidate written to {}", path.display());
    }
    Ok(0)
}

fn print_certificate(c: &ProofCertificate) {
    let b = &c.bounds;
    println!("group {} (D{}), variant {:?}", c.group, c.config.j, c.variant);
    println!("orders N0={} N={} N1={}", b.orders.0, b.orders.1, b.orders.2);
    if let Some(rho) = c.rho {
        println!("rho = {:.6e}", rho.hi());
    }
    println!("{:<12} {:>14} {:>14}", "bound", "lower", "upper");
    let rows = [
        ("Y0", b.y0),
        ("Ys", b.ys),
        ("Z1", b.z1),
        ("Zs", b.zs),
        ("Z2 slope", b.z2.slope),
        ("Z2 const", b.z2.intercept),
    ];
    for (name, v) in rows {
        println!("{name:<12} {:>14.6e} {:>14.6e}", v.lo(), v.hi());
    }
    for (name, v) in &b.components {
        println!("  {name:<10} {:>14.6e} {:>14.6e}", v.lo(), v.hi());
    }
    match c.r {
        Some(r) => println!("radius r = {:.6e}", r.hi()),
        None => println!("no admissible radius; check reported at r = {:.6e}", c.check.r.hi()),
    }
    println!("{:<18} {:>14} {:>14} {:>14} {:>6}", "inequality", "lhs (upper)", "rhs (lower)", "slack", "pass");
    for i in &c.check.inequalities {
        println!("{:<18} {:>14.6e} {:>14.6e} {:>14.6e} {:>6}", i.name, i.lhs.hi(), i.rhs.lo(), i.slack, i.pass);
    }
    if let Some(w) = &c.witness {
        println!("w0({}, {}) in [{:.6e}, {:.6e}]; nonzero: {}", w.point[0], w.point[1], w.value.lo(), w.value.hi(), w.nonzero);
    }
    println!("quadrature tolerance met: {}", c.quadrature_tol_met);
    println!("wall clock: {:.1} s", c.wall_clock_seconds);
    println!("certified: {}", c.certified);
}

fn cmd_certify(config: &ConfigArgs, candidate: Option<PathBuf>, output: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg = config.resolve()?;
    let u0 = match candidate.or(cfg.seed.clone()) {
        Some(path) => {
            info!("certifying {}", path.display());
            Some(read_candidate(&path)?)
        }
        None => None,
    };
    let cert = certify::run_proof(&cfg, u0.as_ref())?;
    print_certificate(&cert);
    if let Some(path) = output.or(cfg.certificate_out.clone()) {
        write_file(&path, &cert.to_json()?)?;
        println!("certificate written to {}", path.display());
    }
    Ok(if cert.certified { 0 } else { 1 })
}

fn write_grid(path: &Path, u: &SymSequence, rotations: Option<u32>, points: usize) -> anyhow::Result<()> {
    if points < 2 {
        return Err(Error::Config("--grid-points must be at least 2".into()).into());
    }
    let rotated = rotations.map(|j| shdihedral::approx::RotatedSum::new(u.clone(), j)).transpose()?;
    let d = u.d();
    let coord = |i: usize| -d + 2.0 * d * i as f64 / (points - 1) as f64;
    let rows = shdihedral::par::map_range(points * points, |k| {
        let (x1, x2) = (coord(k / points), coord(k % points));
        let v = match &rotated {
            Some(w) => quadrature::eval_rotated_sum(w, point(x1, x2)),
            None => quadrature::eval_trigpoly(u, point(x1, x2)),
        };
        (x1, x2, v.mid())
    });
    let mut out = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "x1,x2,value")?;
    for (x1, x2, v) in rows {
        writeln!(out, "{x1:?},{x2:?},{v:?}")?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_inspect(file: &Path, grid: Option<PathBuf>, grid_points: usize, rotations: Option<u32>) -> anyhow::Result<u8> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", file.display())))?;
    if doc.get("bounds").is_some() {
        let cert = ProofCertificate::from_json(&text).map_err(|e| Error::Format(format!("{}: {e}", file.display())))?;
        print_certificate(&cert);
        if grid.is_some() {
            return Err(anyhow!(Error::Config("grid dumps need a candidate file, not a certificate".into())));
        }
        return Ok(0);
    }
    let u = SymSequence::from_json(&text)?;
    println!("group {}, order {}, d = {}, {} stored coefficients", u.group(), u.order(), u.d(), u.len());
    println!("||U||_1 = {:.6e}", u.norm1().hi());
    println!("||U||_2 = {:.6e}", u.norm2().hi());
    println!("u(0,0)  = {:.6e}", quadrature::eval_trigpoly(&u, point(0.0, 0.0)).mid());
    print_decay(&u);
    if let Some(path) = grid {
        write_grid(&path, &u, rotations, grid_points)?;
        println!("grid written to {}", path.display());
    }
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("configuring the thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.threads;
    match cli.command {
        Command::Approx { config, output } => cmd_approx(&config, output),
        Command::Certify { config, candidate, output } => cmd_certify(&config, candidate, output),
        Command::Inspect { file, grid, grid_points, rotations } => cmd_inspect(&file, grid, grid_points, rotations),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            // library errors already render their stage chain
            match err.downcast_ref::<Error>() {
                Some(e) => eprintln!("error: {e}"),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
