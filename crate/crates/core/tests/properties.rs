//! Property tests for the invariants of each module.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shdihedral::bounds::{self, BoundSet, Variant, Z2Coeffs};
use shdihedral::certify::{self, radii_check, RunConfig};
use shdihedral::quadrature::{self, Angle};
use shdihedral::seqspace::SymSequence;
use shdihedral::sh_model::{self, SHParams, SymbolKind};
use shdihedral::symmetry::{GroupName, OrbitTable, SymmetryGroup};
use shdihedral::{Interval, IntervalMatrix};

fn interval() -> impl Strategy<Value = Interval> {
    (-50.0..50.0f64, 0.0..5.0f64).prop_map(|(lo, w)| Interval::new(lo, lo + w))
}

/// An interval and a superset of it.
fn nested() -> impl Strategy<Value = (Interval, Interval)> {
    (interval(), 0.0..3.0f64, 0.0..3.0f64).prop_map(|(a, l, r)| (a, Interval::new(a.lo() - l, a.hi() + r)))
}

fn pick(rng: &mut ChaCha8Rng, x: Interval) -> f64 {
    if x.width() == 0.0 {
        x.lo()
    } else {
        rng.gen_range(x.lo()..=x.hi())
    }
}

type BinOp = fn(Interval, Interval) -> Interval;
type BinCase = (&'static str, BinOp, fn(f64, f64) -> f64);
const BINARY: [BinCase; 3] = [
    ("add", |a, b| a + b, |a, b| a + b),
    ("sub", |a, b| a - b, |a, b| a - b),
    ("mul", |a, b| a * b, |a, b| a * b),
];

type UnOp = fn(Interval) -> Interval;
type UnCase = (&'static str, UnOp, fn(f64) -> f64);
const UNARY: [UnCase; 6] = [
    ("sqr", |a| a.sqr(), |a| a * a),
    ("exp", |a| (a * Interval::point(0.1)).exp(), |a| (a * 0.1).exp()),
    ("sin", |a| a.sin(), f64::sin),
    ("cos", |a| a.cos(), f64::cos),
    ("atan", |a| a.atan(), f64::atan),
    ("abs", |a| a.abs(), f64::abs),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_ops_are_inclusion_monotone((a, a2) in nested(), (b, b2) in nested()) {
        for (name, op, _) in BINARY {
            prop_assert!(op(a, b).is_subset(op(a2, b2)), "{name}");
        }
        if !b2.contains_zero() {
            prop_assert!((a / b).is_subset(a2 / b2));
        }
        for (name, op, _) in UNARY {
            prop_assert!(op(a).is_subset(op(a2)), "{name}");
        }
        let (pa, pa2) = (a.abs(), a2.abs());
        prop_assert!(pa.sqrt().is_subset(pa2.sqrt()));
    }

    #[test]
    fn interval_results_contain_point_results(a in interval(), b in interval(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (x, y) = (pick(&mut rng, a), pick(&mut rng, b));
            for (name, op, f) in BINARY {
                prop_assert!(op(a, b).contains(f(x, y)), "{name}({x}, {y})");
            }
            for (name, op, f) in UNARY {
                prop_assert!(op(a).contains(f(x)), "{name}({x})");
            }
            if !b.contains_zero() {
                prop_assert!((a / b).contains(x / y));
            }
        }
    }
}

#[test]
fn a_hundred_thousand_point_evaluations_are_enclosed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100_000 {
        let lo = rng.gen_range(-20.0..20.0);
        let a = Interval::new(lo, lo + rng.gen_range(0.0..2.0));
        let lo = rng.gen_range(0.5..20.0);
        let b = Interval::new(lo, lo + rng.gen_range(0.0..2.0));
        let (x, y) = (pick(&mut rng, a), pick(&mut rng, b));
        for (name, op, f) in BINARY {
            assert!(op(a, b).contains(f(x, y)), "{name}");
        }
        for (name, op, f) in UNARY {
            assert!(op(a).contains(f(x)), "{name}");
        }
        assert!((a / b).contains(x / y));
        assert!(b.sqrt().contains(y.sqrt()));
        assert!(b.ln().contains(y.ln()));
    }
}

#[test]
fn spectral_norm_bound_dominates_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (r, c) = (rng.gen_range(1..=50), rng.gen_range(1..=50));
        let m = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
        let rad = rng.gen_range(0.0..1e-3);
        let im = IntervalMatrix::from_fn(r, c, |i, j| Interval::mid_rad(m[(i, j)], rad));
        let sigma = m.singular_values().max();
        let bound = im.norm2_upper();
        assert!(bound.hi() >= sigma, "{} < {sigma}", bound.hi());
    }
}

const GROUPS: [GroupName; 3] = [GroupName::Z2xZ1, GroupName::D2, GroupName::D4];

#[test]
fn orbit_weights_partition_the_grid() {
    for g in GROUPS {
        for n in 0..=8 {
            let t = OrbitTable::shared(g, n).unwrap();
            let total: u32 = t.weights().iter().sum();
            assert_eq!(total as usize, (2 * n + 1).pow(2), "{g} N={n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn group_action_is_compatible_with_composition(gi in 0usize..3, a in 0usize..8, b in 0usize..8, n1 in -20i32..20, n2 in -20i32..20) {
        let g = SymmetryGroup::build(GROUPS[gi]).unwrap();
        let els = g.elements();
        let (x, y) = (els[a % els.len()], els[b % els.len()]);
        let lhs = g.act_index(x, g.act_index(y, (n1, n2)).unwrap()).unwrap();
        let rhs = g.act_index(g.compose(x, y), (n1, n2)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn d4_reduced_set_matches_brute_force_orbits() {
    let g = SymmetryGroup::build(GroupName::D4).unwrap();
    for n in 0..=6i32 {
        let t = OrbitTable::shared(GroupName::D4, n as usize).unwrap();
        let mut orbits: BTreeSet<Vec<(i32, i32)>> = BTreeSet::new();
        for a in -n..=n {
            for b in -n..=n {
                let mut o: Vec<_> = g.elements().iter().map(|&e| g.act_index(e, (a, b)).unwrap()).collect();
                o.sort();
                o.dedup();
                orbits.insert(o);
            }
        }
        assert_eq!(orbits.len(), t.len(), "N={n}");
        for (r, &rep) in t.reps().iter().enumerate() {
            let mut members = t.members(r).to_vec();
            members.sort();
            assert!(orbits.contains(&members), "orbit of {rep:?}");
            assert_eq!(t.weight(r) as usize, members.len());
        }
    }
}

fn random_sequence(seed: u64, group: GroupName, order: usize, d: f64) -> SymSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = OrbitTable::shared(group, order).unwrap();
    let c = table
        .reps()
        .iter()
        .map(|&(a, b)| Interval::point(0.7f64.powi(a.abs().max(b.abs())) * rng.gen_range(-1.0..1.0)))
        .collect();
    SymSequence::from_coeffs(table, d, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_operator_is_symmetric(gi in 0usize..3, order in 1usize..5, n in 1usize..5, seed in any::<u64>()) {
        let u = random_sequence(seed, GROUPS[gi], order, 3.0);
        let m = u.conv_operator_matrix(n).unwrap();
        let mt = m.transpose();
        for (x, y) in m.entries().iter().zip(mt.entries()) {
            prop_assert!(x.overlaps(*y) || (x.mid() - y.mid()).abs() < 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn overlap_is_even_in_the_angle(num in 1i64..12, den in 13i64..40, seed in any::<u64>()) {
        let w = random_sequence(seed, GroupName::Z2xZ1, 3, 2.5);
        let theta = Angle::new(num, den).unwrap();
        let a = quadrature::overlap_integral(&w, theta, 1e-9).unwrap().value;
        let b = quadrature::overlap_integral(&w, -theta, 1e-9).unwrap().value;
        prop_assert!(a.overlaps(b), "{} vs {}", a, b);
    }

    #[test]
    fn intersection_area_is_symmetric_about_an_eighth_turn(num in 1i64..20, d in 0.5..10.0f64) {
        let theta = Angle::new(num, 80).unwrap();
        let comp = Angle::new(20 - num, 80).unwrap();
        let a = quadrature::square_intersection(theta, d).area();
        let b = quadrature::square_intersection(comp, d).area();
        prop_assert!(a.overlaps(b), "{} vs {}", a, b);
    }

    #[test]
    fn phi_narrows_with_tolerance(seed in any::<u64>(), num in 1i64..5) {
        let w = random_sequence(seed, GroupName::D2, 3, 2.0);
        let theta = Angle::new(num, 11).unwrap();
        let loose = quadrature::phi_rotation(&w, theta, 3, 1e-4).unwrap().value;
        let tight = quadrature::phi_rotation(&w, theta, 3, 1e-9).unwrap().value;
        prop_assert!(tight.width() <= loose.width() + 1e-15);
        prop_assert!(tight.overlaps(loose));
    }

    #[test]
    fn symbol_is_at_least_mu(x in -5.0..5.0f64, y in -5.0..5.0f64, mu in 0.01..2.0f64) {
        let l = sh_model::symbol(SymbolKind::L, [Interval::point(x), Interval::point(y)], Interval::point(mu));
        prop_assert!(l.hi() >= mu);
        prop_assert!(l.lo() >= mu * (1.0 - 1e-15));
    }
}

#[test]
fn kappa_decreases_in_mu() {
    let values: Vec<Interval> = (0..=90).map(|k| sh_model::kappa(Interval::point(0.1 + 0.01 * k as f64))).collect();
    for w in values.windows(2) {
        assert!(w[1].hi() < w[0].lo(), "{} then {}", w[0], w[1]);
    }
}

#[test]
fn newton_fixed_points_have_small_residuals() {
    use shdihedral::approx::{self, GuessShape};
    let p = SHParams::from_f64(0.24, -1.6, 1.0, 8.0, 2).unwrap();
    let tol = 1e-11;
    let guess = approx::initial_guess(2, GuessShape::default(), 8.0, 12).unwrap();
    let r = approx::newton_galerkin(&guess, &p, tol, 30).unwrap();
    let f = sh_model::residual_f(&r.solution, &p).unwrap().with_order(12).unwrap();
    assert!(f.norm2().hi() <= 10.0 * tol, "{}", f.norm2());
}

fn toy_set(y0: Interval, z1: Interval, slope: Interval, intercept: Interval) -> BoundSet {
    BoundSet {
        variant: Variant::Plain,
        y0,
        ys: Interval::ZERO,
        z1,
        zs: Interval::ZERO,
        z2: Z2Coeffs { slope, intercept },
        params: SHParams::from_f64(0.24, -1.6, 1.0, 5.0, 2).unwrap(),
        orders: (4, 4, 4),
        components: BTreeMap::new(),
    }
}

fn positive() -> impl Strategy<Value = (Interval, Interval)> {
    (1e-8..2.0f64, 0.0..1e-2f64, 0.0..1.0f64).prop_map(|(lo, w, grow)| {
        let a = Interval::new(lo, lo + w);
        (a, Interval::new(lo * (1.0 - grow), lo + w + grow))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn radii_check_never_passes_after_enlarging(
        (y, y2) in positive(), (z, z2) in positive(), (s, s2) in positive(), (c, c2) in positive(),
        which in 0usize..4, r in 1e-8..1.0f64,
    ) {
        let small = toy_set(y * 1e-4, z * 0.4, s, c);
        let mut parts = [y * 1e-4, z * 0.4, s, c];
        parts[which] = [y2 * 1e-4, z2 * 0.4, s2, c2][which];
        let big = toy_set(parts[0], parts[1], parts[2], parts[3]);
        let r = Interval::point(r);
        if !radii_check(&small, r).pass() {
            prop_assert!(!radii_check(&big, r).pass());
        }
    }

    #[test]
    fn combiner_is_inclusion_monotone((a, a2) in positive(), (b, b2) in positive(), (c, c2) in positive(), (d, d2) in positive()) {
        let small = bounds::combine_phi(a, b, c, d);
        let big = bounds::combine_phi(a2, b2, c2, d2);
        prop_assert!(small.hi() <= big.hi() * (1.0 + 1e-14));
    }
}

#[test]
fn tail_maxima_shrink_with_the_section() {
    for mu in [0.2, 0.24, 0.5] {
        let mu = Interval::point(mu);
        for d in [5.0, 20.0, 85.0] {
            let mut prev = f64::INFINITY;
            for n in 1..120 {
                let t = bounds::tail_inv_l(n, d, mu).hi();
                assert!(t <= prev * (1.0 + 1e-12), "d={d} n={n}");
                prev = t;
            }
        }
    }
}

#[test]
fn quarter_turn_averaging_matches_the_plain_verdict() {
    for seed in 0..3u64 {
        let raw = random_sequence(seed, GroupName::D4, 5, 4.0);
        let u0 = shdihedral::approx::trace_project(&raw).unwrap();
        let base = RunConfig { j: 4, d: 4.0, n0: 5, n: 3, n1: 5, ..RunConfig::default() };
        let plain = certify::certify_candidate(&base, &u0).unwrap();
        let forced = certify::certify_candidate(&RunConfig { force_symmetrized: true, ..base }, &u0).unwrap();
        assert_eq!(forced.variant, Variant::Symmetrized);
        assert!(forced.bounds.ys.contains(0.0) && forced.bounds.zs.contains(0.0));
        assert_eq!(plain.certified, forced.certified);
        assert_eq!(plain.r, forced.r);
    }
}

#[test]
fn certificates_replay_bit_for_bit() {
    let u0 = shdihedral::approx::trace_project(&random_sequence(3, GroupName::D2, 5, 4.0)).unwrap();
    let cfg = RunConfig { j: 2, d: 4.0, n0: 5, n: 4, n1: 5, ..RunConfig::default() };
    let first = certify::certify_candidate(&cfg, &u0).unwrap();
    let json = first.to_json().unwrap();
    let back = certify::ProofCertificate::from_json(&json).unwrap();
    let replay_cfg = RunConfig::parse(&back.config.to_kv()).unwrap();
    let again = certify::certify_candidate(&replay_cfg, &u0).unwrap();
    assert_eq!(back.bounds, again.bounds);
    assert_eq!(back.check, again.check);
    assert_eq!(back.config_digest, again.config_digest);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_average_of_the_x2_derivative_vanishes(j in prop::sample::select(vec![3u32, 5, 7]), seed in any::<u64>(), r in 0.0..0.9f64, t in 0.0..std::f64::consts::TAU) {
        use shdihedral::approx::RotatedSum;
        use shdihedral::quadrature::point;
        use shdihedral::symmetry::rotate_point;
        let d = 4.0;
        let w0 = RotatedSum::new(random_sequence(seed, GroupName::Z2xZ1, 5, d), j).unwrap();
        let x = point(r * d * t.cos(), r * d * t.sin());
        let avg: Interval = (0..j).map(|p| quadrature::eval_rotated_gradient(&w0, rotate_point(x, p, j))[1]).sum();
        prop_assert!(avg.mag() <= 1e-9 * j as f64, "j={}: {}", j, avg);
    }

    #[test]
    fn z2_polynomial_is_inclusion_monotone((s, s2) in positive(), (c, c2) in positive(), r in 1e-8..1.0f64, grow in 0.0..1e-3f64) {
        let (small, big) = (Z2Coeffs { slope: s, intercept: c }, Z2Coeffs { slope: s2, intercept: c2 });
        let (r, r2) = (Interval::point(r), Interval::new(r, r + grow));
        prop_assert!(small.at(r).is_subset(big.at(r2)));
    }
}
