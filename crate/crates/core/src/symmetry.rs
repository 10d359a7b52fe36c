//! Dihedral symmetry groups acting on the plane and on Fourier indices.
//!
//! Every group handled here is a dihedral group `D_j` generated by the
//! rotation through `2π/j` and the reflection `x1 ↦ -x1`; the two-element
//! group generated by the reflection alone is `D_1`, named [`GroupName::Z2xZ1`].
//! Only `j ∈ {1, 2, 4}` maps the integer lattice to itself, so only those
//! groups have orbit tables.
//!
//! All groups have trivial translation part, hence no phase factors appear
//! in the orbit expansion of a symmetric Fourier series.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Integer Fourier index `(n1, n2)`.
pub type Index = (i32, i32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupName {
    /// Reflection `x1 ↦ -x1` only.
    Z2xZ1,
    D2,
    D4,
    /// Dihedral group of order `2j` for `j ∉ {1, 2, 4}`.
    Dj(u32),
}

impl GroupName {
    /// Rotation count `j` of the group `D_j`.
    pub fn rotations(self) -> u32 {
        match self {
            GroupName::Z2xZ1 => 1,
            GroupName::D2 => 2,
            GroupName::D4 => 4,
            GroupName::Dj(j) => j,
        }
    }

    /// Canonical name for `D_j`.
    pub fn dihedral(j: u32) -> GroupName {
        match j {
            1 => GroupName::Z2xZ1,
            2 => GroupName::D2,
            4 => GroupName::D4,
            j => GroupName::Dj(j),
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupName::Z2xZ1 => write!(f, "Z2xZ1"),
            GroupName::D2 => write!(f, "D2"),
            GroupName::D4 => write!(f, "D4"),
            GroupName::Dj(j) => write!(f, "D{j}"),
        }
    }
}

impl FromStr for GroupName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("z2xz1") || t.eq_ignore_ascii_case("d1") {
            return Ok(GroupName::Z2xZ1);
        }
        let j = t
            .strip_prefix(['D', 'd'])
            .and_then(|r| r.parse::<u32>().ok())
            .ok_or_else(|| Error::UnsupportedGroup(format!("unknown group name `{s}`")))?;
        if j == 0 {
            return Err(Error::UnsupportedGroup("D0 is not a group".into()));
        }
        Ok(GroupName::dihedral(j))
    }
}

/// Group element `R^k S^s`: optional reflection `S: x1 ↦ -x1`, then rotation
/// through `2πk/j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub rotation: u32,
    pub reflect: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    name: GroupName,
    elements: Vec<GroupElement>,
}

impl SymmetryGroup {
    pub fn build(name: GroupName) -> Result<Self> {
        let j = name.rotations();
        if j == 0 {
            return Err(Error::UnsupportedGroup("rotation count must be positive".into()));
        }
        let name = GroupName::dihedral(j);
        let mut elements = Vec::with_capacity(2 * j as usize);
        for reflect in [false, true] {
            for rotation in 0..j {
                elements.push(GroupElement { rotation, reflect });
            }
        }
        let g = SymmetryGroup { name, elements };
        g.verify_axioms()?;
        Ok(g)
    }

    pub fn name(&self) -> GroupName {
        self.name
    }

    pub fn rotations(&self) -> u32 {
        self.name.rotations()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    /// True exactly when the group maps `Z^2` into itself.
    pub fn lattice_compatible(&self) -> bool {
        matches!(self.rotations(), 1 | 2 | 4)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { rotation: 0, reflect: false }
    }

    /// Product `a ∘ b` (apply `b` first).
    pub fn compose(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        let j = self.rotations() as i64;
        // S R^k = R^-k S
        let kb = if a.reflect { -(b.rotation as i64) } else { b.rotation as i64 };
        GroupElement {
            rotation: (a.rotation as i64 + kb).rem_euclid(j) as u32,
            reflect: a.reflect ^ b.reflect,
        }
    }

    pub fn inverse(&self, a: GroupElement) -> GroupElement {
        if a.reflect {
            a
        } else {
            let j = self.rotations();
            GroupElement { rotation: (j - a.rotation % j) % j, reflect: false }
        }
    }

    fn verify_axioms(&self) -> Result<()> {
        let e = self.identity();
        for &a in &self.elements {
            if self.compose(e, a) != a || self.compose(a, e) != a {
                return Err(Error::UnsupportedGroup(format!("identity law fails in {}", self.name)));
            }
            if self.compose(a, self.inverse(a)) != e {
                return Err(Error::UnsupportedGroup(format!("inverse law fails in {}", self.name)));
            }
            for &b in &self.elements {
                if !self.elements.contains(&self.compose(a, b)) {
                    return Err(Error::UnsupportedGroup(format!("closure fails in {}", self.name)));
                }
            }
        }
        Ok(())
    }

    /// Action on an integer index; requires a lattice-compatible group.
    pub fn act_index(&self, g: GroupElement, n: Index) -> Result<Index> {
        if !self.lattice_compatible() {
            return Err(Error::UnsupportedGroup(format!("{} does not act on the square lattice", self.name)));
        }
        Ok(act_lattice(self.rotations(), g, n))
    }

    /// Action on a point given as intervals; rotation angles are enclosed
    /// from the exact rational multiple of π.
    pub fn act_point(&self, g: GroupElement, x: [Interval; 2]) -> [Interval; 2] {
        let [mut x1, x2] = x;
        if g.reflect {
            x1 = -x1;
        }
        rotate_point([x1, x2], g.rotation, self.rotations())
    }

    /// Orbit of `n`, sorted and deduplicated.
    pub fn orbit(&self, n: Index) -> Result<Vec<Index>> {
        let mut out = Vec::with_capacity(self.order());
        for &g in &self.elements {
            out.push(self.act_index(g, n)?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

fn act_lattice(j: u32, g: GroupElement, n: Index) -> Index {
    let (mut a, b) = n;
    if g.reflect {
        a = -a;
    }
    let quarter_turns = match j {
        1 => 0,
        2 => 2 * g.rotation,
        4 => g.rotation,
        _ => unreachable!("non-lattice group"),
    } % 4;
    match quarter_turns {
        0 => (a, b),
        1 => (-b, a),
        2 => (-a, -b),
        _ => (b, -a),
    }
}

/// Rotate an interval point through `2πk/j`.
pub fn rotate_point(x: [Interval; 2], k: u32, j: u32) -> [Interval; 2] {
    let [x1, x2] = x;
    let j = j.max(1);
    match (4 * (k % j)).checked_rem(j) {
        // exact quarter turns
        Some(0) => {
            let q = 4 * (k % j) / j;
            match q {
                0 => [x1, x2],
                1 => [-x2, x1],
                2 => [-x1, -x2],
                _ => [x2, -x1],
            }
        }
        _ => {
            let t = Interval::ratio(2 * (k % j) as i64, j as i64);
            let (c, s) = (t.cospi(), t.sinpi());
            [c * x1 - s * x2, s * x1 + c * x2]
        }
    }
}

/// The largest lattice-compatible dihedral subgroup used to represent
/// `D_j`-symmetric functions.
///
/// `j ∈ {2, 4}` is represented exactly; other even `j` use `D4` when four
/// divides `j` and `D2` otherwise; odd `j` fall back to the reflection group.
pub fn maximal_subgroup(j: u32) -> Result<SymmetryGroup> {
    if j < 2 {
        return Err(Error::UnsupportedGroup(format!("dihedral order j={j} must be at least 2")));
    }
    let name = if j.is_multiple_of(4) {
        GroupName::D4
    } else if j.is_multiple_of(2) {
        GroupName::D2
    } else {
        GroupName::Z2xZ1
    };
    SymmetryGroup::build(name)
}

/// Representatives of orbits of `[-N, N]^2` with their orbit members.
#[derive(Debug)]
pub struct OrbitTable {
    group: SymmetryGroup,
    order: usize,
    reps: Vec<Index>,
    members: Vec<Vec<Index>>,
    weights: Vec<u32>,
    /// Rep position for every grid index, row-major over `[-N, N]^2`.
    lookup: Vec<u32>,
}

/// Whether `n` lies in the canonical region whose points are representatives.
fn is_canonical(group: GroupName, n: Index) -> bool {
    let (a, b) = n;
    match group {
        GroupName::Z2xZ1 => a >= 0,
        GroupName::D2 => a >= 0 && b >= 0,
        GroupName::D4 => 0 <= b && b <= a,
        GroupName::Dj(_) => false,
    }
}

/// Max-norm shell of an index.
#[inline]
pub fn shell(n: Index) -> i32 {
    n.0.abs().max(n.1.abs())
}

impl OrbitTable {
    /// Build the table for `group` truncated to `[-N, N]^2`.
    pub fn new(group: &SymmetryGroup, order: usize) -> Result<Self> {
        if !group.lattice_compatible() {
            return Err(Error::UnsupportedGroup(format!(
                "{} has no square-lattice orbit table",
                group.name()
            )));
        }
        let n = order as i32;
        let mut reps: Vec<Index> = Vec::new();
        for a in -n..=n {
            for b in -n..=n {
                if is_canonical(group.name(), (a, b)) {
                    reps.push((a, b));
                }
            }
        }
        // shell-major order keeps lower truncations as prefixes
        reps.sort_by_key(|&m| (shell(m), m));
        let side = 2 * order + 1;
        let mut lookup = vec![u32::MAX; side * side];
        let mut members = Vec::with_capacity(reps.len());
        let mut weights = Vec::with_capacity(reps.len());
        for (r, &rep) in reps.iter().enumerate() {
            let orb = group.orbit(rep)?;
            for &m in &orb {
                let pos = grid_pos(order, m);
                if lookup[pos] != u32::MAX {
                    return Err(Error::UnsupportedGroup(format!(
                        "index {m:?} reached from two representatives"
                    )));
                }
                lookup[pos] = r as u32;
            }
            weights.push(orb.len() as u32);
            members.push(orb);
        }
        if lookup.contains(&u32::MAX) {
            return Err(Error::UnsupportedGroup("representatives do not cover the grid".into()));
        }
        Ok(OrbitTable { group: group.clone(), order, reps, members, weights, lookup })
    }

    /// Shared, cached table for `(group, order)`.
    pub fn shared(name: GroupName, order: usize) -> Result<Arc<OrbitTable>> {
        type Cache = Mutex<HashMap<(GroupName, usize), Arc<OrbitTable>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let name = GroupName::dihedral(name.rotations());
        if let Some(t) = cache.lock().expect("orbit cache poisoned").get(&(name, order)) {
            return Ok(t.clone());
        }
        let table = Arc::new(OrbitTable::new(&SymmetryGroup::build(name)?, order)?);
        cache.lock().expect("orbit cache poisoned").insert((name, order), table.clone());
        Ok(table)
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }
    pub fn group_name(&self) -> GroupName {
        self.group.name()
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn len(&self) -> usize {
        self.reps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
    pub fn reps(&self) -> &[Index] {
        &self.reps
    }
    pub fn rep(&self, r: usize) -> Index {
        self.reps[r]
    }
    pub fn members(&self, r: usize) -> &[Index] {
        &self.members[r]
    }
    pub fn weight(&self, r: usize) -> u32 {
        self.weights[r]
    }
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Position of the representative of `m`'s orbit, if `m` is in range.
    pub fn rep_of(&self, m: Index) -> Option<usize> {
        let n = self.order as i32;
        if m.0.abs() > n || m.1.abs() > n {
            return None;
        }
        Some(self.lookup[grid_pos(self.order, m)] as usize)
    }

    /// Representative of the orbit of `-m` where `m` is representative `r`.
    pub fn neg_rep(&self, r: usize) -> usize {
        let m = self.reps[r];
        self.rep_of((-m.0, -m.1)).expect("grid is symmetric under negation")
    }

    /// Number of leading representatives whose index lies in `[-k, k]^2`.
    pub fn prefix_len(&self, k: usize) -> usize {
        self.reps.partition_point(|&m| shell(m) <= k as i32)
    }
}

/// Row-major position of `m` in the `(2N+1)^2` grid.
#[inline]
pub fn grid_pos(order: usize, m: Index) -> usize {
    let side = 2 * order + 1;
    (m.0 + order as i32) as usize * side + (m.1 + order as i32) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_sizes() {
        assert_eq!(SymmetryGroup::build(GroupName::D4).unwrap().order(), 8);
        let z = SymmetryGroup::build(GroupName::Z2xZ1).unwrap();
        assert_eq!(z.order(), 2);
        assert!(z.lattice_compatible());
        let d5 = SymmetryGroup::build(GroupName::Dj(5)).unwrap();
        assert_eq!(d5.order(), 10);
        assert!(!d5.lattice_compatible());
        assert!(d5.orbit((1, 0)).is_err());
    }

    #[test]
    fn maximal_subgroups() {
        assert_eq!(maximal_subgroup(8).unwrap().name(), GroupName::D4);
        assert_eq!(maximal_subgroup(10).unwrap().name(), GroupName::D2);
        assert_eq!(maximal_subgroup(5).unwrap().name(), GroupName::Z2xZ1);
        assert_eq!(maximal_subgroup(2).unwrap().name(), GroupName::D2);
        assert_eq!(maximal_subgroup(12).unwrap().name(), GroupName::D4);
    }

    #[test]
    fn orbits() {
        let d4 = SymmetryGroup::build(GroupName::D4).unwrap();
        assert_eq!(d4.orbit((0, 0)).unwrap(), vec![(0, 0)]);
        let o = d4.orbit((1, 2)).unwrap();
        let mut expect = vec![(1, 2), (1, -2), (-1, 2), (-1, -2), (2, 1), (2, -1), (-2, 1), (-2, -1)];
        expect.sort();
        assert_eq!(o, expect);
        let z = SymmetryGroup::build(GroupName::Z2xZ1).unwrap();
        assert_eq!(z.orbit((3, -1)).unwrap(), vec![(-3, -1), (3, -1)]);
    }

    #[test]
    fn reduced_sets() {
        let t = OrbitTable::shared(GroupName::D2, 1).unwrap();
        assert_eq!(t.reps(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(t.weights(), &[1, 2, 2, 4]);
        let t = OrbitTable::shared(GroupName::D4, 1).unwrap();
        assert_eq!(t.reps(), &[(0, 0), (1, 0), (1, 1)]);
        assert_eq!(t.weights(), &[1, 4, 4]);
        let t = OrbitTable::shared(GroupName::Z2xZ1, 1).unwrap();
        assert_eq!(t.len(), 6);
        assert!(t.reps().iter().all(|m| m.0 >= 0));
    }

    #[test]
    fn prefix_property() {
        for name in [GroupName::Z2xZ1, GroupName::D2, GroupName::D4] {
            let big = OrbitTable::shared(name, 6).unwrap();
            for k in 0..=6 {
                let small = OrbitTable::shared(name, k).unwrap();
                assert_eq!(&big.reps()[..big.prefix_len(k)], small.reps());
            }
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("D4".parse::<GroupName>().unwrap(), GroupName::D4);
        assert_eq!("d10".parse::<GroupName>().unwrap(), GroupName::Dj(10));
        assert_eq!("Z2xZ1".parse::<GroupName>().unwrap(), GroupName::Z2xZ1);
        assert!("Q8".parse::<GroupName>().is_err());
    }

    #[test]
    fn point_rotation_matches_lattice() {
        let x = [Interval::point(0.3), Interval::point(-1.1)];
        let r = rotate_point(x, 1, 4);
        assert_eq!(r, [Interval::point(1.1), Interval::point(0.3)]);
        let r5 = rotate_point(x, 5, 5);
        assert_eq!(r5, x);
        let r3 = rotate_point(x, 1, 3);
        let ang = 2.0 * std::f64::consts::PI / 3.0;
        assert!((r3[0].mid() - (ang.cos() * 0.3 + ang.sin() * 1.1)).abs() < 1e-14);
        assert!(r3[0].width() < 1e-14);
    }
}
