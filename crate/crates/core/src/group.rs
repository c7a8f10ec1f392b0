//! Finite symmetry groups of periodic grids.
//!
//! Every supported group is a semidirect product `T ⋊ H` of a cyclic
//! translation lattice `T = Z_N` (1D) or `Z_N²` (2D) with a point group
//! `H ⊆ C4 ⋊ C2` fixing the grid origin:
//!
//! | kind  | translations | point group     | order      |
//! |-------|--------------|-----------------|------------|
//! | `z1`  | `Z_N`        | trivial         | `N`        |
//! | `p1`  | `Z_N²`       | trivial         | `N²`       |
//! | `p4`  | `Z_N²`       | `C4`            | `4 N²`     |
//! | `p4m` | `Z_N²`       | `C4 ⋊ C2`       | `8 N²`     |
//!
//! An element `(t, h)` acts on grid points by `x ↦ h x + t (mod N)` and
//! composes as `(t₁, h₁)(t₂, h₂) = (t₁ + h₁ t₂, h₁ h₂)`. The rotation
//! generator is 90° counter-clockwise, `(x, y) ↦ (−y, x)`, and the mirror
//! flips the x-axis, `(x, y) ↦ (−x, y)`. A point part `(r, m)` stands for
//! the linear map `R^r M^m`.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use crate::error::GroupError;

/// Which wallpaper group (or its 1D analogue) a [`GroupSpec`] realizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    Z1,
    P1,
    P4,
    P4m,
}

impl GroupKind {
    pub fn name(self) -> &'static str {
        match self {
            GroupKind::Z1 => "z1",
            GroupKind::P1 => "p1",
            GroupKind::P4 => "p4",
            GroupKind::P4m => "p4m",
        }
    }

    /// Number of rotations in the point group (1, or 4 for p4/p4m).
    pub fn rotation_order(self) -> u8 {
        match self {
            GroupKind::Z1 | GroupKind::P1 => 1,
            GroupKind::P4 | GroupKind::P4m => 4,
        }
    }

    pub fn has_mirror(self) -> bool {
        self == GroupKind::P4m
    }

    pub fn point_order(self) -> usize {
        self.rotation_order() as usize * if self.has_mirror() { 2 } else { 1 }
    }

    pub fn is_1d(self) -> bool {
        self == GroupKind::Z1
    }
}

impl FromStr for GroupKind {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z1" => Ok(GroupKind::Z1),
            "p1" => Ok(GroupKind::P1),
            "p4" => Ok(GroupKind::P4),
            "p4m" => Ok(GroupKind::P4m),
            other => Err(GroupError::UnknownGroup(other.to_string())),
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete finite group: a [`GroupKind`] on a periodic grid of period `size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    kind: GroupKind,
    size: u32,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, size: u32) -> Result<Self, GroupError> {
        if size == 0 {
            return Err(GroupError::ZeroPeriod);
        }
        Ok(Self { kind, size })
    }

    pub fn z1(size: u32) -> Self {
        Self::new(GroupKind::Z1, size).expect("positive period")
    }

    pub fn p1(size: u32) -> Self {
        Self::new(GroupKind::P1, size).expect("positive period")
    }

    pub fn p4(size: u32) -> Self {
        Self::new(GroupKind::P4, size).expect("positive period")
    }

    pub fn p4m(size: u32) -> Self {
        Self::new(GroupKind::P4m, size).expect("positive period")
    }

    /// Parses a group name such as `p4` together with its period.
    pub fn parse(name: &str, size: u32) -> Result<Self, GroupError> {
        Self::new(name.parse()?, size)
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Grid period `N` along every axis.
    pub fn size(&self) -> u32 {
        self.size
    }

    /// Extent of the y-axis (1 for the 1D group).
    pub fn size_y(&self) -> u32 {
        if self.kind.is_1d() {
            1
        } else {
            self.size
        }
    }

    pub fn grid_points(&self) -> usize {
        self.size as usize * self.size_y() as usize
    }

    pub fn order(&self) -> usize {
        self.grid_points() * self.kind.point_order()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            group: *self,
            tx: 0,
            ty: 0,
            rot: 0,
            mirror: false,
        }
    }

    /// Builds an element from raw components, reducing translations mod `N`.
    pub fn element(&self, tx: i64, ty: i64, rot: i64, mirror: bool) -> Result<GroupElement, GroupError> {
        let n = self.size as i64;
        let rot = rot.rem_euclid(4) as u8;
        if rot % (4 / self.kind.rotation_order()) != 0 {
            return Err(GroupError::NotInGroup(format!("rotation r={rot} in {}", self.kind)));
        }
        if mirror && !self.kind.has_mirror() {
            return Err(GroupError::NotInGroup(format!("mirror in {}", self.kind)));
        }
        if self.kind.is_1d() && ty.rem_euclid(n) != 0 {
            return Err(GroupError::NotInGroup("y-translation in z1".into()));
        }
        Ok(GroupElement {
            group: *self,
            tx: tx.rem_euclid(n) as u32,
            ty: if self.kind.is_1d() { 0 } else { ty.rem_euclid(n) as u32 },
            rot,
            mirror,
        })
    }

    /// Parses the literal `t=X,Y;r=K;m=B` (the form printed by `Display`).
    ///
    /// Every field is optional and defaults to zero; 1D groups take `t=X`.
    pub fn parse_element(&self, text: &str) -> Result<GroupElement, GroupError> {
        let bad = |reason: &str| GroupError::Literal {
            literal: text.to_string(),
            reason: reason.to_string(),
        };
        let (mut t, mut r, mut m) = ((0i64, 0i64), 0i64, false);
        let mut seen = [false; 3];
        for field in text.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, value) = field.split_once('=').ok_or_else(|| bad("fields must be key=value"))?;
            let value = value.trim();
            let slot = match key.trim() {
                "t" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    let num = |s: &str| s.parse::<i64>().map_err(|_| bad("translation must be integers"));
                    t = match parts.as_slice() {
                        [x] if self.kind.is_1d() => (num(x)?, 0),
                        [x, y] => (num(x)?, num(y)?),
                        _ if self.kind.is_1d() => return Err(bad("expected t=X")),
                        _ => return Err(bad("expected t=X,Y")),
                    };
                    0
                }
                "r" => {
                    r = value.parse().map_err(|_| bad("rotation must be an integer"))?;
                    1
                }
                "m" => {
                    m = match value {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad("mirror must be 0 or 1")),
                    };
                    2
                }
                _ => return Err(bad("unknown field; expected t, r or m")),
            };
            if std::mem::replace(&mut seen[slot], true) {
                return Err(bad("repeated field"));
            }
        }
        self.element(t.0, t.1, r, m)
    }

    /// Pure translation `(t, e)`.
    pub fn translation(&self, tx: i64, ty: i64) -> GroupElement {
        self.element(tx, ty, 0, false).expect("translations belong to every group")
    }

    /// Element at position `index` of the canonical enumeration.
    pub fn element_at(&self, index: usize) -> GroupElement {
        Subgroup::full(*self).element_at(index)
    }

    /// Position of `g` in the canonical enumeration.
    pub fn index_of(&self, g: &GroupElement) -> usize {
        Subgroup::full(*self).index_of(g)
    }

    /// All elements in canonical order: lexicographic on (reflection, rotation, ty, tx).
    pub fn enumerate(&self) -> Vec<GroupElement> {
        Subgroup::full(*self).elements()
    }

    /// Every grid point `(x, y)` in row-major (y, x) order.
    pub fn grid(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.grid_points());
        for y in 0..self.size_y() {
            for x in 0..self.size {
                out.push((x, y));
            }
        }
        out
    }

    pub fn grid_index(&self, x: u32, y: u32) -> usize {
        y as usize * self.size as usize + x as usize
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[N={}]", self.kind, self.size)
    }
}

/// Applies the point-group map `R^rot M^mirror` to an integer vector.
fn point_apply(rot: u8, mirror: bool, x: i64, y: i64) -> (i64, i64) {
    let (mut x, y0) = (x, y);
    if mirror {
        x = -x;
    }
    match rot & 3 {
        0 => (x, y0),
        1 => (-y0, x),
        2 => (-x, -y0),
        _ => (y0, -x),
    }
}

/// Product of point parts `(r₁, m₁)(r₂, m₂)`; uses `M R = R⁻¹ M`.
fn point_compose(a: (u8, bool), b: (u8, bool)) -> (u8, bool) {
    let r2 = if a.1 { (4 - b.0) & 3 } else { b.0 };
    ((a.0 + r2) & 3, a.1 ^ b.1)
}

fn point_inverse(p: (u8, bool)) -> (u8, bool) {
    if p.1 {
        p
    } else {
        ((4 - p.0) & 3, false)
    }
}

/// An element `(t, h)` of a [`GroupSpec`], stored canonically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    group: GroupSpec,
    tx: u32,
    ty: u32,
    rot: u8,
    mirror: bool,
}

impl GroupElement {
    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn tx(&self) -> u32 {
        self.tx
    }

    pub fn ty(&self) -> u32 {
        self.ty
    }

    pub fn rot(&self) -> u8 {
        self.rot
    }

    pub fn mirror(&self) -> bool {
        self.mirror
    }

    pub fn is_identity(&self) -> bool {
        self.tx == 0 && self.ty == 0 && self.rot == 0 && !self.mirror
    }

    pub fn point(&self) -> (u8, bool) {
        (self.rot, self.mirror)
    }

    /// The point part `(0, h)` of this element.
    pub fn point_part(&self) -> GroupElement {
        GroupElement { tx: 0, ty: 0, ..*self }
    }

    /// Group product `self ∘ other`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        if self.group != other.group {
            return Err(GroupError::Mismatch(self.group, other.group));
        }
        Ok(self.compose_unchecked(other))
    }

    fn compose_unchecked(&self, other: &GroupElement) -> GroupElement {
        let n = self.group.size as i64;
        let (x, y) = point_apply(self.rot, self.mirror, other.tx as i64, other.ty as i64);
        let (rot, mirror) = point_compose(self.point(), other.point());
        GroupElement {
            group: self.group,
            tx: (self.tx as i64 + x).rem_euclid(n) as u32,
            ty: (self.ty as i64 + y).rem_euclid(n) as u32,
            rot,
            mirror,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        let n = self.group.size as i64;
        let (rot, mirror) = point_inverse(self.point());
        let (x, y) = point_apply(rot, mirror, self.tx as i64, self.ty as i64);
        GroupElement {
            group: self.group,
            tx: (-x).rem_euclid(n) as u32,
            ty: (-y).rem_euclid(n) as u32,
            rot,
            mirror,
        }
    }

    /// Action on the homogeneous grid: `x ↦ h x + t (mod N)`.
    pub fn act_on_grid(&self, point: (u32, u32)) -> (u32, u32) {
        let n = self.group.size as i64;
        let (x, y) = point_apply(self.rot, self.mirror, point.0 as i64, point.1 as i64);
        let y = if self.group.kind.is_1d() { 0 } else { (self.ty as i64 + y).rem_euclid(n) };
        ((self.tx as i64 + x).rem_euclid(n) as u32, y as u32)
    }

    /// `φ_h(n) = h n h⁻¹` on translation vectors.
    pub fn conjugate_translation(&self, tx: i64, ty: i64) -> (i64, i64) {
        point_apply(self.rot, self.mirror, tx, ty)
    }

    fn sort_key(&self) -> (bool, u8, u32, u32) {
        (self.mirror, self.rot, self.ty, self.tx)
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    /// Panics if the operands belong to different groups; use
    /// [`GroupElement::compose`] for a fallible product.
    fn mul(self, rhs: GroupElement) -> GroupElement {
        assert_eq!(self.group, rhs.group, "composing elements of different groups");
        self.compose_unchecked(&rhs)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: &GroupElement) -> GroupElement {
        *self * *rhs
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: (reflection, rotation, ty, tx) lexicographic.
impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.group.kind.is_1d() {
            write!(f, "t={}", self.tx)
        } else {
            write!(f, "t={},{};r={};m={}", self.tx, self.ty, self.rot, self.mirror as u8)
        }
    }
}

/// A subgroup `K = (s_x Z_N × s_y Z_N) ⋊ H_K` of a [`GroupSpec`].
///
/// `H_K` is generated by the rotation `R^(4/rotation_order)` plus the mirror
/// when it is retained. Subgroups of p4/p4m require equal strides on both
/// axes so the point group maps the sub-lattice onto itself. The full group,
/// its translation subgroup and the trivial group are all of this form, so
/// feature-map domains are always a `Subgroup`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Subgroup {
    parent: GroupSpec,
    stride_x: u32,
    stride_y: u32,
    rotation_order: u8,
    mirror: bool,
}

impl Subgroup {
    pub fn new(
        parent: GroupSpec,
        stride_x: u32,
        stride_y: u32,
        rotation_order: u8,
        mirror: bool,
    ) -> Result<Self, GroupError> {
        let n = parent.size;
        let stride_y = if parent.kind.is_1d() { 1 } else { stride_y };
        if stride_x == 0 || n % stride_x != 0 {
            return Err(GroupError::StrideNotDividing { stride: stride_x, size: n });
        }
        if stride_y == 0 || parent.size_y() % stride_y != 0 {
            return Err(GroupError::StrideNotDividing { stride: stride_y, size: n });
        }
        if !matches!(rotation_order, 1 | 2 | 4) || rotation_order > parent.kind.rotation_order() {
            return Err(GroupError::InvalidSubgroup(format!(
                "rotation order {rotation_order} not available in {}",
                parent.kind
            )));
        }
        if mirror && !parent.kind.has_mirror() {
            return Err(GroupError::InvalidSubgroup(format!("no mirror in {}", parent.kind)));
        }
        if parent.kind.rotation_order() > 1 && stride_x != stride_y {
            return Err(GroupError::InvalidSubgroup(
                "rotation groups need equal strides on both axes".into(),
            ));
        }
        Ok(Self {
            parent,
            stride_x,
            stride_y,
            rotation_order,
            mirror,
        })
    }

    /// The whole group viewed as a subgroup of itself.
    pub fn full(parent: GroupSpec) -> Self {
        Self {
            parent,
            stride_x: 1,
            stride_y: 1,
            rotation_order: parent.kind.rotation_order(),
            mirror: parent.kind.has_mirror(),
        }
    }

    /// The translation lattice `T`, i.e. the homogeneous grid.
    pub fn translations(parent: GroupSpec) -> Self {
        Self {
            parent,
            stride_x: 1,
            stride_y: 1,
            rotation_order: 1,
            mirror: false,
        }
    }

    pub fn trivial(parent: GroupSpec) -> Self {
        Self {
            parent,
            stride_x: parent.size,
            stride_y: parent.size_y(),
            rotation_order: 1,
            mirror: false,
        }
    }

    /// `cZ_N` (or `(cZ_N)²`) with the full point group of the parent.
    pub fn strided(parent: GroupSpec, stride: u32) -> Result<Self, GroupError> {
        Self::new(
            parent,
            stride,
            stride,
            parent.kind.rotation_order(),
            parent.kind.has_mirror(),
        )
    }

    pub fn parent(&self) -> GroupSpec {
        self.parent
    }

    pub fn stride_x(&self) -> u32 {
        self.stride_x
    }

    pub fn stride_y(&self) -> u32 {
        self.stride_y
    }

    pub fn rotation_order(&self) -> u8 {
        self.rotation_order
    }

    pub fn has_mirror(&self) -> bool {
        self.mirror
    }

    fn rotation_step(&self) -> u8 {
        4 / self.rotation_order
    }

    /// Lattice extent along x (number of distinct x-translations).
    pub fn lattice_x(&self) -> usize {
        (self.parent.size / self.stride_x) as usize
    }

    pub fn lattice_y(&self) -> usize {
        (self.parent.size_y() / self.stride_y) as usize
    }

    pub fn lattice_points(&self) -> usize {
        self.lattice_x() * self.lattice_y()
    }

    pub fn point_order(&self) -> usize {
        self.rotation_order as usize * if self.mirror { 2 } else { 1 }
    }

    pub fn order(&self) -> usize {
        self.lattice_points() * self.point_order()
    }

    pub fn is_full(&self) -> bool {
        *self == Self::full(self.parent)
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == 1
    }

    /// The translation part `T ∩ K` of this subgroup.
    pub fn translation_part(&self) -> Subgroup {
        Subgroup {
            rotation_order: 1,
            mirror: false,
            ..*self
        }
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.group == self.parent
            && g.tx % self.stride_x == 0
            && g.ty % self.stride_y == 0
            && g.rot % self.rotation_step() == 0
            && (!g.mirror || self.mirror)
    }

    /// `self ≤ other`.
    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.parent == other.parent
            && self.stride_x % other.stride_x == 0
            && self.stride_y % other.stride_y == 0
            && other.rotation_order % self.rotation_order == 0
            && (!self.mirror || other.mirror)
    }

    /// Point parts of `H_K` in canonical order.
    pub fn point_elements(&self) -> Vec<(u8, bool)> {
        let mut out = Vec::with_capacity(self.point_order());
        for m in [false, true] {
            if m && !self.mirror {
                continue;
            }
            for k in 0..self.rotation_order {
                out.push((k * self.rotation_step(), m));
            }
        }
        out
    }

    /// Index of `g` within this subgroup's canonical enumeration.
    ///
    /// `g` must be a member; this is checked only in debug builds.
    pub fn index_of(&self, g: &GroupElement) -> usize {
        debug_assert!(self.contains(g), "{g} not in {self}");
        let mi = g.mirror as usize;
        let ri = (g.rot / self.rotation_step()) as usize;
        let yi = (g.ty / self.stride_y) as usize;
        let xi = (g.tx / self.stride_x) as usize;
        ((mi * self.rotation_order as usize + ri) * self.lattice_y() + yi) * self.lattice_x() + xi
    }

    pub fn try_index_of(&self, g: &GroupElement) -> Option<usize> {
        self.contains(g).then(|| self.index_of(g))
    }

    pub fn element_at(&self, index: usize) -> GroupElement {
        debug_assert!(index < self.order());
        let lx = self.lattice_x();
        let ly = self.lattice_y();
        let xi = index % lx;
        let rest = index / lx;
        let yi = rest % ly;
        let rest = rest / ly;
        let ri = rest % self.rotation_order as usize;
        let mi = rest / self.rotation_order as usize;
        GroupElement {
            group: self.parent,
            tx: xi as u32 * self.stride_x,
            ty: yi as u32 * self.stride_y,
            rot: ri as u8 * self.rotation_step(),
            mirror: mi == 1,
        }
    }

    /// Members in canonical order (a subsequence of the parent enumeration).
    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.order()).map(|i| self.element_at(i)).collect()
    }

    /// Canonical representative of `gK`: its minimal element in canonical order.
    fn section(&self, g: &GroupElement) -> GroupElement {
        let (rot, mirror) = self
            .point_elements()
            .into_iter()
            .map(|h| point_compose(g.point(), h))
            .min_by_key(|&(r, m)| (m, r))
            .expect("point group is never empty");
        GroupElement {
            group: self.parent,
            tx: g.tx % self.stride_x,
            ty: g.ty % self.stride_y,
            rot,
            mirror,
        }
    }

    /// The left coset `gK`, identified by its canonical representative.
    pub fn coset_of(&self, g: &GroupElement) -> Result<CosetId, GroupError> {
        if g.group != self.parent {
            return Err(GroupError::Mismatch(g.group, self.parent));
        }
        Ok(CosetId {
            rep: self.section(g),
            subgroup: *self,
        })
    }

    /// The quotient `self / k` as the list of cosets ordered by representative.
    pub fn quotient(&self, k: &Subgroup) -> Result<Vec<CosetId>, GroupError> {
        if !k.is_subgroup_of(self) {
            return Err(GroupError::InvalidSubgroup(format!("{k} is not a subgroup of {self}")));
        }
        let reps: BTreeSet<GroupElement> = self.elements().iter().map(|g| k.section(g)).collect();
        Ok(reps
            .into_iter()
            .map(|rep| CosetId { rep, subgroup: *k })
            .collect())
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}Z×{}Z)⋊C{}{} ≤ {}",
            self.stride_x,
            self.stride_y,
            self.rotation_order,
            if self.mirror { "⋊C2" } else { "" },
            self.parent
        )
    }
}

/// A left coset `pK`, stored as its canonical representative `p̄` and `K`.
///
/// Two ids are equal iff they name the same coset, because the
/// representative is always `section(pK)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CosetId {
    rep: GroupElement,
    subgroup: Subgroup,
}

impl CosetId {
    pub fn representative(&self) -> GroupElement {
        self.rep
    }

    pub fn subgroup(&self) -> Subgroup {
        self.subgroup
    }

    /// The coset `K` itself.
    pub fn identity(subgroup: Subgroup) -> Self {
        Self {
            rep: subgroup.parent.identity(),
            subgroup,
        }
    }

    /// Natural action `u · (pK) = (u p) K`.
    pub fn act(&self, u: &GroupElement) -> Result<CosetId, GroupError> {
        let up = u.compose(&self.rep)?;
        self.subgroup.coset_of(&up)
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.subgroup.contains(&(self.rep.inverse() * *g))
    }
}

impl fmt::Display for CosetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]K", self.rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Mat = [[i64; 3]; 3];

    /// Homogeneous integer matrix of an element, entries mod N.
    fn matrix(g: &GroupElement) -> Mat {
        let (ax, ay) = point_apply(g.rot, g.mirror, 1, 0);
        let (bx, by) = point_apply(g.rot, g.mirror, 0, 1);
        [[ax, bx, g.tx as i64], [ay, by, g.ty as i64], [0, 0, 1]]
    }

    fn matmul(a: &Mat, b: &Mat, n: i64) -> Mat {
        let mut out = [[0i64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out[0][2] = out[0][2].rem_euclid(n);
        out[1][2] = out[1][2].rem_euclid(n);
        out
    }

    fn from_matrix(spec: GroupSpec, m: &Mat) -> GroupElement {
        spec.enumerate()
            .into_iter()
            .find(|g| {
                let gm = matrix(g);
                gm[0][0] == m[0][0] && gm[0][1] == m[0][1] && gm[1][0] == m[1][0] && gm[1][1] == m[1][1]
                    && gm[0][2] == m[0][2]
                    && gm[1][2] == m[1][2]
            })
            .expect("matrix of a group element")
    }

    #[test]
    fn compose_matches_matrix_oracle() {
        let g = GroupSpec::p4(4);
        let a = g.element(1, 0, 1, false).unwrap();
        let b = g.element(1, 0, 0, false).unwrap();
        let expected = from_matrix(g, &matmul(&matrix(&a), &matrix(&b), 4));
        assert_eq!(a * b, expected);
        assert_eq!(a * b, g.element(1, 1, 1, false).unwrap());
    }

    #[test]
    fn compose_agrees_with_matrices_exhaustively_p4m() {
        let spec = GroupSpec::p4m(4);
        let all = spec.enumerate();
        for a in &all {
            for b in all.iter().step_by(7) {
                let m = matmul(&matrix(a), &matrix(b), 4);
                let ab = *a * *b;
                let am = matrix(&ab);
                assert_eq!(am, m, "{a} * {b}");
            }
        }
    }

    #[test]
    fn inverse_examples() {
        let g = GroupSpec::p4(4);
        let a = g.element(1, 0, 1, false).unwrap();
        assert_eq!(a.inverse(), g.element(0, 1, 3, false).unwrap());
        assert_eq!(a * a.inverse(), g.identity());
        assert_eq!(g.identity().inverse(), g.identity());
        let z = GroupSpec::z1(8);
        assert_eq!(z.translation(3, 0).inverse(), z.translation(5, 0));
        assert_eq!(z.translation(5, 0) * z.translation(6, 0), z.translation(3, 0));
    }

    #[test]
    fn mismatched_groups_error() {
        let a = GroupSpec::p4(4).identity();
        let b = GroupSpec::p4(8).identity();
        assert!(matches!(a.compose(&b), Err(GroupError::Mismatch(..))));
    }

    #[test]
    fn grid_action_examples() {
        let g = GroupSpec::p4(4);
        assert_eq!(g.translation(1, 0).act_on_grid((2, 3)), (3, 3));
        let r1 = g.element(0, 0, 1, false).unwrap();
        assert_eq!(r1.act_on_grid((1, 0)), (0, 1));
        assert_eq!(g.identity().act_on_grid((3, 2)), (3, 2));
        let m = GroupSpec::p4m(4).element(0, 0, 0, true).unwrap();
        assert_eq!(m.act_on_grid((1, 2)), (3, 2));
    }

    #[test]
    fn enumeration_sizes_and_order() {
        assert_eq!(GroupSpec::p4(4).enumerate().len(), 64);
        assert_eq!(GroupSpec::p4m(16).enumerate().len(), 2048);
        let all = GroupSpec::p4m(4).enumerate();
        assert!(all[0].is_identity());
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        for (i, g) in all.iter().enumerate() {
            assert_eq!(GroupSpec::p4m(4).index_of(g), i);
        }
    }

    #[test]
    fn coset_examples() {
        let z = GroupSpec::z1(8);
        let k = Subgroup::strided(z, 2).unwrap();
        assert_eq!(k.coset_of(&z.translation(5, 0)).unwrap().representative(), z.translation(1, 0));
        assert_eq!(k.coset_of(&z.identity()).unwrap(), CosetId::identity(k));

        let g = GroupSpec::p4(4);
        let k = Subgroup::strided(g, 2).unwrap();
        let x = g.element(3, 2, 2, false).unwrap();
        let rep = k.coset_of(&x).unwrap().representative();
        // brute force: minimal element of xK
        let brute = k.elements().iter().map(|kk| x * *kk).min().unwrap();
        assert_eq!(rep, brute);
        assert_eq!(rep, g.translation(1, 0));
    }

    #[test]
    fn quotient_sizes() {
        let z = GroupSpec::z1(8);
        let full = Subgroup::full(z);
        assert_eq!(full.quotient(&Subgroup::strided(z, 2).unwrap()).unwrap().len(), 2);
        assert_eq!(full.quotient(&full).unwrap().len(), 1);
        let g = GroupSpec::p4(4);
        let k = Subgroup::strided(g, 2).unwrap();
        assert_eq!(Subgroup::full(g).quotient(&k).unwrap().len(), 4);
        let bad = Subgroup::strided(GroupSpec::p4(8), 2).unwrap();
        assert!(Subgroup::full(g).quotient(&bad).is_err());
    }

    #[test]
    fn subgroup_validation() {
        assert!(Subgroup::strided(GroupSpec::p1(7), 2).is_err());
        assert!(Subgroup::new(GroupSpec::p4(8), 2, 4, 4, false).is_err());
        assert!(Subgroup::new(GroupSpec::p1(8), 2, 4, 1, false).is_ok());
        assert!(Subgroup::new(GroupSpec::p4(8), 2, 2, 4, true).is_err());
        assert!(Subgroup::new(GroupSpec::p4m(8), 2, 2, 3, false).is_err());
    }
}
