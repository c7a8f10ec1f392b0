//! Feature maps `f: K → R^d` on a group or subgroup, stored densely in the
//! canonical enumeration order of the domain.

use crate::error::MapError;
use crate::group::{GroupElement, GroupSpec, Subgroup};
use crate::real::Real;

/// A multi-channel real function on a [`Subgroup`] (the whole group included).
///
/// `values[i * channels + c]` holds channel `c` at the `i`-th element of the
/// domain's canonical enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap<T = f64> {
    domain: Subgroup,
    channels: usize,
    values: Vec<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn new(domain: Subgroup, channels: usize, values: Vec<T>) -> Result<Self, MapError> {
        if channels == 0 {
            return Err(MapError::ZeroChannels);
        }
        let expected = domain.order() * channels;
        if values.len() != expected {
            return Err(MapError::Length {
                expected,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MapError::NonFinite(pos));
        }
        Ok(Self {
            domain,
            channels,
            values,
        })
    }

    pub fn zeros(domain: Subgroup, channels: usize) -> Self {
        assert!(channels > 0, "channel count must be positive");
        Self {
            domain,
            channels,
            values: vec![T::zero(); domain.order() * channels],
        }
    }

    /// Builds a map by evaluating `f(g, channel)` on every domain element.
    pub fn from_fn(domain: Subgroup, channels: usize, mut f: impl FnMut(&GroupElement, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(domain.order() * channels);
        for i in 0..domain.order() {
            let g = domain.element_at(i);
            for c in 0..channels {
                values.push(f(&g, c));
            }
        }
        Self {
            domain,
            channels,
            values,
        }
    }

    /// Wraps values without validation; callers guarantee length and finiteness.
    pub(crate) fn from_raw(domain: Subgroup, channels: usize, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), domain.order() * channels);
        Self {
            domain,
            channels,
            values,
        }
    }

    pub fn domain(&self) -> Subgroup {
        self.domain
    }

    pub fn group(&self) -> GroupSpec {
        self.domain.parent()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.domain.order()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Channel vector at the `index`-th domain element.
    pub fn at(&self, index: usize) -> &[T] {
        &self.values[index * self.channels..(index + 1) * self.channels]
    }

    pub fn at_mut(&mut self, index: usize) -> &mut [T] {
        &mut self.values[index * self.channels..(index + 1) * self.channels]
    }

    pub fn get(&self, g: &GroupElement) -> Option<&[T]> {
        self.domain.try_index_of(g).map(|i| self.at(i))
    }

    pub fn map_values<U: Real>(&self, f: impl Fn(T) -> U) -> FeatureMap<U> {
        FeatureMap {
            domain: self.domain,
            channels: self.channels,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> FeatureMap<U> {
        self.map_values(|v| U::of(v.as_f64()))
    }

    pub fn max_abs_diff(&self, other: &FeatureMap<T>) -> f64 {
        assert_eq!(self.domain, other.domain);
        assert_eq!(self.channels, other.channels);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs().as_f64())
            .fold(0.0, f64::max)
    }

    fn check_member(&self, u: &GroupElement) -> Result<(), MapError> {
        if self.domain.contains(u) {
            Ok(())
        } else {
            Err(MapError::ElementOutsideDomain(u.to_string()))
        }
    }
}

/// The gather permutation `i(g) ↦ i(u⁻¹ g)` of the regular representation on a domain.
///
/// Precompute once and reuse when the same `u` acts on many maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    domain: Subgroup,
    source: Vec<usize>,
}

impl Permutation {
    pub fn left(u: &GroupElement, domain: Subgroup) -> Result<Self, MapError> {
        if !domain.contains(u) {
            return Err(MapError::ElementOutsideDomain(u.to_string()));
        }
        let u_inv = u.inverse();
        let source = (0..domain.order())
            .map(|i| domain.index_of(&(u_inv * domain.element_at(i))))
            .collect();
        Ok(Self { domain, source })
    }

    pub fn apply<T: Real>(&self, f: &FeatureMap<T>) -> Result<FeatureMap<T>, MapError> {
        if f.domain != self.domain {
            return Err(MapError::Domain(format!("{} vs {}", f.domain, self.domain)));
        }
        let c = f.channels;
        let mut values = Vec::with_capacity(f.values.len());
        for &src in &self.source {
            values.extend_from_slice(&f.values[src * c..(src + 1) * c]);
        }
        Ok(FeatureMap::from_raw(f.domain, c, values))
    }
}

/// Regular representation: `[π(u) f](g) = f(u⁻¹ g)`.
pub fn act<T: Real>(u: &GroupElement, f: &FeatureMap<T>) -> Result<FeatureMap<T>, MapError> {
    f.check_member(u)?;
    Permutation::left(u, f.domain)?.apply(f)
}

/// `f↓(k) = f(k)` for `k ∈ K`.
pub fn restrict<T: Real>(f: &FeatureMap<T>, k: Subgroup) -> Result<FeatureMap<T>, MapError> {
    if !k.is_subgroup_of(&f.domain) {
        return Err(MapError::Domain(format!("{k} is not a subgroup of {}", f.domain)));
    }
    let c = f.channels;
    let mut values = Vec::with_capacity(k.order() * c);
    for i in 0..k.order() {
        let src = f.domain.index_of(&k.element_at(i));
        values.extend_from_slice(f.at(src));
    }
    Ok(FeatureMap::from_raw(k, c, values))
}

/// Zero-extension of a map on `K` to the larger domain `g`.
pub fn extend<T: Real>(f: &FeatureMap<T>, g: Subgroup) -> Result<FeatureMap<T>, MapError> {
    if !f.domain.is_subgroup_of(&g) {
        return Err(MapError::Domain(format!("{} is not a subgroup of {g}", f.domain)));
    }
    let mut out = FeatureMap::zeros(g, f.channels);
    for i in 0..f.domain.order() {
        let dst = g.index_of(&f.domain.element_at(i));
        out.at_mut(dst).copy_from_slice(f.at(i));
    }
    Ok(out)
}

/// Channel-wise L¹ norm at every element, as a one-channel map.
pub fn l1_field<T: Real>(f: &FeatureMap<T>) -> FeatureMap<T> {
    let values = f
        .values
        .chunks(f.channels)
        .map(|v| v.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .collect();
    FeatureMap::from_raw(f.domain, 1, values)
}

/// Lifts an image on the grid (a map on the translation subgroup) to `g`:
/// `lift(I)(g) = I(g · origin)`.
pub fn lift<T: Real>(image: &FeatureMap<T>, g: Subgroup) -> Result<FeatureMap<T>, MapError> {
    let grid = Subgroup::translations(g.parent());
    if image.domain != grid {
        return Err(MapError::Domain(format!(
            "image must live on the translation lattice {grid}, got {}",
            image.domain
        )));
    }
    let c = image.channels;
    let mut values = Vec::with_capacity(g.order() * c);
    for i in 0..g.order() {
        let el = g.element_at(i);
        let (x, y) = el.act_on_grid((0, 0));
        let src = g.parent().grid_index(x, y);
        values.extend_from_slice(image.at(src));
    }
    Ok(FeatureMap::from_raw(g, c, values))
}

/// Averages a map over each stabilizer fiber, giving a map on the
/// translation part of its domain. Left inverse of [`lift`].
pub fn project_to_grid<T: Real>(f: &FeatureMap<T>) -> FeatureMap<T> {
    let t = f.domain.translation_part();
    let points = t.order();
    let fiber = f.domain.point_order();
    let c = f.channels;
    let scale = T::of(1.0 / fiber as f64);
    let mut values = vec![T::zero(); points * c];
    for p in 0..fiber {
        for i in 0..points {
            let src = &f.values[(p * points + i) * c..(p * points + i + 1) * c];
            for (d, s) in values[i * c..(i + 1) * c].iter_mut().zip(src) {
                *d = *d + *s;
            }
        }
    }
    for v in &mut values {
        *v = *v * scale;
    }
    FeatureMap::from_raw(t, c, values)
}

/// Action of the full group on grid images: `(u · I)(x) = I(u⁻¹ x)`.
pub fn act_on_image<T: Real>(u: &GroupElement, image: &FeatureMap<T>) -> Result<FeatureMap<T>, MapError> {
    let spec = image.group();
    if image.domain != Subgroup::translations(spec) {
        return Err(MapError::Domain("images live on the translation lattice".into()));
    }
    if u.group() != spec {
        return Err(MapError::ElementOutsideDomain(u.to_string()));
    }
    let u_inv = u.inverse();
    let c = image.channels;
    let mut values = Vec::with_capacity(image.values.len());
    for (x, y) in spec.grid() {
        let (sx, sy) = u_inv.act_on_grid((x, y));
        values.extend_from_slice(image.at(spec.grid_index(sx, sy)));
    }
    Ok(FeatureMap::from_raw(image.domain, c, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u32) -> GroupSpec {
        GroupSpec::z1(n)
    }

    fn line(values: &[f64]) -> FeatureMap {
        FeatureMap::new(Subgroup::full(z(values.len() as u32)), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn act_shifts_right() {
        let f = line(&[1., 2., 3., 4.]);
        let u = z(4).translation(1, 0);
        assert_eq!(act(&u, &f).unwrap().values(), &[4., 1., 2., 3.]);
        assert_eq!(act(&z(4).identity(), &f).unwrap(), f);
    }

    #[test]
    fn act_rejects_foreign_element() {
        let f = line(&[1., 2., 3., 4.]);
        assert!(act(&z(8).translation(1, 0), &f).is_err());
        let k = Subgroup::strided(z(4), 2).unwrap();
        let fk = restrict(&f, k).unwrap();
        assert!(act(&z(4).translation(1, 0), &fk).is_err());
    }

    #[test]
    fn restrict_and_extend() {
        let f = line(&[1., 2., 3., 4.]);
        let k = Subgroup::strided(z(4), 2).unwrap();
        let r = restrict(&f, k).unwrap();
        assert_eq!(r.values(), &[1., 3.]);
        assert_eq!(restrict(&f, f.domain()).unwrap(), f);
        let e = extend(&FeatureMap::new(k, 1, vec![9., 8.]).unwrap(), f.domain()).unwrap();
        assert_eq!(e.values(), &[9., 0., 8., 0.]);
        assert_eq!(restrict(&extend(&r, f.domain()).unwrap(), k).unwrap(), r);
        let zero = FeatureMap::<f64>::zeros(k, 3);
        let ez = extend(&zero, f.domain()).unwrap();
        assert_eq!(ez.channels(), 3);
        assert!(ez.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn l1_field_examples() {
        let d = Subgroup::full(z(2));
        let f = FeatureMap::new(d, 2, vec![3., -4., 0., 0.]).unwrap();
        assert_eq!(l1_field(&f).values(), &[7., 0.]);
        let g = line(&[1., 0., 2.]);
        assert_eq!(l1_field(&g), g);
    }

    #[test]
    fn lift_is_constant_on_fibers() {
        let spec = GroupSpec::p4(4);
        let img = FeatureMap::from_fn(Subgroup::translations(spec), 1, |g, _| (g.tx() * 10 + g.ty()) as f64);
        let lifted = lift(&img, Subgroup::full(spec)).unwrap();
        for (i, g) in spec.enumerate().iter().enumerate() {
            assert_eq!(lifted.at(i)[0], (g.tx() * 10 + g.ty()) as f64);
        }
        assert_eq!(project_to_grid(&lifted), img);
        let p1 = GroupSpec::p1(4);
        let img1 = FeatureMap::from_fn(Subgroup::translations(p1), 2, |g, c| (g.tx() + 4 * g.ty()) as f64 + c as f64);
        assert_eq!(lift(&img1, Subgroup::full(p1)).unwrap(), img1);
    }

    #[test]
    fn lift_constant_image() {
        let spec = GroupSpec::p4m(4);
        let img = FeatureMap::from_fn(Subgroup::translations(spec), 1, |_, _| 2.5);
        let lifted = lift(&img, Subgroup::full(spec)).unwrap();
        assert!(lifted.values().iter().all(|v| *v == 2.5));
    }

    #[test]
    fn lift_intertwines_image_action() {
        let spec = GroupSpec::p4m(4);
        let full = Subgroup::full(spec);
        let img = FeatureMap::from_fn(Subgroup::translations(spec), 1, |g, _| (g.tx() * 7 + g.ty() * 3) as f64);
        for u in spec.enumerate() {
            let a = lift(&act_on_image(&u, &img).unwrap(), full).unwrap();
            let b = act(&u, &lift(&img, full).unwrap()).unwrap();
            assert_eq!(a, b, "u = {u}");
        }
    }

    #[test]
    fn new_rejects_bad_input() {
        let d = Subgroup::full(z(2));
        assert!(matches!(FeatureMap::new(d, 1, vec![1.0]), Err(MapError::Length { .. })));
        assert!(matches!(FeatureMap::new(d, 1, vec![1.0, f64::NAN]), Err(MapError::NonFinite(1))));
        assert!(matches!(FeatureMap::<f64>::new(d, 0, vec![]), Err(MapError::ZeroChannels)));
    }
}
