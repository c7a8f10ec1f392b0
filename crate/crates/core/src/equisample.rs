//! Equivariant subsampling and upsampling between a group and a subgroup.
//!
//! Subsampling picks a coset `pK = Φ(f)` from the input itself and returns
//! the pair `[f_b, pK]` with `f_b(k) = f(p̄ k)`. Upsampling places `f_b`
//! back on the coset `p̄K` and fills the rest with zeros. Both commute with
//! the regular representation on `I_G` and the induced action
//! [`act_sampled`] on pairs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SampleError;
use crate::feature_map::{act, l1_field, restrict, FeatureMap};
use crate::group::{CosetId, GroupElement, Subgroup};
use crate::real::{order_invariant_sum, Real};

/// How Φ resolves several elements attaining the maximal norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TiePolicy {
    /// Smallest element in canonical order.
    Lexicographic,
    /// Uniform draw from the argmax set.
    UniformRandom { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Blur {
    pub kernel: usize,
    pub sigma: f64,
}

/// Smoothing pipeline and tie handling of Φ.
///
/// Before the norm: optional per-channel mean subtraction, then a stride-1
/// average pool over the translation lattice of the domain. After the norm:
/// an optional Gaussian blur on the scalar field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiConfig {
    pub tie_policy: TiePolicy,
    pub mean_subtract: bool,
    pub pool_kernel: usize,
    pub blur: Option<Blur>,
}

impl PhiConfig {
    /// Raw argmax of the L¹ norm, no smoothing.
    pub fn plain() -> Self {
        Self {
            tie_policy: TiePolicy::Lexicographic,
            mean_subtract: false,
            pool_kernel: 1,
            blur: None,
        }
    }

    /// Mean subtraction and a 3-wide average pool.
    pub fn desk() -> Self {
        Self {
            mean_subtract: true,
            pool_kernel: 3,
            ..Self::plain()
        }
    }

    /// Mean subtraction, 5-wide pool and a 15-wide Gaussian blur.
    pub fn production() -> Self {
        Self {
            mean_subtract: true,
            pool_kernel: 5,
            blur: Some(Blur { kernel: 15, sigma: 2.5 }),
            ..Self::plain()
        }
    }

    pub fn with_tie_policy(mut self, tie_policy: TiePolicy) -> Self {
        self.tie_policy = tie_policy;
        self
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.pool_kernel == 0 || self.pool_kernel % 2 == 0 {
            return Err(SampleError::Config(format!(
                "pool kernel must be odd and positive, got {}",
                self.pool_kernel
            )));
        }
        if let Some(b) = self.blur {
            if b.kernel == 0 || b.kernel % 2 == 0 {
                return Err(SampleError::Config(format!(
                    "blur kernel must be odd and positive, got {}",
                    b.kernel
                )));
            }
            if !(b.sigma > 0.0 && b.sigma.is_finite()) {
                return Err(SampleError::Config(format!("blur sigma must be positive, got {}", b.sigma)));
            }
        }
        Ok(())
    }
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Offsets of a square (or, in 1D, linear) window on the translation lattice.
fn window_offsets(domain: &Subgroup, kernel: usize) -> Vec<(i64, i64)> {
    let r = (kernel / 2) as i64;
    let ys: Vec<i64> = if domain.parent().kind().is_1d() { vec![0] } else { (-r..=r).collect() };
    let mut out = Vec::new();
    for &dy in &ys {
        for dx in -r..=r {
            out.push((dx, dy));
        }
    }
    out
}

/// Index of the element `(δ s) ∘ g`, i.e. `g` moved by a lattice offset.
#[inline]
fn lattice_neighbor(domain: &Subgroup, index: usize, dx: i64, dy: i64) -> usize {
    let lx = domain.lattice_x();
    let ly = domain.lattice_y();
    let xi = index % lx;
    let rest = index / lx;
    let yi = rest % ly;
    let base = rest / ly;
    let nx = (xi as i64 + dx).rem_euclid(lx as i64) as usize;
    let ny = (yi as i64 + dy).rem_euclid(ly as i64) as usize;
    (base * ly + ny) * lx + nx
}

/// For every element, the domain indices of its window neighbours.
pub fn lattice_window(domain: &Subgroup, kernel: usize) -> Vec<Vec<usize>> {
    let offsets = window_offsets(domain, kernel);
    (0..domain.order())
        .map(|i| offsets.iter().map(|&(dx, dy)| lattice_neighbor(domain, i, dx, dy)).collect())
        .collect()
}

/// Weighted window filter over the translation lattice with periodic wrap.
///
/// With `order_invariant`, window terms are summed in sorted order so that
/// permuting the input permutes the output bit-for-bit.
fn lattice_filter<T: Real>(f: &FeatureMap<T>, kernel: usize, weights: &[T], order_invariant: bool) -> FeatureMap<T> {
    let domain = f.domain();
    let offsets = window_offsets(&domain, kernel);
    debug_assert_eq!(offsets.len(), weights.len());
    let c = f.channels();
    let mut out = Vec::with_capacity(f.values().len());
    let mut terms = Vec::with_capacity(offsets.len());
    let mut neighbors: Vec<usize> = Vec::with_capacity(offsets.len());
    for i in 0..domain.order() {
        neighbors.clear();
        neighbors.extend(offsets.iter().map(|&(dx, dy)| lattice_neighbor(&domain, i, dx, dy)));
        for ch in 0..c {
            terms.clear();
            terms.extend(neighbors.iter().zip(weights).map(|(&j, &w)| w * f.at(j)[ch]));
            let s = if order_invariant {
                order_invariant_sum(&mut terms)
            } else {
                terms.iter().fold(T::zero(), |a, &b| a + b)
            };
            out.push(s);
        }
    }
    FeatureMap::from_raw(domain, c, out)
}

/// Stride-1 average pool over the translation lattice (periodic).
pub fn lattice_avg_pool<T: Real>(f: &FeatureMap<T>, kernel: usize, order_invariant: bool) -> FeatureMap<T> {
    if kernel <= 1 {
        return f.clone();
    }
    let taps = window_offsets(&f.domain(), kernel).len();
    let w = vec![T::of(1.0 / taps as f64); taps];
    lattice_filter(f, kernel, &w, order_invariant)
}

fn gaussian_blur<T: Real>(f: &FeatureMap<T>, blur: Blur) -> FeatureMap<T> {
    let offsets = window_offsets(&f.domain(), blur.kernel);
    let raw: Vec<f64> = offsets
        .iter()
        .map(|&(dx, dy)| (-((dx * dx + dy * dy) as f64) / (2.0 * blur.sigma * blur.sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<T> = raw.iter().map(|v| T::of(v / total)).collect();
    lattice_filter(f, blur.kernel, &w, true)
}

fn subtract_channel_means<T: Real>(f: &FeatureMap<T>) -> FeatureMap<T> {
    let c = f.channels();
    let n = f.len();
    let mut out = f.clone();
    let mut column = Vec::with_capacity(n);
    for ch in 0..c {
        column.clear();
        column.extend((0..n).map(|i| f.at(i)[ch]));
        let mean = order_invariant_sum(&mut column) / T::of(n as f64);
        for i in 0..n {
            let v = &mut out.at_mut(i)[ch];
            *v = *v - mean;
        }
    }
    out
}

/// The smoothed scalar field whose argmax Φ selects.
pub fn norm_field<T: Real>(f: &FeatureMap<T>, cfg: &PhiConfig) -> FeatureMap<T> {
    let mut g = if cfg.mean_subtract { subtract_channel_means(f) } else { f.clone() };
    if cfg.pool_kernel > 1 {
        g = lattice_avg_pool(&g, cfg.pool_kernel, true);
    }
    let mut n = l1_field(&g);
    if let Some(b) = cfg.blur {
        n = gaussian_blur(&n, b);
    }
    n
}

/// Result of Φ: the chosen coset and the element it was taken from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiOutcome {
    pub coset: CosetId,
    pub argmax: GroupElement,
    /// Set when the smoothed norm field is identically zero (the coset is then `K`
    /// itself) or when its maxima fall in more than one coset of `K`.
    pub degenerate: bool,
}

/// Indices attaining the maximum (exact comparison) and the maximum itself.
fn argmax_set<T: Real>(field: &FeatureMap<T>) -> (Vec<usize>, T) {
    let mut best = T::neg_infinity();
    let mut set = Vec::new();
    for (i, &v) in field.values().iter().enumerate() {
        if v > best {
            best = v;
            set.clear();
            set.push(i);
        } else if v == best {
            set.push(i);
        }
    }
    (set, best)
}

fn check_subgroup(domain: &Subgroup, k: &Subgroup) -> Result<(), SampleError> {
    if k.is_subgroup_of(domain) {
        Ok(())
    } else {
        Err(crate::error::GroupError::InvalidSubgroup(format!("{k} is not a subgroup of {domain}")).into())
    }
}

fn phi_impl<T: Real>(
    f: &FeatureMap<T>,
    k: Subgroup,
    cfg: &PhiConfig,
    pick: impl FnOnce(&[usize]) -> usize,
) -> Result<PhiOutcome, SampleError> {
    check_subgroup(&f.domain(), &k)?;
    cfg.validate()?;
    let field = norm_field(f, cfg);
    let (set, best) = argmax_set(&field);
    let domain = f.domain();
    if best == T::zero() {
        let argmax = domain.parent().identity();
        return Ok(PhiOutcome {
            coset: k.coset_of(&argmax)?,
            argmax,
            degenerate: true,
        });
    }
    let argmax = domain.element_at(pick(&set));
    let coset = k.coset_of(&argmax)?;
    let mut tied = false;
    for &i in &set {
        if k.coset_of(&domain.element_at(i))? != coset {
            tied = true;
            break;
        }
    }
    Ok(PhiOutcome {
        coset,
        argmax,
        degenerate: tied,
    })
}

/// Φ with an explicit random source for the uniform tie policy.
pub fn phi_with_rng<T: Real, R: Rng + ?Sized>(
    f: &FeatureMap<T>,
    k: Subgroup,
    cfg: &PhiConfig,
    rng: &mut R,
) -> Result<PhiOutcome, SampleError> {
    match cfg.tie_policy {
        TiePolicy::Lexicographic => phi_impl(f, k, cfg, |s| s[0]),
        TiePolicy::UniformRandom { .. } => phi_impl(f, k, cfg, |s| *s.choose(rng).expect("non-empty argmax set")),
    }
}

/// Φ: `pK = (argmax_g ‖f̃(g)‖₁) K` with `f̃` the smoothed input.
///
/// The uniform tie policy draws from a generator seeded by the config.
pub fn phi<T: Real>(f: &FeatureMap<T>, k: Subgroup, cfg: &PhiConfig) -> Result<PhiOutcome, SampleError> {
    let seed = match cfg.tie_policy {
        TiePolicy::UniformRandom { seed } => seed,
        TiePolicy::Lexicographic => 0,
    };
    phi_with_rng(f, k, cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// The pair `[f_b, pK] ∈ I_K × G/K` produced by subsampling.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPair<T = f64> {
    parent: Subgroup,
    fb: FeatureMap<T>,
    coset: CosetId,
}

impl<T: Real> SampledPair<T> {
    pub fn new(parent: Subgroup, fb: FeatureMap<T>, coset: CosetId) -> Result<Self, SampleError> {
        let k = coset.subgroup();
        if fb.domain() != k {
            return Err(crate::error::MapError::Domain(format!(
                "sampled map lives on {}, coset subgroup is {k}",
                fb.domain()
            ))
            .into());
        }
        check_subgroup(&parent, &k)?;
        if !parent.contains(&coset.representative()) {
            return Err(crate::error::MapError::ElementOutsideDomain(coset.representative().to_string()).into());
        }
        Ok(Self { parent, fb, coset })
    }

    /// The domain the pair was sampled from.
    pub fn parent(&self) -> Subgroup {
        self.parent
    }

    pub fn map(&self) -> &FeatureMap<T> {
        &self.fb
    }

    pub fn coset(&self) -> CosetId {
        self.coset
    }

    pub fn into_parts(self) -> (FeatureMap<T>, CosetId) {
        (self.fb, self.coset)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subsampled<T = f64> {
    pub pair: SampledPair<T>,
    pub degenerate: bool,
}

/// Domain indices of `p̄ k` for every `k ∈ K`, in `K`'s canonical order.
///
/// Subsampling gathers through this table and upsampling scatters through it.
pub fn coset_indices(domain: &Subgroup, coset: &CosetId) -> Vec<usize> {
    let k = coset.subgroup();
    let rep = coset.representative();
    (0..k.order()).map(|i| domain.index_of(&(rep * k.element_at(i)))).collect()
}

/// Subsamples onto a given coset: `f_b(k) = f(p̄ k)`.
pub fn subsample_at<T: Real>(f: &FeatureMap<T>, coset: CosetId) -> Result<SampledPair<T>, SampleError> {
    let domain = f.domain();
    check_subgroup(&domain, &coset.subgroup())?;
    if !domain.contains(&coset.representative()) {
        return Err(crate::error::MapError::ElementOutsideDomain(coset.representative().to_string()).into());
    }
    let c = f.channels();
    let idx = coset_indices(&domain, &coset);
    let mut values = Vec::with_capacity(idx.len() * c);
    for &j in &idx {
        values.extend_from_slice(f.at(j));
    }
    let fb = FeatureMap::new(coset.subgroup(), c, values).map_err(SampleError::from)?;
    Ok(SampledPair {
        parent: domain,
        fb,
        coset,
    })
}

/// Equivariant subsampling `S_b↓`.
pub fn subsample<T: Real>(f: &FeatureMap<T>, k: Subgroup, cfg: &PhiConfig) -> Result<Subsampled<T>, SampleError> {
    let outcome = phi(f, k, cfg)?;
    Ok(Subsampled {
        pair: subsample_at(f, outcome.coset)?,
        degenerate: outcome.degenerate,
    })
}

/// Equivariant upsampling `S_u↑`: `f_u(g) = f_b(p̄⁻¹ g)` on `p̄K`, zero elsewhere.
pub fn upsample<T: Real>(pair: &SampledPair<T>, g: Subgroup) -> Result<FeatureMap<T>, SampleError> {
    let k = pair.coset.subgroup();
    check_subgroup(&g, &k)?;
    if !g.contains(&pair.coset.representative()) {
        return Err(crate::error::MapError::ElementOutsideDomain(pair.coset.representative().to_string()).into());
    }
    let c = pair.fb.channels();
    let mut out = FeatureMap::zeros(g, c);
    for (i, j) in coset_indices(&g, &pair.coset).into_iter().enumerate() {
        out.at_mut(j).copy_from_slice(pair.fb.at(i));
    }
    Ok(out)
}

/// Induced action on pairs: `p′K = u p K`, `f_b′ = π(p̄′⁻¹ u p̄) f_b`.
pub fn act_sampled<T: Real>(u: &GroupElement, pair: &SampledPair<T>) -> Result<SampledPair<T>, SampleError> {
    if !pair.parent.contains(u) {
        return Err(crate::error::MapError::ElementOutsideDomain(u.to_string()).into());
    }
    let rep = pair.coset.representative();
    let coset = pair.coset.subgroup().coset_of(&(*u * rep))?;
    let k_elem = coset.representative().inverse() * *u * rep;
    Ok(SampledPair {
        parent: pair.parent,
        fb: act(&k_elem, &pair.fb)?,
        coset,
    })
}

/// Baseline: plain restriction to `K` with no sampling index.
pub fn standard_subsample<T: Real>(f: &FeatureMap<T>, k: Subgroup) -> Result<FeatureMap<T>, SampleError> {
    Ok(restrict(f, k)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pool {
    Max,
    Mean,
}

/// A feature map on the quotient `G/K`, indexed by coset representative.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetMap<T = f64> {
    parent: Subgroup,
    cosets: Vec<CosetId>,
    channels: usize,
    values: Vec<T>,
}

impl<T: Real> CosetMap<T> {
    pub fn cosets(&self) -> &[CosetId] {
        &self.cosets
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn value(&self, coset: &CosetId) -> Option<&[T]> {
        let i = self.cosets.iter().position(|c| c == coset)?;
        Some(&self.values[i * self.channels..(i + 1) * self.channels])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Natural action on `G/K`: `(u·F)(cK) = F(u⁻¹ c K)`.
    pub fn act(&self, u: &GroupElement) -> Result<CosetMap<T>, SampleError> {
        if !self.parent.contains(u) {
            return Err(crate::error::MapError::ElementOutsideDomain(u.to_string()).into());
        }
        let u_inv = u.inverse();
        let mut values = Vec::with_capacity(self.values.len());
        for c in &self.cosets {
            let src = c.act(&u_inv)?;
            values.extend_from_slice(self.value(&src).expect("quotient is closed under the action"));
        }
        Ok(CosetMap {
            parent: self.parent,
            cosets: self.cosets.clone(),
            channels: self.channels,
            values,
        })
    }
}

/// Coset pooling: `out(gK) = pool_{k ∈ K} f(g k)`.
pub fn coset_pool<T: Real>(f: &FeatureMap<T>, k: Subgroup, pool: Pool) -> Result<CosetMap<T>, SampleError> {
    let domain = f.domain();
    let cosets = domain.quotient(&k)?;
    let c = f.channels();
    let mut values = Vec::with_capacity(cosets.len() * c);
    for coset in &cosets {
        let idx = coset_indices(&domain, coset);
        for ch in 0..c {
            let mut column: Vec<T> = idx.iter().map(|&j| f.at(j)[ch]).collect();
            let v = match pool {
                Pool::Max => column.iter().fold(T::neg_infinity(), |a, &b| a.max(b)),
                Pool::Mean => order_invariant_sum(&mut column) / T::of(column.len() as f64),
            };
            values.push(v);
        }
    }
    Ok(CosetMap {
        parent: domain,
        cosets,
        channels: c,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    fn line(values: &[f64]) -> FeatureMap {
        FeatureMap::new(Subgroup::full(GroupSpec::z1(values.len() as u32)), 1, values.to_vec()).unwrap()
    }

    fn half(n: u32) -> Subgroup {
        Subgroup::strided(GroupSpec::z1(n), 2).unwrap()
    }

    #[test]
    fn phi_delta() {
        let f = line(&[0., 0., 0., 0., 0., 7., 0., 0.]);
        let out = phi(&f, half(8), &PhiConfig::plain()).unwrap();
        assert_eq!(out.coset.representative().tx(), 1);
        assert!(!out.degenerate);
    }

    #[test]
    fn phi_zero_map_is_degenerate() {
        let f = line(&[0.; 8]);
        let out = phi(&f, half(8), &PhiConfig::plain()).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.coset, CosetId::identity(half(8)));
        // constant maps vanish after mean subtraction
        let c = line(&[3.; 8]);
        assert!(phi(&c, half(8), &PhiConfig::desk()).unwrap().degenerate);
    }

    #[test]
    fn phi_flags_ties_across_cosets_only() {
        let across = line(&[0., 5., 0., 0., 0., 0., 5., 0.]);
        assert!(phi(&across, half(8), &PhiConfig::plain()).unwrap().degenerate);
        let within = line(&[0., 5., 0., 5., 0., 0., 0., 0.]);
        let out = phi(&within, half(8), &PhiConfig::plain()).unwrap();
        assert!(!out.degenerate);
        assert_eq!(out.coset.representative().tx(), 1);
    }

    #[test]
    fn phi_ties_resolve_to_smallest() {
        let f = line(&[0., 5., 0., 5.]);
        let out = phi(&f, half(4), &PhiConfig::plain()).unwrap();
        assert_eq!(out.argmax.tx(), 1);
    }

    #[test]
    fn subsample_example() {
        let f = line(&[1., 9., 2., 8.]);
        let s = subsample(&f, half(4), &PhiConfig::plain()).unwrap();
        assert_eq!(s.pair.map().values(), &[9., 8.]);
        assert_eq!(s.pair.coset().representative().tx(), 1);

        let shifted = line(&[8., 1., 9., 2.]);
        let s2 = subsample(&shifted, half(4), &PhiConfig::plain()).unwrap();
        assert_eq!(s2.pair.map().values(), &[8., 9.]);
        assert_eq!(s2.pair.coset().representative().tx(), 0);
        let u = GroupSpec::z1(4).translation(1, 0);
        assert_eq!(act_sampled(&u, &s.pair).unwrap(), s2.pair);
    }

    #[test]
    fn subsample_on_identity_coset_restricts() {
        let f = line(&[9., 0., 3., 0.]);
        let s = subsample(&f, half(4), &PhiConfig::plain()).unwrap();
        assert_eq!(s.pair.coset(), CosetId::identity(half(4)));
        assert_eq!(s.pair.map(), &restrict(&f, half(4)).unwrap());
    }

    #[test]
    fn upsample_example() {
        let k = half(4);
        let z = GroupSpec::z1(4);
        let coset = k.coset_of(&z.translation(1, 0)).unwrap();
        let pair = SampledPair::new(Subgroup::full(z), FeatureMap::new(k, 1, vec![9., 8.]).unwrap(), coset).unwrap();
        assert_eq!(upsample(&pair, Subgroup::full(z)).unwrap().values(), &[0., 9., 0., 8.]);

        let id_pair =
            SampledPair::new(Subgroup::full(z), FeatureMap::new(k, 1, vec![9., 8.]).unwrap(), CosetId::identity(k)).unwrap();
        assert_eq!(upsample(&id_pair, Subgroup::full(z)).unwrap().values(), &[9., 0., 8., 0.]);
        let zero = SampledPair::new(Subgroup::full(z), FeatureMap::<f64>::zeros(k, 2), coset).unwrap();
        assert!(upsample(&zero, Subgroup::full(z)).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn act_sampled_example() {
        let z = GroupSpec::z1(4);
        let k = half(4);
        let pair = SampledPair::new(
            Subgroup::full(z),
            FeatureMap::new(k, 1, vec![9., 8.]).unwrap(),
            k.coset_of(&z.translation(1, 0)).unwrap(),
        )
        .unwrap();
        let moved = act_sampled(&z.translation(1, 0), &pair).unwrap();
        assert_eq!(moved.coset(), CosetId::identity(k));
        assert_eq!(moved.map().values(), &[8., 9.]);
        assert_eq!(act_sampled(&z.identity(), &pair).unwrap(), pair);
        assert!(act_sampled(&GroupSpec::z1(8).translation(1, 0), &pair).is_err());
    }

    #[test]
    fn coset_pool_examples() {
        let f = line(&[1., 9., 2., 8.]);
        let z = GroupSpec::z1(4);
        let k = half(4);
        let pooled = coset_pool(&f, k, Pool::Max).unwrap();
        let c0 = CosetId::identity(k);
        let c1 = k.coset_of(&z.translation(1, 0)).unwrap();
        assert_eq!(pooled.value(&c0).unwrap(), &[2.]);
        assert_eq!(pooled.value(&c1).unwrap(), &[9.]);
        let shifted = coset_pool(&act(&z.translation(1, 0), &f).unwrap(), k, Pool::Max).unwrap();
        assert_eq!(shifted.value(&c0).unwrap(), &[9.]);
        assert_eq!(shifted.value(&c1).unwrap(), &[2.]);
        assert_eq!(shifted, pooled.act(&z.translation(1, 0)).unwrap());
        let constant = coset_pool(&line(&[4.; 4]), k, Pool::Mean).unwrap();
        assert!(constant.values().iter().all(|v| *v == 4.0));
    }

    #[test]
    fn standard_subsample_is_not_equivariant() {
        let f = line(&[1., 9., 2., 8.]);
        let k = half(4);
        assert_eq!(standard_subsample(&f, k).unwrap().values(), &[1., 2.]);
        let shifted = standard_subsample(&act(&GroupSpec::z1(4).translation(1, 0), &f).unwrap(), k).unwrap();
        assert_eq!(shifted.values(), &[8., 9.]);
        let base = standard_subsample(&f, k).unwrap();
        let any_shift = k.elements().iter().any(|v| act(v, &base).unwrap() == shifted);
        assert!(!any_shift);
        assert_eq!(standard_subsample(&f, f.domain()).unwrap(), f);
    }

    #[test]
    fn avg_pool_spreads_delta() {
        let f = line(&[0., 0., 0., 9., 0., 0., 0., 0.]);
        let p = lattice_avg_pool(&f, 3, false);
        assert_eq!(p.values(), &[0., 0., 3., 3., 3., 0., 0., 0.]);
        assert_eq!(lattice_avg_pool(&f, 1, false), f);
    }

    #[test]
    fn config_validation() {
        assert!(PhiConfig { pool_kernel: 2, ..PhiConfig::plain() }.validate().is_err());
        assert!(PhiConfig {
            blur: Some(Blur { kernel: 3, sigma: 0.0 }),
            ..PhiConfig::plain()
        }
        .validate()
        .is_err());
        assert!(PhiConfig::production().validate().is_ok());
    }
}
