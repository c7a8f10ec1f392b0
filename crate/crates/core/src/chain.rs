//! Nested subgroup chains `G₀ ≥ G₁ ≥ … ≥ G_L`, multi-layer subsampling
//! along them, and the bijection ν between per-layer coset tuples and a
//! single coset of `G_L` in `G₀`.
//!
//! # Chain grammar
//!
//! ```text
//! chain := step ("," step)*
//! step  := op ("+" op)*
//! op    := "t" INT      multiply the translation stride by INT
//!        | "r" INT      divide the rotation order by INT
//!        | "m"          drop the mirror
//!        | "e"          jump to the trivial subgroup
//! ```
//!
//! Each step produces the next subgroup from the previous one, so
//! `t2,t2,t2+r2,r2` on p4 with period 8 is
//! `Z₈²⋊C₄ ≥ (2Z₈)²⋊C₄ ≥ (4Z₈)²⋊C₄ ≥ {0}⋊C₂ ≥ {e}`.

use std::fmt;

use crate::equisample::{phi, subsample, PhiConfig};
use crate::error::{ChainError, GroupError};
use crate::feature_map::FeatureMap;
use crate::group::{CosetId, GroupElement, GroupKind, GroupSpec, Subgroup};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupChain {
    groups: Vec<Subgroup>,
    source: String,
}

/// `(p₁G₁, …, p_LG_L)` with `p_lG_l ∈ G_{l−1}/G_l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CosetTuple(pub Vec<CosetId>);

impl CosetTuple {
    pub fn cosets(&self) -> &[CosetId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn apply_op(current: Subgroup, op: &str) -> Result<Subgroup, String> {
    let (head, arg) = op.split_at(1.min(op.len()));
    let factor = || -> Result<u32, String> {
        let v: u32 = arg.parse().map_err(|_| format!("expected a positive integer after `{head}`"))?;
        if v == 0 {
            return Err("factor must be positive".into());
        }
        Ok(v)
    };
    let parent = current.parent();
    let rebuilt = |sx: u32, sy: u32, rot: u8, mirror: bool| Subgroup::new(parent, sx, sy, rot, mirror).map_err(|e| e.to_string());
    match head {
        "t" => {
            let c = factor()?;
            let sy = if parent.kind().is_1d() { 1 } else { current.stride_y() * c };
            rebuilt(current.stride_x() * c, sy, current.rotation_order(), current.has_mirror())
        }
        "r" => {
            let c = factor()?;
            let order = current.rotation_order() as u32;
            if order % c != 0 {
                return Err(format!("rotation order {order} is not divisible by {c}"));
            }
            rebuilt(current.stride_x(), current.stride_y(), (order / c) as u8, current.has_mirror())
        }
        "m" if arg.is_empty() => {
            if !current.has_mirror() {
                return Err("mirror already removed".into());
            }
            rebuilt(current.stride_x(), current.stride_y(), current.rotation_order(), false)
        }
        "e" if arg.is_empty() => Ok(Subgroup::trivial(parent)),
        _ => Err("unknown operation".into()),
    }
}

impl SubgroupChain {
    /// Validates that every group is a subgroup of its predecessor.
    pub fn new(groups: Vec<Subgroup>) -> Result<Self, ChainError> {
        if groups.is_empty() {
            return Err(ChainError::Tuple("a chain needs at least one group".into()));
        }
        for l in 1..groups.len() {
            if !groups[l].is_subgroup_of(&groups[l - 1]) {
                return Err(ChainError::NotNested(l));
            }
        }
        Ok(Self {
            groups,
            source: String::new(),
        })
    }

    /// Parses the chain grammar starting from `top`.
    pub fn parse(top: Subgroup, text: &str) -> Result<Self, ChainError> {
        let mut groups = vec![top];
        let text = text.trim();
        if !text.is_empty() {
            for (index, step) in text.split(',').enumerate() {
                let mut g = *groups.last().expect("non-empty");
                for op in step.split('+') {
                    let op = op.trim();
                    g = apply_op(g, op).map_err(|reason| ChainError::Syntax {
                        index,
                        token: op.to_string(),
                        reason,
                    })?;
                }
                groups.push(g);
            }
        }
        let mut chain = Self::new(groups)?;
        chain.source = text.to_string();
        Ok(chain)
    }

    /// Halves the lattice until it is trivial, folding the point group away
    /// over the last two layers. Requires a power-of-two period.
    pub fn default_text(spec: GroupSpec) -> Result<String, ChainError> {
        let n = spec.size();
        if !n.is_power_of_two() {
            return Err(GroupError::InvalidSubgroup(format!(
                "no default chain for period {n}; pass an explicit chain"
            ))
            .into());
        }
        let k = n.trailing_zeros() as usize;
        let mut steps: Vec<String> = vec!["t2".into(); k];
        let tail = match spec.kind() {
            GroupKind::Z1 | GroupKind::P1 => None,
            GroupKind::P4 => Some(("r2", "r2")),
            GroupKind::P4m => Some(("r2", "r2+m")),
        };
        if let Some((a, b)) = tail {
            match steps.last_mut() {
                Some(last) => *last = format!("{last}+{a}"),
                None => steps.push(a.into()),
            }
            steps.push(b.into());
        }
        Ok(steps.join(","))
    }

    pub fn default_for(spec: GroupSpec) -> Result<Self, ChainError> {
        Self::parse(Subgroup::full(spec), &Self::default_text(spec)?)
    }

    pub fn groups(&self) -> &[Subgroup] {
        &self.groups
    }

    pub fn top(&self) -> Subgroup {
        self.groups[0]
    }

    pub fn bottom(&self) -> Subgroup {
        *self.groups.last().expect("non-empty")
    }

    /// Number of subsampling layers `L`.
    pub fn layers(&self) -> usize {
        self.groups.len() - 1
    }

    pub fn ends_trivial(&self) -> bool {
        self.bottom().is_trivial()
    }

    pub fn text(&self) -> &str {
        &self.source
    }

    pub fn validate_tuple(&self, t: &CosetTuple) -> Result<(), ChainError> {
        if t.len() != self.layers() {
            return Err(ChainError::Tuple(format!("expected {} cosets, got {}", self.layers(), t.len())));
        }
        for (l, c) in t.0.iter().enumerate() {
            if c.subgroup() != self.groups[l + 1] {
                return Err(ChainError::Tuple(format!("layer {} coset uses the wrong subgroup", l + 1)));
            }
            if !self.groups[l].contains(&c.representative()) {
                return Err(ChainError::Tuple(format!("layer {} representative leaves G_{l}", l + 1)));
            }
        }
        Ok(())
    }

    /// ν: `(p₁G₁, …, p_LG_L) ↦ (p̄₁ p̄₂ ⋯ p̄_L) G_L`.
    pub fn nu(&self, t: &CosetTuple) -> Result<CosetId, ChainError> {
        self.validate_tuple(t)?;
        let product = t
            .0
            .iter()
            .fold(self.top().parent().identity(), |acc, c| acc * c.representative());
        Ok(self.bottom().coset_of(&product)?)
    }

    /// ν⁻¹ by the recursive peeling `p′_{l+1} = p̄′_l⁻¹ p′_l`.
    pub fn nu_inv(&self, r: &CosetId) -> Result<CosetTuple, ChainError> {
        if r.subgroup() != self.bottom() || !self.top().contains(&r.representative()) {
            return Err(ChainError::Tuple(format!("{r} is not a coset of G_L in G_0")));
        }
        let mut p = r.representative();
        let mut out = Vec::with_capacity(self.layers());
        for g in &self.groups[1..] {
            let c = g.coset_of(&p)?;
            p = c.representative().inverse() * p;
            out.push(c);
        }
        Ok(CosetTuple(out))
    }

    /// Left action on the single-coset form: `u · r`.
    pub fn act_req(&self, u: &GroupElement, r: &CosetId) -> Result<CosetId, ChainError> {
        if !self.top().contains(u) {
            return Err(GroupError::NotInGroup(u.to_string()).into());
        }
        Ok(r.act(u)?)
    }

    /// Action on tuples induced layer by layer: layer `l` sees the element
    /// `u_l = p̄′_{l−1}⁻¹ u_{l−1} p̄_{l−1}` of `G_{l−1}`.
    pub fn act_tuple(&self, u: &GroupElement, t: &CosetTuple) -> Result<CosetTuple, ChainError> {
        self.validate_tuple(t)?;
        if !self.top().contains(u) {
            return Err(GroupError::NotInGroup(u.to_string()).into());
        }
        let mut acting = *u;
        let mut out = Vec::with_capacity(t.len());
        for c in &t.0 {
            let moved = acting * c.representative();
            let next = c.subgroup().coset_of(&moved)?;
            acting = next.representative().inverse() * moved;
            out.push(next);
        }
        Ok(CosetTuple(out))
    }
}

impl fmt::Display for SubgroupChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.groups.iter().map(|g| g.to_string()).collect();
        f.write_str(&parts.join(" ≥ "))
    }
}

/// Output of [`chain_subsample`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSample<T = f64> {
    pub map: FeatureMap<T>,
    pub tuple: CosetTuple,
    pub degenerate: bool,
}

/// Applies equivariant subsampling once per layer of the chain.
pub fn chain_subsample<T: Real>(
    f: &FeatureMap<T>,
    chain: &SubgroupChain,
    cfg: &PhiConfig,
) -> Result<ChainSample<T>, ChainError> {
    if f.domain() != chain.top() {
        return Err(ChainError::Tuple(format!("input lives on {}, chain starts at {}", f.domain(), chain.top())));
    }
    let mut map = f.clone();
    let mut tuple = Vec::with_capacity(chain.layers());
    let mut degenerate = false;
    for g in &chain.groups()[1..] {
        let s = subsample(&map, *g, cfg)?;
        degenerate |= s.degenerate;
        let (fb, coset) = s.pair.into_parts();
        tuple.push(coset);
        map = fb;
    }
    Ok(ChainSample {
        map,
        tuple: CosetTuple(tuple),
        degenerate,
    })
}

/// All sampling cosets at once: `ν⁻¹((argmax_g ‖f̃(g)‖₁) G_L)`, smoothing at layer 0.
pub fn phi_all<T: Real>(
    f: &FeatureMap<T>,
    chain: &SubgroupChain,
    cfg: &PhiConfig,
) -> Result<(CosetTuple, bool), ChainError> {
    if f.domain() != chain.top() {
        return Err(ChainError::Tuple(format!("input lives on {}, chain starts at {}", f.domain(), chain.top())));
    }
    let out = phi(f, chain.bottom(), cfg)?;
    Ok((chain.nu_inv(&out.coset)?, out.degenerate))
}

/// Mixed-radix value `Σ_l (∏_{k<l} c_k) i_l`.
pub fn mixed_radix(indices: &[u32], radices: &[u32]) -> u32 {
    let mut place = 1;
    let mut total = 0;
    for (&i, &c) in indices.iter().zip(radices) {
        total += place * i;
        place *= c;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z8_chain() -> SubgroupChain {
        SubgroupChain::parse(Subgroup::full(GroupSpec::z1(8)), "t2,t2,t2").unwrap()
    }

    fn reps(t: &CosetTuple) -> Vec<u32> {
        t.0.iter().map(|c| c.representative().tx()).collect()
    }

    #[test]
    fn nu_examples() {
        let chain = z8_chain();
        let z = GroupSpec::z1(8);
        let tuple = CosetTuple(
            chain.groups()[1..]
                .iter()
                .zip([1, 0, 4])
                .map(|(g, t)| g.coset_of(&z.translation(t, 0)).unwrap())
                .collect(),
        );
        assert_eq!(chain.nu(&tuple).unwrap().representative().tx(), 5);
        let back = chain.nu_inv(&chain.bottom().coset_of(&z.translation(5, 0)).unwrap()).unwrap();
        assert_eq!(reps(&back), vec![1, 0, 4]);
        let id = chain.nu_inv(&CosetId::identity(chain.bottom())).unwrap();
        assert_eq!(reps(&id), vec![0, 0, 0]);
        assert!(chain.nu(&id).unwrap().representative().is_identity());
    }

    #[test]
    fn act_req_wraps() {
        let chain = z8_chain();
        let z = GroupSpec::z1(8);
        let r = chain.bottom().coset_of(&z.translation(5, 0)).unwrap();
        assert_eq!(chain.act_req(&z.translation(3, 0), &r).unwrap().representative().tx(), 0);
        assert_eq!(chain.act_req(&z.identity(), &r).unwrap(), r);
    }

    #[test]
    fn grammar() {
        let p4 = GroupSpec::p4(8);
        let c = SubgroupChain::parse(Subgroup::full(p4), "t2,t2,t2+r2,r2").unwrap();
        assert_eq!(c.layers(), 4);
        assert!(c.ends_trivial());
        assert_eq!(c.groups()[3].rotation_order(), 2);
        assert_eq!(SubgroupChain::default_text(p4).unwrap(), "t2,t2,t2+r2,r2");
        assert_eq!(SubgroupChain::default_text(GroupSpec::p4m(16)).unwrap(), "t2,t2,t2,t2+r2,r2+m");
        assert!(SubgroupChain::default_for(GroupSpec::p4m(16)).unwrap().ends_trivial());
        assert!(SubgroupChain::default_for(GroupSpec::p1(7)).is_err());
        assert!(matches!(
            SubgroupChain::parse(Subgroup::full(GroupSpec::p1(7)), "t2"),
            Err(ChainError::Syntax { index: 0, .. })
        ));
        assert!(SubgroupChain::parse(Subgroup::full(p4), "t2,x").is_err());
        assert!(SubgroupChain::parse(Subgroup::full(p4), "m").is_err());
        assert!(SubgroupChain::parse(Subgroup::full(p4), "r3").is_err());
        let trivial = SubgroupChain::parse(Subgroup::full(GroupSpec::p4m(4)), "e").unwrap();
        assert!(trivial.ends_trivial());
    }

    #[test]
    fn chain_subsample_delta() {
        let chain = z8_chain();
        let mut v = vec![0.0; 8];
        v[5] = 3.0;
        let f = FeatureMap::new(chain.top(), 1, v).unwrap();
        let out = chain_subsample(&f, &chain, &PhiConfig::plain()).unwrap();
        assert_eq!(out.map.values(), &[3.0]);
        assert_eq!(chain.nu(&out.tuple).unwrap().representative().tx(), 5);
        let (tuple, degenerate) = phi_all(&f, &chain, &PhiConfig::plain()).unwrap();
        assert!(!degenerate);
        assert_eq!(tuple, out.tuple);
    }

    #[test]
    fn length_one_trivial_chain() {
        let top = Subgroup::full(GroupSpec::z1(8));
        let chain = SubgroupChain::new(vec![top, top]).unwrap();
        let f = FeatureMap::new(top, 1, (0..8).map(|i| i as f64).collect()).unwrap();
        let out = chain_subsample(&f, &chain, &PhiConfig::plain()).unwrap();
        assert_eq!(out.map, f);
        assert!(out.tuple.0[0].representative().is_identity());
    }

    #[test]
    fn constant_map_gives_identity_tuple() {
        let chain = z8_chain();
        let f = FeatureMap::new(chain.top(), 1, vec![2.0; 8]).unwrap();
        let (tuple, _) = phi_all(&f, &chain, &PhiConfig::plain()).unwrap();
        assert!(tuple.0.iter().all(|c| c.representative().is_identity()));
    }

    #[test]
    fn mixed_radix_value() {
        assert_eq!(mixed_radix(&[1, 0, 1], &[2, 2, 2]), 5);
    }

    #[test]
    fn non_nested_chain_rejected() {
        let p1 = GroupSpec::p1(8);
        let a = Subgroup::strided(p1, 2).unwrap();
        assert!(matches!(SubgroupChain::new(vec![a, Subgroup::full(p1)]), Err(ChainError::NotNested(1))));
    }
}
