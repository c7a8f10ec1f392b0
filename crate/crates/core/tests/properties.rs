use eqsub_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs(sizes: &[u32]) -> Vec<GroupSpec> {
    let mut out = Vec::new();
    for &n in sizes {
        for kind in [GroupKind::Z1, GroupKind::P1, GroupKind::P4, GroupKind::P4m] {
            out.push(GroupSpec::new(kind, n).unwrap());
        }
    }
    out
}

#[test]
fn group_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for spec in specs(&[4, 8]) {
        let all = spec.enumerate();
        let e = spec.identity();
        for g in &all {
            assert_eq!(e * *g, *g);
            assert_eq!(*g * e, *g);
            assert_eq!(*g * g.inverse(), e);
            assert_eq!(g.inverse() * *g, e);
        }
        if all.len() <= 64 {
            for a in &all {
                for b in &all {
                    let ab = *a * *b;
                    assert_eq!(spec.index_of(&ab), all.iter().position(|x| *x == ab).unwrap());
                    for c in &all {
                        assert_eq!((ab) * *c, *a * (*b * *c));
                    }
                }
            }
        } else {
            for _ in 0..10_000 {
                let pick = |r: &mut ChaCha8Rng| all[r.gen_range(0..all.len())];
                let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
                assert_eq!((a * b) * c, a * (b * c));
            }
        }
    }
}

#[test]
fn point_action_is_an_automorphism_of_translations() {
    let spec = GroupSpec::p4(4);
    let n = 4i64;
    for h in spec.enumerate().iter().filter(|g| g.tx() == 0 && g.ty() == 0) {
        for a in spec.grid() {
            for b in spec.grid() {
                let sum = h.conjugate_translation(a.0 as i64 + b.0 as i64, a.1 as i64 + b.1 as i64);
                let pa = h.conjugate_translation(a.0 as i64, a.1 as i64);
                let pb = h.conjugate_translation(b.0 as i64, b.1 as i64);
                assert_eq!(sum.0.rem_euclid(n), (pa.0 + pb.0).rem_euclid(n));
                assert_eq!(sum.1.rem_euclid(n), (pa.1 + pb.1).rem_euclid(n));
                // φ_h(n) = h n h⁻¹
                let conj = *h * spec.translation(a.0 as i64, a.1 as i64) * h.inverse();
                assert_eq!(conj, spec.translation(pa.0, pa.1));
            }
        }
    }
}

#[test]
fn grid_action_is_transitive_homomorphism() {
    for spec in specs(&[4]) {
        let all = spec.enumerate();
        let orbit: std::collections::BTreeSet<_> = all.iter().map(|g| g.act_on_grid((0, 0))).collect();
        assert_eq!(orbit.len(), spec.grid_points());
        for a in all.iter().step_by(3) {
            for b in all.iter().step_by(5) {
                for x in spec.grid() {
                    assert_eq!((*a * *b).act_on_grid(x), a.act_on_grid(b.act_on_grid(x)));
                }
            }
        }
    }
}

fn all_subgroups(spec: GroupSpec) -> Vec<Subgroup> {
    let mut out = Vec::new();
    let n = spec.size();
    for s in (1..=n).filter(|s| n % s == 0) {
        for rot in [1u8, 2, 4] {
            for m in [false, true] {
                if let Ok(k) = Subgroup::new(spec, s, s, rot, m) {
                    out.push(k);
                }
            }
        }
    }
    out
}

#[test]
fn subgroups_are_closed_and_cosets_partition() {
    for spec in [GroupSpec::p4m(4), GroupSpec::p4(4), GroupSpec::z1(8)] {
        let full = Subgroup::full(spec);
        for k in all_subgroups(spec) {
            let members = k.elements();
            assert!(members.iter().any(|g| g.is_identity()));
            for a in &members {
                assert!(k.contains(&a.inverse()));
                for b in &members {
                    assert!(k.contains(&(*a * *b)), "{k} not closed");
                }
            }
            let quotient = full.quotient(&k).unwrap();
            assert_eq!(quotient.len() * k.order(), spec.order());
            let mut seen = vec![0usize; spec.order()];
            for c in &quotient {
                // section property s(pK)K = pK and canonical minimality
                let rep = c.representative();
                let coset: Vec<_> = members.iter().map(|kk| rep * *kk).collect();
                assert_eq!(*coset.iter().min().unwrap(), rep);
                for g in coset {
                    seen[spec.index_of(&g)] += 1;
                    assert_eq!(k.coset_of(&g).unwrap(), *c);
                }
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
    }
}

fn random_map(domain: Subgroup, channels: usize, rng: &mut ChaCha8Rng) -> FeatureMap {
    FeatureMap::from_fn(domain, channels, |_, _| rng.gen_range(-20..=20) as f64)
}

/// Random integer map whose smoothed norm field has a unique maximum.
fn unique_argmax_map(domain: Subgroup, channels: usize, cfg: &PhiConfig, rng: &mut ChaCha8Rng) -> FeatureMap {
    loop {
        let f = random_map(domain, channels, rng);
        let field = eqsub_core::equisample::norm_field(&f, cfg);
        let max = field.values().iter().cloned().fold(f64::MIN, f64::max);
        if field.values().iter().filter(|v| **v == max).count() == 1 {
            return f;
        }
    }
}

#[test]
fn act_is_a_group_action() {
    let spec = GroupSpec::p4(4);
    let full = Subgroup::full(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = random_map(full, 2, &mut rng);
    let all = spec.enumerate();
    for a in &all {
        let fa = act(a, &f).unwrap();
        for b in &all {
            assert_eq!(act(b, &fa).unwrap(), act(&(*b * *a), &f).unwrap());
        }
    }
    for _ in 0..100 {
        let u = all[rng.gen_range(0..all.len())];
        let g = random_map(full, 1, &mut rng);
        assert_eq!(act(&u, &act(&u.inverse(), &g).unwrap()).unwrap(), g);
    }
}

#[test]
fn l1_field_is_equivariant() {
    let spec = GroupSpec::p4m(4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_map(Subgroup::full(spec), 3, &mut rng);
    for u in spec.enumerate() {
        assert_eq!(l1_field(&act(&u, &f).unwrap()), act(&u, &l1_field(&f)).unwrap());
    }
}

fn sampling_sweep(spec: GroupSpec, stride: u32, cfg: PhiConfig, trials: usize) {
    let full = Subgroup::full(spec);
    let k = Subgroup::strided(spec, stride).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.order() as u64);
    let perms: Vec<_> = spec.enumerate().iter().map(|u| (*u, Permutation::left(u, full).unwrap())).collect();
    for _ in 0..trials {
        let f = unique_argmax_map(full, 2, &cfg, &mut rng);
        let base = subsample(&f, k, &cfg).unwrap();
        assert!(!base.degenerate);
        let up = upsample(&base.pair, full).unwrap();
        for (u, perm) in &perms {
            let lhs = subsample(&perm.apply(&f).unwrap(), k, &cfg).unwrap().pair;
            let rhs = act_sampled(u, &base.pair).unwrap();
            assert_eq!(lhs, rhs, "subsample not equivariant for u = {u}");
            let moved_up = upsample(&rhs, full).unwrap();
            assert_eq!(perm.apply(&up).unwrap(), moved_up);
            assert_eq!(phi(&perm.apply(&f).unwrap(), k, &cfg).unwrap().coset, base.pair.coset().act(u).unwrap());
        }
    }
}

#[test]
fn subsampling_equivariance_plain() {
    sampling_sweep(GroupSpec::z1(16), 2, PhiConfig::plain(), 100);
    sampling_sweep(GroupSpec::p1(8), 2, PhiConfig::plain(), 20);
    sampling_sweep(GroupSpec::p4(8), 2, PhiConfig::plain(), 10);
}

#[test]
fn subsampling_equivariance_smoothed() {
    sampling_sweep(GroupSpec::p4m(4), 2, PhiConfig::desk(), 10);
    sampling_sweep(GroupSpec::p4(8), 4, PhiConfig::production(), 3);
}

#[test]
fn sampled_action_laws() {
    let spec = GroupSpec::p4(8);
    let full = Subgroup::full(spec);
    let k = Subgroup::strided(spec, 2).unwrap();
    let all = spec.enumerate();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let f = random_map(full, 1, &mut rng);
        let pair = subsample(&f, k, &PhiConfig::plain()).unwrap().pair;
        assert_eq!(act_sampled(&spec.identity(), &pair).unwrap(), pair);
        let u = all[rng.gen_range(0..all.len())];
        let v = all[rng.gen_range(0..all.len())];
        let two_step = act_sampled(&v, &act_sampled(&u, &pair).unwrap()).unwrap();
        assert_eq!(two_step, act_sampled(&(v * u), &pair).unwrap());
    }
}

#[test]
fn round_trip_on_unique_maximum() {
    let spec = GroupSpec::p4(4);
    let full = Subgroup::full(spec);
    let k = Subgroup::strided(spec, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for coset in full.quotient(&k).unwrap() {
        let fb = unique_argmax_map(k, 1, &PhiConfig::plain(), &mut rng);
        let pair = SampledPair::new(full, fb, coset).unwrap();
        let up = upsample(&pair, full).unwrap();
        assert_eq!(subsample(&up, k, &PhiConfig::plain()).unwrap().pair, pair);
    }
}

#[test]
fn coset_pool_equivariance() {
    let spec = GroupSpec::p4(4);
    let full = Subgroup::full(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_map(full, 2, &mut rng);
    for k in [Subgroup::strided(spec, 2).unwrap(), Subgroup::new(spec, 4, 4, 2, false).unwrap()] {
        for pool in [Pool::Max, Pool::Mean] {
            let base = coset_pool(&f, k, pool).unwrap();
            for u in spec.enumerate() {
                assert_eq!(coset_pool(&act(&u, &f).unwrap(), k, pool).unwrap(), base.act(&u).unwrap());
            }
        }
    }
}

#[test]
fn uniform_ties_are_uniform_over_cosets() {
    let spec = GroupSpec::z1(8);
    let k = Subgroup::strided(spec, 4).unwrap();
    let f = FeatureMap::new(Subgroup::full(spec), 1, vec![1.0; 8]).unwrap();
    let cfg = PhiConfig::plain().with_tie_policy(TiePolicy::UniformRandom { seed: 7 });
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 10_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        let out = phi_with_rng(&f, k, &cfg, &mut rng).unwrap();
        counts[out.coset.representative().tx() as usize] += 1;
    }
    let p = 0.25;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "counts {counts:?}");
    }
}

fn chain_prop3(chain: &SubgroupChain) {
    let top = chain.top();
    let spec = top.parent();
    let bottom_cosets = top.quotient(&chain.bottom()).unwrap();
    let tuples: Vec<CosetTuple> = bottom_cosets.iter().map(|r| chain.nu_inv(r).unwrap()).collect();
    for (r, t) in bottom_cosets.iter().zip(&tuples) {
        assert_eq!(chain.nu(t).unwrap(), *r);
    }
    let distinct: std::collections::HashSet<_> = tuples.iter().collect();
    assert_eq!(distinct.len(), tuples.len());
    for u in top.elements() {
        for (r, t) in bottom_cosets.iter().zip(&tuples) {
            let moved = chain.act_tuple(&u, t).unwrap();
            assert_eq!(chain.nu(&moved).unwrap(), chain.act_req(&u, r).unwrap(), "u={u} in {spec}");
        }
    }
}

#[test]
fn nu_is_an_equivariant_bijection() {
    chain_prop3(&SubgroupChain::parse(Subgroup::full(GroupSpec::z1(8)), "t2,t2,t2").unwrap());
    chain_prop3(&SubgroupChain::default_for(GroupSpec::p4(8)).unwrap());
    chain_prop3(&SubgroupChain::default_for(GroupSpec::p1(16)).unwrap());
    chain_prop3(&SubgroupChain::parse(Subgroup::full(GroupSpec::p4m(4)), "t2+r2,m,t2,r2").unwrap());
}

#[test]
fn mixed_radix_matches_group_product() {
    let spec = GroupSpec::z1(24);
    let chain = SubgroupChain::parse(Subgroup::full(spec), "t2,t3,t4").unwrap();
    let radices = [2, 3, 4];
    for r in 0..24 {
        let coset = chain.bottom().coset_of(&spec.translation(r, 0)).unwrap();
        let t = chain.nu_inv(&coset).unwrap();
        let mut place = 1;
        let digits: Vec<u32> = t
            .cosets()
            .iter()
            .zip(radices)
            .map(|(c, radix)| {
                let d = c.representative().tx() / place;
                place *= radix;
                d
            })
            .collect();
        assert_eq!(mixed_radix(&digits, &radices), r as u32);
        for shift in 0..24 {
            let moved = chain.act_req(&spec.translation(shift, 0), &coset).unwrap();
            assert_eq!(moved.representative().tx() as i64, (r + shift) % 24);
        }
    }
}

#[test]
fn chain_subsample_tracks_shifts_and_matches_shortcut() {
    let spec = GroupSpec::z1(8);
    let chain = SubgroupChain::parse(Subgroup::full(spec), "t2,t2,t2").unwrap();
    let mut delta = vec![0.0; 8];
    delta[5] = 4.0;
    let f = FeatureMap::new(chain.top(), 1, delta).unwrap();
    for t in 0..8 {
        let moved = act(&spec.translation(t, 0), &f).unwrap();
        let out = chain_subsample(&moved, &chain, &PhiConfig::plain()).unwrap();
        assert_eq!(chain.nu(&out.tuple).unwrap().representative().tx() as i64, (5 + t) % 8);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let g = unique_argmax_map(chain.top(), 1, &PhiConfig::plain(), &mut rng);
        let layered = chain_subsample(&g, &chain, &PhiConfig::plain()).unwrap();
        let (shortcut, _) = phi_all(&g, &chain, &PhiConfig::plain()).unwrap();
        assert_eq!(layered.tuple, shortcut);
    }
}

#[test]
fn chain_subsample_is_equivariant_p4() {
    let spec = GroupSpec::p4(8);
    let chain = SubgroupChain::default_for(spec).unwrap();
    let cfg = PhiConfig::plain();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let f = unique_argmax_map(chain.top(), 1, &cfg, &mut rng);
        let base = chain_subsample(&f, &chain, &cfg).unwrap();
        for u in spec.enumerate() {
            let out = chain_subsample(&act(&u, &f).unwrap(), &chain, &cfg).unwrap();
            assert_eq!(out.tuple, chain.act_tuple(&u, &base.tuple).unwrap());
            assert_eq!(chain.nu(&out.tuple).unwrap(), chain.nu(&base.tuple).unwrap().act(&u).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn restrict_extend_adjunction(values in proptest::collection::vec(-5i32..5, 64), stride in prop::sample::select(vec![1u32, 2, 4])) {
        let spec = GroupSpec::p4(4);
        let full = Subgroup::full(spec);
        let f = FeatureMap::new(full, 1, values.iter().map(|&v| v as f64).collect()).unwrap();
        let k = Subgroup::strided(spec, stride).unwrap();
        let r = restrict(&f, k).unwrap();
        prop_assert_eq!(&restrict(&extend(&r, full).unwrap(), k).unwrap(), &r);
        let e = extend(&r, full).unwrap();
        for (i, g) in spec.enumerate().iter().enumerate() {
            let expected = if k.contains(g) { f.at(i)[0] } else { 0.0 };
            prop_assert_eq!(e.at(i)[0], expected);
        }
    }

    #[test]
    fn etf_round_trip(shape in proptest::collection::vec(1usize..4, 0..4), seed in any::<u64>()) {
        let n: usize = shape.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..n).map(|_| rng.gen()).collect();
        let t = eqsub_core::io::Tensor::new(shape, data).unwrap();
        prop_assert_eq!(eqsub_core::io::Tensor::read_from(&t.to_bytes()[..]).unwrap(), t);
    }
}

#[test]
fn element_literals_round_trip() {
    for spec in [GroupSpec::z1(5), GroupSpec::p1(4), GroupSpec::p4(4), GroupSpec::p4m(4)] {
        for g in spec.enumerate() {
            assert_eq!(spec.parse_element(&g.to_string()).unwrap(), g);
        }
    }
    let p4 = GroupSpec::p4(8);
    assert_eq!(p4.parse_element("t=3,2;r=1").unwrap(), p4.element(3, 2, 1, false).unwrap());
    assert_eq!(p4.parse_element("").unwrap(), p4.identity());
    assert_eq!(p4.parse_element("t=-1,9").unwrap(), p4.translation(7, 1));
    for bad in ["t=1", "r=x", "m=1", "t=1,2;t=1,2", "q=3", "t=1,2,3"] {
        assert!(p4.parse_element(bad).is_err(), "{bad}");
    }
    assert!(GroupSpec::p1(8).parse_element("r=1").is_err());
}
