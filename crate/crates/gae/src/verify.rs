//! The invariant suite behind `eqsub verify`.
//!
//! Each check returns a [`Check`] with its trial count and worst residual;
//! a report passes only if every check does.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqsub_core::equisample::norm_field;
use eqsub_core::{
    act, act_on_image, act_sampled, mixed_radix, standard_subsample, subsample, upsample, CosetId, CosetTuple,
    FeatureMap, GroupElement, GroupSpec, PhiConfig, SampledPair, Subgroup, SubgroupChain,
};
use eqsub_nn::{grad_check, LayerSpec, Model, Params, SamplingMode, Signal};

use crate::arch::Autoencoder;
use crate::error::GaeError;

/// Largest group swept exhaustively; bigger groups are sampled.
pub const EXHAUSTIVE_LIMIT: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub trials: usize,
    pub max_residual: f64,
    pub passed: bool,
    pub note: String,
}

impl Check {
    fn new(name: impl Into<String>, trials: usize, max_residual: f64, passed: bool, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            trials,
            max_residual,
            passed,
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {:<40} trials={:<9} max_residual={:<12.3e} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.trials,
                c.max_residual,
                c.note
            );
        }
        let _ = writeln!(
            s,
            "{}: {}/{} checks passed",
            if self.passed() { "OK" } else { "FAILED" },
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "trials", "max_residual", "passed", "note"]).expect("in-memory write");
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                c.trials.to_string(),
                c.max_residual.to_string(),
                c.passed.to_string(),
                c.note.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Which subsampler the subsample/upsample checks exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Equivariant,
    /// Restriction to `K` at the identity coset, which is not equivariant.
    Standard,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub chain: SubgroupChain,
    pub seed: u64,
    pub trials: usize,
    pub inject_standard_subsample: bool,
    /// Φ for the floating-point checks; the integer path always uses the raw argmax.
    pub phi: PhiConfig,
}

impl VerifyConfig {
    pub fn spec(&self) -> GroupSpec {
        self.chain.top().parent()
    }
}

fn elements_to_sweep(spec: GroupSpec, rng: &mut ChaCha8Rng) -> (Vec<GroupElement>, bool) {
    let all = spec.enumerate();
    if all.len() <= EXHAUSTIVE_LIMIT {
        (all, true)
    } else {
        (all.choose_multiple(rng, EXHAUSTIVE_LIMIT).copied().collect(), false)
    }
}

fn sweep_note(exhaustive: bool, n: usize) -> String {
    if exhaustive {
        format!("exhaustive |G|={n}")
    } else {
        format!("sampled {n} elements")
    }
}

/// Group axioms and the action on the grid.
pub fn check_group_axioms(spec: GroupSpec, seed: u64) -> Check {
    let all = spec.enumerate();
    let e = spec.identity();
    let mut failures = 0usize;
    let mut trials = 0usize;
    for g in &all {
        trials += 1;
        if *g * e != *g || e * *g != *g || *g * g.inverse() != e || g.inverse() * *g != e {
            failures += 1;
        }
        if spec.index_of(g) >= all.len() || spec.element_at(spec.index_of(g)) != *g {
            failures += 1;
        }
    }
    let mut check_triple = |a: &GroupElement, b: &GroupElement, c: &GroupElement| {
        trials += 1;
        let ab = a.compose(b);
        match ab {
            Ok(ab) => {
                if ab * *c != *a * (*b * *c) {
                    failures += 1;
                }
                let p = (c.tx(), c.ty());
                if ab.act_on_grid(p) != a.act_on_grid(b.act_on_grid(p)) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    };
    let note = if all.len() <= 256 {
        for a in &all {
            for b in &all {
                for c in &all {
                    check_triple(a, b, c);
                }
            }
        }
        format!("exhaustive triples, |G|={}", all.len())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10_000 {
            let pick = |r: &mut ChaCha8Rng| all[r.gen_range(0..all.len())];
            let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
            check_triple(&a, &b, &c);
        }
        format!("10^4 random triples, |G|={}", all.len())
    };
    Check::new(format!("group axioms {spec}"), trials, failures as f64, failures == 0, note)
}

fn random_map(domain: Subgroup, channels: usize, integer: bool, rng: &mut ChaCha8Rng) -> FeatureMap<f64> {
    FeatureMap::from_fn(domain, channels, |_, _| {
        if integer {
            rng.gen_range(-9i32..=9) as f64
        } else {
            rng.gen_range(-1.0..1.0)
        }
    })
}

/// A random map whose smoothed norm field has a unique maximum.
pub fn unique_argmax_map(
    domain: Subgroup,
    channels: usize,
    integer: bool,
    cfg: &PhiConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FeatureMap<f64>, GaeError> {
    for _ in 0..1000 {
        let f = random_map(domain, channels, integer, rng);
        let field = norm_field(&f, cfg);
        let max = field.values().iter().copied().fold(f64::MIN, f64::max);
        if field.values().iter().filter(|v| **v == max).count() == 1 {
            return Ok(f);
        }
    }
    Err(GaeError::Config(format!(
        "smoothed norm field on {} never has a unique maximum; use a larger grid or less smoothing",
        domain.parent()
    )))
}

fn sample_pair(f: &FeatureMap<f64>, k: Subgroup, cfg: &PhiConfig, sampler: Sampler) -> Result<SampledPair<f64>, GaeError> {
    Ok(match sampler {
        Sampler::Equivariant => subsample(f, k, cfg)?.pair,
        Sampler::Standard => SampledPair::new(f.domain(), standard_subsample(f, k)?, CosetId::identity(k))?,
    })
}

/// On `G ≥ K`: subsampling and upsampling commute with the actions.
///
/// The integer path uses integer-valued maps and no smoothing and must be
/// exact; the real path uses random reals with `cfg` smoothing.
pub fn check_sampling_equivariance(
    k: Subgroup,
    trials: usize,
    seed: u64,
    integer: bool,
    cfg: &PhiConfig,
    sampler: Sampler,
) -> Result<Vec<Check>, GaeError> {
    let spec = k.parent();
    let g = Subgroup::full(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (elems, exhaustive) = elements_to_sweep(spec, &mut rng);
    let (mut down, mut up) = (0.0f64, 0.0f64);
    let mut coset_failures = 0usize;
    for _ in 0..trials {
        let f = unique_argmax_map(g, 2, integer, cfg, &mut rng)?;
        let pair = sample_pair(&f, k, cfg, sampler)?;
        let lifted = upsample(&pair, g)?;
        for u in &elems {
            let lhs = sample_pair(&act(u, &f)?, k, cfg, sampler)?;
            let rhs = act_sampled(u, &pair)?;
            if lhs.coset() != rhs.coset() {
                coset_failures += 1;
                down = f64::INFINITY;
            } else {
                down = down.max(lhs.map().max_abs_diff(rhs.map()));
            }
            let moved_up = upsample(&rhs, g)?;
            up = up.max(act(u, &lifted)?.max_abs_diff(&moved_up));
        }
    }
    let tol = if integer { 0.0 } else { 1e-12 };
    let path = if integer { "integer" } else { "64-bit" };
    let n = trials * elems.len();
    let note = format!("{}, {trials} maps", sweep_note(exhaustive, elems.len()));
    let label = match sampler {
        Sampler::Equivariant => "",
        Sampler::Standard => " [standard]",
    };
    Ok(vec![
        Check::new(
            format!("subsample equivariance {path}{label}"),
            n,
            down,
            coset_failures == 0 && down <= tol,
            format!("{note}, {coset_failures} coset mismatches"),
        ),
        Check::new(format!("upsample equivariance {path}{label}"), n, up, up <= tol, note),
    ])
}

/// The induced action on pairs is a group action, and its coset part is left multiplication.
pub fn check_action_laws(k: Subgroup, pairs: usize, seed: u64) -> Result<Check, GaeError> {
    let spec = k.parent();
    let g = Subgroup::full(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (elems, exhaustive) = elements_to_sweep(spec, &mut rng);
    let cosets = g.quotient(&k)?;
    let e = spec.identity();
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut trials = 0usize;
    for _ in 0..pairs {
        let fb = random_map(k, 2, false, &mut rng);
        let coset = cosets[rng.gen_range(0..cosets.len())];
        let pair = SampledPair::new(g, fb, coset)?;
        let u2 = elems[rng.gen_range(0..elems.len())];
        let after_u2 = act_sampled(&u2, &pair)?;
        if act_sampled(&e, &pair)? != pair {
            failures += 1;
        }
        for u1 in &elems {
            trials += 1;
            let lhs = act_sampled(u1, &after_u2)?;
            let rhs = act_sampled(&(*u1 * u2), &pair)?;
            // p′K = u p K, and f_b′ = π(p̄′⁻¹ u p̄) f_b recomputed directly.
            let direct_coset = coset.act(&(*u1 * u2))?;
            let kk = direct_coset.representative().inverse() * *u1 * u2 * coset.representative();
            let direct = act(&kk, pair.map())?;
            if lhs.coset() != rhs.coset() || rhs.coset() != direct_coset || !k.contains(&kk) {
                failures += 1;
                continue;
            }
            worst = worst.max(lhs.map().max_abs_diff(rhs.map())).max(rhs.map().max_abs_diff(&direct));
        }
    }
    Ok(Check::new(
        "pair action laws",
        trials,
        worst,
        failures == 0 && worst <= 1e-12,
        format!("{} × {pairs} pairs, {failures} coset failures", sweep_note(exhaustive, elems.len())),
    ))
}

fn all_tuples(chain: &SubgroupChain) -> Result<Vec<CosetTuple>, GaeError> {
    let mut tuples = vec![Vec::new()];
    for w in chain.groups().windows(2) {
        let q = w[0].quotient(&w[1])?;
        let mut next = Vec::with_capacity(tuples.len() * q.len());
        for t in &tuples {
            for c in &q {
                let mut t2: Vec<CosetId> = t.clone();
                t2.push(*c);
                next.push(t2);
            }
        }
        tuples = next;
    }
    Ok(tuples.into_iter().map(CosetTuple).collect())
}

/// ν is a bijection and intertwines the tuple action with the
/// left action on `G/G_L`.
pub fn check_nu(chain: &SubgroupChain, seed: u64) -> Result<Check, GaeError> {
    let spec = chain.top().parent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quotient = chain.top().quotient(&chain.bottom())?;
    let tuples = all_tuples(chain)?;
    let mut failures = 0usize;
    let mut trials = 0usize;
    if tuples.len() != quotient.len() {
        failures += 1;
    }
    let mut images = std::collections::BTreeSet::new();
    for t in &tuples {
        trials += 1;
        let r = chain.nu(t)?;
        images.insert(r.representative());
        if chain.nu_inv(&r)? != *t {
            failures += 1;
        }
    }
    if images.len() != quotient.len() {
        failures += 1;
    }
    let (elems, exhaustive) = elements_to_sweep(spec, &mut rng);
    let cap = (200_000 / quotient.len().max(1)).max(1);
    let elems: Vec<GroupElement> = elems.into_iter().take(cap).collect();
    for r in &quotient {
        let t = chain.nu_inv(r)?;
        for u in &elems {
            trials += 1;
            let moved = chain.act_tuple(u, &t)?;
            if chain.nu(&moved)? != r.act(u)? {
                failures += 1;
            }
        }
    }
    let mut note = format!(
        "|G/G_L|={}, {} tuples, {}",
        quotient.len(),
        tuples.len(),
        sweep_note(exhaustive && elems.len() == spec.order(), elems.len())
    );
    if let Some(radix_failures) = check_mixed_radix(chain, &quotient)? {
        failures += radix_failures;
        note += ", mixed radix checked";
    }
    Ok(Check::new("nu bijection and equivariance", trials, failures as f64, failures == 0, note))
}

/// For translation-only chains, compares the mixed-radix closed form per
/// axis with the representative of the group product. `None` if the chain
/// involves rotations or mirrors.
fn check_mixed_radix(chain: &SubgroupChain, quotient: &[CosetId]) -> Result<Option<usize>, GaeError> {
    let groups = chain.groups();
    if groups.iter().any(|g| g.point_order() != groups[0].point_order()) || groups[0].point_order() != 1 {
        return Ok(None);
    }
    let rx: Vec<u32> = groups.windows(2).map(|w| w[1].stride_x() / w[0].stride_x()).collect();
    let ry: Vec<u32> = groups.windows(2).map(|w| w[1].stride_y() / w[0].stride_y()).collect();
    let mut failures = 0;
    for r in quotient {
        let t = chain.nu_inv(r)?;
        let digits = |stride: fn(&Subgroup) -> u32, coord: fn(&GroupElement) -> u32| -> Vec<u32> {
            t.cosets()
                .iter()
                .zip(groups)
                .map(|(c, parent)| coord(&c.representative()) / stride(parent))
                .collect()
        };
        let dx = digits(Subgroup::stride_x, GroupElement::tx);
        let dy = digits(Subgroup::stride_y, GroupElement::ty);
        let rep = r.representative();
        if mixed_radix(&dx, &rx) != rep.tx() || mixed_radix(&dy, &ry) != rep.ty() {
            failures += 1;
        }
    }
    Ok(Some(failures))
}

/// Autoencoder symmetry with untrained weights: `z_inv` invariant, `z_eq` equivariant,
/// decoder equivariant.
pub fn check_autoencoder_symmetry(ae: &Autoencoder, seed: u64, elems: Option<&[GroupElement]>) -> Result<Vec<Check>, GaeError> {
    let chain = ae
        .chain()
        .ok_or_else(|| GaeError::Config("the symmetry sweep needs an equivariant autoencoder".into()))?
        .clone();
    let spec = ae.group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = Params::<f64>::init(ae.model(), seed);
    let mut image = random_map(ae.grid(), 1, false, &mut rng);
    let mut tries = 1;
    while ae.encode(&params, &image)?.degenerate {
        if tries == 1000 {
            return Err(GaeError::Config(format!(
                "sampling on {spec} ties on every random image; use a larger grid or less smoothing"
            )));
        }
        image = random_map(ae.grid(), 1, false, &mut rng);
        tries += 1;
    }
    let (swept, exhaustive) = match elems {
        Some(e) => (e.to_vec(), e.len() == spec.order()),
        None => elements_to_sweep(spec, &mut rng),
    };
    let z = ae.encode(&params, &image)?;
    let base = ae.decode(&params, &z)?;
    let (mut inv, mut dec) = (0.0f64, 0.0f64);
    let mut eq_failures = 0usize;
    let mut degenerate = z.degenerate;
    for u in &swept {
        let zu = ae.encode(&params, &act_on_image(u, &image)?)?;
        degenerate |= zu.degenerate;
        inv = inv.max(
            zu.z_inv
                .iter()
                .zip(&z.z_inv)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        let moved = chain.act_tuple(u, &z.z_eq)?;
        if moved != zu.z_eq {
            eq_failures += 1;
        }
        let shifted = crate::arch::LatentCode {
            z_inv: z.z_inv.clone(),
            z_eq: moved,
            degenerate: false,
        };
        dec = dec.max(ae.decode(&params, &shifted)?.max_abs_diff(&act_on_image(u, &base)?));
    }
    let note = sweep_note(exhaustive, swept.len());
    let ends = if chain.ends_trivial() { "" } else { " (G_L nontrivial)" };
    Ok(vec![
        Check::new(
            format!("encoder z_inv invariance{ends}"),
            swept.len(),
            inv,
            inv <= 1e-9 && !degenerate,
            if degenerate { format!("{note}, degenerate sampling") } else { note.clone() },
        ),
        Check::new("encoder z_eq equivariance", swept.len(), eq_failures as f64, eq_failures == 0, note.clone()),
        Check::new("decoder equivariance", swept.len(), dec, dec <= 1e-9, note),
    ])
}

/// One small model per layer kind on `spec`, as used by the gradient check.
/// Sized so that every parameter block and input holds at least 20 values.
pub fn layer_kind_models(spec: GroupSpec) -> Result<Vec<(&'static str, Model, bool)>, GaeError> {
    let g = Subgroup::full(spec);
    let t = Subgroup::translations(spec);
    let n = spec.size();
    let s = if n % 2 == 0 { 2 } else { n };
    let k = Subgroup::new(spec, s, s, g.rotation_order(), g.has_mirror())?;
    let small = Subgroup::new(spec, n, n, 1, false)?;
    let plain = PhiConfig::plain();
    let c_in = 3.max(20usize.div_ceil(k.order().min(t.order())));
    let mk = |dom: Subgroup, layers: &[LayerSpec]| Model::new(dom, c_in, layers, plain, SamplingMode::PerLayer);
    let conv = |c| LayerSpec::GConv { out_channels: c, kernel: 3 };
    Ok(vec![
        ("lift-conv", mk(t, &[LayerSpec::LiftConv { out_channels: 4, kernel: 3 }])?, false),
        ("g-conv", mk(g, &[conv(4)])?, false),
        ("relu", mk(g, &[LayerSpec::Relu])?, true),
        ("avgpool-s1", mk(g, &[LayerSpec::AvgPool { kernel: 3 }])?, false),
        ("equi-subsample", mk(g, &[LayerSpec::EquiSubsample { target: k }])?, false),
        (
            "equi-upsample",
            mk(g, &[LayerSpec::EquiSubsample { target: k }, LayerSpec::EquiUpsample { target: g }])?,
            false,
        ),
        ("std-subsample", mk(g, &[LayerSpec::StdSubsample { target: k }])?, false),
        ("std-upsample", mk(k, &[LayerSpec::StdUpsample { target: g }])?, false),
        ("dense", mk(k, &[LayerSpec::Dense { out_domain: small, out_channels: 2 }])?, false),
        ("fiber-mean", mk(g, &[LayerSpec::FiberMean])?, false),
        (
            "composite",
            mk(
                t,
                &[
                    LayerSpec::LiftConv { out_channels: 4, kernel: 3 },
                    LayerSpec::Relu,
                    LayerSpec::EquiSubsample { target: k },
                    conv(4),
                    LayerSpec::EquiUpsample { target: g },
                    LayerSpec::AvgPool { kernel: 3 },
                    conv(2),
                    LayerSpec::FiberMean,
                ],
            )?,
            false,
        ),
    ])
}

/// Finite-difference gradient checks for every layer kind, 64- and 32-bit.
pub fn check_gradients(spec: GroupSpec, seed: u64) -> Result<Vec<Check>, GaeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (name, m, off_kink) in layer_kind_models(spec)? {
        let x = FeatureMap::from_fn(m.input_domain(), m.input_channels(), |_, _| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if off_kink {
                v.signum() * (v.abs() + 0.5)
            } else {
                v
            }
        });
        let p = Params::<f64>::init(&m, seed);
        let r64 = grad_check(&m, &p, &Signal::new(x.clone()), 20, 1e-3, seed)?;
        let r32 = grad_check(&m, &p.cast::<f32>(), &Signal::new(x.cast::<f32>()), 20, 1e-3, seed)?;
        let checked = r64.blocks.iter().map(|b| b.checked).min().unwrap_or(0);
        let (e64, e32) = (r64.max_rel_error(), r32.max_rel_error());
        out.push(Check::new(
            format!("gradient {name}"),
            r64.blocks.iter().map(|b| b.checked).sum(),
            e64,
            e64 < 1e-6 && e32 < 1e-4 && checked >= 20,
            format!("f64 {e64:.2e}, f32 {e32:.2e}, ≥{checked} per block"),
        ));
    }
    Ok(out)
}

/// The full suite for one group and chain.
pub fn verify(cfg: &VerifyConfig) -> Result<Report, GaeError> {
    let spec = cfg.spec();
    let chain = &cfg.chain;
    let k = chain.groups()[1];
    let desk = cfg.phi;
    desk.validate()?;
    let sampler = if cfg.inject_standard_subsample {
        Sampler::Standard
    } else {
        Sampler::Equivariant
    };
    let mut report = Report::default();
    report.checks.push(check_group_axioms(spec, cfg.seed));
    report
        .checks
        .extend(check_sampling_equivariance(k, cfg.trials, cfg.seed, true, &PhiConfig::plain(), sampler)?);
    report.checks.extend(check_sampling_equivariance(k, cfg.trials, cfg.seed + 1, false, &desk, sampler)?);

    // Negative control: plain restriction must be caught.
    let witness = check_sampling_equivariance(k, cfg.trials.clamp(1, 10), cfg.seed + 2, true, &PhiConfig::plain(), Sampler::Standard)?;
    let caught = witness.iter().any(|c| !c.passed);
    report.checks.push(Check::new(
        "negative control: standard subsample",
        witness.iter().map(|c| c.trials).sum(),
        witness.iter().map(|c| c.max_residual).fold(0.0, f64::max),
        caught,
        if caught { "non-equivariance detected" } else { "suite failed to detect non-equivariance" },
    ));

    report.checks.push(check_action_laws(k, cfg.trials.max(1), cfg.seed + 3)?);
    report.checks.push(check_nu(chain, cfg.seed + 4)?);

    let ae = Autoencoder::gae(chain, 3, 3, true, desk)?;
    report.checks.extend(check_autoencoder_symmetry(&ae, cfg.seed + 5, None)?);
    report.checks.extend(check_gradients(spec, cfg.seed + 6)?);
    Ok(report)
}
