//! Sequential models with a recorded tape for reverse-mode gradients.
//!
//! A [`Signal`] carries the feature map together with a stack of sampling
//! cosets: equivariant subsampling layers push the coset they chose,
//! equivariant upsampling layers pop the most recent one. An encoder
//! therefore ends with `(f_L, (p₁G₁, …, p_LG_L))` and a mirrored decoder
//! consumes that tuple in reverse.
//!
//! Sampling cosets are constants for differentiation: gradients flow
//! through the gathered values only, as with max pooling.

use std::collections::VecDeque;

use eqsub_core::equisample::{coset_indices, lattice_avg_pool};
use eqsub_core::{phi, phi_all, CosetId, FeatureMap, PhiConfig, Real, Subgroup, SubgroupChain};

use crate::error::NnError;
use crate::layer::{resolve, LayerSpec, Resolved};
use crate::params::{Grads, LayerParams, Params};

/// Where equivariant subsampling layers get their cosets from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    /// Φ on every subsampling layer's own input.
    PerLayer,
    /// The first subsampling layer of a run computes the whole tuple with
    /// one argmax over its input and ν⁻¹; later layers consume it.
    Shortcut,
}

#[derive(Clone, Debug)]
pub struct Model {
    input_domain: Subgroup,
    input_channels: usize,
    layers: Vec<Resolved>,
    phi: PhiConfig,
    sampling: SamplingMode,
}

/// A feature map plus the stack of sampling cosets produced so far.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T = f64> {
    pub map: FeatureMap<T>,
    pub cosets: Vec<CosetId>,
    pub degenerate: bool,
}

impl<T: Real> Signal<T> {
    pub fn new(map: FeatureMap<T>) -> Self {
        Self {
            map,
            cosets: Vec::new(),
            degenerate: false,
        }
    }

    pub fn with_cosets(map: FeatureMap<T>, cosets: Vec<CosetId>) -> Self {
        Self {
            map,
            cosets,
            degenerate: false,
        }
    }
}

#[derive(Clone, Debug)]
enum Saved<T> {
    Nothing,
    Input(FeatureMap<T>),
    Coset(CosetId),
}

/// Everything `backward` needs from a forward pass.
#[derive(Clone, Debug)]
pub struct Tape<T = f64> {
    saved: Vec<Saved<T>>,
    sampled: Vec<CosetId>,
}

impl<T> Tape<T> {
    /// Cosets chosen by the equivariant subsampling layers, in layer order.
    pub fn sampled(&self) -> &[CosetId] {
        &self.sampled
    }

    pub fn len(&self) -> usize {
        self.saved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.saved.is_empty()
    }
}

impl Model {
    pub fn new(
        input_domain: Subgroup,
        input_channels: usize,
        specs: &[LayerSpec],
        phi: PhiConfig,
        sampling: SamplingMode,
    ) -> Result<Self, NnError> {
        if input_channels == 0 {
            return Err(NnError::Input("input channel count must be positive".into()));
        }
        phi.validate()?;
        let mut layers = Vec::with_capacity(specs.len());
        let (mut domain, mut channels) = (input_domain, input_channels);
        for (i, spec) in specs.iter().enumerate() {
            let r = resolve(i, *spec, domain, channels)?;
            domain = r.out_domain;
            channels = r.out_channels;
            layers.push(r);
        }
        Ok(Self {
            input_domain,
            input_channels,
            layers,
            phi,
            sampling,
        })
    }

    pub(crate) fn resolved(&self) -> &[Resolved] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn input_domain(&self) -> Subgroup {
        self.input_domain
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    pub fn output_domain(&self) -> Subgroup {
        self.layers.last().map_or(self.input_domain, |l| l.out_domain)
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().map_or(self.input_channels, |l| l.out_channels)
    }

    /// Input domain and channel count of layer `i`.
    pub fn layer_input(&self, i: usize) -> (Subgroup, usize) {
        (self.layers[i].in_domain, self.layers[i].in_channels)
    }

    /// Shapes of layer `i`'s weight and bias tensors: `[taps, c_in, c_out]`
    /// and `[c_out]` for convolutions, `[n_in, n_out]` and `[n_out]` for
    /// dense layers, `None` for parameter-free layers.
    pub fn param_shapes(&self, i: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let l = &self.layers[i];
        match l.spec {
            LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } => {
                let taps = l.weight_len() / (l.in_channels * l.out_channels);
                Some((vec![taps, l.in_channels, l.out_channels], vec![l.out_channels]))
            }
            LayerSpec::Dense { .. } => {
                let n_out = l.bias_len();
                Some((vec![l.weight_len() / n_out, n_out], vec![n_out]))
            }
            _ => None,
        }
    }

    /// Model made of layers `range` of this one.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Model {
        let (domain, channels) = if range.start < self.layers.len() {
            self.layer_input(range.start)
        } else {
            (self.output_domain(), self.output_channels())
        };
        Model {
            input_domain: domain,
            input_channels: channels,
            layers: self.layers[range].to_vec(),
            phi: self.phi,
            sampling: self.sampling,
        }
    }

    pub fn phi(&self) -> &PhiConfig {
        &self.phi
    }

    pub fn sampling(&self) -> SamplingMode {
        self.sampling
    }

    fn layer_err(&self, index: usize, reason: String) -> NnError {
        NnError::Layer {
            index,
            kind: self.layers[index].spec.name(),
            reason,
        }
    }

    /// Subgroup chain from layer `i`'s input through the targets of the
    /// consecutive equivariant subsampling layers that follow it.
    fn shortcut_chain(&self, i: usize) -> Result<SubgroupChain, NnError> {
        let mut groups = vec![self.layers[i].in_domain];
        for l in &self.layers[i..] {
            match l.spec {
                LayerSpec::EquiSubsample { target } => groups.push(target),
                LayerSpec::GConv { .. } | LayerSpec::Relu | LayerSpec::AvgPool { .. } => {}
                _ => break,
            }
        }
        Ok(SubgroupChain::new(groups)?)
    }

    pub fn forward<T: Real>(&self, params: &Params<T>, input: Signal<T>) -> Result<(Signal<T>, Tape<T>), NnError> {
        self.run(params, input, None)
    }

    /// Forward pass that reuses previously sampled cosets instead of
    /// evaluating Φ, e.g. when perturbing parameters for finite differences.
    pub fn forward_replay<T: Real>(
        &self,
        params: &Params<T>,
        input: Signal<T>,
        sampled: &[CosetId],
    ) -> Result<(Signal<T>, Tape<T>), NnError> {
        self.run(params, input, Some(sampled))
    }

    fn run<T: Real>(
        &self,
        params: &Params<T>,
        input: Signal<T>,
        replay: Option<&[CosetId]>,
    ) -> Result<(Signal<T>, Tape<T>), NnError> {
        params.check(self)?;
        if input.map.domain() != self.input_domain || input.map.channels() != self.input_channels {
            return Err(NnError::Input(format!(
                "expected {} channels on {}, got {} on {}",
                self.input_channels,
                self.input_domain,
                input.map.channels(),
                input.map.domain()
            )));
        }
        let Signal {
            mut map,
            mut cosets,
            mut degenerate,
        } = input;
        let mut pending: VecDeque<CosetId> = replay.map(|r| r.iter().copied().collect()).unwrap_or_default();
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut sampled = Vec::new();

        for (i, (layer, p)) in self.layers.iter().zip(&params.layers).enumerate() {
            let (next, keep) = match layer.spec {
                LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } => {
                    (conv_forward(layer, p, &map)?, Saved::Input(map))
                }
                LayerSpec::Dense { .. } => (dense_forward(layer, p, &map)?, Saved::Input(map)),
                LayerSpec::Relu => {
                    let out = map.map_values(|v| if v > T::zero() { v } else { T::zero() });
                    (out, Saved::Input(map))
                }
                LayerSpec::AvgPool { .. } => (pool_forward(layer, &map)?, Saved::Nothing),
                LayerSpec::FiberMean => (eqsub_core::project_to_grid(&map), Saved::Nothing),
                LayerSpec::EquiSubsample { target } => {
                    let coset = match (replay.is_some(), self.sampling) {
                        (true, _) => pending
                            .pop_front()
                            .ok_or_else(|| self.layer_err(i, "replay ran out of sampled cosets".into()))?,
                        (false, SamplingMode::PerLayer) => {
                            let out = phi(&map, target, &self.phi)?;
                            degenerate |= out.degenerate;
                            out.coset
                        }
                        (false, SamplingMode::Shortcut) => {
                            if pending.is_empty() {
                                let chain = self.shortcut_chain(i)?;
                                let (tuple, deg) = phi_all(&map, &chain, &self.phi)?;
                                degenerate |= deg;
                                pending.extend(tuple.0);
                            }
                            pending.pop_front().expect("tuple covers every layer of the run")
                        }
                    };
                    if coset.subgroup() != target {
                        return Err(self.layer_err(i, format!("coset {coset} is not over {target}")));
                    }
                    sampled.push(coset);
                    cosets.push(coset);
                    (gather(&map, layer, &coset)?, Saved::Coset(coset))
                }
                LayerSpec::EquiUpsample { .. } => {
                    let coset = cosets
                        .pop()
                        .ok_or_else(|| self.layer_err(i, "no sampling coset left to upsample with".into()))?;
                    if coset.subgroup() != layer.in_domain || !layer.out_domain.contains(&coset.representative()) {
                        return Err(self.layer_err(
                            i,
                            format!("coset {coset} does not fit {} ≤ {}", layer.in_domain, layer.out_domain),
                        ));
                    }
                    (scatter(&map, layer, &coset)?, Saved::Coset(coset))
                }
                LayerSpec::StdSubsample { target } => {
                    let coset = CosetId::identity(target);
                    (gather(&map, layer, &coset)?, Saved::Coset(coset))
                }
                LayerSpec::StdUpsample { .. } => {
                    let coset = CosetId::identity(layer.in_domain);
                    (scatter(&map, layer, &coset)?, Saved::Coset(coset))
                }
            };
            saved.push(keep);
            map = next;
        }
        Ok((
            Signal {
                map,
                cosets,
                degenerate,
            },
            Tape { saved, sampled },
        ))
    }

    /// Reverse pass: parameter gradients and the cotangent of the input map.
    pub fn backward<T: Real>(
        &self,
        params: &Params<T>,
        tape: &Tape<T>,
        cotangent: &FeatureMap<T>,
    ) -> Result<(Grads<T>, FeatureMap<T>), NnError> {
        if tape.saved.len() != self.layers.len() {
            return Err(NnError::Cotangent("tape was recorded by a different model".into()));
        }
        if cotangent.domain() != self.output_domain() || cotangent.channels() != self.output_channels() {
            return Err(NnError::Cotangent(format!(
                "expected {} channels on {}, got {} on {}",
                self.output_channels(),
                self.output_domain(),
                cotangent.channels(),
                cotangent.domain()
            )));
        }
        let mut grads = Params::zeros(self);
        let mut dout = cotangent.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let p = &params.layers[i];
            let g = &mut grads.layers[i];
            dout = match (&layer.spec, &tape.saved[i]) {
                (LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. }, Saved::Input(x)) => conv_backward(layer, p, x, &dout, g)?,
                (LayerSpec::Dense { .. }, Saved::Input(x)) => dense_backward(layer, p, x, &dout, g)?,
                (LayerSpec::Relu, Saved::Input(x)) => {
                    let vals = x
                        .values()
                        .iter()
                        .zip(dout.values())
                        .map(|(&xv, &d)| if xv > T::zero() { d } else { T::zero() })
                        .collect();
                    FeatureMap::new(layer.in_domain, layer.in_channels, vals)?
                }
                (LayerSpec::AvgPool { .. }, Saved::Nothing) => pool_backward(layer, &dout)?,
                (LayerSpec::FiberMean, Saved::Nothing) => fiber_mean_backward(layer, &dout)?,
                (LayerSpec::EquiSubsample { .. } | LayerSpec::StdSubsample { .. }, Saved::Coset(c)) => {
                    scatter_back(&dout, layer, c)?
                }
                (LayerSpec::EquiUpsample { .. } | LayerSpec::StdUpsample { .. }, Saved::Coset(c)) => {
                    gather_back(&dout, layer, c)?
                }
                _ => return Err(self.layer_err(i, "tape entry does not match the layer".into())),
            };
        }
        Ok((grads, dout))
    }
}

fn conv_forward<T: Real>(layer: &Resolved, p: &LayerParams<T>, x: &FeatureMap<T>) -> Result<FeatureMap<T>, NnError> {
    let plan = layer.plan.as_ref().expect("conv plan");
    let (cin, cout, taps) = (layer.in_channels, layer.out_channels, plan.taps);
    let n = layer.out_domain.order();
    let xv = x.values();
    let mut out = Vec::with_capacity(n * cout);
    let mut acc = vec![T::zero(); cout];
    for g in 0..n {
        acc.copy_from_slice(&p.bias);
        let row = &plan.table[g * taps..(g + 1) * taps];
        for (s, &src) in row.iter().enumerate() {
            let xs = &xv[src as usize * cin..(src as usize + 1) * cin];
            let ws = &p.weight[s * cin * cout..(s + 1) * cin * cout];
            for (i, &xi) in xs.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                for (a, &w) in acc.iter_mut().zip(&ws[i * cout..(i + 1) * cout]) {
                    *a = *a + xi * w;
                }
            }
        }
        out.extend_from_slice(&acc);
    }
    Ok(FeatureMap::new(layer.out_domain, cout, out)?)
}

fn conv_backward<T: Real>(
    layer: &Resolved,
    p: &LayerParams<T>,
    x: &FeatureMap<T>,
    dout: &FeatureMap<T>,
    g: &mut LayerParams<T>,
) -> Result<FeatureMap<T>, NnError> {
    let plan = layer.plan.as_ref().expect("conv plan");
    let (cin, cout, taps) = (layer.in_channels, layer.out_channels, plan.taps);
    let xv = x.values();
    let mut dx = vec![T::zero(); xv.len()];
    for o in 0..layer.out_domain.order() {
        let d = dout.at(o);
        if d.iter().all(|v| *v == T::zero()) {
            continue;
        }
        for (b, &dv) in g.bias.iter_mut().zip(d) {
            *b = *b + dv;
        }
        let row = &plan.table[o * taps..(o + 1) * taps];
        for (s, &src) in row.iter().enumerate() {
            let src = src as usize;
            let base = s * cin * cout;
            for i in 0..cin {
                let xi = xv[src * cin + i];
                let ws = &p.weight[base + i * cout..base + (i + 1) * cout];
                let gs = &mut g.weight[base + i * cout..base + (i + 1) * cout];
                let mut back = T::zero();
                for ((gw, &w), &dv) in gs.iter_mut().zip(ws).zip(d) {
                    *gw = *gw + xi * dv;
                    back = back + w * dv;
                }
                dx[src * cin + i] = dx[src * cin + i] + back;
            }
        }
    }
    Ok(FeatureMap::new(layer.in_domain, cin, dx)?)
}

fn dense_forward<T: Real>(layer: &Resolved, p: &LayerParams<T>, x: &FeatureMap<T>) -> Result<FeatureMap<T>, NnError> {
    let nout = p.bias.len();
    let mut out = p.bias.clone();
    for (i, &xi) in x.values().iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(&p.weight[i * nout..(i + 1) * nout]) {
            *o = *o + xi * w;
        }
    }
    Ok(FeatureMap::new(layer.out_domain, layer.out_channels, out)?)
}

fn dense_backward<T: Real>(
    layer: &Resolved,
    p: &LayerParams<T>,
    x: &FeatureMap<T>,
    dout: &FeatureMap<T>,
    g: &mut LayerParams<T>,
) -> Result<FeatureMap<T>, NnError> {
    let d = dout.values();
    let nout = d.len();
    for (b, &dv) in g.bias.iter_mut().zip(d) {
        *b = *b + dv;
    }
    let mut dx = Vec::with_capacity(x.values().len());
    for (i, &xi) in x.values().iter().enumerate() {
        let ws = &p.weight[i * nout..(i + 1) * nout];
        let gs = &mut g.weight[i * nout..(i + 1) * nout];
        let mut back = T::zero();
        for ((gw, &w), &dv) in gs.iter_mut().zip(ws).zip(d) {
            *gw = *gw + xi * dv;
            back = back + w * dv;
        }
        dx.push(back);
    }
    Ok(FeatureMap::new(layer.in_domain, layer.in_channels, dx)?)
}

/// Summed in value order so the output is bitwise equivariant.
fn pool_forward<T: Real>(layer: &Resolved, x: &FeatureMap<T>) -> Result<FeatureMap<T>, NnError> {
    let LayerSpec::AvgPool { kernel } = layer.spec else { unreachable!() };
    Ok(lattice_avg_pool(x, kernel, true))
}

fn pool_backward<T: Real>(layer: &Resolved, dout: &FeatureMap<T>) -> Result<FeatureMap<T>, NnError> {
    let window = layer.window.as_ref().expect("pool window");
    let c = layer.in_channels;
    let scale = T::of(1.0 / window[0].len() as f64);
    let mut dx = vec![T::zero(); dout.values().len()];
    for (g, nbrs) in window.iter().enumerate() {
        for &j in nbrs {
            for ch in 0..c {
                dx[j * c + ch] = dx[j * c + ch] + dout.at(g)[ch] * scale;
            }
        }
    }
    Ok(FeatureMap::new(layer.in_domain, c, dx)?)
}

fn fiber_mean_backward<T: Real>(layer: &Resolved, dout: &FeatureMap<T>) -> Result<FeatureMap<T>, NnError> {
    let points = layer.out_domain.order();
    let fiber = layer.in_domain.point_order();
    let scale = T::of(1.0 / fiber as f64);
    let c = layer.in_channels;
    let mut dx = Vec::with_capacity(points * fiber * c);
    for _ in 0..fiber {
        dx.extend(dout.values().iter().map(|&v| v * scale));
    }
    Ok(FeatureMap::new(layer.in_domain, c, dx)?)
}

/// `out(k) = x(p̄ k)` over the layer's input domain.
fn gather<T: Real>(x: &FeatureMap<T>, layer: &Resolved, coset: &CosetId) -> Result<FeatureMap<T>, NnError> {
    let c = layer.in_channels;
    let mut out = Vec::with_capacity(layer.out_domain.order() * c);
    for j in coset_indices(&layer.in_domain, coset) {
        out.extend_from_slice(x.at(j));
    }
    Ok(FeatureMap::new(layer.out_domain, c, out)?)
}

fn scatter_back<T: Real>(dout: &FeatureMap<T>, layer: &Resolved, coset: &CosetId) -> Result<FeatureMap<T>, NnError> {
    let mut dx = FeatureMap::zeros(layer.in_domain, layer.in_channels);
    for (k, j) in coset_indices(&layer.in_domain, coset).into_iter().enumerate() {
        dx.at_mut(j).copy_from_slice(dout.at(k));
    }
    Ok(dx)
}

/// `out(p̄ k) = x(k)`, zero off the coset.
fn scatter<T: Real>(x: &FeatureMap<T>, layer: &Resolved, coset: &CosetId) -> Result<FeatureMap<T>, NnError> {
    let mut out = FeatureMap::zeros(layer.out_domain, layer.in_channels);
    for (k, j) in coset_indices(&layer.out_domain, coset).into_iter().enumerate() {
        out.at_mut(j).copy_from_slice(x.at(k));
    }
    Ok(out)
}

fn gather_back<T: Real>(dout: &FeatureMap<T>, layer: &Resolved, coset: &CosetId) -> Result<FeatureMap<T>, NnError> {
    let c = layer.in_channels;
    let mut dx = Vec::with_capacity(layer.in_domain.order() * c);
    for j in coset_indices(&layer.out_domain, coset) {
        dx.extend_from_slice(dout.at(j));
    }
    Ok(FeatureMap::new(layer.in_domain, c, dx)?)
}
