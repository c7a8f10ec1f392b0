use std::fmt;
use std::sync::Arc;

use eqsub_core::equisample::lattice_window;
use eqsub_core::{GroupElement, Subgroup};

use crate::error::NnError;

/// One layer of a sequential model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    /// Image on the grid → map on the group: `out(t, h) = Σ_δ W(δ) I(t + h δ)`.
    LiftConv { out_channels: usize, kernel: usize },
    /// `out(g) = b + Σ_{k ∈ S} W(k) f(g k)` with `S` = lattice window × point group.
    GConv { out_channels: usize, kernel: usize },
    Relu,
    /// Stride-1 average pool over the translation lattice.
    AvgPool { kernel: usize },
    /// Equivariant subsampling onto `target`; emits the sampling coset.
    EquiSubsample { target: Subgroup },
    /// Equivariant upsampling onto `target`; consumes the most recent coset.
    EquiUpsample { target: Subgroup },
    /// Plain restriction to `target` (strided-layer baseline).
    StdSubsample { target: Subgroup },
    /// Zero extension to `target` (transposed-stride baseline).
    StdUpsample { target: Subgroup },
    /// Fully connected map from the flattened input to a map on `out_domain`.
    Dense { out_domain: Subgroup, out_channels: usize },
    /// Mean over each point-group fiber: map on `G` → image on the lattice.
    FiberMean,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::LiftConv { .. } => "lift-conv",
            LayerSpec::GConv { .. } => "g-conv",
            LayerSpec::Relu => "relu",
            LayerSpec::AvgPool { .. } => "avgpool-s1",
            LayerSpec::EquiSubsample { .. } => "equi-subsample",
            LayerSpec::EquiUpsample { .. } => "equi-upsample",
            LayerSpec::StdSubsample { .. } => "std-subsample",
            LayerSpec::StdUpsample { .. } => "std-upsample",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::FiberMean => "fiber-mean",
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } | LayerSpec::Dense { .. })
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Gather table of a convolution: `table[g * taps + s]` is the input index
/// read by output element `g` through tap `s`.
#[derive(Debug)]
pub(crate) struct ConvPlan {
    pub taps: usize,
    pub table: Vec<u32>,
}

/// A layer with its input/output shapes resolved.
#[derive(Clone, Debug)]
pub(crate) struct Resolved {
    pub spec: LayerSpec,
    pub in_domain: Subgroup,
    pub in_channels: usize,
    pub out_domain: Subgroup,
    pub out_channels: usize,
    pub plan: Option<Arc<ConvPlan>>,
    pub window: Option<Arc<Vec<Vec<usize>>>>,
}

impl Resolved {
    pub fn weight_len(&self) -> usize {
        match self.spec {
            LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } => {
                self.plan.as_ref().expect("conv plan").taps * self.in_channels * self.out_channels
            }
            LayerSpec::Dense { .. } => self.in_domain.order() * self.in_channels * self.out_domain.order() * self.out_channels,
            _ => 0,
        }
    }

    pub fn bias_len(&self) -> usize {
        match self.spec {
            LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } => self.out_channels,
            LayerSpec::Dense { .. } => self.out_domain.order() * self.out_channels,
            _ => 0,
        }
    }

    /// Fan-in and fan-out used for uniform Glorot initialization.
    pub fn fans(&self) -> (usize, usize) {
        match self.spec {
            LayerSpec::LiftConv { .. } | LayerSpec::GConv { .. } => {
                let taps = self.plan.as_ref().expect("conv plan").taps;
                (taps * self.in_channels, taps * self.out_channels)
            }
            LayerSpec::Dense { .. } => (
                self.in_domain.order() * self.in_channels,
                self.out_domain.order() * self.out_channels,
            ),
            _ => (0, 0),
        }
    }
}

fn window_offsets(domain: &Subgroup, kernel: usize) -> Vec<(i64, i64)> {
    let r = (kernel / 2) as i64;
    let mut out = Vec::new();
    let ys: Vec<i64> = if domain.parent().kind().is_1d() { vec![0] } else { (-r..=r).collect() };
    for dy in ys {
        for dx in -r..=r {
            out.push((dx, dy));
        }
    }
    out
}

fn conv_plan(domain: &Subgroup, kernel: usize) -> ConvPlan {
    let spec = domain.parent();
    let mut taps: Vec<GroupElement> = Vec::new();
    for (rot, mirror) in domain.point_elements() {
        for &(dx, dy) in &window_offsets(domain, kernel) {
            let t = spec
                .element(
                    dx * domain.stride_x() as i64,
                    dy * domain.stride_y() as i64,
                    rot as i64,
                    mirror,
                )
                .expect("domain members are group elements");
            taps.push(t);
        }
    }
    let mut table = Vec::with_capacity(domain.order() * taps.len());
    for i in 0..domain.order() {
        let g = domain.element_at(i);
        for k in &taps {
            table.push(domain.index_of(&(g * *k)) as u32);
        }
    }
    ConvPlan {
        taps: taps.len(),
        table,
    }
}

fn lift_plan(input: &Subgroup, output: &Subgroup, kernel: usize) -> ConvPlan {
    let offsets = window_offsets(input, kernel);
    let mut table = Vec::with_capacity(output.order() * offsets.len());
    for i in 0..output.order() {
        let g = output.element_at(i);
        for &(dx, dy) in &offsets {
            let (x, y) = g.conjugate_translation(dx * input.stride_x() as i64, dy * input.stride_y() as i64);
            let t = output.parent().translation(g.tx() as i64 + x, g.ty() as i64 + y);
            table.push(input.index_of(&t) as u32);
        }
    }
    ConvPlan {
        taps: offsets.len(),
        table,
    }
}

/// Resolves one layer given its input shape.
pub(crate) fn resolve(index: usize, spec: LayerSpec, in_domain: Subgroup, in_channels: usize) -> Result<Resolved, NnError> {
    let err = |reason: String| NnError::Layer {
        index,
        kind: spec.name(),
        reason,
    };
    let odd = |k: usize| -> Result<(), NnError> {
        if k == 0 || k % 2 == 0 {
            Err(err(format!("kernel size must be odd, got {k}")))
        } else {
            Ok(())
        }
    };
    let positive = |c: usize| -> Result<(), NnError> {
        if c == 0 {
            Err(err("channel count must be positive".into()))
        } else {
            Ok(())
        }
    };
    let group = in_domain.parent();
    let same = |domain: Subgroup, channels: usize| Resolved {
        spec,
        in_domain,
        in_channels,
        out_domain: domain,
        out_channels: channels,
        plan: None,
        window: None,
    };
    let same_group = |target: &Subgroup| -> Result<(), NnError> {
        if target.parent() != group {
            Err(err(format!("target {target} is over a different group than the input {in_domain}")))
        } else {
            Ok(())
        }
    };
    Ok(match spec {
        LayerSpec::LiftConv { out_channels, kernel } => {
            odd(kernel)?;
            positive(out_channels)?;
            if in_domain != Subgroup::translations(group) {
                return Err(err(format!("input must be an image on the full grid, got {in_domain}")));
            }
            let out = Subgroup::full(group);
            Resolved {
                plan: Some(Arc::new(lift_plan(&in_domain, &out, kernel))),
                ..same(out, out_channels)
            }
        }
        LayerSpec::GConv { out_channels, kernel } => {
            odd(kernel)?;
            positive(out_channels)?;
            Resolved {
                plan: Some(Arc::new(conv_plan(&in_domain, kernel))),
                ..same(in_domain, out_channels)
            }
        }
        LayerSpec::Relu => same(in_domain, in_channels),
        LayerSpec::AvgPool { kernel } => {
            odd(kernel)?;
            Resolved {
                window: Some(Arc::new(lattice_window(&in_domain, kernel))),
                ..same(in_domain, in_channels)
            }
        }
        LayerSpec::EquiSubsample { target } | LayerSpec::StdSubsample { target } => {
            same_group(&target)?;
            if !target.is_subgroup_of(&in_domain) {
                return Err(err(format!("{target} is not a subgroup of the input domain {in_domain}")));
            }
            same(target, in_channels)
        }
        LayerSpec::EquiUpsample { target } | LayerSpec::StdUpsample { target } => {
            same_group(&target)?;
            if !in_domain.is_subgroup_of(&target) {
                return Err(err(format!("input domain {in_domain} is not a subgroup of {target}")));
            }
            same(target, in_channels)
        }
        LayerSpec::Dense { out_domain, out_channels } => {
            same_group(&out_domain)?;
            positive(out_channels)?;
            same(out_domain, out_channels)
        }
        LayerSpec::FiberMean => same(in_domain.translation_part(), in_channels),
    })
}
