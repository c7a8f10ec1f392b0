//! Autoencoder architectures: the group-equivariant autoencoder over a
//! subgroup chain and the strided baselines.

use std::fmt;
use std::str::FromStr;

use eqsub_core::{CosetId, CosetTuple, FeatureMap, GroupKind, GroupSpec, PhiConfig, Real, Subgroup, SubgroupChain};
use eqsub_nn::{LayerSpec, Model, Params, SamplingMode, Signal};

use crate::error::GaeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    GaeP1,
    GaeP4,
    GaeP4m,
    ConvAeP1,
    GConvAeP4,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::GaeP1,
        Variant::GaeP4,
        Variant::GaeP4m,
        Variant::ConvAeP1,
        Variant::GConvAeP4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::GaeP1 => "gae-p1",
            Variant::GaeP4 => "gae-p4",
            Variant::GaeP4m => "gae-p4m",
            Variant::ConvAeP1 => "convae-p1",
            Variant::GConvAeP4 => "gconvae-p4",
        }
    }

    pub fn kind(self) -> GroupKind {
        match self {
            Variant::GaeP1 | Variant::ConvAeP1 => GroupKind::P1,
            Variant::GaeP4 | Variant::GConvAeP4 => GroupKind::P4,
            Variant::GaeP4m => GroupKind::P4m,
        }
    }

    pub fn is_equivariant(self) -> bool {
        matches!(self, Variant::GaeP1 | Variant::GaeP4 | Variant::GaeP4m)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = GaeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| GaeError::Config(format!("unknown model variant `{s}`")))
    }
}

/// Channel widths before rescaling by the point group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Widths {
    pub base_channels: usize,
    pub latent: usize,
    /// Stride-1 average pool (kernel 3) after each upsampling step.
    pub smooth_upsampling: bool,
}

impl Default for Widths {
    fn default() -> Self {
        Self {
            base_channels: 16,
            latent: 16,
            smooth_upsampling: true,
        }
    }
}

/// `⌊base / √|H|⌋`, at least 1.
pub fn rescaled_channels(base: usize, point_order: usize) -> usize {
    ((base as f64 / (point_order as f64).sqrt()).floor() as usize).max(1)
}

fn kernel_for(g: &Subgroup) -> usize {
    if g.lattice_x() > 1 {
        3
    } else {
        1
    }
}

/// Encoder and decoder layer lists of a GAE over `chain`.
pub fn gae_layers(chain: &SubgroupChain, channels: usize, latent: usize, smooth: bool) -> (Vec<LayerSpec>, Vec<LayerSpec>) {
    let g = chain.groups();
    let last = g.len() - 1;
    let mut enc = vec![
        LayerSpec::LiftConv {
            out_channels: channels,
            kernel: kernel_for(&g[0]),
        },
        LayerSpec::Relu,
    ];
    for l in 1..=last {
        enc.push(LayerSpec::EquiSubsample { target: g[l] });
        if l < last {
            enc.push(LayerSpec::GConv {
                out_channels: channels,
                kernel: kernel_for(&g[l]),
            });
            enc.push(LayerSpec::Relu);
        }
    }
    enc.push(LayerSpec::GConv {
        out_channels: latent,
        kernel: kernel_for(&g[last]),
    });

    let mut dec = vec![
        LayerSpec::GConv {
            out_channels: channels,
            kernel: kernel_for(&g[last]),
        },
        LayerSpec::Relu,
    ];
    for l in (1..=last).rev() {
        dec.push(LayerSpec::EquiUpsample { target: g[l - 1] });
        if smooth && g[l - 1].lattice_x() > 1 {
            dec.push(LayerSpec::AvgPool { kernel: 3 });
        }
        dec.push(LayerSpec::GConv {
            out_channels: channels,
            kernel: kernel_for(&g[l - 1]),
        });
        dec.push(LayerSpec::Relu);
    }
    dec.push(LayerSpec::GConv {
        out_channels: 1,
        kernel: kernel_for(&g[0]),
    });
    dec.push(LayerSpec::FiberMean);
    (enc, dec)
}

/// Strided baseline: plain restriction down to a 2×2 lattice, a dense
/// bottleneck, zero-insertion upsampling back.
pub fn baseline_layers(
    spec: GroupSpec,
    channels: usize,
    latent: usize,
    smooth: bool,
) -> Result<(Vec<LayerSpec>, Vec<LayerSpec>), GaeError> {
    let n = spec.size();
    if n < 4 || !n.is_power_of_two() {
        return Err(GaeError::Config(format!("baselines need a power-of-two grid of at least 4, got {n}")));
    }
    let full = Subgroup::full(spec);
    let (rot, mirror) = (full.rotation_order(), full.has_mirror());
    let mut levels = vec![full];
    let mut s = 2;
    while s <= n / 2 {
        levels.push(Subgroup::new(spec, s, s, rot, mirror)?);
        s *= 2;
    }
    let mut enc = vec![LayerSpec::LiftConv {
        out_channels: channels,
        kernel: 3,
    }];
    enc.push(LayerSpec::Relu);
    for k in &levels[1..] {
        enc.push(LayerSpec::StdSubsample { target: *k });
        enc.push(LayerSpec::GConv {
            out_channels: channels,
            kernel: 3,
        });
        enc.push(LayerSpec::Relu);
    }
    enc.push(LayerSpec::Dense {
        out_domain: Subgroup::trivial(spec),
        out_channels: latent,
    });

    let mut dec = vec![
        LayerSpec::Dense {
            out_domain: *levels.last().expect("non-empty"),
            out_channels: channels,
        },
        LayerSpec::Relu,
    ];
    for i in (1..levels.len()).rev() {
        dec.push(LayerSpec::StdUpsample { target: levels[i - 1] });
        if smooth {
            dec.push(LayerSpec::AvgPool { kernel: 3 });
        }
        dec.push(LayerSpec::GConv {
            out_channels: channels,
            kernel: 3,
        });
        dec.push(LayerSpec::Relu);
    }
    dec.push(LayerSpec::GConv {
        out_channels: 1,
        kernel: 3,
    });
    dec.push(LayerSpec::FiberMean);
    Ok((enc, dec))
}

/// The latent code `(z_inv, z_eq)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode<T = f64> {
    /// Values of the encoder output map; for a chain ending in `{e}` this
    /// is the invariant vector `f_L(e)`.
    pub z_inv: Vec<T>,
    /// Sampling cosets, one per equivariant subsampling layer.
    pub z_eq: CosetTuple,
    pub degenerate: bool,
}

impl<T: Real> LatentCode<T> {
    /// The tuple folded into one coset of `G_L` by ν.
    pub fn r_eq(&self, chain: &SubgroupChain) -> Result<CosetId, GaeError> {
        Ok(chain.nu(&self.z_eq)?)
    }

    pub fn from_r_eq(z_inv: Vec<T>, r_eq: &CosetId, chain: &SubgroupChain) -> Result<Self, GaeError> {
        Ok(Self {
            z_inv,
            z_eq: chain.nu_inv(r_eq)?,
            degenerate: false,
        })
    }

    /// Two lines: `r_eq <element literal>` and `z_inv <values>`.
    pub fn to_text(&self, chain: &SubgroupChain) -> Result<String, GaeError> {
        let values: Vec<String> = self.z_inv.iter().map(|v| v.to_string()).collect();
        Ok(format!("r_eq {}\nz_inv {}\n", self.r_eq(chain)?.representative(), values.join(" ")))
    }

    pub fn parse(text: &str, chain: &SubgroupChain) -> Result<Self, GaeError> {
        let mut r_eq = None;
        let mut z_inv = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "r_eq" => {
                    let g = chain.top().parent().parse_element(rest)?;
                    r_eq = Some(chain.bottom().coset_of(&g)?);
                }
                "z_inv" => {
                    let values: Result<Vec<T>, _> = rest
                        .split_whitespace()
                        .map(|v| v.parse::<f64>().map(T::of))
                        .collect();
                    z_inv = Some(values.map_err(|_| GaeError::Config(format!("bad z_inv values `{rest}`")))?);
                }
                other => return Err(GaeError::Config(format!("unknown latent field `{other}`"))),
            }
        }
        match (z_inv, r_eq) {
            (Some(z), Some(r)) => Self::from_r_eq(z, &r, chain),
            _ => Err(GaeError::Config("latent needs both r_eq and z_inv".into())),
        }
    }
}

/// An encoder followed by a decoder, held as one sequential model.
#[derive(Clone, Debug)]
pub struct Autoencoder {
    model: Model,
    split: usize,
    chain: Option<SubgroupChain>,
}

impl Autoencoder {
    pub fn build(variant: Variant, size: u32, widths: Widths, phi: PhiConfig) -> Result<Self, GaeError> {
        let spec = GroupSpec::new(variant.kind(), size)?;
        let channels = rescaled_channels(widths.base_channels, variant.kind().point_order());
        if variant.is_equivariant() {
            let chain = SubgroupChain::default_for(spec)?;
            Self::gae(&chain, channels, widths.latent, widths.smooth_upsampling, phi)
        } else {
            let (enc, dec) = baseline_layers(spec, channels, widths.latent, widths.smooth_upsampling)?;
            Self::from_layers(spec, &enc, &dec, phi)
        }
    }

    pub fn gae(chain: &SubgroupChain, channels: usize, latent: usize, smooth: bool, phi: PhiConfig) -> Result<Self, GaeError> {
        if !chain.top().is_full() {
            return Err(GaeError::Config(format!("chain must start at the whole group, got {}", chain.top())));
        }
        let (enc, dec) = gae_layers(chain, channels, latent, smooth);
        Self::from_layers(chain.top().parent(), &enc, &dec, phi)
    }

    fn from_layers(spec: GroupSpec, enc: &[LayerSpec], dec: &[LayerSpec], phi: PhiConfig) -> Result<Self, GaeError> {
        let layers: Vec<LayerSpec> = enc.iter().chain(dec).copied().collect();
        let model = Model::new(Subgroup::translations(spec), 1, &layers, phi, SamplingMode::Shortcut)?;
        Self::from_model(model, enc.len())
    }

    /// Wraps a combined model whose first `split` layers form the encoder.
    pub fn from_model(model: Model, split: usize) -> Result<Self, GaeError> {
        if split > model.len() {
            return Err(GaeError::Config(format!("encoder length {split} exceeds {} layers", model.len())));
        }
        let specs = model.specs();
        let top = Subgroup::full(model.input_domain().parent());
        let mut groups = vec![top];
        for s in &specs[..split] {
            if let LayerSpec::EquiSubsample { target } = s {
                groups.push(*target);
            }
        }
        let chain = if groups.len() > 1 { Some(SubgroupChain::new(groups)?) } else { None };
        if chain.is_some() && top.point_order() > 1 && top.parent().size() < 3 {
            return Err(GaeError::Config(format!(
                "the half turn of {} fixes every image on a {n}×{n} grid, so no image encoder can be equivariant; use size 3 or more",
                top.parent(),
                n = top.parent().size()
            )));
        }
        let ups = specs[split..]
            .iter()
            .filter(|s| matches!(s, LayerSpec::EquiUpsample { .. }))
            .count();
        let downs = chain.as_ref().map_or(0, |c| c.layers());
        if ups != downs {
            return Err(GaeError::Config(format!(
                "decoder has {ups} equivariant upsampling layers for {downs} subsampling layers"
            )));
        }
        Ok(Self { model, split, chain })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn group(&self) -> GroupSpec {
        self.model.input_domain().parent()
    }

    pub fn grid(&self) -> Subgroup {
        self.model.input_domain()
    }

    /// The encoder's subgroup chain; `None` for baselines.
    pub fn chain(&self) -> Option<&SubgroupChain> {
        self.chain.as_ref()
    }

    pub fn encoder(&self) -> Model {
        self.model.slice(0..self.split)
    }

    pub fn decoder(&self) -> Model {
        self.model.slice(self.split..self.model.len())
    }

    pub fn encode<T: Real>(&self, params: &Params<T>, image: &FeatureMap<T>) -> Result<LatentCode<T>, GaeError> {
        let enc = self.encoder();
        let p = Params {
            layers: params.layers[..self.split].to_vec(),
        };
        let (out, _) = enc.forward(&p, Signal::new(image.clone()))?;
        Ok(LatentCode {
            z_inv: out.map.into_values(),
            z_eq: CosetTuple(out.cosets),
            degenerate: out.degenerate,
        })
    }

    pub fn decode<T: Real>(&self, params: &Params<T>, z: &LatentCode<T>) -> Result<FeatureMap<T>, GaeError> {
        let dec = self.decoder();
        if let Some(chain) = &self.chain {
            chain.validate_tuple(&z.z_eq)?;
        } else if !z.z_eq.is_empty() {
            return Err(GaeError::Config("baseline decoders take no sampling cosets".into()));
        }
        let p = Params {
            layers: params.layers[self.split..].to_vec(),
        };
        let map = FeatureMap::new(dec.input_domain(), dec.input_channels(), z.z_inv.clone())?;
        let (out, _) = dec.forward(&p, Signal::with_cosets(map, z.z_eq.0.clone()))?;
        Ok(out.map)
    }

    /// Encoder and decoder in one pass.
    pub fn reconstruct<T: Real>(&self, params: &Params<T>, image: &FeatureMap<T>) -> Result<FeatureMap<T>, GaeError> {
        Ok(self.model.forward(params, Signal::new(image.clone()))?.0.map)
    }
}
