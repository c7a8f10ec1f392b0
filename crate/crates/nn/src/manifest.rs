//! Versioned text form of a model architecture.
//!
//! ```text
//! eqsub-model 1
//! group p4 16
//! input 1,1,1,0 channels=1
//! sampling shortcut
//! phi tie=lexicographic mean-subtract=1 pool=3 blur=none
//! layer lift-conv out=8 k=3
//! layer equi-subsample target=2,2,4,0
//! set steps=5000
//! ```
//!
//! Subgroups are written `sx,sy,rotation_order,mirror`. `set` lines carry
//! free-form key/value pairs for callers (e.g. a training configuration).

use std::collections::HashMap;

use eqsub_core::{Blur, GroupSpec, PhiConfig, Subgroup, TiePolicy};

use crate::error::NnError;
use crate::layer::LayerSpec;
use crate::model::{Model, SamplingMode};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "eqsub-model";

#[derive(Clone, Debug)]
pub struct Manifest {
    pub model: Model,
    pub extras: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            extras: Vec::new(),
        }
    }

    pub fn with_extra(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extras.push((key.into(), value.to_string()));
        self
    }

    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extras.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let group = m.input_domain().parent();
        let mut s = format!("{MAGIC} {FORMAT_VERSION}\n");
        s += &format!("group {} {}\n", group.kind(), group.size());
        s += &format!("input {} channels={}\n", subgroup_text(&m.input_domain()), m.input_channels());
        s += &format!(
            "sampling {}\n",
            match m.sampling() {
                SamplingMode::PerLayer => "per-layer",
                SamplingMode::Shortcut => "shortcut",
            }
        );
        s += &format!("phi {}\n", phi_text(m.phi()));
        for spec in m.specs() {
            s += &format!("layer {}\n", layer_text(&spec));
        }
        for (k, v) in &self.extras {
            s += &format!("set {k}={v}\n");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, NnError> {
        let mut group: Option<GroupSpec> = None;
        let mut input: Option<(Subgroup, usize)> = None;
        let mut sampling = SamplingMode::PerLayer;
        let mut phi = PhiConfig::default();
        let mut layers = Vec::new();
        let mut extras = Vec::new();
        let mut saw_magic = false;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |reason: String| NnError::Manifest { line: line_no, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
            let rest = rest.trim();
            if !saw_magic {
                if head != MAGIC {
                    return Err(bad(format!("expected `{MAGIC} <version>` header")));
                }
                let v: u32 = rest.parse().map_err(|_| bad(format!("bad version `{rest}`")))?;
                if v != FORMAT_VERSION {
                    return Err(bad(format!("unsupported version {v}")));
                }
                saw_magic = true;
                continue;
            }
            match head {
                "group" => {
                    let mut it = rest.split_whitespace();
                    let (Some(kind), Some(size), None) = (it.next(), it.next(), it.next()) else {
                        return Err(bad("expected `group <kind> <size>`".into()));
                    };
                    let size: u32 = size.parse().map_err(|_| bad(format!("bad size `{size}`")))?;
                    group = Some(GroupSpec::parse(kind, size).map_err(|e| bad(e.to_string()))?);
                }
                "input" => {
                    let g = group.ok_or_else(|| bad("`input` before `group`".into()))?;
                    let (sub, kv) = rest.split_once(' ').ok_or_else(|| bad("expected `input <subgroup> channels=C`".into()))?;
                    let kv = key_values(kv).map_err(bad)?;
                    let domain = parse_subgroup(g, sub).map_err(bad)?;
                    input = Some((domain, usize_field(&kv, "channels").map_err(bad)?));
                }
                "sampling" => {
                    sampling = match rest {
                        "per-layer" => SamplingMode::PerLayer,
                        "shortcut" => SamplingMode::Shortcut,
                        other => return Err(bad(format!("unknown sampling mode `{other}`"))),
                    }
                }
                "phi" => phi = parse_phi(rest).map_err(bad)?,
                "layer" => {
                    let g = group.ok_or_else(|| bad("`layer` before `group`".into()))?;
                    layers.push(parse_layer(g, rest).map_err(bad)?);
                }
                "set" => {
                    let (k, v) = rest.split_once('=').ok_or_else(|| bad("expected `set key=value`".into()))?;
                    extras.push((k.to_string(), v.to_string()));
                }
                other => return Err(bad(format!("unknown directive `{other}`"))),
            }
        }
        if !saw_magic {
            return Err(NnError::Manifest {
                line: 0,
                reason: "empty manifest".into(),
            });
        }
        let (domain, channels) = input.ok_or(NnError::Manifest {
            line: 0,
            reason: "missing `input` line".into(),
        })?;
        let model = Model::new(domain, channels, &layers, phi, sampling)?;
        Ok(Self { model, extras })
    }
}

pub fn subgroup_text(s: &Subgroup) -> String {
    format!("{},{},{},{}", s.stride_x(), s.stride_y(), s.rotation_order(), s.has_mirror() as u8)
}

pub fn parse_subgroup(group: GroupSpec, text: &str) -> Result<Subgroup, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("subgroup `{text}` must be sx,sy,rotation_order,mirror"));
    }
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("bad number `{s}` in `{text}`"));
    let mirror = match parts[3].trim() {
        "0" => false,
        "1" => true,
        other => return Err(format!("mirror flag must be 0 or 1, got `{other}`")),
    };
    let rot = num(parts[2])?;
    let rot = u8::try_from(rot).map_err(|_| format!("rotation order {rot} out of range"))?;
    Subgroup::new(group, num(parts[0])?, num(parts[1])?, rot, mirror).map_err(|e| e.to_string())
}

fn phi_text(p: &PhiConfig) -> String {
    let tie = match p.tie_policy {
        TiePolicy::Lexicographic => "lexicographic".to_string(),
        TiePolicy::UniformRandom { seed } => format!("uniform:{seed}"),
    };
    let blur = match p.blur {
        None => "none".to_string(),
        Some(b) => format!("{}:{}", b.kernel, b.sigma),
    };
    format!(
        "tie={tie} mean-subtract={} pool={} blur={blur}",
        p.mean_subtract as u8, p.pool_kernel
    )
}

fn parse_phi(text: &str) -> Result<PhiConfig, String> {
    let kv = key_values(text)?;
    let tie = match kv.get("tie").map(String::as_str) {
        Some("lexicographic") => TiePolicy::Lexicographic,
        Some(t) if t.starts_with("uniform:") => TiePolicy::UniformRandom {
            seed: t["uniform:".len()..].parse().map_err(|_| format!("bad tie seed in `{t}`"))?,
        },
        other => return Err(format!("bad tie policy {other:?}")),
    };
    let mean_subtract = match kv.get("mean-subtract").map(String::as_str) {
        Some("0") => false,
        Some("1") => true,
        other => return Err(format!("mean-subtract must be 0 or 1, got {other:?}")),
    };
    let blur = match kv.get("blur").map(String::as_str) {
        Some("none") => None,
        Some(b) => {
            let (k, s) = b.split_once(':').ok_or_else(|| format!("blur must be none or K:SIGMA, got `{b}`"))?;
            Some(Blur {
                kernel: k.parse().map_err(|_| format!("bad blur kernel `{k}`"))?,
                sigma: s.parse().map_err(|_| format!("bad blur sigma `{s}`"))?,
            })
        }
        None => return Err("missing blur".into()),
    };
    let cfg = PhiConfig {
        tie_policy: tie,
        mean_subtract,
        pool_kernel: usize_field(&kv, "pool")?,
        blur,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn layer_text(spec: &LayerSpec) -> String {
    let name = spec.name();
    match spec {
        LayerSpec::LiftConv { out_channels, kernel } | LayerSpec::GConv { out_channels, kernel } => {
            format!("{name} out={out_channels} k={kernel}")
        }
        LayerSpec::Relu | LayerSpec::FiberMean => name.to_string(),
        LayerSpec::AvgPool { kernel } => format!("{name} k={kernel}"),
        LayerSpec::EquiSubsample { target }
        | LayerSpec::EquiUpsample { target }
        | LayerSpec::StdSubsample { target }
        | LayerSpec::StdUpsample { target } => format!("{name} target={}", subgroup_text(target)),
        LayerSpec::Dense { out_domain, out_channels } => {
            format!("{name} domain={} out={out_channels}", subgroup_text(out_domain))
        }
    }
}

pub fn parse_layer(group: GroupSpec, text: &str) -> Result<LayerSpec, String> {
    let (name, rest) = text.split_once(' ').unwrap_or((text, ""));
    let kv = key_values(rest)?;
    let target = || -> Result<Subgroup, String> {
        parse_subgroup(group, kv.get("target").ok_or_else(|| format!("{name}: missing target"))?)
    };
    Ok(match name {
        "lift-conv" => LayerSpec::LiftConv {
            out_channels: usize_field(&kv, "out")?,
            kernel: usize_field(&kv, "k")?,
        },
        "g-conv" => LayerSpec::GConv {
            out_channels: usize_field(&kv, "out")?,
            kernel: usize_field(&kv, "k")?,
        },
        "relu" => LayerSpec::Relu,
        "fiber-mean" => LayerSpec::FiberMean,
        "avgpool-s1" => LayerSpec::AvgPool {
            kernel: usize_field(&kv, "k")?,
        },
        "equi-subsample" => LayerSpec::EquiSubsample { target: target()? },
        "equi-upsample" => LayerSpec::EquiUpsample { target: target()? },
        "std-subsample" => LayerSpec::StdSubsample { target: target()? },
        "std-upsample" => LayerSpec::StdUpsample { target: target()? },
        "dense" => LayerSpec::Dense {
            out_domain: parse_subgroup(group, kv.get("domain").ok_or("dense: missing domain")?)?,
            out_channels: usize_field(&kv, "out")?,
        },
        other => return Err(format!("unknown layer kind `{other}`")),
    })
}

fn key_values(text: &str) -> Result<HashMap<String, String>, String> {
    let mut out = HashMap::new();
    for tok in text.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("expected key=value, got `{tok}`"))?;
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(format!("duplicate key `{k}`"));
        }
    }
    Ok(out)
}

fn usize_field(kv: &HashMap<String, String>, key: &str) -> Result<usize, String> {
    let v = kv.get(key).ok_or_else(|| format!("missing `{key}`"))?;
    v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
}
