//! The three panels of the one-dimensional subsampling illustration and
//! the latent manipulation demos.

use std::fmt::Write as _;

use eqsub_core::{act, subsample, FeatureMap, GroupElement, GroupSpec, PhiConfig, Subgroup};
use eqsub_nn::Params;

use crate::arch::{Autoencoder, LatentCode};
use crate::error::GaeError;

/// Length-8 fixture whose maximum sits at position 2.
pub const FIG1_FIXTURE: [f64; 8] = [1.0, 0.0, 6.0, 2.0, 0.0, 3.0, 1.0, 2.0];

#[derive(Clone, Debug, PartialEq)]
pub struct Fig1Panel {
    pub shift: i64,
    pub input: Vec<f64>,
    /// Sampling index `p mod 2`.
    pub index: u32,
    /// Positions `p̄ + 2k` read by the subsampler.
    pub positions: Vec<u32>,
    pub output: Vec<f64>,
}

/// Subsamples the fixture by 2 on `Z₈` after shifting it by 0, 1 and 2.
pub fn demo_fig1() -> Result<Vec<Fig1Panel>, GaeError> {
    let spec = GroupSpec::z1(8);
    let g = Subgroup::full(spec);
    let k = Subgroup::strided(spec, 2)?;
    let f = FeatureMap::new(g, 1, FIG1_FIXTURE.to_vec())?;
    let mut panels = Vec::new();
    for shift in 0..3 {
        let moved = act(&spec.translation(shift, 0), &f)?;
        let s = subsample(&moved, k, &PhiConfig::plain())?;
        let rep = s.pair.coset().representative();
        let positions = k.elements().iter().map(|e| (rep * *e).tx()).collect();
        panels.push(Fig1Panel {
            shift,
            input: moved.values().to_vec(),
            index: rep.tx(),
            positions,
            output: s.pair.map().values().to_vec(),
        });
    }
    Ok(panels)
}

fn join(v: &[impl ToString]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn fig1_trace(panels: &[Fig1Panel]) -> String {
    let mut s = String::new();
    for p in panels {
        let _ = writeln!(s, "shift {}: input [{}]", p.shift, join(&p.input));
        let _ = writeln!(
            s,
            "  sampling index {} -> positions [{}] -> output [{}]",
            p.index,
            join(&p.positions),
            join(&p.output)
        );
    }
    s
}

pub fn fig1_csv(panels: &[Fig1Panel]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["shift", "index", "k", "position", "value"]).expect("in-memory write");
    for p in panels {
        for (k, (pos, v)) in p.positions.iter().zip(&p.output).enumerate() {
            w.write_record([p.shift.to_string(), p.index.to_string(), k.to_string(), pos.to_string(), v.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Reconstruction and the decoding of `action · z_eq`.
pub fn manipulate(
    ae: &Autoencoder,
    params: &Params<f32>,
    image: &FeatureMap<f32>,
    action: &GroupElement,
) -> Result<(FeatureMap<f32>, FeatureMap<f32>), GaeError> {
    let chain = ae
        .chain()
        .ok_or_else(|| GaeError::Config("manipulation needs an equivariant autoencoder".into()))?;
    let z = ae.encode(params, image)?;
    let plain = ae.decode(params, &z)?;
    let moved = LatentCode {
        z_eq: chain.act_tuple(action, &z.z_eq)?,
        ..z
    };
    Ok((plain, ae.decode(params, &moved)?))
}

/// Decodes `(z_inv(b), z_eq(a))`: the content of `b` at the pose of `a`.
pub fn swap_invariant(
    ae: &Autoencoder,
    params: &Params<f32>,
    a: &FeatureMap<f32>,
    b: &FeatureMap<f32>,
) -> Result<FeatureMap<f32>, GaeError> {
    let za = ae.encode(params, a)?;
    let zb = ae.encode(params, b)?;
    ae.decode(
        params,
        &LatentCode {
            z_inv: zb.z_inv,
            z_eq: za.z_eq,
            degenerate: false,
        },
    )
}
