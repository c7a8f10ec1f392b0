//! Central finite differences against [`Model::backward`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqsub_core::{FeatureMap, Real};

use crate::error::NnError;
use crate::model::{Model, Signal};
use crate::params::Params;

/// Worst relative error seen for one parameter block (or for the input).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    /// Layer index, or `None` for the model input.
    pub layer: Option<usize>,
    pub kind: &'static str,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }
}

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central difference at `x0`, shrinking the step tenfold (at most twice)
/// while the three samples are not collinear, i.e. while the step crosses
/// a relu kink. Every model here is piecewise linear along one coordinate,
/// so a collinear triple gives the slope up to rounding.
fn central_difference(mut f: impl FnMut(f64) -> Result<f64, NnError>, x0: f64, eps: f64) -> Result<f64, NnError> {
    let mid = f(x0)?;
    let mut h = eps;
    let mut slope = 0.0;
    for _ in 0..3 {
        let (hi, lo) = (x0 + h, x0 - h);
        let (up, down) = (f(hi)?, f(lo)?);
        slope = (up - down) / (hi - lo);
        let curvature = (up - mid) - (mid - down);
        let noise = 1e-12 * (up.abs() + mid.abs() + down.abs() + 1.0);
        if curvature.abs() <= 1e-6 * (up - down).abs() + noise {
            break;
        }
        h /= 10.0;
    }
    Ok(slope)
}

fn objective(out: &FeatureMap<f64>, cot: &FeatureMap<f64>) -> f64 {
    out.values().iter().zip(cot.values()).map(|(a, b)| a * b).sum()
}

/// Compares analytic and numeric gradients of `Σ out · c` for a random
/// cotangent `c`, on up to `samples` parameters per layer and `samples`
/// input entries. Sampling cosets from the unperturbed pass are replayed
/// for every perturbed evaluation.
///
/// The backward pass runs in `T`; finite differences always run in f64 on
/// the same values widened, so a 32-bit check measures the 32-bit gradients
/// rather than 32-bit cancellation in the difference quotient.
pub fn grad_check<T: Real>(
    model: &Model,
    params: &Params<T>,
    input: &Signal<T>,
    samples: usize,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport, NnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (out, tape) = model.forward(params, input.clone())?;
    let cot = FeatureMap::from_fn(out.map.domain(), out.map.channels(), |_, _| T::of(rng.gen_range(-1.0..1.0)));
    let (grads, dx) = model.backward(params, &tape, &cot)?;
    let sampled = tape.sampled().to_vec();
    let cot = cot.cast::<f64>();
    let params = &params.cast::<f64>();
    let input = &Signal {
        map: input.map.cast::<f64>(),
        cosets: input.cosets.clone(),
        degenerate: input.degenerate,
    };
    let eval = |p: &Params<f64>, x: &Signal<f64>| -> Result<f64, NnError> {
        let (o, _) = model.forward_replay(p, x.clone(), &sampled)?;
        Ok(objective(&o.map, &cot))
    };

    let mut blocks = Vec::new();
    let specs = model.specs();
    for (i, block) in params.layers.iter().enumerate() {
        if block.is_empty() {
            continue;
        }
        let picks = sample(&mut rng, block.len(), samples.min(block.len()));
        let mut worst = 0.0f64;
        let mut p = params.clone();
        for j in picks.iter() {
            let orig = block.get(j);
            let numeric = central_difference(
                |v| {
                    *p.layers[i].get_mut(j) = v;
                    eval(&p, input)
                },
                orig,
                eps,
            )?;
            *p.layers[i].get_mut(j) = orig;
            worst = worst.max(rel_error(grads.layers[i].get(j).as_f64(), numeric));
        }
        blocks.push(BlockCheck {
            layer: Some(i),
            kind: specs[i].name(),
            checked: picks.len(),
            max_rel_error: worst,
        });
    }

    let n = input.map.values().len();
    let picks = sample(&mut rng, n, samples.min(n));
    let mut worst = 0.0f64;
    let mut x = input.clone();
    for j in picks.iter() {
        let orig = input.map.values()[j];
        let numeric = central_difference(
            |v| {
                x.map.values_mut()[j] = v;
                eval(params, &x)
            },
            orig,
            eps,
        )?;
        x.map.values_mut()[j] = orig;
        worst = worst.max(rel_error(dx.values()[j].as_f64(), numeric));
    }
    blocks.push(BlockCheck {
        layer: None,
        kind: "input",
        checked: picks.len(),
        max_rel_error: worst,
    });
    Ok(GradCheckReport { blocks })
}
