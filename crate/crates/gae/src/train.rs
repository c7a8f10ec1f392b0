//! Training loop and the model directory format.
//!
//! ```text
//! <dir>/manifest.txt          architecture + training configuration
//! <dir>/params/layer-XX-weight.etf, layer-XX-bias.etf
//! <dir>/metrics/train.csv     step,train_mse
//! <dir>/metrics/eval.csv      split,mse
//! <dir>/metrics/ood_grid.csv  written by eval_ood
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqsub_core::io::Tensor;
use eqsub_core::{FeatureMap, PhiConfig, Real};
use eqsub_nn::{Adam, LayerParams, Manifest, Params, Signal};

use crate::arch::{Autoencoder, Variant, Widths};
use crate::dataset::{Constraint, Dataset};
use crate::error::{file_err, GaeError};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub variant: Variant,
    pub size: u32,
    pub train_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub lr: f64,
    pub batch_size: usize,
    pub constraint: Constraint,
    pub widths: Widths,
    /// Images in the held-out in-distribution split.
    pub eval_size: usize,
    pub phi: PhiConfig,
}

impl TrainConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            size: 16,
            train_size: 512,
            steps: 5000,
            seed: 0,
            lr: 1e-4,
            batch_size: 16,
            constraint: Constraint::TopLeft,
            widths: Widths::default(),
            eval_size: 256,
            phi: PhiConfig::desk(),
        }
    }

    pub fn validate(&self) -> Result<(), GaeError> {
        let positive = [
            ("train size", self.train_size),
            ("batch size", self.batch_size),
            ("eval size", self.eval_size),
            ("base channels", self.widths.base_channels),
            ("latent size", self.widths.latent),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(GaeError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(GaeError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        self.phi.validate()?;
        if !matches!(self.size, 16 | 32) {
            return Err(GaeError::Config(format!("grid size must be 16 or 32, got {}", self.size)));
        }
        Ok(())
    }

    fn rotations(&self) -> bool {
        self.variant.kind().rotation_order() > 1
    }

    pub fn train_dataset(&self) -> Result<Dataset, GaeError> {
        Dataset::generate(self.size, self.constraint, self.rotations(), self.seed, self.train_size)
    }

    pub fn test_dataset(&self) -> Result<Dataset, GaeError> {
        Dataset::generate(self.size, self.constraint, self.rotations(), self.seed.wrapping_add(1), self.eval_size)
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("variant", self.variant.to_string()),
            ("size", self.size.to_string()),
            ("train-size", self.train_size.to_string()),
            ("steps", self.steps.to_string()),
            ("seed", self.seed.to_string()),
            ("lr", self.lr.to_string()),
            ("batch-size", self.batch_size.to_string()),
            ("constraint", self.constraint.name().to_string()),
            ("base-channels", self.widths.base_channels.to_string()),
            ("latent", self.widths.latent.to_string()),
            ("smooth-upsampling", (self.widths.smooth_upsampling as u8).to_string()),
            ("eval-size", self.eval_size.to_string()),
        ]
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self, GaeError> {
        let get = |k: &str| m.extra(k).ok_or_else(|| GaeError::Config(format!("manifest lacks `{k}`")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, GaeError> {
            v.parse().map_err(|_| GaeError::Config(format!("bad value `{v}` for `{k}`")))
        }
        Ok(Self {
            variant: get("variant")?.parse()?,
            size: num("size", get("size")?)?,
            train_size: num("train-size", get("train-size")?)?,
            steps: num("steps", get("steps")?)?,
            seed: num("seed", get("seed")?)?,
            lr: num("lr", get("lr")?)?,
            batch_size: num("batch-size", get("batch-size")?)?,
            constraint: get("constraint")?.parse()?,
            widths: Widths {
                base_channels: num("base-channels", get("base-channels")?)?,
                latent: num("latent", get("latent")?)?,
                smooth_upsampling: get("smooth-upsampling")? == "1",
            },
            eval_size: num("eval-size", get("eval-size")?)?,
            phi: *m.model.phi(),
        })
    }
}

/// Pixel MSE of one reconstruction, accumulated in f64.
pub fn mse<T: Real>(out: &FeatureMap<T>, target: &FeatureMap<T>) -> f64 {
    let n = out.values().len() as f64;
    out.values()
        .iter()
        .zip(target.values())
        .map(|(a, b)| {
            let d = a.as_f64() - b.as_f64();
            d * d
        })
        .sum::<f64>()
        / n
}

pub fn dataset_mse<T: Real>(ae: &Autoencoder, params: &Params<T>, data: &Dataset) -> Result<f64, GaeError> {
    let spec = ae.group();
    let mut total = 0.0;
    for i in 0..data.len() {
        let x = data.image::<T>(i, spec);
        total += mse(&ae.reconstruct(params, &x)?, &x);
    }
    Ok(total / data.len().max(1) as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub eval: Vec<(String, f64)>,
}

/// Adam on pixel MSE in 32-bit. Writes the full model directory.
pub fn train(cfg: &TrainConfig, data: &Dataset, dir: &Path) -> Result<TrainReport, GaeError> {
    cfg.validate()?;
    if data.size != cfg.size || data.is_empty() {
        return Err(GaeError::Config(format!(
            "dataset has {} images of size {}, config expects size {}",
            data.len(),
            data.size,
            cfg.size
        )));
    }
    let ae = Autoencoder::build(cfg.variant, cfg.size, cfg.widths, cfg.phi)?;
    let model = ae.model();
    let spec = ae.group();
    let mut params = Params::<f32>::init(model, cfg.seed);
    let mut adam = Adam::new(model, cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6261_7463_6865_7321);
    let images: Vec<FeatureMap<f32>> = (0..data.len()).map(|i| data.image(i, spec)).collect();
    let mut losses = Vec::with_capacity(cfg.steps);

    for step in 1..=cfg.steps {
        let mut grads = Params::zeros(model);
        let mut loss = 0.0;
        for _ in 0..cfg.batch_size {
            let x = &images[rng.gen_range(0..images.len())];
            let (out, tape) = model.forward(&params, Signal::new(x.clone()))?;
            loss += mse(&out.map, x);
            let scale = 2.0 / (x.values().len() * cfg.batch_size) as f64;
            let cot = FeatureMap::new(
                out.map.domain(),
                1,
                out.map
                    .values()
                    .iter()
                    .zip(x.values())
                    .map(|(&o, &t)| f32::of((o.as_f64() - t.as_f64()) * scale))
                    .collect(),
            )?;
            let (g, _) = model.backward(&params, &tape, &cot)?;
            grads.accumulate(&g);
        }
        loss /= cfg.batch_size as f64;
        if !loss.is_finite() || !grads.all_finite() {
            return Err(GaeError::Diverged { step, loss });
        }
        adam.update(&mut params, &grads);
        losses.push(loss);
    }

    let eval = vec![
        ("train".to_string(), dataset_mse(&ae, &params, data)?),
        ("test".to_string(), dataset_mse(&ae, &params, &cfg.test_dataset()?)?),
    ];
    save_model(dir, &ae, &params, Some(cfg))?;
    write_metrics(dir, &losses, &eval)?;
    Ok(TrainReport { losses, eval })
}

fn write_metrics(dir: &Path, losses: &[f64], eval: &[(String, f64)]) -> Result<(), GaeError> {
    let metrics = dir.join("metrics");
    fs::create_dir_all(&metrics).map_err(file_err(&metrics))?;
    let mut w = csv::Writer::from_path(metrics.join("train.csv"))?;
    w.write_record(["step", "train_mse"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush().map_err(file_err(metrics.join("train.csv")))?;
    let mut w = csv::Writer::from_path(metrics.join("eval.csv"))?;
    w.write_record(["split", "mse"])?;
    for (split, v) in eval {
        w.write_record([split.clone(), v.to_string()])?;
    }
    w.flush().map_err(file_err(metrics.join("eval.csv")))?;
    Ok(())
}

fn param_path(dir: &Path, layer: usize, part: &str) -> PathBuf {
    dir.join("params").join(format!("layer-{layer:02}-{part}.etf"))
}

pub fn save_model(dir: &Path, ae: &Autoencoder, params: &Params<f32>, cfg: Option<&TrainConfig>) -> Result<(), GaeError> {
    let model = ae.model();
    params.check(model)?;
    let pdir = dir.join("params");
    fs::create_dir_all(&pdir).map_err(file_err(&pdir))?;
    let mut manifest = Manifest::new(model.clone()).with_extra("encoder-layers", ae.split());
    if let Some(cfg) = cfg {
        for (k, v) in cfg.to_pairs() {
            manifest = manifest.with_extra(k, v);
        }
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest.to_text()).map_err(file_err(&path))?;
    for (i, lp) in params.layers.iter().enumerate() {
        if let Some((ws, bs)) = model.param_shapes(i) {
            Tensor::new(ws, lp.weight.clone())?.save(param_path(dir, i, "weight"))?;
            Tensor::new(bs, lp.bias.clone())?.save(param_path(dir, i, "bias"))?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SavedModel {
    pub ae: Autoencoder,
    pub params: Params<f32>,
    pub config: Option<TrainConfig>,
}

pub fn load_model(dir: &Path) -> Result<SavedModel, GaeError> {
    let path = dir.join("manifest.txt");
    if !path.exists() {
        return Err(GaeError::Missing(path));
    }
    let text = fs::read_to_string(&path).map_err(file_err(&path))?;
    let manifest = Manifest::parse(&text)?;
    let split: usize = manifest
        .extra("encoder-layers")
        .ok_or_else(|| GaeError::Config("manifest lacks `encoder-layers`".into()))?
        .parse()
        .map_err(|_| GaeError::Config("bad `encoder-layers`".into()))?;
    let config = match manifest.extra("variant") {
        Some(_) => Some(TrainConfig::from_manifest(&manifest)?),
        None => None,
    };
    let model = manifest.model;
    let mut layers = Vec::with_capacity(model.len());
    for i in 0..model.len() {
        let lp = match model.param_shapes(i) {
            None => LayerParams {
                weight: vec![],
                bias: vec![],
            },
            Some((ws, bs)) => {
                let load = |part: &str, shape: &[usize]| -> Result<Vec<f32>, GaeError> {
                    let p = param_path(dir, i, part);
                    if !p.exists() {
                        return Err(GaeError::Missing(p));
                    }
                    let t = Tensor::load(&p)?;
                    if t.shape() != shape {
                        return Err(GaeError::Config(format!(
                            "{}: shape {:?}, expected {shape:?}",
                            p.display(),
                            t.shape()
                        )));
                    }
                    Ok(t.into_data())
                };
                LayerParams {
                    weight: load("weight", &ws)?,
                    bias: load("bias", &bs)?,
                }
            }
        };
        layers.push(lp);
    }
    let params = Params { layers };
    params.check(&model)?;
    if !params.all_finite() {
        return Err(GaeError::Config("stored parameters contain non-finite values".into()));
    }
    Ok(SavedModel {
        ae: Autoencoder::from_model(model, split)?,
        params,
        config,
    })
}
