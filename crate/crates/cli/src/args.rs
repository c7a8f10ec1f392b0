//! Command-line flags.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eqsub_core::equisample::{Blur, TiePolicy};
use eqsub_core::PhiConfig;

#[derive(Debug, Parser)]
#[command(name = "eqsub", version, about = "Equivariant subsampling: invariant checks, demos and autoencoder experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suite; exits 0 iff every check passes.
    Verify(VerifyArgs),
    /// Trace the 1D subsampling illustration on a length-8 map.
    DemoFig1(DemoArgs),
    /// Generate data and train one autoencoder variant.
    Train(TrainArgs),
    /// Reconstruction error per anchor cell and rotation.
    EvalOod(EvalArgs),
    /// Act on the equivariant latent of one image and decode.
    Manipulate(ManipulateArgs),
    /// Convert ETF1 tensors to CSV and back.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieArg {
    Lex,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

/// Smoothing and tie handling of the sampling-index map.
#[derive(Clone, Debug, Args, Serialize)]
pub struct PhiArgs {
    #[arg(long, value_enum, default_value = "lex")]
    pub tie_policy: TieArg,
    /// Seed of the random tie policy.
    #[arg(long, default_value_t = 0)]
    pub phi_seed: u64,
    /// Odd average-pool width applied before the norm.
    #[arg(long, default_value_t = 3)]
    pub phi_pool: usize,
    /// Gaussian blur of the norm field as `K,SIGMA`.
    #[arg(long)]
    pub phi_blur: Option<String>,
    #[arg(long, value_enum, default_value = "on")]
    pub phi_mean_subtract: Switch,
}

impl PhiArgs {
    pub fn resolve(&self) -> Result<PhiConfig> {
        let blur = match &self.phi_blur {
            None => None,
            Some(text) => {
                let (k, s) = text
                    .split_once(',')
                    .with_context(|| format!("--phi-blur expects K,SIGMA, got `{text}`"))?;
                Some(Blur {
                    kernel: k.trim().parse().with_context(|| format!("bad blur width `{k}`"))?,
                    sigma: s.trim().parse().with_context(|| format!("bad blur sigma `{s}`"))?,
                })
            }
        };
        let cfg = PhiConfig {
            tie_policy: match self.tie_policy {
                TieArg::Lex => TiePolicy::Lexicographic,
                TieArg::Random => TiePolicy::UniformRandom { seed: self.phi_seed },
            },
            mean_subtract: self.phi_mean_subtract.on(),
            pool_kernel: self.phi_pool,
            blur,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// p1, p4, p4m or z1.
    #[arg(long)]
    pub group: String,
    /// Grid period N.
    #[arg(long, default_value_t = 8)]
    pub size: u32,
    /// Subgroup chain, e.g. `t2,t2,t2+r2,r2`. Defaults to halving down to the trivial group.
    #[arg(long)]
    pub chain: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random maps per subsampling check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Swap in the plain strided subsampler. The suite must then fail.
    #[arg(long)]
    pub inject_standard_subsample: bool,
    #[command(flatten)]
    pub phi: PhiArgs,
    #[arg(long, default_value = "runs/verify")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DemoArgs {
    #[arg(long, default_value = "runs/demo-fig1")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// gae-p1, gae-p4, gae-p4m, convae-p1 or gconvae-p4.
    #[arg(long)]
    pub variant: String,
    #[arg(long, default_value_t = 16)]
    pub size: u32,
    #[arg(long, default_value_t = 512)]
    pub train_size: usize,
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// full or top-left.
    #[arg(long, default_value = "top-left")]
    pub constraint: String,
    #[arg(long, default_value_t = 16)]
    pub base_channels: usize,
    #[arg(long, default_value_t = 16)]
    pub latent: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub smooth_upsampling: Switch,
    #[arg(long, default_value_t = 256)]
    pub eval_size: usize,
    #[command(flatten)]
    pub phi: PhiArgs,
    /// Model directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset stem (`<stem>.etf` + `<stem>.csv`). Defaults to every placement on the model's grid.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Anchor cells per axis.
    #[arg(long, default_value_t = 4)]
    pub cells: u32,
    /// Defaults to `<model>/eval-ood`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ManipulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset stem to read the image from.
    #[arg(long, conflicts_with = "sprite")]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Render a sprite instead, as `SHAPE,TX,TY,ROT`.
    #[arg(long)]
    pub sprite: Option<String>,
    /// Group element literal, e.g. `t=3,2;r=1`.
    #[arg(long)]
    pub action: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    /// `.etf` converts to CSV, `.csv` converts to ETF1.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn parse_sprite(text: &str) -> Result<[u32; 4]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        bail!("--sprite expects SHAPE,TX,TY,ROT, got `{text}`");
    }
    let mut out = [0u32; 4];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse().with_context(|| format!("bad sprite field `{p}`"))?;
    }
    Ok(out)
}
