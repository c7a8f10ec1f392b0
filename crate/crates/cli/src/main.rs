//! `eqsub`: the command-line front end.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a failing check, 2 on
//! configuration, parse and file errors.

mod args;
mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde_json::{json, Value};

use eqsub_core::equisample::TiePolicy;
use eqsub_core::io::write_ppm;
use eqsub_core::{GroupSpec, PhiConfig, Subgroup, SubgroupChain};
use eqsub_gae::{
    demo_fig1, eval_ood, fig1_csv, fig1_trace, load_model, manipulate, summarize, train, verify, Constraint, Dataset,
    Placement, TrainConfig, VerifyConfig, Widths,
};

use args::{parse_sprite, Cli, Command, DemoArgs, EvalArgs, ExportArgs, ManipulateArgs, TrainArgs, VerifyArgs};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => run_verify(a),
        Command::DemoFig1(a) => run_demo(a).map(|_| true),
        Command::Train(a) => run_train(a).map(|_| true),
        Command::EvalOod(a) => run_eval(a).map(|_| true),
        Command::Manipulate(a) => run_manipulate(a).map(|_| true),
        Command::Export(a) => run_export(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn phi_json(p: &PhiConfig) -> Value {
    json!({
        "tie_policy": match p.tie_policy {
            TiePolicy::Lexicographic => json!("lexicographic"),
            TiePolicy::UniformRandom { seed } => json!({ "uniform": seed }),
        },
        "mean_subtract": p.mean_subtract,
        "pool_kernel": p.pool_kernel,
        "blur": p.blur.map(|b| json!({ "kernel": b.kernel, "sigma": b.sigma })),
    })
}

/// Writes `<dir>/run.json` with the flags and the resolved configuration.
fn write_run(path: &Path, command: &str, args: &impl serde::Serialize, resolved: Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let doc = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "resolved": resolved,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_verify(a: &VerifyArgs) -> Result<bool> {
    let spec = GroupSpec::parse(&a.group, a.size)?;
    let top = Subgroup::full(spec);
    let chain = match &a.chain {
        Some(text) => SubgroupChain::parse(top, text)?,
        None => SubgroupChain::default_for(spec)?,
    };
    if chain.layers() == 0 {
        bail!("the chain needs at least one subsampling step");
    }
    let cfg = VerifyConfig {
        chain,
        seed: a.seed,
        trials: a.trials,
        inject_standard_subsample: a.inject_standard_subsample,
        phi: a.phi.resolve()?,
    };
    let resolved = json!({
        "group": spec.kind().name(),
        "size": spec.size(),
        "order": spec.order(),
        "chain": chain_text(&cfg.chain),
        "phi": phi_json(&cfg.phi),
    });
    write_run(&a.out.join("run.json"), "verify", a, resolved)?;
    let report = verify(&cfg)?;
    let text = report.to_text();
    print!("{text}");
    write(&a.out.join("report.txt"), &text)?;
    write(&a.out.join("report.csv"), report.to_csv())?;
    if let Some(f) = report.first_failure() {
        eprintln!("first failure: {}", f.name);
    }
    Ok(report.passed())
}

fn chain_text(chain: &SubgroupChain) -> String {
    chain.groups().iter().map(ToString::to_string).collect::<Vec<_>>().join(" > ")
}

fn run_demo(a: &DemoArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let panels = demo_fig1()?;
    print!("{}", fig1_trace(&panels));
    write(&a.out.join("fig1.csv"), fig1_csv(&panels))?;
    write_run(&a.out.join("run.json"), "demo-fig1", a, json!({ "group": "z1", "size": 8, "stride": 2 }))
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::new(a.variant.parse()?);
    cfg.size = a.size;
    cfg.train_size = a.train_size;
    cfg.steps = a.steps;
    cfg.seed = a.seed;
    cfg.lr = a.lr;
    cfg.batch_size = a.batch_size;
    cfg.constraint = a.constraint.parse::<Constraint>()?;
    cfg.widths = Widths {
        base_channels: a.base_channels,
        latent: a.latent,
        smooth_upsampling: a.smooth_upsampling.on(),
    };
    cfg.eval_size = a.eval_size;
    cfg.phi = a.phi.resolve()?;
    cfg.validate()?;
    Ok(cfg)
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let cfg = train_config(a)?;
    let pairs: serde_json::Map<String, Value> = cfg.to_pairs().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    write_run(&a.out.join("run.json"), "train", a, json!({ "config": pairs, "phi": phi_json(&cfg.phi) }))?;
    let data = cfg.train_dataset()?;
    let data_dir = a.out.join("data");
    fs::create_dir_all(&data_dir).with_context(|| format!("creating {}", data_dir.display()))?;
    data.save(&data_dir.join("train"))?;
    cfg.test_dataset()?.save(&data_dir.join("test"))?;
    let report = train(&cfg, &data, &a.out)?;
    if let Some(last) = report.losses.last() {
        println!("step {}: train_mse {last:.6}", report.losses.len());
    }
    for (split, mse) in &report.eval {
        println!("{split} mse {mse:.6}");
    }
    Ok(())
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let saved = load_model(&a.model)?;
    let size = saved.ae.group().size();
    let data = match &a.dataset {
        Some(stem) => Dataset::load(stem)?,
        None => Dataset::exhaustive(size),
    };
    let out = a.out.clone().unwrap_or_else(|| a.model.join("eval-ood"));
    write_run(
        &out.join("run.json"),
        "eval-ood",
        a,
        json!({ "out": out.display().to_string(), "images": data.len(), "size": data.size, "dataset": a.dataset.as_ref().map_or("exhaustive".into(), |p| p.display().to_string()) }),
    )?;
    let cells = eval_ood(&a.model, &data, a.cells)?;
    let s = summarize(&cells);
    let (total, count) = cells.iter().fold((0.0, 0usize), |(t, n), c| (t + c.mse * c.count as f64, n + c.count));
    let mean = total / count.max(1) as f64;
    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record(["statistic", "value"])?;
    for (k, v) in [
        ("position_spread", s.position_spread),
        ("quadrant_ratio", s.quadrant_ratio),
        ("rotation_spread", s.rotation_spread),
        ("rotated_ratio", s.rotated_ratio),
        ("mean_mse", mean),
    ] {
        println!("{k} {v:.6}");
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn run_manipulate(a: &ManipulateArgs) -> Result<()> {
    let saved = load_model(&a.model)?;
    let ae = &saved.ae;
    let chain = ae
        .chain()
        .context("manipulation needs an equivariant model (gae-*)")?
        .clone();
    let spec = ae.group();
    let n = spec.size();
    let (data, index) = match (&a.dataset, &a.sprite) {
        (Some(stem), _) => (Dataset::load(stem)?, a.index),
        (None, sprite) => {
            let [shape, tx, ty, rot] = parse_sprite(sprite.as_deref().unwrap_or("0,2,2,0"))?;
            if shape > 1 || tx >= n || ty >= n || rot > 3 {
                bail!("sprite ({shape},{tx},{ty},{rot}) is outside the {n}×{n} grid");
            }
            let p = Placement { shape: shape as usize, tx, ty, rot: rot as u8 };
            (Dataset::from_placements(n, vec![p]), 0)
        }
    };
    if data.size != n {
        bail!("dataset grid {} does not match model grid {n}", data.size);
    }
    if index >= data.len() {
        bail!("index {index} out of range for {} images", data.len());
    }
    let action = spec.parse_element(&a.action)?;
    let image = data.image::<f32>(index, spec);
    let (plain, moved) = manipulate(ae, &saved.params, &image, &action)?;
    let z = ae.encode(&saved.params, &image)?;
    let z_moved = eqsub_gae::LatentCode {
        z_eq: chain.act_tuple(&action, &z.z_eq)?,
        ..z.clone()
    };

    write_run(
        &a.out.join("run.json"),
        "manipulate",
        a,
        json!({ "action": action.to_string(), "index": index, "chain": chain_text(&chain) }),
    )?;
    let ppm = |name: &str, m: &eqsub_core::FeatureMap<f32>| -> Result<PathBuf> {
        let path = a.out.join(name);
        let px: Vec<f64> = m.values().iter().map(|&v| v as f64).collect();
        write_ppm(&path, n as usize, n as usize, 1, &px)?;
        Ok(path)
    };
    ppm("input.ppm", &image)?;
    ppm("reconstruction.ppm", &plain)?;
    let out = ppm("manipulated.ppm", &moved)?;
    write(&a.out.join("latent.txt"), z.to_text(&chain)?)?;
    write(&a.out.join("manipulated-latent.txt"), z_moved.to_text(&chain)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn run_export(a: &ExportArgs) -> Result<()> {
    let ext = a.input.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "etf" => export::etf_to_csv(&a.input, &a.output)?,
        "csv" => export::csv_to_etf(&a.input, &a.output)?,
        _ => bail!("{}: expected a .etf or .csv input", a.input.display()),
    }
    let mut manifest = a.output.clone().into_os_string();
    manifest.push(".run.json");
    write_run(Path::new(&manifest), "export", a, json!({ "direction": if ext == "etf" { "etf-to-csv" } else { "csv-to-etf" } }))
}
