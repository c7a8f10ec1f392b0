use std::fs;
use std::path::Path;

use eqsub_core::PhiConfig;
use eqsub_gae::train::dataset_mse;
use eqsub_gae::{
    eval_ood, load_model, save_model, summarize, train, Autoencoder, Constraint, Dataset, GaeError, TrainConfig, Variant,
    Widths,
};
use eqsub_nn::Params;

fn tiny(variant: Variant, steps: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(variant);
    cfg.steps = steps;
    cfg.train_size = 32;
    cfg.eval_size = 8;
    cfg.batch_size = 4;
    cfg.lr = 1e-3;
    cfg.widths = Widths {
        base_channels: 4,
        latent: 4,
        smooth_upsampling: true,
    };
    cfg
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn zero_steps_stores_the_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Variant::GaeP1, 0);
    let data = cfg.train_dataset().unwrap();
    let report = train(&cfg, &data, dir.path()).unwrap();
    assert!(report.losses.is_empty());
    let saved = load_model(dir.path()).unwrap();
    let ae = Autoencoder::build(cfg.variant, cfg.size, cfg.widths, PhiConfig::desk()).unwrap();
    assert_eq!(saved.params, Params::<f32>::init(ae.model(), cfg.seed));
    assert_eq!(saved.config.as_ref(), Some(&cfg));
    let eval = fs::read_to_string(dir.path().join("metrics/eval.csv")).unwrap();
    assert!(eval.starts_with("split,mse\ntrain,"));
    let cells = eval_ood(dir.path(), &Dataset::generate(16, Constraint::Full, true, 5, 64).unwrap(), 4).unwrap();
    assert!(!cells.is_empty());
    assert!(dir.path().join("metrics/ood_grid.csv").exists());
}

#[test]
fn short_run_lowers_the_training_loss() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = TrainConfig::new(Variant::GaeP1);
    cfg.steps = 150;
    cfg.lr = 1e-3;
    cfg.train_size = 64;
    cfg.eval_size = 8;
    let data = cfg.train_dataset().unwrap();
    let report = train(&cfg, &data, dir.path()).unwrap();
    let head: f64 = report.losses[..10].iter().sum::<f64>() / 10.0;
    let tail: f64 = report.losses[140..].iter().sum::<f64>() / 10.0;
    assert!(tail < 0.7 * head, "head {head} tail {tail}");
    let csv = fs::read_to_string(dir.path().join("metrics/train.csv")).unwrap();
    assert_eq!(csv.lines().count(), 151);
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = tiny(Variant::GaeP4, 3);
    let data = cfg.train_dataset().unwrap();
    train(&cfg, &data, a.path()).unwrap();
    train(&cfg, &data, b.path()).unwrap();
    for f in ["manifest.txt", "metrics/train.csv", "metrics/eval.csv", "params/layer-00-weight.etf"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let mut other = cfg.clone();
    other.seed = 1;
    let c = tempfile::tempdir().unwrap();
    train(&other, &other.train_dataset().unwrap(), c.path()).unwrap();
    assert_ne!(read(&a.path().join("metrics/train.csv")), read(&c.path().join("metrics/train.csv")));
}

#[test]
fn saved_model_reproduces_in_memory_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Variant::ConvAeP1, 5);
    let data = cfg.train_dataset().unwrap();
    let report = train(&cfg, &data, dir.path()).unwrap();
    let saved = load_model(dir.path()).unwrap();
    let mse = dataset_mse(&saved.ae, &saved.params, &data).unwrap();
    assert_eq!(mse, report.eval[0].1);
    save_model(&dir.path().join("copy"), &saved.ae, &saved.params, saved.config.as_ref()).unwrap();
    assert_eq!(read(&dir.path().join("manifest.txt")), read(&dir.path().join("copy/manifest.txt")));
}

#[test]
fn invalid_configs_and_missing_models_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(Variant::GaeP1, 1);
    cfg.lr = 0.0;
    assert!(matches!(cfg.validate(), Err(GaeError::Config(_))));
    let cfg = tiny(Variant::GaeP1, 1);
    let wrong = Dataset::generate(32, Constraint::Full, false, 0, 4).unwrap();
    assert!(train(&cfg, &wrong, dir.path()).is_err());
    assert!(matches!(load_model(&dir.path().join("nothing")), Err(GaeError::Missing(_))));

    train(&cfg, &cfg.train_dataset().unwrap(), dir.path()).unwrap();
    fs::remove_file(dir.path().join("params/layer-00-bias.etf")).unwrap();
    assert!(matches!(load_model(dir.path()), Err(GaeError::Missing(_))));
}

#[test]
fn equivariant_model_has_flat_ood_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(Variant::GaeP4, 2);
    train(&cfg, &cfg.train_dataset().unwrap(), dir.path()).unwrap();
    let cells = eval_ood(dir.path(), &Dataset::exhaustive(16), 4).unwrap();
    assert_eq!(cells.len(), 64);
    let s = summarize(&cells);
    assert!(s.position_spread < 1.0 + 1e-4, "{s:?}");
    assert!(s.rotation_spread < 1.0 + 1e-4, "{s:?}");
}
