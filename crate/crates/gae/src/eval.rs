//! Out-of-distribution evaluation bucketed by sprite anchor and rotation.

use std::fs;
use std::path::Path;

use crate::arch::Autoencoder;
use crate::dataset::Dataset;
use crate::error::{file_err, GaeError};
use crate::train::{load_model, mse};
use eqsub_nn::Params;

/// Mean reconstruction MSE over the sprites whose anchor falls in one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct OodCell {
    pub cell_x: u32,
    pub cell_y: u32,
    pub rot: u8,
    pub count: usize,
    pub mse: f64,
}

/// Splits the grid into `cells × cells` anchor buckets per rotation.
pub fn evaluate_cells(ae: &Autoencoder, params: &Params<f32>, data: &Dataset, cells: u32) -> Result<Vec<OodCell>, GaeError> {
    if cells == 0 || data.size % cells != 0 {
        return Err(GaeError::Config(format!("{cells} cells do not divide grid size {}", data.size)));
    }
    let width = data.size / cells;
    let slots = (cells * cells * 4) as usize;
    let mut sums = vec![0.0f64; slots];
    let mut counts = vec![0usize; slots];
    let spec = ae.group();
    for (i, p) in data.placements.iter().enumerate() {
        let x = data.image::<f32>(i, spec);
        let e = mse(&ae.reconstruct(params, &x)?, &x);
        let slot = ((p.rot as u32 * cells + p.ty / width) * cells + p.tx / width) as usize;
        sums[slot] += e;
        counts[slot] += 1;
    }
    let mut out = Vec::new();
    for rot in 0..4u8 {
        for cy in 0..cells {
            for cx in 0..cells {
                let slot = ((rot as u32 * cells + cy) * cells + cx) as usize;
                if counts[slot] > 0 {
                    out.push(OodCell {
                        cell_x: cx,
                        cell_y: cy,
                        rot,
                        count: counts[slot],
                        mse: sums[slot] / counts[slot] as f64,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn write_grid(path: &Path, cells: &[OodCell]) -> Result<(), GaeError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(file_err(parent))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cell_x", "cell_y", "rot", "count", "mse"])?;
    for c in cells {
        w.write_record([
            c.cell_x.to_string(),
            c.cell_y.to_string(),
            c.rot.to_string(),
            c.count.to_string(),
            c.mse.to_string(),
        ])?;
    }
    w.flush().map_err(file_err(path))?;
    Ok(())
}

/// Loads the model in `dir`, evaluates `data` and writes `metrics/ood_grid.csv`.
pub fn eval_ood(dir: &Path, data: &Dataset, cells: u32) -> Result<Vec<OodCell>, GaeError> {
    let saved = load_model(dir)?;
    if saved.ae.group().size() != data.size {
        return Err(GaeError::Config(format!(
            "model grid {} does not match dataset grid {}",
            saved.ae.group().size(),
            data.size
        )));
    }
    let grid = evaluate_cells(&saved.ae, &saved.params, data, cells)?;
    write_grid(&dir.join("metrics").join("ood_grid.csv"), &grid)?;
    Ok(grid)
}

/// Trend statistics over an OOD grid.
#[derive(Clone, Debug, PartialEq)]
pub struct OodSummary {
    /// Max over min cell MSE among unrotated sprites.
    pub position_spread: f64,
    /// Unrotated MSE with anchors in the bottom-right quadrant over the top-left one.
    pub quadrant_ratio: f64,
    /// Max over min of the per-rotation MSE.
    pub rotation_spread: f64,
    /// Mean MSE of rotated sprites over unrotated ones.
    pub rotated_ratio: f64,
}

fn weighted_mean<'a>(cells: impl Iterator<Item = &'a OodCell>) -> f64 {
    let (s, n) = cells.fold((0.0, 0usize), |(s, n), c| (s + c.mse * c.count as f64, n + c.count));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn summarize(cells: &[OodCell]) -> OodSummary {
    let n_cells = cells.iter().map(|c| c.cell_x.max(c.cell_y) + 1).max().unwrap_or(1);
    let half = n_cells / 2;
    let upright: Vec<&OodCell> = cells.iter().filter(|c| c.rot == 0).collect();
    let pos: Vec<f64> = upright.iter().map(|c| c.mse).collect();
    let tl = weighted_mean(upright.iter().copied().filter(|c| c.cell_x < half && c.cell_y < half));
    let br = weighted_mean(upright.iter().copied().filter(|c| c.cell_x >= half && c.cell_y >= half));
    let per_rot: Vec<f64> = (0..4u8)
        .map(|r| weighted_mean(cells.iter().filter(|c| c.rot == r)))
        .filter(|v| !v.is_nan())
        .collect();
    OodSummary {
        position_spread: spread(&pos),
        quadrant_ratio: br / tl,
        rotation_spread: spread(&per_rot),
        rotated_ratio: weighted_mean(cells.iter().filter(|c| c.rot != 0)) / weighted_mean(upright.iter().copied()),
    }
}
