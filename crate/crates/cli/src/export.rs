//! ETF1 ↔ CSV. One row per value in row-major order: the multi-index
//! columns `i0..i{r-1}` followed by `value`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use eqsub_core::io::Tensor;

pub fn etf_to_csv(input: &Path, output: &Path) -> Result<()> {
    let t = Tensor::load(input).with_context(|| format!("reading {}", input.display()))?;
    if t.data().is_empty() {
        bail!("{}: cannot export an empty tensor", input.display());
    }
    let shape = t.shape().to_vec();
    let mut w = csv::Writer::from_path(output).with_context(|| format!("creating {}", output.display()))?;
    let mut header: Vec<String> = (0..shape.len()).map(|i| format!("i{i}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    let mut idx = vec![0usize; shape.len()];
    for v in t.data() {
        let mut row: Vec<String> = idx.iter().map(ToString::to_string).collect();
        row.push(v.to_string());
        w.write_record(&row)?;
        for d in (0..shape.len()).rev() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn csv_to_etf(input: &Path, output: &Path) -> Result<()> {
    let mut r = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
    let header = r.headers()?.clone();
    let rank = header.len().checked_sub(1).filter(|_| header.get(header.len() - 1) == Some("value"));
    let rank = rank.ok_or_else(|| anyhow!("{}: line 1: last column must be `value`", input.display()))?;
    let mut rows: Vec<Vec<usize>> = Vec::new();
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let at = |reason: String| anyhow!("{}: line {line}: {reason}", input.display());
        if rec.len() != rank + 1 {
            return Err(at(format!("expected {} fields, got {}", rank + 1, rec.len())));
        }
        let idx: Vec<usize> = (0..rank)
            .map(|j| rec[j].parse().map_err(|_| at(format!("bad index `{}`", &rec[j]))))
            .collect::<Result<_>>()?;
        let v: f32 = rec[rank].parse().map_err(|_| at(format!("bad value `{}`", &rec[rank])))?;
        rows.push(idx);
        data.push(v);
    }
    let last = rows.last().ok_or_else(|| anyhow!("{}: no values", input.display()))?;
    let shape: Vec<usize> = last.iter().map(|&i| i + 1).collect();
    // Rows must enumerate the shape in row-major order.
    let mut expect = vec![0usize; rank];
    for (i, idx) in rows.iter().enumerate() {
        if *idx != expect {
            bail!("{}: line {}: index {idx:?} out of row-major order, expected {expect:?}", input.display(), i + 2);
        }
        for d in (0..rank).rev() {
            expect[d] += 1;
            if expect[d] < shape[d] {
                break;
            }
            expect[d] = 0;
        }
    }
    Tensor::new(shape, data)?.save(output).with_context(|| format!("writing {}", output.display()))?;
    Ok(())
}
