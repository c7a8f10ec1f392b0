//! Single-sprite images on a periodic grid.
//!
//! Each image holds one of two asymmetric glyphs placed by a group element:
//! a cyclic translation of its anchor cell and a 90° rotation about it.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eqsub_core::io::Tensor;
use eqsub_core::{FeatureMap, GroupSpec, Subgroup};

use crate::error::{file_err, GaeError};

/// Glyph cells relative to the anchor, `(x, y)` with y pointing down.
pub const GLYPHS: [(&str, &[(i64, i64)]); 2] = [
    ("l-tetromino", &[(0, 0), (0, 1), (0, 2), (1, 2)]),
    ("arrow", &[(0, 1), (1, 1), (2, 1), (3, 1), (2, 0), (2, 2), (0, 2)]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Any anchor, any rotation.
    Full,
    /// Anchors in `[0, N/2)²`, identity rotation only.
    TopLeft,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Full => "full",
            Constraint::TopLeft => "top-left",
        }
    }
}

impl FromStr for Constraint {
    type Err = GaeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Constraint::Full),
            "top-left" => Ok(Constraint::TopLeft),
            other => Err(GaeError::Config(format!("unknown constraint `{other}` (full | top-left)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placement {
    pub shape: usize,
    pub tx: u32,
    pub ty: u32,
    pub rot: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub size: u32,
    pub images: Vec<Vec<f32>>,
    pub placements: Vec<Placement>,
}

/// Renders one glyph: cell `c` lands on `t + R^rot c (mod N)`.
pub fn render(size: u32, p: &Placement) -> Vec<f32> {
    let spec = GroupSpec::p4(size);
    let g = spec
        .element(p.tx as i64, p.ty as i64, p.rot as i64, false)
        .expect("rotations are in p4");
    let mut img = vec![0.0f32; (size * size) as usize];
    for &(x, y) in GLYPHS[p.shape].1 {
        let cell = spec.translation(x, y);
        let (px, py) = g.act_on_grid((cell.tx(), cell.ty()));
        img[spec.grid_index(px, py)] = 1.0;
    }
    img
}

pub fn mass(shape: usize) -> usize {
    GLYPHS[shape].1.len()
}

impl Dataset {
    /// `count` random placements. Rotations are drawn only when `rotations`
    /// is set and the constraint allows them.
    pub fn generate(size: u32, constraint: Constraint, rotations: bool, seed: u64, count: usize) -> Result<Self, GaeError> {
        if !matches!(size, 16 | 32) {
            return Err(GaeError::Config(format!("grid size must be 16 or 32, got {size}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = match constraint {
            Constraint::Full => size,
            Constraint::TopLeft => size / 2,
        };
        let placements: Vec<Placement> = (0..count)
            .map(|_| Placement {
                shape: rng.gen_range(0..GLYPHS.len()),
                tx: rng.gen_range(0..span),
                ty: rng.gen_range(0..span),
                rot: if rotations && constraint == Constraint::Full {
                    rng.gen_range(0..4)
                } else {
                    0
                },
            })
            .collect();
        Ok(Self::from_placements(size, placements))
    }

    /// Every anchor, glyph and rotation once.
    pub fn exhaustive(size: u32) -> Self {
        let mut placements = Vec::new();
        for rot in 0..4u8 {
            for shape in 0..GLYPHS.len() {
                for ty in 0..size {
                    for tx in 0..size {
                        placements.push(Placement { shape, tx, ty, rot });
                    }
                }
            }
        }
        Self::from_placements(size, placements)
    }

    pub fn from_placements(size: u32, placements: Vec<Placement>) -> Self {
        let images = placements.iter().map(|p| render(size, p)).collect();
        Self {
            size,
            images,
            placements,
        }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image `i` as a one-channel map on the translation lattice of `spec`.
    pub fn image<T: eqsub_core::Real>(&self, i: usize, spec: GroupSpec) -> FeatureMap<T> {
        let domain = Subgroup::translations(spec);
        let values = self.images[i].iter().map(|&v| T::of(v as f64)).collect();
        FeatureMap::new(domain, 1, values).expect("rendered images are finite")
    }

    /// Writes `<stem>.etf` (shape `(count, 1, N, N)`) and `<stem>.csv`.
    pub fn save(&self, stem: &Path) -> Result<(), GaeError> {
        let n = self.size as usize;
        let data: Vec<f32> = self.images.iter().flatten().copied().collect();
        Tensor::new(vec![self.len(), 1, n, n], data)?.save(with_ext(stem, "etf"))?;
        let csv_path = with_ext(stem, "csv");
        let file = File::create(&csv_path).map_err(file_err(&csv_path))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["index", "tx", "ty", "rot", "shape"])?;
        for (i, p) in self.placements.iter().enumerate() {
            w.write_record([i.to_string(), p.tx.to_string(), p.ty.to_string(), p.rot.to_string(), p.shape.to_string()])?;
        }
        w.flush().map_err(file_err(&csv_path))?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self, GaeError> {
        let etf = with_ext(stem, "etf");
        if !etf.exists() {
            return Err(GaeError::Missing(etf));
        }
        let t = Tensor::load(&etf)?;
        let shape = t.shape().to_vec();
        if shape.len() != 4 || shape[1] != 1 || shape[2] != shape[3] {
            return Err(GaeError::Config(format!("{}: expected shape (count, 1, N, N), got {shape:?}", etf.display())));
        }
        let n = shape[2];
        let images: Vec<Vec<f32>> = t.data().chunks(n * n).map(<[f32]>::to_vec).collect();

        let csv_path = with_ext(stem, "csv");
        let mut r = csv::Reader::from_path(&csv_path)?;
        let mut placements = Vec::with_capacity(images.len());
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |reason: String| GaeError::Parse {
                path: csv_path.clone(),
                line: i + 2,
                reason,
            };
            let field = |j: usize| -> Result<u64, GaeError> {
                rec.get(j)
                    .ok_or_else(|| bad(format!("missing column {j}")))?
                    .parse()
                    .map_err(|_| bad(format!("column {j} is not a non-negative integer")))
            };
            if field(0)? != i as u64 {
                return Err(bad("index column out of order".into()));
            }
            let p = Placement {
                tx: field(1)? as u32,
                ty: field(2)? as u32,
                rot: field(3)? as u8,
                shape: field(4)? as usize,
            };
            if p.shape >= GLYPHS.len() || p.rot > 3 || p.tx as usize >= n || p.ty as usize >= n {
                return Err(bad(format!("placement {p:?} out of range")));
            }
            placements.push(p);
        }
        if placements.len() != images.len() {
            return Err(GaeError::Config(format!(
                "{} images but {} placements",
                images.len(),
                placements.len()
            )));
        }
        Ok(Self {
            size: n as u32,
            images,
            placements,
        })
    }
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
