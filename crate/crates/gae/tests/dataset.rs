use std::fs;

use eqsub_core::GroupSpec;
use eqsub_gae::dataset::{mass, render};
use eqsub_gae::{Constraint, Dataset, Placement};

#[test]
fn every_image_holds_one_glyph() {
    let d = Dataset::generate(16, Constraint::Full, true, 3, 200).unwrap();
    assert_eq!(d.len(), 200);
    for (img, p) in d.images.iter().zip(&d.placements) {
        let on = img.iter().filter(|&&v| v == 1.0).count();
        let off = img.iter().filter(|&&v| v == 0.0).count();
        assert_eq!(on, mass(p.shape));
        assert_eq!(on + off, 256);
    }
    assert!(d.placements.iter().any(|p| p.rot != 0));
}

#[test]
fn top_left_constraint_bounds_anchors_and_fixes_orientation() {
    let d = Dataset::generate(32, Constraint::TopLeft, true, 9, 500).unwrap();
    for p in &d.placements {
        assert!(p.tx < 16 && p.ty < 16, "{p:?}");
        assert_eq!(p.rot, 0);
    }
    let xs: std::collections::BTreeSet<u32> = d.placements.iter().map(|p| p.tx).collect();
    assert_eq!(xs.len(), 16);
}

#[test]
fn unsupported_grid_is_rejected() {
    assert!(Dataset::generate(12, Constraint::Full, false, 0, 4).is_err());
    assert!("diagonal".parse::<Constraint>().is_err());
    assert_eq!("top-left".parse::<Constraint>().unwrap(), Constraint::TopLeft);
}

#[test]
fn rotated_placement_is_the_group_action_on_the_upright_one() {
    let spec = GroupSpec::p4(16);
    for shape in 0..2 {
        for rot in 0..4u8 {
            let upright = render(16, &Placement { shape, tx: 0, ty: 0, rot: 0 });
            let placed = render(16, &Placement { shape, tx: 5, ty: 11, rot });
            let g = spec.element(5, 11, rot as i64, false).unwrap();
            let mut expect = vec![0.0f32; 256];
            for (x, y) in spec.grid() {
                if upright[spec.grid_index(x, y)] == 1.0 {
                    let (px, py) = g.act_on_grid((x, y));
                    expect[spec.grid_index(px, py)] = 1.0;
                }
            }
            assert_eq!(placed, expect);
        }
    }
}

#[test]
fn glyphs_have_no_rotational_symmetry() {
    for shape in 0..2 {
        let imgs: Vec<Vec<f32>> = (0..4u8)
            .map(|rot| render(16, &Placement { shape, tx: 8, ty: 8, rot }))
            .collect();
        for a in 0..4 {
            for b in a + 1..4 {
                // Distinct up to translation: compare after centring the mass.
                assert_ne!(canonical(&imgs[a]), canonical(&imgs[b]), "shape {shape} rot {a} vs {b}");
            }
        }
    }
}

fn canonical(img: &[f32]) -> Vec<(u32, u32)> {
    let cells: Vec<(u32, u32)> = (0..256u32).filter(|&i| img[i as usize] == 1.0).map(|i| (i % 16, i / 16)).collect();
    let mx = cells.iter().map(|c| c.0).min().unwrap();
    let my = cells.iter().map(|c| c.1).min().unwrap();
    cells.iter().map(|&(x, y)| (x - mx, y - my)).collect()
}

#[test]
fn exhaustive_set_covers_every_placement_once() {
    let d = Dataset::exhaustive(16);
    assert_eq!(d.len(), 4 * 2 * 256);
    let unique: std::collections::HashSet<_> = d.placements.iter().map(|p| (p.shape, p.tx, p.ty, p.rot)).collect();
    assert_eq!(unique.len(), d.len());
}

#[test]
fn save_load_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = Dataset::generate(16, Constraint::Full, true, 42, 64).unwrap();
    let b = Dataset::generate(16, Constraint::Full, true, 42, 64).unwrap();
    a.save(&dir.path().join("a")).unwrap();
    b.save(&dir.path().join("b")).unwrap();
    for ext in ["etf", "csv"] {
        let fa = fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let fb = fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        assert_eq!(fa, fb, "{ext} differs");
    }
    let back = Dataset::load(&dir.path().join("a")).unwrap();
    assert_eq!(back, a);
    let c = Dataset::generate(16, Constraint::Full, true, 43, 64).unwrap();
    assert_ne!(c.placements, a.placements);
}

#[test]
fn load_reports_missing_and_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    assert!(Dataset::load(&dir.path().join("none")).is_err());
    let d = Dataset::generate(16, Constraint::Full, false, 1, 4).unwrap();
    let stem = dir.path().join("d");
    d.save(&stem).unwrap();
    let csv = fs::read_to_string(stem.with_extension("csv")).unwrap();
    fs::write(stem.with_extension("csv"), csv.replacen("\n1,", "\n7,", 1)).unwrap();
    let err = Dataset::load(&stem).unwrap_err().to_string();
    assert!(err.contains("line 3"), "{err}");
}
