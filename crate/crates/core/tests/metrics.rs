mod common;

use cmr_pipeline::metrics::{
    aggregate, dice, dice_masks, evaluate_case, hd95, read_metrics_csv, surface_distance_percentile, surface_voxels,
    write_metrics_csv, CohortSummary,
};
use cmr_pipeline::{Grid, LabelMap, LabelVolume, Structure, Volume};
use common::{brute_dice, brute_hd95, brute_surface, random_mask, rng};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

const SPACINGS: [f64; 6] = [0.5, 1.0, 1.25, 1.5, 2.0, 3.0];

fn labels_from(mask: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> LabelVolume {
    let grid = Grid::with_spacing(shape, spacing, [0.0; 3]).unwrap();
    Volume::new(grid, mask.iter().map(|&m| m as u16).collect()).unwrap()
}

#[test]
fn surfaces_match_brute_force() {
    let mut r = rng(1);
    for _ in 0..200 {
        let shape = [r.random_range(1..7), r.random_range(1..7), r.random_range(1..5)];
        let m = random_mask(&mut r, shape);
        assert_eq!(surface_voxels(&m, shape), brute_surface(&m, shape));
    }
}

#[test]
fn random_pairs_match_all_pairs_oracle_exactly() {
    let mut r = rng(2);
    for _ in 0..300 {
        let shape = [r.random_range(4..=8), r.random_range(4..=8), 4];
        let spacing = [
            *SPACINGS.choose(&mut r).unwrap(),
            *SPACINGS.choose(&mut r).unwrap(),
            *SPACINGS.choose(&mut r).unwrap(),
        ];
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let (pa, pb) = (labels_from(&a, shape, spacing), labels_from(&b, shape, spacing));
        assert_eq!(dice(&pa, &pb, 1).unwrap(), brute_dice(&a, &b));
        assert_eq!(hd95(&pa, &pb, 1, spacing).unwrap(), brute_hd95(&a, &b, shape, spacing));
    }
}

#[test]
fn arbitrary_spacing_agrees_to_rounding() {
    let mut r = rng(3);
    for _ in 0..100 {
        let shape = [6, 5, 4];
        let spacing = [
            r.random_range(0.3..3.0),
            r.random_range(0.3..3.0),
            r.random_range(0.3..9.0),
        ];
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let got = surface_distance_percentile(&a, &b, shape, spacing, 95.0);
        let want = brute_hd95(&a, &b, shape, spacing);
        match (got, want) {
            (Some(g), Some(w)) => assert!((g - w).abs() <= 1e-12 * w.max(1.0), "{g} vs {w}"),
            (g, w) => assert_eq!(g, w),
        }
    }
}

#[test]
fn hd95_scales_with_spacing() {
    let mut r = rng(4);
    for _ in 0..200 {
        let shape = [6, 6, 4];
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let base = [1.25, 1.5, 3.0];
        let h = surface_distance_percentile(&a, &b, shape, base, 95.0);
        for f in [0.25, 0.5, 2.0, 8.0] {
            let scaled = surface_distance_percentile(&a, &b, shape, base.map(|s| s * f), 95.0);
            assert_eq!(scaled, h.map(|v| v * f));
        }
        let f = 1.7;
        let scaled = surface_distance_percentile(&a, &b, shape, base.map(|s| s * f), 95.0);
        if let (Some(s), Some(v)) = (scaled, h) {
            assert!((s - v * f).abs() <= 1e-12 * s.max(1.0));
        }
    }
}

#[test]
fn dice_examples() {
    let mut a = vec![false; 16];
    let mut b = vec![false; 16];
    a[0] = true;
    a[1] = true;
    b[1] = true;
    b[2] = true;
    assert_eq!(dice_masks(&a, &a), 1.0);
    assert_eq!(dice_masks(&a, &b), 0.5);
    let c: Vec<bool> = a.iter().map(|x| !x).collect();
    assert_eq!(dice_masks(&a, &c), 0.0);
    assert_eq!(brute_dice(&a, &b), dice_masks(&a, &b));
}

#[test]
fn single_voxels_three_mm_apart() {
    let shape = [5, 1, 1];
    let a = [true, false, false, false, false];
    let b = [false, false, false, true, false];
    let d = surface_distance_percentile(&a, &b, shape, [1.0; 3], 95.0);
    assert_eq!(d, Some(3.0));
}

fn case_labels(shape: [usize; 3], spacing: [f64; 3]) -> LabelVolume {
    let grid = Grid::with_spacing(shape, spacing, [0.0; 3]).unwrap();
    Volume::from_fn(grid, |i, j, _| match (i, j) {
        (1..=2, 1..=2) => 1,
        (4..=5, 1..=3) => 2,
        (1..=3, 5..=6) => 3,
        _ => 0,
    })
}

#[test]
fn evaluate_identical_and_empty_predictions() {
    let gt = case_labels([8, 8, 3], [1.25, 1.25, 8.0]);
    let map = LabelMap::default();
    let same = evaluate_case("A", &gt, &gt, &map).unwrap();
    for s in Structure::ALL {
        let m = same.get(s).unwrap();
        assert_eq!((m.dice, m.hd95_mm), (1.0, Some(0.0)));
    }
    assert_eq!(same.mean_dice, 1.0);

    let empty = gt.map(|_| 0u16);
    let r = evaluate_case("B", &empty, &gt, &map).unwrap();
    for s in Structure::ALL {
        let m = r.get(s).unwrap();
        assert_eq!((m.dice, m.hd95_mm), (0.0, None));
    }
}

#[test]
fn aggregate_means_and_table_shape() {
    let gt = case_labels([8, 8, 3], [1.0; 3]);
    let map = LabelMap::default();
    let mut a = evaluate_case("A", &gt, &gt, &map).unwrap();
    let mut b = a.clone();
    b.case_id = "B".into();
    a.structures[0].dice = 0.8;
    b.structures[0].dice = 0.9;
    let s = aggregate(&[b, a]).unwrap();
    assert!((s.get(Structure::Lv).unwrap().mean_dice - 0.85).abs() < 1e-12);
    let table = CohortSummary::table(&[("baseline", &s), ("augmented", &s)]);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].contains("DICE") && lines[0].contains("Hausdorff"));
    assert_eq!(lines[1].matches("LV").count(), 2);
    assert_eq!(lines[1].matches("MYO").count(), 2);
    assert_eq!(lines[1].matches("RV").count(), 2);
    assert_eq!(lines.len(), 4);
}

#[test]
fn csv_writes_empty_field_for_undefined_hd95() {
    let gt = case_labels([8, 8, 3], [1.0; 3]);
    let map = LabelMap::default();
    let r = evaluate_case("B", &gt.map(|_| 0u16), &gt, &map).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    write_metrics_csv(&p, &[r]).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("case_id,structure,dice,hd95_mm\n"));
    assert!(text.contains("B,LV,0.0,\n"));
    let rows = read_metrics_csv(&p).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.hd95_mm.is_none()));
}

proptest! {
    #[test]
    fn dice_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = [5, 4, 3];
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let d = dice_masks(&a, &b);
        prop_assert_eq!(d, dice_masks(&b, &a));
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn hd95_is_symmetric_and_zero_on_self(seed in any::<u64>()) {
        let mut r = rng(seed);
        let shape = [6, 5, 3];
        let (a, b) = (random_mask(&mut r, shape), random_mask(&mut r, shape));
        let sp = [1.5, 1.25, 2.0];
        prop_assert_eq!(
            surface_distance_percentile(&a, &b, shape, sp, 95.0),
            surface_distance_percentile(&b, &a, shape, sp, 95.0)
        );
        if a.contains(&true) {
            prop_assert_eq!(surface_distance_percentile(&a, &a, shape, sp, 95.0), Some(0.0));
        }
    }
}
