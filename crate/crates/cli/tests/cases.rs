mod common;

use funsel::{ClassifierKind, FunctionalSample, GridF64};
use funsel_cli::{cases, io};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_ids(path: &std::path::Path, ids: &[String], values: impl Fn(usize) -> String) {
    let text: String = ids.iter().enumerate().map(|(j, id)| format!("{id},{}\n", values(j))).collect();
    std::fs::write(path, text).unwrap();
}

#[test]
fn growth_study_on_separated_classes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridF64::uniform(1.0, 18.0, 31).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 60;
    let class: Vec<i64> = (0..n).map(|j| (j % 2) as i64).collect();
    let curves = Array2::from_shape_fn((n, 31), |(j, t)| {
        let age = 1.0 + 17.0 * t as f64 / 30.0;
        let late = if class[j] == 1 && age > 12.0 { 10.0 * (age - 12.0) } else { 0.0 };
        75.0 + 6.0 * age + late
    }) + Array2::from_shape_fn((n, 31), |_| rng.random_range(-1.0..1.0));
    let x = FunctionalSample::with_default_ids(grid, curves).unwrap();
    io::write_curves_file(&x, &dir.path().join(cases::GROWTH_CURVES)).unwrap();
    write_ids(&dir.path().join(cases::GROWTH_LABELS), x.ids(), |j| class[j].to_string());

    let study = cases::growth(dir.path(), 3, 3, ClassifierKind::NearestCentroid, 1).unwrap();
    assert_eq!(study.errors.len(), 3);
    assert!(study.pairs.iter().all(|p| p.len() == 2));
    assert!(study.mean_error() < 0.1, "{}", study.mean_error());
}

#[test]
fn weather_studies_find_the_informative_season() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridF64::uniform(1.0, 365.0, 365).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 35;
    let level: Vec<f64> = (0..n).map(|_| rng.random_range(-8.0..8.0)).collect();
    let autumn: Vec<f64> = (0..n).map(|_| rng.random_range(-6.0..6.0)).collect();
    let curves = Array2::from_shape_fn((n, 365), |(j, t)| {
        let day = t as f64 + 1.0;
        let season = -12.0 * (2.0 * std::f64::consts::PI * (day - 15.0) / 365.0).cos();
        let bump = (-((day - 310.0) / 25.0).powi(2)).exp();
        level[j] + season + autumn[j] * bump
    });
    let x = FunctionalSample::with_default_ids(grid, curves).unwrap();
    io::write_curves_file(&x, &dir.path().join(cases::WEATHER_TEMP)).unwrap();
    write_ids(&dir.path().join(cases::WEATHER_LOGPREC), x.ids(), |j| (2.0 + 0.3 * autumn[j]).to_string());

    assert!(cases::files(dir.path(), &[cases::GROWTH_CURVES]).is_none());

    let w = cases::weather_windows(dir.path(), 2, 3).unwrap();
    assert_eq!(w.ranges.len(), 41);
    assert_eq!(w.per_cardinality.len(), 2);
    assert!(w.per_cardinality[1].rescaled <= w.per_cardinality[0].rescaled);
    let (lo, hi) = w.ranges[w.per_cardinality[0].subset.indices()[0]];
    assert!(hi >= 265.0 && lo <= 355.0, "{lo}-{hi}");

    let b = cases::weather_bands(dir.path(), 2, 3).unwrap();
    assert_eq!(b.ranges.len(), 12);
    assert_eq!(b.ranges[0], (-35.0, -30.0));
    assert!(b.per_cardinality.iter().any(|e| e.subset.len() == 2));
}
