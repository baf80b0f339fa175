//! Qualitative case studies on public datasets, run when the files are
//! available locally (see the README for the expected layout).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use funsel::statproc::{fit_classifier, fit_scalar_regression};
use funsel::{run_search, ClassifierKind, FeatureKind, ObjectiveKindF64, SearchConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::expand_features;
use crate::io;
use crate::report::{best_per_cardinality, RankedEntry};
use crate::run::labels_of;

pub const GROWTH_CURVES: &str = "growth.csv";
pub const GROWTH_LABELS: &str = "growth_labels.csv";
pub const WEATHER_TEMP: &str = "weather_temp.csv";
pub const WEATHER_LOGPREC: &str = "weather_logprec.csv";

/// The files a study needs, or `None` if any is missing.
pub fn files(dir: &Path, names: &[&str]) -> Option<Vec<PathBuf>> {
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    paths.iter().all(|p| p.is_file()).then_some(paths)
}

#[derive(Debug, Clone)]
pub struct GrowthStudy {
    /// Best pair's matching error per repetition.
    pub errors: Vec<f64>,
    pub pairs: Vec<Vec<String>>,
}

impl GrowthStudy {
    pub fn mean_error(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

/// Point-value features, exhaustive pair search. Each repetition fits the
/// classifier on a random three quarters of the curves and scores the
/// matching error of every pair on the whole sample.
pub fn growth(dir: &Path, reps: usize, r: usize, classifier: ClassifierKind, seed: u64) -> Result<GrowthStudy> {
    let paths = files(dir, &[GROWTH_CURVES, GROWTH_LABELS]).ok_or_else(|| anyhow!("growth files missing"))?;
    let x = io::read_curves(&paths[0])?;
    let labels = io::read_labels(&paths[1], x.ids())?;
    let specs = expand_features(&["point@*".into()], x.grid())?;
    let names = labels_of(&specs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GrowthStudy { errors: Vec::new(), pairs: Vec::new() };
    let cfg = SearchConfig { epsilon: 0.0, ..SearchConfig::exhaustive(2, r) };
    for _ in 0..reps {
        let mut order: Vec<usize> = (0..x.n()).collect();
        order.shuffle(&mut rng);
        let learn = &order[..(3 * x.n()) / 4];
        let learn_x = x.subset(learn).map_err(|e| anyhow!("{e}"))?;
        let learn_y: Vec<i64> = learn.iter().map(|&j| labels[j]).collect();
        let model = fit_classifier(&learn_x, &learn_y, classifier).map_err(|e| anyhow!("{e}"))?;
        let kind = ObjectiveKindF64::Classification(model);
        let res = run_search(&x, &specs, &kind, &cfg).map_err(|e| anyhow!("{e}"))?;
        let best = best_per_cardinality(&res.trace, &names);
        let pair = best.iter().find(|e| e.subset.len() == 2).ok_or_else(|| anyhow!("no pair evaluated"))?;
        out.errors.push(pair.raw);
        out.pairs.push(pair.labels.clone());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct WeatherStudy {
    pub per_cardinality: Vec<RankedEntry>,
    /// `(lo, hi)` of each feature: days for windows, degrees for bands.
    pub ranges: Vec<(f64, f64)>,
}

fn weather_search(dir: &Path, menu: &str, d: usize, r: usize) -> Result<WeatherStudy> {
    let paths = files(dir, &[WEATHER_TEMP, WEATHER_LOGPREC]).ok_or_else(|| anyhow!("weather files missing"))?;
    let x = io::read_curves(&paths[0])?;
    let y = io::read_scalar(&paths[1], x.ids())?;
    let specs = expand_features(&[menu.to_string()], x.grid())?;
    let k = crate::run::explained_components(&x, 0.99)?;
    let model = fit_scalar_regression(&x, &y, k.min(x.n() - 1)).map_err(|e| anyhow!("{e}"))?;
    let kind = ObjectiveKindF64::RegScalar(model);
    let res = run_search(&x, &specs, &kind, &SearchConfig::exhaustive(d, r)).map_err(|e| anyhow!("{e}"))?;
    let ranges = specs
        .iter()
        .map(|s| match s.kind {
            FeatureKind::LocalAverage(a, b) | FeatureKind::Occupation(a, b) => (a, b),
            _ => (f64::NAN, f64::NAN),
        })
        .collect();
    Ok(WeatherStudy { per_cardinality: best_per_cardinality(&res.trace, &labels_of(&specs)), ranges })
}

/// 41 nine-day local averages, exhaustive over cardinalities `1..=d`.
pub fn weather_windows(dir: &Path, d: usize, r: usize) -> Result<WeatherStudy> {
    weather_search(dir, "avg/9", d, r)
}

/// Twelve 5-degree occupation bands from −35 to 25, exhaustive.
pub fn weather_bands(dir: &Path, d: usize, r: usize) -> Result<WeatherStudy> {
    weather_search(dir, "occ/-35:5:25", d, r)
}
