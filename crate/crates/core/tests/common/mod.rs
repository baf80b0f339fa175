#![allow(dead_code)]

use funsel::oracle::{simulate_with_scores, KlModel, Simulation};
use funsel::{FeatureSpec, GridF64};

pub fn specs(items: &[&str]) -> Vec<FeatureSpec> {
    items.iter().map(|s| s.parse().unwrap()).collect()
}

pub fn points(idx: &[usize]) -> Vec<FeatureSpec> {
    idx.iter().map(|i| format!("point@{i}").parse().unwrap()).collect()
}

pub fn kl(grid_len: usize, variances: Vec<f64>, noise: f64) -> KlModel {
    KlModel::sine(GridF64::uniform(0.0, 1.0, grid_len).unwrap(), variances, noise).unwrap()
}

pub fn draw(model: &KlModel, n: usize, seed: u64) -> Simulation {
    simulate_with_scores(model, n, seed).unwrap()
}

/// Weighted L² norm of a surface on a product grid.
pub fn surface_norm(s: &ndarray::Array2<f64>, gx: &GridF64, gy: &GridF64) -> f64 {
    let (wx, wy) = (gx.weights(), gy.weights());
    let mut acc = 0.0;
    for t in 0..s.nrows() {
        for u in 0..s.ncols() {
            acc += wx[t] * wy[u] * s[[t, u]] * s[[t, u]];
        }
    }
    acc.sqrt()
}
