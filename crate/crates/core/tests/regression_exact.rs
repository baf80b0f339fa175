mod common;

use funsel::statproc::{fit_functional_regression, fit_scalar_regression};
use funsel::{FunctionalSample, GridF64};
use ndarray::{Array1, Array2, Axis};

#[test]
fn noiseless_scalar_model_in_top_eigenspace() {
    let model = common::kl(61, vec![3.0, 1.5, 0.8], 0.0);
    let sim = common::draw(&model, 150, 31);
    let g = sim.sample.grid();
    let beta: Array1<f64> = &model.basis.row(0) * 1.5 - &model.basis.row(1) * 0.7 + &model.basis.row(2) * 0.2;
    let w = g.weights();
    let y: Vec<f64> = sim.sample.curves().rows().into_iter().map(|x| 2.0 + (&x * &beta * w).sum()).collect();
    let fit = fit_scalar_regression(&sim.sample, &y, 3).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, yy) in y.iter().enumerate() {
        let p = fit.predict(sim.sample.curve(j)).unwrap();
        num += (p - yy).powi(2);
        den += yy * yy;
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-6, "relative prediction error {rel}");
    assert!(fit.warnings.is_empty());
}

#[test]
fn rank_one_functional_surface() {
    let model = common::kl(41, vec![2.5], 0.0);
    let sim = common::draw(&model, 80, 5);
    let gx = sim.sample.grid().clone();
    let gy = GridF64::uniform(10.0, 12.0, 23).unwrap();
    let psi: Array1<f64> = gy.points().mapv(|s| (s - 10.0).powi(2) + 0.5);
    let phi = model.basis.row(0).to_owned();
    let truth: Array2<f64> = phi.view().insert_axis(Axis(1)).dot(&psi.view().insert_axis(Axis(0)));
    let wx = gx.weights();
    let wcurves = sim.sample.curves() * &wx.view().insert_axis(Axis(0));
    let y = FunctionalSample::with_default_ids(gy.clone(), wcurves.dot(&truth)).unwrap();
    let fit = fit_functional_regression(&sim.sample, &y, 1, 1).unwrap();
    let rel = common::surface_norm(&(&fit.beta_surface - &truth), &gx, &gy) / common::surface_norm(&truth, &gx, &gy);
    assert!(rel < 1e-6, "relative weighted Frobenius error {rel}");
}

#[test]
fn identity_response_is_reconstructed() {
    let model = common::kl(31, vec![2.0, 1.0, 0.5], 0.0);
    let sim = common::draw(&model, 60, 17);
    let y = sim.sample.clone();
    let fit = fit_functional_regression(&sim.sample, &y, 3, 3).unwrap();
    for j in 0..sim.sample.n() {
        let pred = fit.predict(sim.sample.curve(j)).unwrap();
        let err = (&pred - &y.curve(j)).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(err < 1e-8, "curve {j}: {err}");
    }
}
