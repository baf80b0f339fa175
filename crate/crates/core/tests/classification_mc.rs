//! Classification objective against a fixed halfspace rule, whose population
//! value has a closed form for Gaussian models.

mod common;

use funsel::objectives::h_classification;
use funsel::oracle::{closed_form_blind, halfspace_disagreement};
use funsel::statproc::{classify, fit_classifier};
use funsel::{
    build_feature_matrix, BlindedSample, ClassifierKind, ClassifierModel, Objective, ObjectiveKindF64, SubsetIndex,
    SubsetObjective,
};
use ndarray::{stack, Axis};

/// Nearest centroid with centroids ±φ: the rule `⟨φ, x⟩ > 0`.
fn halfspace_rule(model: &funsel::oracle::KlModel, k: usize) -> ClassifierModel<f64> {
    let phi = model.basis.row(k);
    let neg = phi.mapv(|v| -v);
    ClassifierModel {
        kind: ClassifierKind::NearestCentroid,
        grid: model.grid.clone(),
        curves: stack![Axis(0), neg, phi],
        labels: vec![0, 1],
        classes: vec![0, 1],
        centroids: Some(stack![Axis(0), neg, phi]),
    }
}

#[test]
fn closed_form_blinding_matches_halfspace_formula() {
    let model = common::kl(41, vec![2.0, 1.0, 0.5], 0.1);
    let specs = common::points(&[9, 25]);
    let rule = halfspace_rule(&model, 1);
    for subset in [vec![0], vec![1], vec![0, 1]] {
        let i = SubsetIndex::new(subset).unwrap();
        let p = halfspace_disagreement(&model, &model.basis.row(1).to_owned(), &specs, &i).unwrap();
        let n = 40_000;
        let sample = common::draw(&model, n, 91).sample;
        let z = closed_form_blind(&model, &sample, &specs, &i).unwrap();
        let blinded = BlindedSample { curves: z, subset: i.clone(), r: 0, neighbor_sets: Vec::new() };
        let h = h_classification(&rule, &sample, &blinded).unwrap().raw;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((h - p).abs() < 3.0 * se, "{i}: Monte Carlo {h} vs closed form {p} (se {se})");
    }
}

#[test]
fn knn_blinding_approaches_the_population_value() {
    let model = common::kl(41, vec![2.0, 1.0, 0.5], 0.1);
    let specs = common::points(&[9]);
    let i = SubsetIndex::singleton(0);
    let p = halfspace_disagreement(&model, &model.basis.row(0).to_owned(), &specs, &i).unwrap();
    let rule = ObjectiveKindF64::Classification(halfspace_rule(&model, 0));
    let diffs: Vec<f64> = [300usize, 6000]
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = (0..8u64)
                .map(|rep| {
                    let sample = common::draw(&model, n, 1000 * n as u64 + rep).sample;
                    let r = funsel::oracle::default_r_rule(n);
                    let obj =
                        Objective::new(&rule, &sample, build_feature_matrix(&sample, &specs).unwrap(), r).unwrap();
                    (obj.evaluate(&i).unwrap().raw - p).abs()
                })
                .collect();
            errs.iter().sum::<f64>() / errs.len() as f64
        })
        .collect();
    assert!(diffs[1] < diffs[0], "mean |h_n - h|: {diffs:?}");
    assert!(diffs[1] < 0.03, "mean |h_n - h| at n=6000: {}", diffs[1]);
}

#[test]
fn nearest_centroid_beats_chance_out_of_sample() {
    let model = common::kl(31, vec![2.0, 1.0, 0.5], 0.2);
    let label = |sim: &funsel::oracle::Simulation, j: usize| (sim.scores[[j, 0]] > 0.0) as i64;
    let train = common::draw(&model, 300, 5);
    let test = common::draw(&model, 2000, 6);
    let labels: Vec<i64> = (0..300).map(|j| label(&train, j)).collect();
    let fit = fit_classifier(&train.sample, &labels, ClassifierKind::NearestCentroid).unwrap();
    let wrong = (0..2000).filter(|&j| classify(&fit, test.sample.curve(j)).unwrap() != label(&test, j)).count();
    let err = wrong as f64 / 2000.0;
    assert!(err < 0.1, "test error {err}");
}
