use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{l2_distance, FunctionalSample, Grid};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NearestCentroid,
    Knn(usize),
}

/// A frozen plug-in classifier in L².
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<T> {
    pub kind: ClassifierKind,
    pub grid: Grid<T>,
    pub curves: Array2<T>,
    pub labels: Vec<i64>,
    /// Distinct labels, ascending.
    pub classes: Vec<i64>,
    /// One row per entry of `classes` (nearest centroid only).
    pub centroids: Option<Array2<T>>,
}

impl<T: Real> ClassifierModel<T> {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

pub fn fit_classifier<T: Real>(
    sample: &FunctionalSample<T>,
    labels: &[i64],
    kind: ClassifierKind,
) -> Result<ClassifierModel<T>> {
    if labels.len() != sample.n() {
        return Err(Error::Dimension(format!("{} labels for {} curves", labels.len(), sample.n())));
    }
    let mut members: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    if members.len() < 2 {
        return Err(Error::Parameter(format!("classifier needs at least 2 classes, found {}", members.len())));
    }
    if let ClassifierKind::Knn(k) = kind {
        if k == 0 || k > sample.n() {
            return Err(Error::Parameter(format!("knn k={k} must lie in 1..={}", sample.n())));
        }
    }
    let classes: Vec<i64> = members.keys().copied().collect();
    let centroids = match kind {
        ClassifierKind::NearestCentroid => {
            let mut c = Array2::<T>::zeros((classes.len(), sample.grid().len()));
            for (row, idx) in members.values().enumerate() {
                let sub = sample.curves().select(ndarray::Axis(0), idx);
                c.row_mut(row).assign(&sub.mean_axis(ndarray::Axis(0)).expect("non-empty class"));
            }
            Some(c)
        }
        ClassifierKind::Knn(_) => None,
    };
    Ok(ClassifierModel {
        kind,
        grid: sample.grid().clone(),
        curves: sample.curves().clone(),
        labels: labels.to_vec(),
        classes,
        centroids,
    })
}

pub fn classify<T: Real>(model: &ClassifierModel<T>, x: ArrayView1<'_, T>) -> Result<i64> {
    model.grid.check(x)?;
    match model.kind {
        ClassifierKind::NearestCentroid => {
            let centroids = model.centroids.as_ref().expect("centroids fitted");
            let mut best = (T::infinity(), 0usize);
            for (c, row) in centroids.rows().into_iter().enumerate() {
                let d = l2_distance(row, x, &model.grid)?;
                // strict comparison keeps the smaller label on ties
                if d < best.0 {
                    best = (d, c);
                }
            }
            Ok(model.classes[best.1])
        }
        ClassifierKind::Knn(k) => {
            let mut dist: Vec<(T, usize)> = model
                .curves
                .rows()
                .into_iter()
                .enumerate()
                .map(|(i, row)| l2_distance(row, x, &model.grid).map(|d| (d, i)))
                .collect::<Result<_>>()?;
            dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
            let mut votes: BTreeMap<i64, usize> = BTreeMap::new();
            for &(_, i) in dist.iter().take(k) {
                *votes.entry(model.labels[i]).or_default() += 1;
            }
            let top = votes.values().copied().max().unwrap_or(0);
            Ok(*votes.iter().find(|(_, &v)| v == top).map(|(l, _)| l).expect("k >= 1"))
        }
    }
}
