//! Statistical procedures whose outputs the objectives compare.

mod classifier;
mod fpca;
mod regression;

pub use classifier::{classify, fit_classifier, ClassifierKind, ClassifierModel};
pub use fpca::{fit_fpca, fpca_scores, FpcaModel};
pub use regression::{fit_functional_regression, fit_scalar_regression, FunRegModel, ScalarRegModel};

use crate::scalar::Real;

/// Smallest component count whose eigenvalues explain `fraction` of the total.
pub fn components_for_variance<T: Real>(eigenvalues: &[T], fraction: f64) -> usize {
    let total: T = eigenvalues.iter().copied().sum();
    if total <= T::zero() {
        return 1;
    }
    let target = T::lit(fraction) * total;
    let mut acc = T::zero();
    for (k, &v) in eigenvalues.iter().enumerate() {
        acc += v;
        if acc >= target {
            return k + 1;
        }
    }
    eigenvalues.len().max(1)
}
