//! Selection of feature functionals for functional data.
//!
//! Curves observed on a shared grid are summarised by a menu of scalar
//! feature functionals (point values, local averages, occupation times,
//! up-crossing counts, path moments). For every candidate subset of those
//! features the sample is *blinded*: each curve is replaced by the average of
//! its `r` nearest neighbours in the reduced feature space. A statistical
//! procedure fitted once on the original curves (a classifier, functional PCA
//! or a functional linear model) is then applied to both versions, and the
//! subset whose blinded curves best preserve the procedure's output wins.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64` or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::large_enum_variant, clippy::needless_range_loop)]

pub mod blinding;
pub mod error;
pub mod fdata;
pub mod features;
pub mod linalg;
pub mod objectives;
pub mod oracle;
pub mod scalar;
pub mod search;
pub mod statproc;

pub use blinding::{blind_sample, knn_indices, BlindedSample, SubsetIndex};
pub use error::{Error, Result};
pub use fdata::{center, inner_product, l2_norm, FunctionalSample, Grid};
pub use features::{build_feature_matrix, evaluate_feature, FeatureKind, FeatureMatrix, FeatureSpec};
pub use objectives::{FnObjective, Objective, ObjectiveKind, ObjectiveValue, SubsetObjective};
pub use scalar::Real;
pub use search::{run_search, search, RankedSubset, SearchConfig, SearchResult};
pub use statproc::{ClassifierKind, ClassifierModel, FpcaModel, FunRegModel, ScalarRegModel};

pub type GridF64 = Grid<f64>;
pub type GridF32 = Grid<f32>;
pub type SampleF64 = FunctionalSample<f64>;
pub type SampleF32 = FunctionalSample<f32>;
pub type FeatureMatrixF64 = FeatureMatrix<f64>;
pub type FeatureMatrixF32 = FeatureMatrix<f32>;
pub type BlindedSampleF64 = BlindedSample<f64>;
pub type FpcaModelF64 = FpcaModel<f64>;
pub type FpcaModelF32 = FpcaModel<f32>;
pub type ScalarRegModelF64 = ScalarRegModel<f64>;
pub type FunRegModelF64 = FunRegModel<f64>;
pub type ClassifierModelF64 = ClassifierModel<f64>;
pub type ObjectiveKindF64 = ObjectiveKind<f64>;
pub type ObjectiveF64<'a> = Objective<'a, f64>;
