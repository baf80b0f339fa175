//! Distortion of a frozen procedure's output when the original curves are
//! replaced by their blinded versions.

use serde::{Deserialize, Serialize};

use crate::blinding::{blind_sample, BlindedSample, SubsetIndex};
use crate::error::{Error, Result};
use crate::fdata::FunctionalSample;
use crate::features::FeatureMatrix;
use crate::scalar::Real;
use crate::statproc::{classify, ClassifierModel, FpcaModel, FunRegModel, ScalarRegModel};

/// Raw objective, its unit-free rescaling and the rescaling denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub raw: f64,
    pub rescaled: f64,
    pub denominator: f64,
}

impl ObjectiveValue {
    fn ratio(raw: f64, denominator: f64, what: &str) -> Result<Self> {
        if !(denominator > 0.0) || !denominator.is_finite() {
            return Err(Error::Degenerate(format!("{what}: rescaling denominator is {denominator:e}")));
        }
        Ok(Self { raw, rescaled: raw / denominator, denominator })
    }
}

/// A procedure fitted once on the original sample.
#[derive(Debug, Clone)]
pub enum ObjectiveKind<T> {
    Classification(ClassifierModel<T>),
    Pca(FpcaModel<T>),
    RegScalar(ScalarRegModel<T>),
    RegFunctional(FunRegModel<T>),
}

impl<T: Real> ObjectiveKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Classification(_) => "classify",
            ObjectiveKind::Pca(_) => "pca",
            ObjectiveKind::RegScalar(_) => "reg-scalar",
            ObjectiveKind::RegFunctional(_) => "reg-fun",
        }
    }

    pub fn evaluate(&self, sample: &FunctionalSample<T>, blinded: &BlindedSample<T>) -> Result<ObjectiveValue> {
        match self {
            ObjectiveKind::Classification(m) => h_classification(m, sample, blinded),
            ObjectiveKind::Pca(m) => h_pca(m, sample, blinded),
            ObjectiveKind::RegScalar(m) => h_reg_scalar(m, sample, blinded),
            ObjectiveKind::RegFunctional(m) => h_reg_functional(m, sample, blinded),
        }
    }
}

fn check_pair<T: Real>(sample: &FunctionalSample<T>, blinded: &BlindedSample<T>) -> Result<()> {
    if blinded.curves.dim() != sample.curves().dim() {
        return Err(Error::Dimension(format!(
            "blinded curves {:?} do not match sample {:?}",
            blinded.curves.dim(),
            sample.curves().dim()
        )));
    }
    Ok(())
}

/// Share of curves whose predicted class changes after blinding.
pub fn h_classification<T: Real>(
    model: &ClassifierModel<T>,
    sample: &FunctionalSample<T>,
    blinded: &BlindedSample<T>,
) -> Result<ObjectiveValue> {
    check_pair(sample, blinded)?;
    let n = sample.n();
    let mut agree = 0usize;
    for j in 0..n {
        if classify(model, sample.curve(j))? == classify(model, blinded.curve(j))? {
            agree += 1;
        }
    }
    let raw = 1.0 - agree as f64 / n as f64;
    Ok(ObjectiveValue { raw, rescaled: raw, denominator: 1.0 })
}

/// Mean squared change of the FPCA scores, summed over components.
pub fn h_pca<T: Real>(
    model: &FpcaModel<T>,
    sample: &FunctionalSample<T>,
    blinded: &BlindedSample<T>,
) -> Result<ObjectiveValue> {
    check_pair(sample, blinded)?;
    let orig = model.scores_matrix(sample.curves())?;
    let blind = model.scores_matrix(&blinded.curves)?;
    let n = T::from_count(sample.n());
    let raw = orig.iter().zip(blind.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() / n;
    let denom = orig.iter().map(|&a| a * a).sum::<T>() / n;
    ObjectiveValue::ratio(raw.as_f64(), denom.as_f64(), "pca")
}

/// Mean squared change of the scalar linear predictor.
pub fn h_reg_scalar<T: Real>(
    model: &ScalarRegModel<T>,
    sample: &FunctionalSample<T>,
    blinded: &BlindedSample<T>,
) -> Result<ObjectiveValue> {
    check_pair(sample, blinded)?;
    let n = sample.n();
    let mut raw = T::zero();
    let mut denom = T::zero();
    for j in 0..n {
        let a = model.linear_predictor(sample.curve(j))?;
        let b = model.linear_predictor(blinded.curve(j))?;
        raw += (a - b) * (a - b);
        denom += a * a;
    }
    let nn = T::from_count(n);
    ObjectiveValue::ratio((raw / nn).as_f64(), (denom / nn).as_f64(), "reg-scalar")
}

/// Mean squared L² change of the predicted response curve.
pub fn h_reg_functional<T: Real>(
    model: &FunRegModel<T>,
    sample: &FunctionalSample<T>,
    blinded: &BlindedSample<T>,
) -> Result<ObjectiveValue> {
    check_pair(sample, blinded)?;
    let wy = model.y_basis.grid.weights();
    let mean = &model.x_basis.mean;
    let norm2 = |v: &ndarray::Array1<T>| v.iter().zip(wy.iter()).map(|(&a, &w)| w * a * a).sum::<T>();
    let n = sample.n();
    let mut raw = T::zero();
    let mut denom = T::zero();
    for j in 0..n {
        let x = sample.curve(j);
        let diff = &x - &blinded.curve(j);
        raw += norm2(&model.apply(diff.view())?);
        let centred = &x - mean;
        denom += norm2(&model.apply(centred.view())?);
    }
    let nn = T::from_count(n);
    ObjectiveValue::ratio((raw / nn).as_f64(), (denom / nn).as_f64(), "reg-fun")
}

/// Anything the subset search can score.
pub trait SubsetObjective: Sync {
    /// Number of candidate features.
    fn p(&self) -> usize;
    fn evaluate(&self, subset: &SubsetIndex) -> Result<ObjectiveValue>;
}

/// Closure-backed objective, handy for hand-built tables.
pub struct FnObjective<F> {
    p: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&SubsetIndex) -> Result<ObjectiveValue> + Sync,
{
    pub fn new(p: usize, f: F) -> Self {
        Self { p, f }
    }
}

impl<F> SubsetObjective for FnObjective<F>
where
    F: Fn(&SubsetIndex) -> Result<ObjectiveValue> + Sync,
{
    fn p(&self) -> usize {
        self.p
    }

    fn evaluate(&self, subset: &SubsetIndex) -> Result<ObjectiveValue> {
        (self.f)(subset)
    }
}

/// Blind-then-score objective over a fixed sample and feature matrix.
pub struct Objective<'a, T> {
    pub kind: &'a ObjectiveKind<T>,
    pub sample: &'a FunctionalSample<T>,
    pub features: FeatureMatrix<T>,
    pub r: usize,
}

impl<'a, T: Real> Objective<'a, T> {
    pub fn new(
        kind: &'a ObjectiveKind<T>,
        sample: &'a FunctionalSample<T>,
        features: FeatureMatrix<T>,
        r: usize,
    ) -> Result<Self> {
        if features.n() != sample.n() {
            return Err(Error::Dimension(format!(
                "feature matrix has {} rows, sample has {} curves",
                features.n(),
                sample.n()
            )));
        }
        if r == 0 || r > sample.n() {
            return Err(Error::Parameter(format!("r={r} must lie in 1..={}", sample.n())));
        }
        Ok(Self { kind, sample, features, r })
    }

    pub fn blind(&self, subset: &SubsetIndex) -> Result<BlindedSample<T>> {
        blind_sample(self.sample, &self.features, subset, self.r)
    }
}

impl<T: Real> SubsetObjective for Objective<'_, T> {
    fn p(&self) -> usize {
        self.features.p()
    }

    fn evaluate(&self, subset: &SubsetIndex) -> Result<ObjectiveValue> {
        let blinded = self.blind(subset)?;
        self.kind.evaluate(self.sample, &blinded)
    }
}
