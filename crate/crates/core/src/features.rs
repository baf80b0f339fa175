//! Declarative feature functionals and their evaluation.
//!
//! Each [`FeatureSpec`] has a canonical text form used in configuration
//! files:
//!
//! | kind          | text              |
//! |---------------|-------------------|
//! | point value   | `point@12`        |
//! | local average | `avg[1.0,9.0]`    |
//! | occupation    | `occ[-35,-30)`    |
//! | up-crossings  | `upx@0.0`         |
//! | path norm     | `pathnorm^2`      |
//! | path moment   | `pathmom^3`       |
//!
//! Occupation bounds accept `-inf` / `inf`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::{FunctionalSample, Grid};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    /// Value at a grid index.
    PointEval(usize),
    /// Mean over `[t_lo, t_hi]` (time units).
    LocalAverage(f64, f64),
    /// Time spent with value in `[y_lo, y_hi)`.
    Occupation(f64, f64),
    /// Sampled up-crossings of a level.
    UpCrossings(f64),
    /// `‖x‖^q`.
    PathNorm(u32),
    /// `∫ x(t)^q dt`.
    PathMoment(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub label: String,
}

impl FeatureSpec {
    /// Spec labelled with its canonical text form.
    pub fn new(kind: FeatureKind) -> Self {
        let label = canonical(&kind);
        Self { kind, label }
    }

    pub fn with_label(kind: FeatureKind, label: impl Into<String>) -> Self {
        Self { kind, label: label.into() }
    }

    pub fn canonical(&self) -> String {
        canonical(&self.kind)
    }

    /// Checks the spec against a grid.
    pub fn validate<T: Real>(&self, grid: &Grid<T>) -> Result<()> {
        match self.kind {
            FeatureKind::PointEval(i) if i >= grid.len() => {
                Err(Error::Spec(format!("{}: index {i} outside grid of {} points", self.label, grid.len())))
            }
            FeatureKind::LocalAverage(lo, hi) => {
                let (a, b) = (grid.start().as_f64(), grid.end().as_f64());
                if !(lo < hi) {
                    return Err(Error::Spec(format!("{}: empty interval", self.label)));
                }
                if lo < a || hi > b {
                    return Err(Error::Spec(format!(
                        "{}: interval [{lo}, {hi}] leaves the grid range [{a}, {b}]",
                        self.label
                    )));
                }
                if window(grid, lo, hi).is_none() {
                    return Err(Error::Spec(format!("{}: no grid point inside [{lo}, {hi}]", self.label)));
                }
                Ok(())
            }
            FeatureKind::Occupation(lo, hi) if !(lo < hi) => {
                Err(Error::Spec(format!("{}: occupation band needs y_lo < y_hi", self.label)))
            }
            FeatureKind::UpCrossings(c) if !c.is_finite() => {
                Err(Error::Spec(format!("{}: level must be finite", self.label)))
            }
            FeatureKind::PathNorm(0) | FeatureKind::PathMoment(0) => {
                Err(Error::Spec(format!("{}: power must be at least 1", self.label)))
            }
            _ => Ok(()),
        }
    }

    /// Quadrature coefficients `c` with `f(x) = Σ c[i] x[i]`, for the linear
    /// kinds (point value, local average, first path moment).
    pub fn linear_weights<T: Real>(&self, grid: &Grid<T>) -> Option<Array1<T>> {
        let mut c = Array1::<T>::zeros(grid.len());
        match self.kind {
            FeatureKind::PointEval(i) if i < grid.len() => c[i] = T::one(),
            FeatureKind::LocalAverage(lo, hi) => {
                let (first, last) = window(grid, lo, hi)?;
                if first == last {
                    c[first] = T::one();
                } else {
                    let pts = grid.points();
                    let len = pts[last] - pts[first];
                    let half = T::lit(0.5);
                    for i in first..last {
                        let h = (pts[i + 1] - pts[i]) * half / len;
                        c[i] += h;
                        c[i + 1] += h;
                    }
                }
            }
            FeatureKind::PathMoment(1) => c.assign(&grid.weights()),
            _ => return None,
        }
        Some(c)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn canonical(kind: &FeatureKind) -> String {
    match *kind {
        FeatureKind::PointEval(i) => format!("point@{i}"),
        FeatureKind::LocalAverage(lo, hi) => format!("avg[{lo},{hi}]"),
        FeatureKind::Occupation(lo, hi) => format!("occ[{},{})", fmt_bound(lo), fmt_bound(hi)),
        FeatureKind::UpCrossings(c) => format!("upx@{c}"),
        FeatureKind::PathNorm(q) => format!("pathnorm^{q}"),
        FeatureKind::PathMoment(q) => format!("pathmom^{q}"),
    }
}

fn parse_real(s: &str, whole: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse::<f64>().map_err(|_| Error::Spec(format!("cannot parse number {s:?} in {whole:?}"))),
    }
}

fn parse_pair(body: &str, open: char, close: char, whole: &str) -> Result<(f64, f64)> {
    let inner = body
        .strip_prefix(open)
        .and_then(|b| b.strip_suffix(close))
        .ok_or_else(|| Error::Spec(format!("expected {open}lo,hi{close} in {whole:?}")))?;
    let (lo, hi) = inner.split_once(',').ok_or_else(|| Error::Spec(format!("expected two bounds in {whole:?}")))?;
    Ok((parse_real(lo, whole)?, parse_real(hi, whole)?))
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let kind = if let Some(rest) = t.strip_prefix("point@") {
            FeatureKind::PointEval(rest.trim().parse().map_err(|_| Error::Spec(format!("bad grid index in {t:?}")))?)
        } else if let Some(rest) = t.strip_prefix("avg") {
            let (lo, hi) = parse_pair(rest, '[', ']', t)?;
            FeatureKind::LocalAverage(lo, hi)
        } else if let Some(rest) = t.strip_prefix("occ") {
            let (lo, hi) = parse_pair(rest, '[', ')', t)?;
            FeatureKind::Occupation(lo, hi)
        } else if let Some(rest) = t.strip_prefix("upx@") {
            FeatureKind::UpCrossings(parse_real(rest, t)?)
        } else if let Some(rest) = t.strip_prefix("pathnorm^") {
            FeatureKind::PathNorm(rest.trim().parse().map_err(|_| Error::Spec(format!("bad power in {t:?}")))?)
        } else if let Some(rest) = t.strip_prefix("pathmom^") {
            FeatureKind::PathMoment(rest.trim().parse().map_err(|_| Error::Spec(format!("bad power in {t:?}")))?)
        } else {
            return Err(Error::Spec(format!("unknown feature {t:?}")));
        };
        Ok(FeatureSpec::new(kind))
    }
}

impl Serialize for FeatureSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for FeatureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// First and last grid index inside `[lo, hi]`.
fn window<T: Real>(grid: &Grid<T>, lo: f64, hi: f64) -> Option<(usize, usize)> {
    let pts = grid.points();
    let first = pts.iter().position(|&p| p.as_f64() >= lo)?;
    let last = pts.iter().rposition(|&p| p.as_f64() <= hi)?;
    (first <= last).then_some((first, last))
}

fn powi<T: Real>(x: T, q: u32) -> T {
    x.powi(q as i32)
}

pub fn evaluate_feature<T: Real>(spec: &FeatureSpec, x: ArrayView1<'_, T>, grid: &Grid<T>) -> Result<T> {
    grid.check(x)?;
    spec.validate(grid)?;
    let w = grid.weights();
    let value = match spec.kind {
        FeatureKind::PointEval(i) => x[i],
        FeatureKind::LocalAverage(..) | FeatureKind::PathMoment(1) => {
            let c = spec.linear_weights(grid).expect("validated linear feature");
            c.iter().zip(x.iter()).map(|(&c, &v)| c * v).sum()
        }
        FeatureKind::Occupation(lo, hi) => {
            let (lo, hi) = (T::lit(lo), T::lit(hi));
            w.iter().zip(x.iter()).filter(|(_, &v)| lo <= v && v < hi).map(|(&w, _)| w).sum()
        }
        FeatureKind::UpCrossings(c) => {
            let c = T::lit(c);
            let n = x.windows(2).into_iter().filter(|p| p[0] <= c && p[1] > c).count();
            T::from_count(n)
        }
        FeatureKind::PathNorm(q) => {
            let sq: T = grid.integrate(|i| x[i] * x[i]);
            powi(sq.max(T::zero()).sqrt(), q)
        }
        FeatureKind::PathMoment(q) => grid.integrate(|i| powi(x[i], q)),
    };
    Ok(value)
}

/// Feature values, one row per curve and one column per spec.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    values: Array2<T>,
    specs: Vec<FeatureSpec>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(values: Array2<T>, specs: Vec<FeatureSpec>) -> Result<Self> {
        if values.ncols() != specs.len() {
            return Err(Error::Dimension(format!("{} feature columns for {} specs", values.ncols(), specs.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(Self { values, specs })
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// Column-wise z-scores (population sd). Constant columns become zero.
    pub fn standardized(&self) -> Self {
        let mut values = self.values.clone();
        let n = T::from_count(self.n().max(1));
        for mut col in values.axis_iter_mut(Axis(1)) {
            let mean = col.sum() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let sd = var.sqrt();
            if sd > T::zero() {
                col.mapv_inplace(|v| (v - mean) / sd);
            } else {
                col.fill(T::zero());
            }
        }
        Self { values, specs: self.specs.clone() }
    }
}

pub fn build_feature_matrix<T: Real>(sample: &FunctionalSample<T>, specs: &[FeatureSpec]) -> Result<FeatureMatrix<T>> {
    let grid = sample.grid();
    for (j, spec) in specs.iter().enumerate() {
        spec.validate(grid).map_err(|e| Error::Spec(format!("feature column {j}: {e}")))?;
    }
    let mut values = Array2::<T>::zeros((sample.n(), specs.len()));
    for (i, curve) in sample.curves().rows().into_iter().enumerate() {
        for (j, spec) in specs.iter().enumerate() {
            values[[i, j]] =
                evaluate_feature(spec, curve, grid).map_err(|e| Error::Spec(format!("feature column {j}: {e}")))?;
        }
    }
    FeatureMatrix::new(values, specs.to_vec())
}
