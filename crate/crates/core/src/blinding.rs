//! Nearest-neighbour blinding: each curve is replaced by the mean of the `r`
//! curves closest to it in a chosen subset of feature coordinates.

use std::cmp::Ordering;
use std::fmt;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdata::FunctionalSample;
use crate::features::FeatureMatrix;
use crate::scalar::Real;

/// Sorted, duplicate-free, non-empty set of feature columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsetIndex(Vec<usize>);

impl SubsetIndex {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Parameter("feature subset must not be empty".into()));
        }
        indices.sort_unstable();
        let before = indices.len();
        indices.dedup();
        if indices.len() != before {
            return Err(Error::Parameter("feature subset has duplicate indices".into()));
        }
        Ok(Self(indices))
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Checks every index against a feature count.
    pub fn check(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= p => {
                Err(Error::Parameter(format!("feature index {last} out of range for {p} features")))
            }
            _ => Ok(()),
        }
    }

    pub fn with(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        Self(v)
    }

    pub fn replacing(&self, old: usize, new: usize) -> Self {
        let mut v: Vec<usize> = self.0.iter().copied().filter(|&x| x != old).collect();
        if let Err(pos) = v.binary_search(&new) {
            v.insert(pos, new);
        }
        Self(v)
    }

    /// Indices in `0..p` not in the subset, ascending.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|i| !self.contains(*i)).collect()
    }
}

impl TryFrom<Vec<usize>> for SubsetIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SubsetIndex> for Vec<usize> {
    fn from(s: SubsetIndex) -> Self {
        s.0
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Blinded curves together with the neighbour sets that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindedSample<T> {
    pub curves: Array2<T>,
    pub subset: SubsetIndex,
    pub r: usize,
    pub neighbor_sets: Vec<Vec<usize>>,
}

impl<T: Real> BlindedSample<T> {
    pub fn curve(&self, j: usize) -> ArrayView1<'_, T> {
        self.curves.row(j)
    }

    pub fn n(&self) -> usize {
        self.curves.nrows()
    }
}

fn check_r(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Parameter(format!("neighbour count r={r} must lie in 1..={n}")));
    }
    Ok(())
}

/// Squared Euclidean distances from row `j` to every row, restricted to `subset`.
fn distances<T: Real>(values: &Array2<T>, cols: &[usize], j: usize) -> Vec<T> {
    let target = values.row(j);
    values
        .rows()
        .into_iter()
        .map(|row| {
            cols.iter()
                .map(|&c| {
                    let d = row[c] - target[c];
                    d * d
                })
                .sum()
        })
        .collect()
}

/// Order: distance, then the query row itself, then index. Putting `j`
/// ahead of other rows at distance zero keeps `r = 1` the identity when
/// feature vectors repeat.
fn nearest<T: Real>(dist: &[T], r: usize, j: usize) -> Vec<usize> {
    let cmp = |a: &usize, b: &usize| {
        dist[*a].partial_cmp(&dist[*b]).unwrap_or(Ordering::Equal).then((*a != j).cmp(&(*b != j))).then(a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    if r < idx.len() {
        idx.select_nth_unstable_by(r - 1, cmp);
        idx.truncate(r);
    }
    idx.sort_by(cmp);
    idx
}

/// The `r` rows closest to row `j` in the `subset` coordinates, self
/// included and first, the rest ordered by (distance, index).
pub fn knn_indices<T: Real>(fm: &FeatureMatrix<T>, subset: &SubsetIndex, j: usize, r: usize) -> Result<Vec<usize>> {
    check_r(r, fm.n())?;
    subset.check(fm.p())?;
    if j >= fm.n() {
        return Err(Error::Parameter(format!("row {j} out of range for {} curves", fm.n())));
    }
    Ok(nearest(&distances(fm.values(), subset.indices(), j), r, j))
}

pub fn blind_sample<T: Real>(
    sample: &FunctionalSample<T>,
    fm: &FeatureMatrix<T>,
    subset: &SubsetIndex,
    r: usize,
) -> Result<BlindedSample<T>> {
    if fm.n() != sample.n() {
        return Err(Error::Dimension(format!("feature matrix has {} rows, sample has {} curves", fm.n(), sample.n())));
    }
    check_r(r, sample.n())?;
    subset.check(fm.p())?;
    let n = sample.n();
    let x = sample.curves();
    let inv_r = T::one() / T::from_count(r);
    let mut curves = Array2::<T>::zeros(x.raw_dim());
    let mut neighbor_sets = Vec::with_capacity(n);
    for j in 0..n {
        let nb = nearest(&distances(fm.values(), subset.indices(), j), r, j);
        let mut row = curves.row_mut(j);
        for &m in &nb {
            row.scaled_add(T::one(), &x.row(m));
        }
        row.mapv_inplace(|v| v * inv_r);
        neighbor_sets.push(nb);
    }
    Ok(BlindedSample { curves, subset: subset.clone(), r, neighbor_sets })
}
