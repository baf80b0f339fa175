use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::fdata::{center, FunctionalSample, Grid};
use crate::linalg::sym_eigen;
use crate::scalar::Real;

/// Functional principal components of a sample.
///
/// Row `k` of `eigenfunctions` is `α_k`, orthonormal under the grid's
/// quadrature inner product. Eigenvalues are descending and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel<T> {
    pub grid: Grid<T>,
    pub mean: Array1<T>,
    pub eigenfunctions: Array2<T>,
    pub eigenvalues: Array1<T>,
    /// Trace of the empirical covariance operator.
    pub total_variance: T,
}

impl<T: Real> FpcaModel<T> {
    /// Number of retained components.
    pub fn l(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `α_k` pre-multiplied by the quadrature weights, so that a score is a
    /// plain dot product with the centred curve. Shape `N × l`.
    pub fn weighted_basis(&self) -> Array2<T> {
        let w = self.grid.weights();
        let mut b = self.eigenfunctions.t().to_owned();
        for (mut row, &wt) in b.axis_iter_mut(Axis(0)).zip(w.iter()) {
            row.mapv_inplace(|v| v * wt);
        }
        b
    }

    /// Scores of every row of `curves`, shape `n × l`.
    pub fn scores_matrix(&self, curves: &Array2<T>) -> Result<Array2<T>> {
        if curves.ncols() != self.grid.len() {
            return Err(Error::Dimension(format!(
                "curves have {} columns, model grid has {}",
                curves.ncols(),
                self.grid.len()
            )));
        }
        let centred = curves - &self.mean.view().insert_axis(Axis(0));
        Ok(centred.dot(&self.weighted_basis()))
    }

    /// `mean + Σ_k scores[k] α_k`.
    pub fn reconstruct(&self, scores: ArrayView1<'_, T>) -> Array1<T> {
        let mut out = self.mean.clone();
        for (k, &s) in scores.iter().enumerate() {
            out.scaled_add(s, &self.eigenfunctions.row(k));
        }
        out
    }
}

fn fix_sign<T: Real>(mut v: ndarray::ArrayViewMut1<'_, T>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.mapv_inplace(|x| -x);
    }
}

/// Fits `l` components. Valid `l`: `1 ≤ l ≤ N` and `l ≤ max(n − 1, 1)`.
pub fn fit_fpca<T: Real>(sample: &FunctionalSample<T>, l: usize) -> Result<FpcaModel<T>> {
    let n = sample.n();
    let big_n = sample.grid().len();
    let cap = big_n.min((n.saturating_sub(1)).max(1));
    if l == 0 || l > cap {
        return Err(Error::Parameter(format!(
            "component count l={l} must lie in 1..={cap} for n={n} curves on {big_n} grid points"
        )));
    }
    let grid = sample.grid().clone();
    let (centred, mean) = center(sample);
    let xc = centred.curves();
    let w = grid.weights().to_owned();
    let inv_n = T::one() / T::from_count(n);
    let total_variance =
        xc.rows().into_iter().map(|row| row.iter().zip(w.iter()).map(|(&v, &wt)| wt * v * v).sum::<T>()).sum::<T>()
            * inv_n;

    let dual = if n < big_n { fit_dual(xc, &w, l, inv_n)? } else { None };
    let (values, mut funcs) = match dual {
        Some(pair) => pair,
        None => fit_primal(xc, &w, l, inv_n)?,
    };
    for row in funcs.axis_iter_mut(Axis(0)) {
        fix_sign(row);
    }
    Ok(FpcaModel { grid, mean, eigenfunctions: funcs, eigenvalues: values.mapv(|v| v.max(T::zero())), total_variance })
}

/// Gram-matrix route; `None` when a requested eigenvalue is numerically zero,
/// since the eigenfunction cannot be recovered from the curves then.
fn fit_dual<T: Real>(xc: &Array2<T>, w: &Array1<T>, l: usize, inv_n: T) -> Result<Option<(Array1<T>, Array2<T>)>> {
    let n = xc.nrows();
    let xw = xc * &w.view().insert_axis(Axis(0));
    let gram = xw.dot(&xc.t()) * inv_n;
    let eig = sym_eigen(&gram)?;
    let top = eig.values[0].max(T::zero());
    let floor = T::lit(1e-10) * top;
    if top <= T::zero() || eig.values.iter().take(l).any(|&v| v <= floor) {
        return Ok(None);
    }
    let mut funcs = Array2::<T>::zeros((l, xc.ncols()));
    let nn = T::from_count(n);
    for k in 0..l {
        let lambda = eig.values[k];
        let u = eig.vectors.column(k);
        let alpha = xc.t().dot(&u) / (nn * lambda).sqrt();
        funcs.row_mut(k).assign(&alpha);
    }
    Ok(Some((eig.values.slice(ndarray::s![..l]).to_owned(), funcs)))
}

fn fit_primal<T: Real>(xc: &Array2<T>, w: &Array1<T>, l: usize, inv_n: T) -> Result<(Array1<T>, Array2<T>)> {
    let sw = w.mapv(|v| v.sqrt());
    let xs = xc * &sw.view().insert_axis(Axis(0));
    let m = xs.t().dot(&xs) * inv_n;
    let eig = sym_eigen(&m)?;
    let mut funcs = Array2::<T>::zeros((l, xc.ncols()));
    for k in 0..l {
        let v = eig.vectors.column(k);
        let alpha: Array1<T> = v.iter().zip(sw.iter()).map(|(&a, &s)| a / s).collect();
        funcs.row_mut(k).assign(&alpha);
    }
    Ok((eig.values.slice(ndarray::s![..l]).to_owned(), funcs))
}

/// Scores `⟨α_k, x − mean⟩` for each retained component.
pub fn fpca_scores<T: Real>(model: &FpcaModel<T>, x: ArrayView1<'_, T>) -> Result<Array1<T>> {
    model.grid.check(x)?;
    let d = &x - &model.mean;
    Ok(d.dot(&model.weighted_basis()))
}
