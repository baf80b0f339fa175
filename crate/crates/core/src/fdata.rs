//! Curves on a shared grid and the L² numerics used throughout.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Strictly ascending time points with trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Array1<T>,
    weights: Array1<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Data(format!("grid needs at least 2 points, got {}", points.len())));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Data(format!("grid point {i} is not finite")));
        }
        if let Some(i) = points.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::Data(format!("grid must be strictly ascending (points {} and {})", i, i + 1)));
        }
        let weights = trapezoid_weights(&points);
        Ok(Self { points: Array1::from(points), weights })
    }

    /// `n` equally spaced points covering `[a, b]`.
    pub fn uniform(a: T, b: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Data(format!("grid needs at least 2 points, got {n}")));
        }
        let step = (b - a) / T::from_count(n - 1);
        let mut pts: Vec<T> = (0..n).map(|i| a + step * T::from_count(i)).collect();
        pts[n - 1] = b;
        Self::new(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> ArrayView1<'_, T> {
        self.points.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, T> {
        self.weights.view()
    }

    pub fn start(&self) -> T {
        self.points[0]
    }

    pub fn end(&self) -> T {
        self.points[self.points.len() - 1]
    }

    pub fn span(&self) -> T {
        self.end() - self.start()
    }

    pub fn check(&self, values: ArrayView1<'_, T>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!("curve has {} values, grid has {} points", values.len(), self.len())));
        }
        Ok(())
    }

    /// Applies every weight in the grid to `f(i)` and sums.
    pub fn integrate<F: Fn(usize) -> T>(&self, f: F) -> T {
        self.weights.iter().enumerate().map(|(i, &w)| w * f(i)).sum()
    }
}

pub(crate) fn trapezoid_weights<T: Real>(points: &[T]) -> Array1<T> {
    let n = points.len();
    let half = T::lit(0.5);
    let mut w = Array1::<T>::zeros(n);
    for i in 0..n - 1 {
        let h = (points[i + 1] - points[i]) * half;
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// `n` curves on one grid, one row per curve, plus an opaque id per curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample<T> {
    grid: Grid<T>,
    curves: Array2<T>,
    ids: Vec<String>,
}

impl<T: Real> FunctionalSample<T> {
    pub fn new(grid: Grid<T>, curves: Array2<T>, ids: Vec<String>) -> Result<Self> {
        if curves.nrows() == 0 {
            return Err(Error::Data("sample needs at least one curve".into()));
        }
        if curves.ncols() != grid.len() {
            return Err(Error::Dimension(format!(
                "curves have {} columns, grid has {} points",
                curves.ncols(),
                grid.len()
            )));
        }
        if ids.len() != curves.nrows() {
            return Err(Error::Dimension(format!("{} ids for {} curves", ids.len(), curves.nrows())));
        }
        for (r, row) in curves.rows().into_iter().enumerate() {
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("curve {r} ({}) has a non-finite value at column {c}", ids[r])));
            }
        }
        Ok(Self { grid, curves, ids })
    }

    /// Builds a sample with ids `0..n`.
    pub fn with_default_ids(grid: Grid<T>, curves: Array2<T>) -> Result<Self> {
        let ids = (0..curves.nrows()).map(|i| i.to_string()).collect();
        Self::new(grid, curves, ids)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn curves(&self) -> &Array2<T> {
        &self.curves
    }

    pub fn curve(&self, j: usize) -> ArrayView1<'_, T> {
        self.curves.row(j)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.curves.nrows()
    }

    pub fn mean_curve(&self) -> Array1<T> {
        self.curves.mean_axis(Axis(0)).expect("sample is non-empty")
    }

    /// Same grid and ids, new curve values.
    pub fn with_curves(&self, curves: Array2<T>) -> Result<Self> {
        Self::new(self.grid.clone(), curves, self.ids.clone())
    }

    /// Rows selected by `rows`, in that order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let curves = self.curves.select(Axis(0), rows);
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        Self::new(self.grid.clone(), curves, ids)
    }
}

pub fn inner_product<T: Real>(u: ArrayView1<'_, T>, v: ArrayView1<'_, T>, grid: &Grid<T>) -> Result<T> {
    grid.check(u)?;
    grid.check(v)?;
    Ok(grid.integrate(|i| u[i] * v[i]))
}

pub fn l2_norm<T: Real>(u: ArrayView1<'_, T>, grid: &Grid<T>) -> Result<T> {
    Ok(inner_product(u, u, grid)?.max(T::zero()).sqrt())
}

/// L² distance between two curves on the same grid.
pub fn l2_distance<T: Real>(u: ArrayView1<'_, T>, v: ArrayView1<'_, T>, grid: &Grid<T>) -> Result<T> {
    grid.check(u)?;
    grid.check(v)?;
    Ok(grid
        .integrate(|i| {
            let d = u[i] - v[i];
            d * d
        })
        .max(T::zero())
        .sqrt())
}

/// Subtracts the pointwise mean curve; returns the centred sample and the mean.
pub fn center<T: Real>(sample: &FunctionalSample<T>) -> (FunctionalSample<T>, Array1<T>) {
    let mean = sample.mean_curve();
    let centred = sample.curves() - &mean.view().insert_axis(Axis(0));
    let out = FunctionalSample { grid: sample.grid.clone(), curves: centred, ids: sample.ids.clone() };
    (out, mean)
}
