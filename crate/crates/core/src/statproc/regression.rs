use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::fpca::{fit_fpca, FpcaModel};
use crate::error::{Error, Result};
use crate::fdata::{FunctionalSample, Grid};
use crate::scalar::Real;

/// Components with eigenvalue below this fraction of the leading one are
/// dropped from the regression estimators.
pub const RANK_TOL: f64 = 1e-12;

/// Scalar-on-function linear model estimated by FPCA truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarRegModel<T> {
    pub grid: Grid<T>,
    pub mean: Array1<T>,
    pub beta: Array1<T>,
    pub intercept: T,
    pub n_components: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> ScalarRegModel<T> {
    /// `⟨β, x − mean⟩`, the centred linear predictor.
    pub fn linear_predictor(&self, x: ArrayView1<'_, T>) -> Result<T> {
        self.grid.check(x)?;
        let w = self.grid.weights();
        Ok((0..x.len()).map(|i| w[i] * self.beta[i] * (x[i] - self.mean[i])).sum())
    }

    pub fn predict(&self, x: ArrayView1<'_, T>) -> Result<T> {
        Ok(self.intercept + self.linear_predictor(x)?)
    }
}

fn kept_components<T: Real>(basis: &FpcaModel<T>, what: &str, warnings: &mut Vec<String>) -> Vec<bool> {
    let top = basis.eigenvalues.first().copied().unwrap_or(T::zero());
    let floor = T::lit(RANK_TOL) * top;
    basis
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let keep = top > T::zero() && v >= floor && v > T::zero();
            if !keep {
                warnings.push(format!(
                    "{what} component {} dropped: eigenvalue {:e} is rank deficient",
                    k + 1,
                    v.as_f64()
                ));
            }
            keep
        })
        .collect()
}

pub fn fit_scalar_regression<T: Real>(
    x: &FunctionalSample<T>,
    y: &[T],
    n_components: usize,
) -> Result<ScalarRegModel<T>> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::Dimension(format!("{} responses for {n} curves", y.len())));
    }
    if n_components == 0 || n_components >= n {
        return Err(Error::Parameter(format!("n_components={n_components} must satisfy 1 <= K < n = {n}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite response".into()));
    }
    let basis = fit_fpca(x, n_components)?;
    let scores = basis.scores_matrix(x.curves())?;
    let nn = T::from_count(n);
    let ybar = y.iter().copied().sum::<T>() / nn;
    let mut warnings = Vec::new();
    let keep = kept_components(&basis, "X", &mut warnings);
    let mut beta = Array1::<T>::zeros(x.grid().len());
    for k in 0..basis.l() {
        if !keep[k] {
            continue;
        }
        let cov = scores.column(k).iter().zip(y).map(|(&u, &yy)| u * (yy - ybar)).sum::<T>() / nn;
        beta.scaled_add(cov / basis.eigenvalues[k], &basis.eigenfunctions.row(k));
    }
    Ok(ScalarRegModel {
        grid: basis.grid.clone(),
        mean: basis.mean.clone(),
        beta,
        intercept: ybar,
        n_components,
        warnings,
    })
}

/// Function-on-function linear model with a truncated FPCA surface.
#[derive(Debug, Clone, PartialEq)]
pub struct FunRegModel<T> {
    /// `β(t, s)`, rows indexed by the X grid, columns by the Y grid.
    pub beta_surface: Array2<T>,
    pub j: usize,
    pub j_prime: usize,
    pub cross_cov: Array2<T>,
    pub x_basis: FpcaModel<T>,
    pub y_basis: FpcaModel<T>,
    pub warnings: Vec<String>,
}

impl<T: Real> FunRegModel<T> {
    /// `s ↦ ∫ β(t, s) d(t) dt`.
    pub fn apply(&self, d: ArrayView1<'_, T>) -> Result<Array1<T>> {
        self.x_basis.grid.check(d)?;
        let w = self.x_basis.grid.weights();
        let wd: Array1<T> = d.iter().zip(w.iter()).map(|(&a, &b)| a * b).collect();
        Ok(wd.dot(&self.beta_surface))
    }

    pub fn predict(&self, x0: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let d = &x0 - &self.x_basis.mean;
        Ok(&self.y_basis.mean + &self.apply(d.view())?)
    }
}

pub fn fit_functional_regression<T: Real>(
    x: &FunctionalSample<T>,
    y: &FunctionalSample<T>,
    j: usize,
    j_prime: usize,
) -> Result<FunRegModel<T>> {
    if x.n() != y.n() {
        return Err(Error::Dimension(format!("{} X curves paired with {} Y curves", x.n(), y.n())));
    }
    let x_basis = fit_fpca(x, j)?;
    let y_basis = fit_fpca(y, j_prime)?;
    let xs = x_basis.scores_matrix(x.curves())?;
    let ys = y_basis.scores_matrix(y.curves())?;
    let inv_n = T::one() / T::from_count(x.n());
    let cross_cov = xs.t().dot(&ys) * inv_n;

    let mut warnings = Vec::new();
    let keep = kept_components(&x_basis, "X", &mut warnings);
    let _ = kept_components(&y_basis, "Y", &mut warnings);

    let mut beta_surface = Array2::<T>::zeros((x.grid().len(), y.grid().len()));
    for a in 0..j {
        if !keep[a] {
            continue;
        }
        let ax = x_basis.eigenfunctions.row(a);
        for b in 0..j_prime {
            let coef = cross_cov[[a, b]] / x_basis.eigenvalues[a];
            let ay = y_basis.eigenfunctions.row(b);
            let outer = ax.insert_axis(Axis(1)).dot(&ay.insert_axis(Axis(0)));
            beta_surface.scaled_add(coef, &outer);
        }
    }
    Ok(FunRegModel { beta_surface, j, j_prime, cross_cov, x_basis, y_basis, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdata::inner_product;
    use approx::assert_abs_diff_eq;

    fn unit(g: &Grid<f64>, f: impl Fn(f64) -> f64) -> Array1<f64> {
        let raw = g.points().mapv(f);
        let nrm = inner_product(raw.view(), raw.view(), g).unwrap().sqrt();
        raw / nrm
    }

    #[test]
    fn one_component_closed_form() {
        let g = Grid::uniform(0.0, 1.0, 51).unwrap();
        let phi = unit(&g, |t| (std::f64::consts::PI * t).sin());
        let a = [-1.5, -0.2, 0.4, 1.3];
        let curves = Array2::from_shape_fn((4, 51), |(i, t)| a[i] * phi[t]);
        let s = FunctionalSample::with_default_ids(g, curves).unwrap();
        let m = fit_scalar_regression(&s, &a, 1).unwrap();
        for t in 0..51 {
            assert_abs_diff_eq!(m.beta[t], phi[t], epsilon = 1e-8);
        }
        for i in 0..4 {
            assert_abs_diff_eq!(m.predict(s.curve(i)).unwrap(), a[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn constant_response_gives_zero_beta() {
        let g = Grid::uniform(0.0, 1.0, 11).unwrap();
        let curves = Array2::from_shape_fn((5, 11), |(i, t)| ((i + 1) * (t + 2)) as f64 % 7.0);
        let s = FunctionalSample::with_default_ids(g, curves).unwrap();
        let m = fit_scalar_regression(&s, &[2.5; 5], 2).unwrap();
        assert!(m.beta.iter().all(|&b| b.abs() < 1e-12));
        assert_eq!(m.intercept, 2.5);
    }

    #[test]
    fn parameter_checks() {
        let g = Grid::uniform(0.0, 1.0, 11).unwrap();
        let s = FunctionalSample::with_default_ids(g, Array2::from_shape_fn((3, 11), |(i, t)| (i * t) as f64)).unwrap();
        assert!(matches!(fit_scalar_regression(&s, &[1.0, 2.0, 3.0], 3), Err(Error::Parameter(_))));
        assert!(matches!(fit_scalar_regression(&s, &[1.0, 2.0], 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_deficiency_is_recorded() {
        let g = Grid::uniform(0.0, 1.0, 11).unwrap();
        let phi = unit(&g, |t| t + 0.5);
        let curves = Array2::from_shape_fn((6, 11), |(i, t)| i as f64 * phi[t]);
        let s = FunctionalSample::with_default_ids(g, curves).unwrap();
        let y: Vec<f64> = (0..6).map(|i| 2.0 * i as f64).collect();
        let m = fit_scalar_regression(&s, &y, 2).unwrap();
        assert_eq!(m.warnings.len(), 1);
        for i in 0..6 {
            assert_abs_diff_eq!(m.predict(s.curve(i)).unwrap(), y[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_response_surface() {
        let g = Grid::uniform(0.0, 1.0, 9).unwrap();
        let x = FunctionalSample::with_default_ids(
            g.clone(),
            Array2::from_shape_fn((5, 9), |(i, t)| ((i + t) as f64).sin()),
        )
        .unwrap();
        let gy = Grid::uniform(0.0, 2.0, 4).unwrap();
        let y = FunctionalSample::with_default_ids(gy, Array2::zeros((5, 4))).unwrap();
        let m = fit_functional_regression(&x, &y, 2, 1).unwrap();
        assert!(m.beta_surface.iter().all(|&b| b == 0.0));
        assert!(!m.warnings.is_empty());
    }
}
