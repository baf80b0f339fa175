//! Small dense kernels: symmetric eigen-decomposition and SPD solves.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending.
/// Column `k` of `vectors` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    pub values: Array1<T>,
    pub vectors: Array2<T>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations. Only the upper triangle of `a` is trusted; the
/// input is symmetrised first.
pub fn sym_eigen<T: Real>(a: &Array2<T>) -> Result<SymEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("eigen-decomposition needs a square matrix, got {}x{}", n, a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in symmetric matrix".into()));
    }
    let mut m = Array2::<T>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = a[[i, j]];
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    let mut v = Array2::<T>::eye(n);
    let two = T::lit(2.0);
    let eps = T::epsilon();

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += m[[i, i]] * m[[i, i]];
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off <= eps * eps * diag || off == T::zero() {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                // Skip rotations that cannot change the diagonal at working precision.
                if apq.abs() <= eps * T::lit(1e-3) * (app.abs() + aqq.abs()) {
                    m[[p, q]] = T::zero();
                    m[[q, p]] = T::zero();
                    continue;
                }
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                m[[p, q]] = T::zero();
                m[[q, p]] = T::zero();
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("Jacobi eigen-solver did not converge in {MAX_SWEEPS} sweeps")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].partial_cmp(&m[[i, i]]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<T>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymEigen { values, vectors })
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
/// Pivots below `rel_tol * max diag` are reported as rank deficiency.
pub fn cholesky<T: Real>(a: &Array2<T>, rel_tol: T) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension("cholesky needs a square matrix".into()));
    }
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    let floor = rel_tol * scale;
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > floor) || d <= T::zero() {
            return Err(Error::Rank(format!("pivot {j} is {} (threshold {})", d.as_f64(), floor.as_f64())));
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Real>(l: &Array2<T>, b: &Array1<T>) -> Array1<T> {
    let n = l.nrows();
    let mut y = Array1::<T>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let a: Array2<f64> = array![[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]];
        let e = sym_eigen(&a).unwrap();
        assert_eq!(e.values.to_vec(), vec![3.0, 2.0, 1.0]);
        assert_abs_diff_eq!(e.vectors[[1, 0]].abs(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a: Array2<f64> = array![[2.0, 1.0], [1.0, 2.0]];
        let e = sym_eigen(&a).unwrap();
        assert_abs_diff_eq!(e.values[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(e.vectors[[0, 0]].abs(), s, epsilon = 1e-14);
    }

    #[test]
    fn matches_nalgebra_on_random_symmetric() {
        let n = 12;
        let mut a = Array2::<f64>::zeros((n, n));
        let mut state = 7u64;
        for i in 0..n {
            for j in i..n {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let x = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                a[[i, j]] = x;
                a[[j, i]] = x;
            }
        }
        let ours = sym_eigen(&a).unwrap();
        let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        let mut theirs: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (x, y) in ours.values.iter().zip(&theirs) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        // A V = V diag(values)
        let av = a.dot(&ours.vectors);
        for k in 0..n {
            for i in 0..n {
                assert_abs_diff_eq!(av[[i, k]], ours.vectors[[i, k]] * ours.values[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_roundtrip_and_rank_error() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let l = cholesky(&a, 1e-12).unwrap();
        let x = cholesky_solve(&l, &array![1.0, 2.0]);
        let back = a.dot(&x);
        assert_abs_diff_eq!(back[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(back[1], 2.0, epsilon = 1e-14);

        let singular = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(cholesky(&singular, 1e-12), Err(Error::Rank(_))));
    }
}
