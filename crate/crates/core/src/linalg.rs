//! Small dense linear algebra for the d×d systems (d = K or K+1) that every
//! estimator reduces to, plus a one-sided Jacobi SVD for rank checks.

use ndarray::{Array1, Array2, ArrayView2};

use crate::scalar::Real;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot falls below `rel_tol` times the largest diagonal entry.
pub fn cholesky<T: Real>(a: &Array2<T>, rel_tol: T) -> Option<Array2<T>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(T::zero(), T::max);
    if !(max_diag > T::zero()) {
        return None;
    }
    let floor = rel_tol * max_diag;
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > floor) {
            return None;
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Some(l)
}

/// Solves `L L' x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Real>(l: &Array2<T>, b: &[T]) -> Array1<T> {
    let n = l.nrows();
    let mut z = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    let mut x = Array1::<T>::zeros(n);
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn cholesky_inverse<T: Real>(l: &Array2<T>) -> Array2<T> {
    let n = l.nrows();
    let mut inv = Array2::<T>::zeros((n, n));
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[[i, j]] = col[i];
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (inv[[i, j]] + inv[[j, i]]) / T::lit(2.0);
            inv[[i, j]] = m;
            inv[[j, i]] = m;
        }
    }
    inv
}

/// LU factorisation with partial pivoting of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Array2<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Factorises `a`; `None` if a pivot is below `rel_tol` times the largest entry.
    pub fn new(a: ArrayView2<'_, T>, rel_tol: T) -> Option<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut lu = a.to_owned();
        let scale = lu.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(scale > T::zero()) {
            return None;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[[i, k]].abs()))
                .fold((k, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
            if !(pmax > rel_tol * scale) {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    lu.swap([k, j], [piv, j]);
                }
                perm.swap(k, piv);
            }
            let d = lu[[k, k]];
            for i in (k + 1)..n {
                let f = lu[[i, k]] / d;
                lu[[i, k]] = f;
                for j in (k + 1)..n {
                    let v = lu[[k, j]];
                    lu[[i, j]] -= f * v;
                }
            }
        }
        Some(Self { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.nrows();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.lu[[i, k]] * v;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[k];
                x[i] -= self.lu[[i, k]] * v;
            }
            x[i] /= self.lu[[i, i]];
        }
        x
    }

    /// Column `j` of the inverse.
    pub fn inverse_column(&self, j: usize) -> Vec<T> {
        let n = self.lu.nrows();
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        self.solve(&e)
    }
}

/// Singular values (descending) of an n×d matrix with n ≥ d, by one-sided Jacobi rotations.
pub fn singular_values<T: Real>(a: ArrayView2<'_, T>) -> Vec<T> {
    let (n, d) = a.dim();
    // columns stored contiguously
    let mut cols: Vec<Vec<T>> = (0..d).map(|j| a.column(j).to_vec()).collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for i in 0..n {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}
