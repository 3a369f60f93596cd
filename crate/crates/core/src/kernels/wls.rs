use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::LinearFit;
use crate::error::{MvmrError, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};
use crate::scalar::Real;

pub(crate) fn check_dims<T>(x: &ArrayView2<'_, T>, y: &ArrayView1<'_, T>, w: &ArrayView1<'_, T>) -> Result<()> {
    let (n, d) = x.dim();
    if y.len() != n || w.len() != n {
        return Err(MvmrError::Argument(format!(
            "design has {n} rows but response has {} and weights {}",
            y.len(),
            w.len()
        )));
    }
    if d == 0 {
        return Err(MvmrError::Argument("design has no columns".into()));
    }
    if n <= d {
        return Err(MvmrError::Argument(format!(
            "need more observations than coefficients (n = {n}, d = {d})"
        )));
    }
    Ok(())
}

/// Weighted cross-products `X'WX` and `X'Wy`.
pub(crate) fn cross_products<T: Real>(
    x: &ArrayView2<'_, T>,
    y: &ArrayView1<'_, T>,
    w: &ArrayView1<'_, T>,
) -> (Array2<T>, Array1<T>) {
    let (n, d) = x.dim();
    let mut xtwx = Array2::<T>::zeros((d, d));
    let mut xtwy = Array1::<T>::zeros(d);
    for i in 0..n {
        let wi = w[i];
        let row = x.row(i);
        for a in 0..d {
            let wa = wi * row[a];
            xtwy[a] += wa * y[i];
            for b in 0..=a {
                xtwx[[a, b]] += wa * row[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            xtwx[[b, a]] = xtwx[[a, b]];
        }
    }
    (xtwx, xtwy)
}

/// Minimises Σ_j w_j (y_j − x_j'θ)² through the normal equations.
///
/// The returned covariance is the unscaled `(X'WX)^{-1}`; callers apply their
/// own dispersion. Products are formed as `w·x·x` and `w·x·y`, so jointly
/// negating a row of `x` and the matching `y` leaves the fit bit-for-bit equal.
pub fn weighted_least_squares<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    w: ArrayView1<'_, T>,
) -> Result<LinearFit<T>> {
    check_dims(&x, &y, &w)?;
    if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(MvmrError::Argument("weights must be positive and finite".into()));
    }
    let (xtwx, xtwy) = cross_products(&x, &y, &w);
    let l = cholesky(&xtwx, T::lit(64.0) * T::epsilon()).ok_or_else(|| {
        MvmrError::SingularDesign("weighted cross-product matrix is not positive definite".into())
    })?;
    let coef = cholesky_solve(&l, xtwy.as_slice().expect("contiguous"));
    let cov = cholesky_inverse(&l);
    let objective = weighted_rss(&x, &y, &w, &coef);
    Ok(LinearFit {
        coefficients: coef,
        covariance: Some(cov),
        objective,
        iterations: 1,
        converged: true,
        scale: None,
        support: Vec::new(),
    })
}

pub(crate) fn weighted_rss<T: Real>(
    x: &ArrayView2<'_, T>,
    y: &ArrayView1<'_, T>,
    w: &ArrayView1<'_, T>,
    coef: &Array1<T>,
) -> T {
    (0..x.nrows())
        .map(|i| {
            let r = y[i] - x.row(i).dot(coef);
            w[i] * r * r
        })
        .sum()
}
