//! Weighted least-absolute-deviations regression.
//!
//! A smoothed IRLS pass locates the neighbourhood of the optimum; the answer is
//! then polished to an exact vertex (d interpolated observations) by descending
//! along the edges of the L1 objective. Each edge step is a one-dimensional
//! weighted-median line search along the steepest descending edge, so every
//! accepted pivot strictly lowers the objective and the final vertex has no
//! descending edge, which is the LP optimality condition.

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::wls::{check_dims, weighted_least_squares};
use super::LinearFit;
use crate::error::{MvmrError, Result};
use crate::linalg::Lu;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LadOptions {
    /// Smoothing levels for the IRLS start, relative to the mean absolute LS residual.
    pub smoothing: Vec<f64>,
    pub irls_iterations_per_level: usize,
    /// Cap on vertex pivots; `None` means `50·n`.
    pub max_pivots: Option<usize>,
}

impl Default for LadOptions {
    fn default() -> Self {
        Self {
            smoothing: vec![1e-4, 1e-6, 1e-8, 1e-10],
            irls_iterations_per_level: 4,
            max_pivots: None,
        }
    }
}

/// Minimises Σ_j w_j |y_j − x_j'θ| and returns a vertex solution.
pub fn weighted_lad<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    w: ArrayView1<'_, T>,
) -> Result<LinearFit<T>> {
    weighted_lad_with(x, y, w, None, &LadOptions::default())
}

/// Like [`weighted_lad`] but starts the vertex descent from `basis` (for example
/// the support of a previous fit on nearby data). Falls back to the IRLS start
/// when `basis` is unusable.
pub fn weighted_lad_from<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    w: ArrayView1<'_, T>,
    basis: &[usize],
) -> Result<LinearFit<T>> {
    weighted_lad_with(x, y, w, Some(basis), &LadOptions::default())
}

pub fn weighted_lad_with<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    w: ArrayView1<'_, T>,
    start: Option<&[usize]>,
    opts: &LadOptions,
) -> Result<LinearFit<T>> {
    check_dims(&x, &y, &w)?;
    if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(MvmrError::Argument("weights must be positive and finite".into()));
    }
    let d = x.ncols();
    let mut iterations = 0;
    let basis = match start.filter(|b| valid_basis(&x, b)) {
        Some(b) => b.to_vec(),
        None => {
            let (theta, its) = irls_start(&x, &y, &w, opts)?;
            iterations += its;
            let resid: Vec<T> = (0..x.nrows()).map(|i| y[i] - x.row(i).dot(&theta)).collect();
            pick_basis(&x, &resid, d)?
        }
    };
    let (fit, pivots) = vertex_descent(&x, &y, &w, basis, opts)?;
    Ok(LinearFit {
        iterations: iterations + pivots,
        ..fit
    })
}

fn valid_basis<T: Real>(x: &ArrayView2<'_, T>, b: &[usize]) -> bool {
    let d = x.ncols();
    if b.len() != d || b.iter().any(|&i| i >= x.nrows()) {
        return false;
    }
    let mut sorted = b.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != d {
        return false;
    }
    Lu::new(x.select(ndarray::Axis(0), b).view(), T::lit(1e-12)).is_some()
}

fn irls_start<T: Real>(
    x: &ArrayView2<'_, T>,
    y: &ArrayView1<'_, T>,
    w: &ArrayView1<'_, T>,
    opts: &LadOptions,
) -> Result<(Array1<T>, usize)> {
    let n = x.nrows();
    let ls = weighted_least_squares(x.view(), y.view(), w.view())?;
    let mut theta = ls.coefficients;
    let mut resid: Vec<T> = (0..n).map(|i| y[i] - x.row(i).dot(&theta)).collect();
    let scale = resid.iter().map(|r| r.abs()).sum::<T>() / T::from_usize_lossy(n);
    if !(scale > T::zero()) {
        return Ok((theta, 1));
    }
    let mut its = 1;
    let mut ww = Array1::<T>::zeros(n);
    for &level in &opts.smoothing {
        let eps = T::lit(level) * scale;
        for _ in 0..opts.irls_iterations_per_level {
            for i in 0..n {
                ww[i] = w[i] / resid[i].abs().max(eps);
            }
            match weighted_least_squares(x.view(), y.view(), ww.view()) {
                Ok(f) => theta = f.coefficients,
                // near-interpolation makes the reweighted design ill-posed; keep the last iterate
                Err(_) => return Ok((theta, its)),
            }
            its += 1;
            for i in 0..n {
                resid[i] = y[i] - x.row(i).dot(&theta);
            }
        }
    }
    Ok((theta, its))
}

/// d rows with the smallest absolute residuals that are linearly independent.
fn pick_basis<T: Real>(x: &ArrayView2<'_, T>, resid: &[T], d: usize) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..resid.len()).collect();
    order.sort_by(|&a, &b| resid[a].abs().partial_cmp(&resid[b].abs()).unwrap().then(a.cmp(&b)));
    let mut ortho: Vec<Vec<T>> = Vec::with_capacity(d);
    let mut chosen = Vec::with_capacity(d);
    for &i in &order {
        let row: Vec<T> = x.row(i).to_vec();
        let norm0 = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm0 > T::zero()) {
            continue;
        }
        let mut v = row;
        for q in &ortho {
            let dot: T = v.iter().zip(q).map(|(&a, &b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, &b)| *a -= dot * b);
        }
        let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
        if norm > T::lit(1e-8) * norm0 {
            v.iter_mut().for_each(|a| *a /= norm);
            ortho.push(v);
            chosen.push(i);
            if chosen.len() == d {
                return Ok(chosen);
            }
        }
    }
    Err(MvmrError::SingularDesign("design rows do not span the coefficient space".into()))
}

fn l1_objective<T: Real>(y: &ArrayView1<'_, T>, w: &ArrayView1<'_, T>, fitted: &[T]) -> T {
    (0..y.len()).map(|i| w[i] * (y[i] - fitted[i]).abs()).sum()
}

/// Lower weighted median of `(value, weight, id)` triples by quickselect; the
/// slice is reordered.
fn weighted_median<T: Real>(cand: &mut [(T, T, usize)]) -> (T, usize) {
    let cmp = |p: &(T, T, usize), q: &(T, T, usize)| {
        p.0.partial_cmp(&q.0).unwrap_or(std::cmp::Ordering::Equal).then(p.2.cmp(&q.2))
    };
    let total: T = cand.iter().map(|c| c.1).sum();
    let mut need = total / T::lit(2.0);
    let mut s = cand;
    loop {
        if s.len() == 1 {
            return (s[0].0, s[0].2);
        }
        let mid = s.len() / 2;
        s.select_nth_unstable_by(mid, cmp);
        let left: T = s[..mid].iter().map(|c| c.1).sum();
        if left >= need {
            s = &mut s[..mid];
        } else if left + s[mid].1 >= need || mid + 1 == s.len() {
            return (s[mid].0, s[mid].2);
        } else {
            need -= left + s[mid].1;
            s = &mut s[mid + 1..];
        }
    }
}

fn vertex_descent<T: Real>(
    x: &ArrayView2<'_, T>,
    y: &ArrayView1<'_, T>,
    w: &ArrayView1<'_, T>,
    mut basis: Vec<usize>,
    opts: &LadOptions,
) -> Result<(LinearFit<T>, usize)> {
    let (n, d) = x.dim();
    let cap = opts.max_pivots.unwrap_or(50 * n);
    let scale: T = (0..n).map(|i| w[i] * y[i].abs()).sum();
    let tol = T::lit(1e-12) * scale.max(T::min_positive_value());

    let mut in_basis = vec![false; n];
    let mut a = vec![T::zero(); n * d];
    let mut cand: Vec<(T, T, usize)> = Vec::with_capacity(n);
    let mut pivots = 0;
    loop {
        let xb = x.select(ndarray::Axis(0), &basis);
        let lu = Lu::new(xb.view(), T::lit(1e-13))
            .ok_or_else(|| MvmrError::SingularDesign("vertex basis became singular".into()))?;
        let yb: Vec<T> = basis.iter().map(|&i| y[i]).collect();
        let theta = Array1::from(lu.solve(&yb));
        let fitted: Vec<T> = (0..n).map(|i| x.row(i).dot(&theta)).collect();
        let resid: Vec<T> = (0..n).map(|i| y[i] - fitted[i]).collect();
        let f = l1_objective(y, w, &fitted);
        in_basis.iter_mut().for_each(|b| *b = false);
        basis.iter().for_each(|&i| in_basis[i] = true);

        // a[i·d + s] = x_i'·(column s of X_B^{-1}): rate of change of the fit at
        // row i when basis row s is released
        let dirs: Vec<Vec<T>> = (0..d).map(|s| lu.inverse_column(s)).collect();
        for i in 0..n {
            for (s, dir) in dirs.iter().enumerate() {
                a[i * d + s] = (0..d).fold(T::zero(), |acc, c| acc + x[[i, c]] * dir[c]);
            }
        }
        // edge slopes: along +t the objective changes at lin + kink, along −t at kink − lin
        let mut edges: Vec<(T, usize)> = Vec::with_capacity(d);
        for s in 0..d {
            let mut lin = T::zero();
            let mut kink = w[basis[s]];
            for i in 0..n {
                let ai = a[i * d + s];
                if in_basis[i] || ai == T::zero() {
                    continue;
                }
                if resid[i] > T::zero() {
                    lin -= w[i] * ai;
                } else if resid[i] < T::zero() {
                    lin += w[i] * ai;
                } else {
                    kink += w[i] * ai.abs();
                }
            }
            let slope = kink - lin.abs();
            if slope < T::zero() {
                edges.push((slope, s));
            }
        }
        edges.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(std::cmp::Ordering::Equal).then(p.1.cmp(&q.1)));

        // steepest descending edge whose exact line search makes progress
        let mut best: Option<(T, usize, usize)> = None;
        for &(_, slot) in &edges {
            cand.clear();
            for i in 0..n {
                let ai = a[i * d + slot];
                if !in_basis[i] && ai != T::zero() {
                    cand.push((resid[i] / ai, w[i] * ai.abs(), i));
                }
            }
            // the leaving row itself sits at t = 0
            cand.push((T::zero(), w[basis[slot]], basis[slot]));
            let (t, entering) = weighted_median(&mut cand);
            if entering == basis[slot] || t == T::zero() {
                continue;
            }
            let f_new: T = (0..n).map(|i| w[i] * (resid[i] - t * a[i * d + slot]).abs()).sum();
            let gain = f - f_new;
            if gain > tol {
                best = Some((gain, slot, entering));
                break;
            }
        }
        match best {
            None => {
                let fit = LinearFit {
                    coefficients: theta,
                    covariance: None,
                    objective: f,
                    iterations: pivots,
                    converged: true,
                    scale: None,
                    support: basis,
                };
                return Ok((fit, pivots));
            }
            Some((_, slot, entering)) => {
                basis[slot] = entering;
                pivots += 1;
                if pivots > cap {
                    return Err(MvmrError::NoConvergence {
                        iterations: pivots,
                        detail: format!("LAD vertex descent exceeded {cap} pivots (objective {f})"),
                    });
                }
            }
        }
    }
}
