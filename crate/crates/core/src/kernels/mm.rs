//! MM-estimation with Tukey's bisquare.
//!
//! Stage one is a fast-S estimate: random elemental subsets, two concentration
//! steps each, full refinement of the best few, smallest M-scale wins. Stage two
//! is IRLS on the bisquare ψ at the efficiency constant with that scale held fixed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;

use super::random::RandomSource;
use super::wls::cross_products;
use super::LinearFit;
use crate::error::{MvmrError, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, Lu};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MmOptions {
    /// Bisquare constant of the M-step (95% Gaussian efficiency).
    pub efficiency_c: f64,
    /// Bisquare constant of the S-step (50% breakdown with `s_b = 0.5`).
    pub s_c: f64,
    pub s_b: f64,
    pub subsamples: usize,
    pub concentration_steps: usize,
    pub best_candidates: usize,
    pub max_refinement: usize,
    pub max_irls: usize,
    pub tolerance: f64,
    /// Seed for subset selection.
    pub seed: u64,
}

impl Default for MmOptions {
    fn default() -> Self {
        Self {
            efficiency_c: 4.685,
            s_c: 1.548,
            s_b: 0.5,
            subsamples: 500,
            concentration_steps: 2,
            best_candidates: 5,
            max_refinement: 200,
            max_irls: 50,
            tolerance: 1e-7,
            seed: 0x5EED_4D4D,
        }
    }
}

/// ρ scaled to [0, 1].
#[inline]
pub fn bisquare_rho<T: Real>(u: T, c: T) -> T {
    let z = u / c;
    if z.abs() >= T::one() {
        T::one()
    } else {
        let t = T::one() - z * z;
        T::one() - t * t * t
    }
}

/// ψ(u)/u; exactly zero for |u| ≥ c.
#[inline]
pub fn bisquare_weight<T: Real>(u: T, c: T) -> T {
    let z = u / c;
    if z.abs() >= T::one() {
        T::zero()
    } else {
        let t = T::one() - z * z;
        t * t
    }
}

#[inline]
fn bisquare_psi<T: Real>(u: T, c: T) -> T {
    u * bisquare_weight(u, c)
}

#[inline]
fn bisquare_psi_prime<T: Real>(u: T, c: T) -> T {
    let z = u / c;
    if z.abs() >= T::one() {
        T::zero()
    } else {
        let z2 = z * z;
        (T::one() - z2) * (T::one() - T::lit(5.0) * z2)
    }
}

fn median_abs<T: Real>(r: &[T]) -> T {
    let mut a: Vec<T> = r.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = a.len();
    if n % 2 == 1 {
        a[n / 2]
    } else {
        (a[n / 2 - 1] + a[n / 2]) / T::lit(2.0)
    }
}

/// M-scale s solving mean ρ(r/s) = b.
fn m_scale<T: Real>(r: &[T], c: T, b: T, start: Option<T>) -> T {
    let mut s = start.unwrap_or_else(|| median_abs(r) / T::lit(0.6745));
    if !(s > T::zero()) {
        return T::zero();
    }
    let n = T::from_usize_lossy(r.len());
    for _ in 0..200 {
        let mean_rho = r.iter().map(|&v| bisquare_rho(v / s, c)).sum::<T>() / n;
        let next = s * (mean_rho / b).sqrt();
        if !(next > T::zero()) {
            return T::zero();
        }
        let done = ((next / s) - T::one()).abs() < T::lit(1e-10);
        s = next;
        if done {
            break;
        }
    }
    s
}

fn residuals<T: Real>(x: &Array2<T>, y: &Array1<T>, theta: &Array1<T>) -> Vec<T> {
    (0..x.nrows()).map(|i| y[i] - x.row(i).dot(theta)).collect()
}

/// Weighted LS allowing zero weights; `None` when the weighted design is singular.
fn reweighted_fit<T: Real>(x: &Array2<T>, y: &Array1<T>, w: &Array1<T>) -> Option<Array1<T>> {
    let (xtwx, xtwy) = cross_products(&x.view(), &y.view(), &w.view());
    let l = cholesky(&xtwx, T::lit(64.0) * T::epsilon())?;
    Some(cholesky_solve(&l, xtwy.as_slice().expect("contiguous")))
}

struct Candidate<T> {
    theta: Array1<T>,
    scale: T,
}

fn concentrate<T: Real>(
    x: &Array2<T>,
    y: &Array1<T>,
    mut cand: Candidate<T>,
    steps: usize,
    c: T,
    b: T,
    rel_tol: Option<T>,
) -> Candidate<T> {
    let n = x.nrows();
    let mut w = Array1::<T>::zeros(n);
    for _ in 0..steps {
        if !(cand.scale > T::zero()) {
            break;
        }
        let r = residuals(x, y, &cand.theta);
        for i in 0..n {
            w[i] = bisquare_weight(r[i] / cand.scale, c);
        }
        let Some(next) = reweighted_fit(x, y, &w) else { break };
        let r = residuals(x, y, &next);
        let scale = match rel_tol {
            // approximate scale update during the cheap concentration steps
            None => {
                let nn = T::from_usize_lossy(n);
                let mr = r.iter().map(|&v| bisquare_rho(v / cand.scale, c)).sum::<T>() / nn;
                cand.scale * (mr / b).sqrt()
            }
            Some(_) => m_scale(&r, c, b, Some(cand.scale)),
        };
        let change = (&next - &cand.theta).iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let size = next.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        cand = Candidate { theta: next, scale };
        if let Some(tol) = rel_tol {
            if change <= tol * (size + tol) {
                break;
            }
        }
    }
    cand
}

/// MM regression of `y` on `x` (no intercept column is added).
pub fn mm_regression<T: Real>(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>) -> Result<LinearFit<T>> {
    mm_regression_with(x, y, &MmOptions::default())
}

pub fn mm_regression_with<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    opts: &MmOptions,
) -> Result<LinearFit<T>> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(MvmrError::Argument(format!("design has {n} rows but response has {}", y.len())));
    }
    if d == 0 || n <= d {
        return Err(MvmrError::Argument(format!(
            "need more observations than coefficients (n = {n}, d = {d})"
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(MvmrError::Argument("non-finite input to MM regression".into()));
    }

    // Canonical row order: the random subsets then depend on the data only,
    // not on how the caller ordered the observations.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        y[a].partial_cmp(&y[b]).unwrap().then_with(|| {
            (0..d)
                .map(|c| x[[a, c]].partial_cmp(&x[[b, c]]).unwrap())
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let xs = x.select(Axis(0), &order);
    let ys = y.select(Axis(0), &order);

    let mut distinct = 1;
    for i in 1..n {
        if ys[i] != ys[i - 1] || xs.row(i) != xs.row(i - 1) {
            distinct += 1;
        }
    }
    if distinct <= d {
        return Err(MvmrError::Degenerate(format!(
            "only {distinct} distinct observations for {d} coefficients; cannot subsample"
        )));
    }

    let c0 = T::lit(opts.s_c);
    let b = T::lit(opts.s_b);
    let c1 = T::lit(opts.efficiency_c);
    let tol = T::lit(opts.tolerance);

    // S-step
    let mut rng = RandomSource::new(opts.seed).rng();
    let mut best: Vec<Candidate<T>> = Vec::new();
    let mut singular = 0usize;
    let mut exact: Option<Array1<T>> = None;
    for _ in 0..opts.subsamples {
        let idx = sample(&mut rng, n, d).into_vec();
        let sub = xs.select(Axis(0), &idx);
        let Some(lu) = Lu::new(sub.view(), T::lit(1e-10)) else {
            singular += 1;
            continue;
        };
        let rhs: Vec<T> = idx.iter().map(|&i| ys[i]).collect();
        let theta = Array1::from(lu.solve(&rhs));
        let r = residuals(&xs, &ys, &theta);
        let scale = m_scale(&r, c0, b, None);
        if !(scale > T::zero()) {
            exact = Some(theta);
            break;
        }
        let cand = concentrate(&xs, &ys, Candidate { theta, scale }, opts.concentration_steps, c0, b, None);
        if !(cand.scale > T::zero()) {
            exact = Some(cand.theta);
            break;
        }
        // keep the best few by scale
        let pos = best.partition_point(|c| c.scale <= cand.scale);
        if pos < opts.best_candidates {
            best.insert(pos, cand);
            best.truncate(opts.best_candidates);
        }
    }
    if exact.is_none() && best.is_empty() {
        return Err(MvmrError::Degenerate(format!(
            "all {singular} elemental subsets were singular"
        )));
    }

    let (s_theta, scale) = match exact {
        Some(theta) => (theta, T::zero()),
        None => {
            let refined = best
                .into_iter()
                .map(|c| {
                    let start_scale = m_scale(&residuals(&xs, &ys, &c.theta), c0, b, Some(c.scale));
                    concentrate(
                        &xs,
                        &ys,
                        Candidate { theta: c.theta, scale: start_scale },
                        opts.max_refinement,
                        c0,
                        b,
                        Some(T::lit(1e-10)),
                    )
                })
                .min_by(|p, q| p.scale.partial_cmp(&q.scale).unwrap())
                .expect("non-empty candidate set");
            (refined.theta, refined.scale)
        }
    };

    let (xtx, _) = cross_products(&xs.view(), &ys.view(), &Array1::from_elem(n, T::one()).view());
    let l = cholesky(&xtx, T::lit(64.0) * T::epsilon())
        .ok_or_else(|| MvmrError::SingularDesign("X'X is not positive definite".into()))?;
    let xtx_inv = cholesky_inverse(&l);

    if !(scale > T::zero()) {
        // exact fit on at least half the data
        let r = residuals(&xs, &ys, &s_theta);
        let objective = r.iter().filter(|v| **v != T::zero()).count();
        return Ok(LinearFit {
            coefficients: s_theta,
            covariance: Some(xtx_inv),
            objective: T::from_usize_lossy(objective),
            iterations: 0,
            converged: true,
            scale: Some(T::zero()),
            support: Vec::new(),
        });
    }

    // M-step with fixed scale
    let mut theta = s_theta;
    let mut w = Array1::<T>::zeros(n);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_irls {
        iterations = it;
        let r = residuals(&xs, &ys, &theta);
        for i in 0..n {
            w[i] = bisquare_weight(r[i] / scale, c1);
        }
        let next = reweighted_fit(&xs, &ys, &w).ok_or_else(|| {
            MvmrError::SingularDesign("bisquare weights left a singular design".into())
        })?;
        let change = (&next - &theta).iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let size = next.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        theta = next;
        if change <= tol * (size + tol) {
            converged = true;
            break;
        }
    }

    let r = residuals(&xs, &ys, &theta);
    let u: Vec<T> = r.iter().map(|&v| v / scale).collect();
    let nn = T::from_usize_lossy(n);
    let psi2 = u.iter().map(|&v| bisquare_psi(v, c1).powi(2)).sum::<T>() / T::from_usize_lossy(n - d);
    let dpsi = u.iter().map(|&v| bisquare_psi_prime(v, c1)).sum::<T>() / nn;
    let kappa = if dpsi > T::zero() { psi2 / (dpsi * dpsi) } else { T::one() };
    let objective = u.iter().map(|&v| bisquare_rho(v, c1)).sum::<T>();

    Ok(LinearFit {
        coefficients: theta,
        covariance: Some(xtx_inv.mapv(|v| v * kappa)),
        objective,
        iterations,
        converged,
        scale: Some(scale),
        support: Vec::new(),
    })
}
