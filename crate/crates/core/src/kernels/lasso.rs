//! Lasso with per-variant intercepts penalised and causal effects unpenalised:
//!
//! ```text
//! min_{θ0, θ}  Σ_j σ_Yj^{-2} (β̂_Yj − θ0j − β̂_Xj·θ)² + λ Σ_j |θ0j|
//! ```
//!
//! Profiling out θ leaves a standard lasso in θ0 whose design is
//! `(I − P) S^{1/2}`, with `S = diag(σ_Y^{-2})` and `P` the projection onto the
//! column space of `S^{1/2} β̂_X`. That lasso is solved by cyclic coordinate
//! descent on its Gram matrix `G = S^{1/2} (I − P) S^{1/2}`; θ is then the
//! weighted least-squares fit of `β̂_Y − θ0` on `β̂_X`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::wls::weighted_least_squares;
use crate::error::{MvmrError, Result};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};
use crate::scalar::Real;

/// Relative duality-gap target of the coordinate descent.
pub const DUALITY_GAP_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit<T> {
    pub lambda: T,
    /// Per-variant pleiotropy intercepts.
    pub theta0: Array1<T>,
    /// Causal effects.
    pub theta: Array1<T>,
    /// Full penalised objective at (θ0, θ).
    pub objective: T,
    pub sweeps: usize,
    pub duality_gap: T,
}

/// Precomputed projection and Gram matrix for one dataset; reused across a λ path.
#[derive(Debug, Clone)]
pub struct LassoKernel<T> {
    beta_x: Array2<T>,
    beta_y: Array1<T>,
    weights: Array1<T>,
    gram: Array2<T>,
    /// `G β̂_Y`
    c: Array1<T>,
    /// `β̂_Y' G β̂_Y`
    yty: T,
}

impl<T: Real> LassoKernel<T> {
    pub fn new(beta_x: ArrayView2<'_, T>, beta_y: ArrayView1<'_, T>, se_y: ArrayView1<'_, T>) -> Result<Self> {
        let (p, k) = beta_x.dim();
        if beta_y.len() != p || se_y.len() != p {
            return Err(MvmrError::Argument("lasso inputs differ in length".into()));
        }
        if p <= k {
            return Err(MvmrError::Argument(format!("need p > K (p = {p}, K = {k})")));
        }
        if se_y.iter().any(|&s| !(s > T::zero())) {
            return Err(MvmrError::Argument("outcome standard errors must be positive".into()));
        }
        let q: Vec<T> = se_y.iter().map(|&s| T::one() / s).collect();
        let mut z = beta_x.to_owned();
        for j in 0..p {
            z.row_mut(j).mapv_inplace(|v| v * q[j]);
        }
        let ztz = z.t().dot(&z);
        let l = cholesky(&ztz, T::lit(64.0) * T::epsilon()).ok_or_else(|| {
            MvmrError::SingularDesign("projection onto the risk-factor associations is singular".into())
        })?;
        let m = cholesky_inverse(&l);
        let zm = z.dot(&m);
        let mut gram = Array2::<T>::zeros((p, p));
        for i in 0..p {
            for j in 0..=i {
                let pij = (0..k).fold(T::zero(), |acc, a| acc + zm[[i, a]] * z[[j, a]]);
                let delta = if i == j { T::one() } else { T::zero() };
                let g = q[i] * q[j] * (delta - pij);
                gram[[i, j]] = g;
                gram[[j, i]] = g;
            }
        }
        let c = gram.dot(&beta_y);
        let yty = beta_y.dot(&c);
        Ok(Self {
            beta_x: beta_x.to_owned(),
            beta_y: beta_y.to_owned(),
            weights: q.iter().map(|&v| v * v).collect(),
            gram,
            c,
            yty,
        })
    }

    pub fn n_variants(&self) -> usize {
        self.beta_y.len()
    }

    /// Smallest λ at which every intercept is zero: `2 max_j |(G β̂_Y)_j|`.
    pub fn lambda_max(&self) -> T {
        T::lit(2.0) * self.c.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn gram(&self) -> &Array2<T> {
        &self.gram
    }

    /// Solves for one λ, optionally warm-started from previous intercepts.
    pub fn solve(&self, lambda: T, warm: Option<&Array1<T>>) -> Result<PenalizedFit<T>> {
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(MvmrError::Argument(format!("lambda must be non-negative, got {lambda}")));
        }
        let p = self.n_variants();
        let half = lambda / T::lit(2.0);
        let mut theta0 = match warm {
            Some(w) if w.len() == p => w.clone(),
            _ => Array1::<T>::zeros(p),
        };
        let mut sweeps = 0;
        let mut gap = T::zero();
        if lambda >= self.lambda_max() {
            theta0.fill(T::zero());
        } else {
            // g = c − G θ0 = G (β̂_Y − θ0)
            let mut g = &self.c - &self.gram.dot(&theta0);
            let tiny = T::lit(1e-14) * self.gram.diag().iter().fold(T::zero(), |m, v| m.max(*v));
            let target = T::lit(DUALITY_GAP_TOL) * self.yty.max(T::min_positive_value());
            loop {
                sweeps += 1;
                for j in 0..p {
                    let gjj = self.gram[[j, j]];
                    let old = theta0[j];
                    let new = if gjj > tiny { soft(g[j] + gjj * old, half) / gjj } else { T::zero() };
                    let delta = new - old;
                    if delta != T::zero() {
                        theta0[j] = new;
                        for (gi, &gij) in g.iter_mut().zip(self.gram.column(j).iter()) {
                            *gi -= delta * gij;
                        }
                    }
                }
                gap = self.duality_gap(&theta0, &g, lambda);
                if gap <= target {
                    break;
                }
                if sweeps >= MAX_SWEEPS {
                    return Err(MvmrError::NoConvergence {
                        iterations: sweeps,
                        detail: format!("lasso duality gap {gap} above {target}"),
                    });
                }
            }
            if let Some(polished) = self.polish(&theta0, lambda) {
                theta0 = polished;
            }
        }
        let theta = self.post_intercept_fit(&theta0)?;
        let objective = self.objective(&theta0, &theta, lambda);
        Ok(PenalizedFit {
            lambda,
            theta0,
            theta,
            objective,
            sweeps,
            duality_gap: gap,
        })
    }

    fn duality_gap(&self, theta0: &Array1<T>, g: &Array1<T>, lambda: T) -> T {
        let two = T::lit(2.0);
        let l1 = theta0.iter().fold(T::zero(), |a, v| a + v.abs());
        // (b − θ0)' G (b − θ0) = (b − θ0)' g
        let rss = (&self.beta_y - theta0).dot(g);
        let primal = rss + lambda * l1;
        let ginf = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let s = if ginf > T::zero() { (lambda / (two * ginf)).min(T::one()) } else { T::one() };
        let t0c = theta0.dot(&self.c);
        let t0gt0 = t0c - theta0.dot(g);
        let one_s = T::one() - s;
        let v_norm = one_s * one_s * self.yty + two * s * one_s * t0c + s * s * t0gt0;
        let dual = self.yty - v_norm;
        (primal - dual).max(T::zero())
    }

    /// Exact solution of the KKT system on the active set; `None` if it changes
    /// any sign or violates the inactive-set conditions.
    fn polish(&self, theta0: &Array1<T>, lambda: T) -> Option<Array1<T>> {
        let active: Vec<usize> = (0..theta0.len()).filter(|&j| theta0[j] != T::zero()).collect();
        if active.is_empty() {
            return None;
        }
        let half = lambda / T::lit(2.0);
        let m = active.len();
        let mut gaa = Array2::<T>::zeros((m, m));
        let mut rhs = vec![T::zero(); m];
        for (a, &i) in active.iter().enumerate() {
            rhs[a] = self.c[i] - half * theta0[i].signum();
            for (b, &j) in active.iter().enumerate() {
                gaa[[a, b]] = self.gram[[i, j]];
            }
        }
        let l = cholesky(&gaa, T::lit(1e-12))?;
        let sol = cholesky_solve(&l, &rhs);
        let mut out = Array1::<T>::zeros(theta0.len());
        for (a, &i) in active.iter().enumerate() {
            if sol[a].signum() != theta0[i].signum() || sol[a] == T::zero() {
                return None;
            }
            out[i] = sol[a];
        }
        let g = &self.c - &self.gram.dot(&out);
        let slack = half * (T::one() + T::lit(1e-9)) + T::lit(1e-12) * self.c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if g.iter().zip(out.iter()).any(|(gi, oi)| *oi == T::zero() && gi.abs() > slack) {
            return None;
        }
        Some(out)
    }

    /// θ given intercepts: WLS of `β̂_Y − θ0` on `β̂_X`.
    pub fn post_intercept_fit(&self, theta0: &Array1<T>) -> Result<Array1<T>> {
        let adjusted = &self.beta_y - theta0;
        Ok(weighted_least_squares(self.beta_x.view(), adjusted.view(), self.weights.view())?.coefficients)
    }

    /// Value of the full penalised objective.
    pub fn objective(&self, theta0: &Array1<T>, theta: &Array1<T>, lambda: T) -> T {
        let fitted = self.beta_x.dot(theta);
        let mut total = T::zero();
        for j in 0..self.n_variants() {
            let r = self.beta_y[j] - theta0[j] - fitted[j];
            total += self.weights[j] * r * r + lambda * theta0[j].abs();
        }
        total
    }

    /// KKT residual: how far each intercept's subgradient condition is from holding.
    pub fn kkt_violation(&self, theta0: &Array1<T>, theta: &Array1<T>, lambda: T) -> T {
        let fitted = self.beta_x.dot(theta);
        let mut worst = T::zero();
        for j in 0..self.n_variants() {
            let grad = T::lit(2.0) * self.weights[j] * (self.beta_y[j] - theta0[j] - fitted[j]);
            let v = if theta0[j] == T::zero() {
                (grad.abs() - lambda).max(T::zero())
            } else {
                (grad - lambda * theta0[j].signum()).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[inline]
fn soft<T: Real>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// One-shot solve of the partially penalised lasso at `lambda`.
pub fn partial_penalized_lasso<T: Real>(
    beta_x: ArrayView2<'_, T>,
    beta_y: ArrayView1<'_, T>,
    se_y: ArrayView1<'_, T>,
    lambda: T,
) -> Result<PenalizedFit<T>> {
    LassoKernel::new(beta_x, beta_y, se_y)?.solve(lambda, None)
}

pub fn lambda_max<T: Real>(beta_x: ArrayView2<'_, T>, beta_y: ArrayView1<'_, T>, se_y: ArrayView1<'_, T>) -> Result<T> {
    Ok(LassoKernel::new(beta_x, beta_y, se_y)?.lambda_max())
}
