//! Independent reference implementations and instance generators shared by the
//! integration tests and the acceptance target. Nothing here calls into the
//! solvers under test.

#![allow(dead_code)]

use mvmr::estimators::{mvmr_ivw, mvmr_lasso, mvmr_median, mvmr_presso, Dispersion, LassoOptions, PressoOptions};
use mvmr::kernels::{mm_regression, partial_penalized_lasso, weighted_lad, weighted_least_squares};
use mvmr::{Dataset, RandomSource};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Weighted least squares through the normal equations.
pub fn wls_oracle(x: &Array2<f64>, y: &[f64], w: &[f64]) -> Vec<f64> {
    let (n, d) = x.dim();
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for j in 0..n {
        for r in 0..d {
            b[r] += w[j] * x[[j, r]] * y[j];
            for c in 0..d {
                a[r][c] += w[j] * x[[j, r]] * x[[j, c]];
            }
        }
    }
    solve_dense(a, b).expect("full rank")
}

pub fn abs_objective(x: &Array2<f64>, y: &[f64], w: &[f64], theta: &[f64]) -> f64 {
    (0..y.len())
        .map(|j| {
            let fit: f64 = (0..theta.len()).map(|c| x[[j, c]] * theta[c]).sum();
            w[j] * (y[j] - fit).abs()
        })
        .sum()
}

/// Smallest weighted L1 objective over all solutions interpolating d observations.
pub fn lad_exhaustive(x: &Array2<f64>, y: &[f64], w: &[f64]) -> f64 {
    let (n, d) = x.dim();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| x.row(i).to_vec()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        if let Some(t) = solve_dense(a, b) {
            if t.iter().all(|v| v.is_finite()) {
                best = best.min(abs_objective(x, y, w, &t));
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < n - d + i {
                idx[i] += 1;
                for k in i + 1..d {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Median of the weighted empirical distribution: first sorted value whose
/// cumulative weight reaches half the total.
pub fn weighted_median_oracle(values: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= 0.5 * total {
            return values[i];
        }
    }
    values[order[order.len() - 1]]
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Block coordinate descent directly on
/// Σ_j w_j (y_j − θ0j − x_j·θ)² + λ Σ_j |θ0j|, alternating an exact WLS step in θ
/// with exact soft-threshold steps in each θ0j.
pub fn lasso_cd_oracle(x: &Array2<f64>, y: &[f64], se: &[f64], lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let p = y.len();
    let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s)).collect();
    let mut theta0 = vec![0.0; p];
    let mut theta = wls_oracle(x, y, &w);
    for _ in 0..2_000_000 {
        let adj: Vec<f64> = (0..p).map(|j| y[j] - theta0[j]).collect();
        let new_theta = wls_oracle(x, &adj, &w);
        let mut change = new_theta
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = new_theta;
        for j in 0..p {
            let fit: f64 = (0..theta.len()).map(|c| x[[j, c]] * theta[c]).sum();
            let v = soft(y[j] - fit, lambda / (2.0 * w[j]));
            change = change.max((v - theta0[j]).abs());
            theta0[j] = v;
        }
        if change < 1e-15 {
            break;
        }
    }
    (theta0, theta)
}

fn ids(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("snp{j}")).collect()
}

/// Random NOME dataset with mixed-sign associations.
pub fn random_dataset(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Dataset {
    let bx = Array2::from_shape_fn((p, k), |_| normal(rng));
    let by = Array1::from_shape_fn(p, |_| normal(rng));
    let se = Array1::from_shape_fn(p, |_| rng.gen_range(0.5..2.0));
    Dataset::without_exposure_se(ids(p), bx, by, se).expect("valid random dataset")
}

/// β̂_Y = β̂_X θ + noise·σ_Y·ε with positive associations, small σ_X.
pub fn linear_dataset(rng: &mut ChaCha8Rng, p: usize, theta: &[f64], noise: f64) -> Dataset {
    let k = theta.len();
    let bx = Array2::from_shape_fn((p, k), |_| rng.gen_range(0.05..0.5));
    let se_y = Array1::from_shape_fn(p, |_| rng.gen_range(0.01..0.03));
    let mut by = bx.dot(&Array1::from(theta.to_vec()));
    for j in 0..p {
        by[j] += noise * se_y[j] * normal(rng);
    }
    let se_x = Array2::from_elem((p, k), 0.005);
    Dataset::new(ids(p), bx, se_x, by, se_y).expect("valid linear dataset")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst |MVMR-Median − weighted-median oracle| over K = 1 instances.
pub fn median_k1_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let p = r.gen_range(3..=30);
        let ds = random_dataset(&mut r, p, 1);
        let est = mvmr_median(&ds, 100, RandomSource::new(i as u64)).expect("median").estimates[0];
        let bx = ds.beta_x().column(0);
        let ratios: Vec<f64> = (0..p).map(|j| ds.beta_y()[j] / bx[j]).collect();
        let weights: Vec<f64> = (0..p).map(|j| bx[j].abs() / (ds.se_y()[j] * ds.se_y()[j])).collect();
        worst = worst.max((est - weighted_median_oracle(&ratios, &weights)).abs());
    }
    worst
}

/// Worst |MVMR-Lasso − MVMR-IVW| when the only grid point is λ ≥ λ_max.
pub fn lasso_above_max_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let p = r.gen_range(5..=40);
        let k = r.gen_range(1..=3);
        let ds = linear_dataset(&mut r, p, &vec![0.2; k], 3.0);
        let lmax = mvmr::kernels::lambda_max(ds.beta_x().view(), ds.beta_y().view(), ds.se_y().view()).expect("lambda_max");
        let opts = LassoOptions { grid: Some(vec![lmax * r.gen_range(1.0..3.0)]), ..Default::default() };
        let (lasso, _) = mvmr_lasso(&ds, 0, &opts).expect("lasso");
        let ivw = mvmr_ivw(&ds.orient_to_risk_factor(0).expect("orient"), Dispersion::RandomEffects).expect("ivw");
        worst = worst.max(max_abs_diff(&lasso.estimates, &ivw.estimates));
        worst = worst.max(max_abs_diff(&lasso.std_errors, &ivw.std_errors));
    }
    worst
}

/// Worst |MVMR-PRESSO − MVMR-IVW| on clean data where nothing is flagged, and the
/// number of instances that flagged anything.
pub fn presso_clean_worst(instances: usize, seed: u64) -> (f64, usize) {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    let mut flagged = 0;
    for i in 0..instances {
        let p = r.gen_range(10..=40);
        let ds = linear_dataset(&mut r, p, &[0.3, -0.1], 1.0);
        let (res, rep) = mvmr_presso(&ds, &PressoOptions::default(), RandomSource::new(i as u64)).expect("presso");
        if rep.outlier.iter().any(|&o| o) {
            flagged += 1;
            continue;
        }
        let ivw = mvmr_ivw(&ds, Dispersion::RandomEffects).expect("ivw");
        worst = worst.max(max_abs_diff(&res.estimates, &ivw.estimates));
        worst = worst.max(max_abs_diff(&res.std_errors, &ivw.std_errors));
    }
    (worst, flagged)
}

/// Worst deviation of the partially penalised lasso from the direct
/// coordinate-descent oracle (intercepts and effects, relative to 1 + |value|).
pub fn lasso_kernel_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let p = r.gen_range(4..=10);
        let k = r.gen_range(1..=3.min(p - 2));
        let ds = random_dataset(&mut r, p, k);
        let (bx, by, se) = (ds.beta_x(), ds.beta_y(), ds.se_y());
        let lmax = mvmr::kernels::lambda_max(bx.view(), by.view(), se.view()).expect("lambda_max");
        let lambda = lmax * r.gen_range(0.05..0.9);
        let fit = partial_penalized_lasso(bx.view(), by.view(), se.view(), lambda).expect("lasso");
        let (t0, t) = lasso_cd_oracle(bx, by.as_slice().unwrap(), se.as_slice().unwrap(), lambda);
        for (a, b) in fit.theta0.iter().zip(&t0).chain(fit.theta.iter().zip(&t)) {
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    worst
}

/// Worst relative excess of the LAD objective over the exhaustive vertex minimum.
pub fn lad_vertex_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let d = r.gen_range(1..=2);
        let n = r.gen_range(d + 1..=12);
        let x = Array2::from_shape_fn((n, d), |_| normal(&mut r));
        let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..3.0)).collect();
        let fit = weighted_lad(x.view(), Array1::from(y.clone()).view(), Array1::from(w.clone()).view()).expect("lad");
        let got = abs_objective(&x, &y, &w, fit.coefficients.as_slice().unwrap());
        let best = lad_exhaustive(&x, &y, &w);
        worst = worst.max((got - best) / (1.0 + best));
    }
    worst
}

/// Worst stationarity residual of the joint objective at the kernel solution:
/// |2 w_j r_j| ≤ λ for zero intercepts, 2 w_j r_j = λ sign(θ0j) otherwise, and
/// Σ_j w_j r_j x_jk = 0 for the effects.
pub fn lasso_kkt_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let p = r.gen_range(10..=60);
        let k = r.gen_range(1..=4);
        let ds = random_dataset(&mut r, p, k);
        let (bx, by, se) = (ds.beta_x(), ds.beta_y(), ds.se_y());
        let lmax = mvmr::kernels::lambda_max(bx.view(), by.view(), se.view()).expect("lambda_max");
        for frac in [0.9, 0.5, 0.2, 0.05] {
            let lambda = lmax * frac;
            let fit = partial_penalized_lasso(bx.view(), by.view(), se.view(), lambda).expect("lasso");
            let fitted = bx.dot(&fit.theta);
            let mut score = vec![0.0; k];
            for j in 0..p {
                let w = 1.0 / (se[j] * se[j]);
                let res = by[j] - fit.theta0[j] - fitted[j];
                let g = 2.0 * w * res;
                let v = if fit.theta0[j] == 0.0 {
                    (g.abs() - lambda).max(0.0)
                } else {
                    (g - lambda * fit.theta0[j].signum()).abs()
                };
                worst = worst.max(v);
                for c in 0..k {
                    score[c] += 2.0 * w * res * bx[[j, c]];
                }
            }
            worst = worst.max(score.iter().fold(0.0, |m, s| m.max(s.abs())));
        }
    }
    worst
}

/// Worst relative normal-equation residual |Σ_j w_j r_j x_jk| / Σ_j |w_j r_j x_jk|.
pub fn wls_orthogonality_worst(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let p = r.gen_range(5..=80);
        let k = r.gen_range(1..=4.min(p - 1));
        let ds = random_dataset(&mut r, p, k);
        let w = ds.weights();
        let fit = weighted_least_squares(ds.beta_x().view(), ds.beta_y().view(), w.view()).expect("wls");
        let res = ds.beta_y() - &ds.beta_x().dot(&fit.coefficients);
        for c in 0..k {
            let terms: Vec<f64> = (0..p).map(|j| w[j] * res[j] * ds.beta_x()[[j, c]]).collect();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }
    worst
}

/// Paired MM − WLS differences on clean Gaussian data: per coefficient, the mean
/// difference divided by its Monte Carlo standard error.
pub fn mm_vs_wls_z(reps: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let (n, theta) = (100, [1.0, -0.5]);
    let mut diffs = vec![Vec::with_capacity(reps); theta.len()];
    for _ in 0..reps {
        let x = Array2::from_shape_fn((n, theta.len()), |_| normal(&mut r));
        let y = Array1::from_shape_fn(n, |i| x[[i, 0]] * theta[0] + x[[i, 1]] * theta[1] + normal(&mut r));
        let mm = mm_regression(x.view(), y.view()).expect("mm");
        let ls = wls_oracle(&x, y.as_slice().unwrap(), &vec![1.0; n]);
        for c in 0..theta.len() {
            diffs[c].push(mm.coefficients[c] - ls[c]);
        }
    }
    diffs
        .iter()
        .map(|d| {
            let m = d.iter().sum::<f64>() / reps as f64;
            let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (reps as f64 - 1.0);
            m / (v / reps as f64).sqrt()
        })
        .collect()
}
