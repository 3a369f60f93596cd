use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::config::{Pleiotropy, SampleDesign, ScenarioConfig};
use crate::data::SummaryDataset;
use crate::error::{MvmrError, Result};
use crate::kernels::random::standard_normal;
use crate::kernels::RandomSource;
use crate::linalg::{cholesky, cholesky_solve};

const PARAMS_STREAM: u64 = 0x5041_5241;
const SAMPLE_X_STREAM: u64 = 1;
const SAMPLE_Y_STREAM: u64 = 2;

/// Per-variant parameters of one simulated population.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParameters {
    /// p×K
    pub beta_x: Array2<f64>,
    pub alpha: Array1<f64>,
    pub delta: Array1<f64>,
}

/// One individual-level sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualData {
    /// n×p genotypes in {0, 1, 2}.
    pub g: Array2<u8>,
    /// n×K
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

fn uniform<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    low + (high - low) * rng.gen::<f64>()
}

/// β_X row by row, then α_j or δ_j for the first `n_invalid` variants.
pub fn draw_parameters(cfg: &ScenarioConfig, rs: RandomSource) -> ScenarioParameters {
    let mut rng = rs.rng();
    let (p, k) = (cfg.p, cfg.k);
    let mut beta_x = Array2::zeros((p, k));
    for v in beta_x.iter_mut() {
        *v = uniform(&mut rng, cfg.beta_x_low, cfg.beta_x_high);
    }
    let mut alpha = Array1::zeros(p);
    let mut delta = Array1::zeros(p);
    for j in 0..cfg.n_invalid() {
        match cfg.pleiotropy {
            Pleiotropy::None => {}
            Pleiotropy::BalancedAlpha | Pleiotropy::DirectionalAlpha => {
                alpha[j] = cfg.alpha_mean + cfg.alpha_sd * standard_normal(&mut rng)
            }
            Pleiotropy::ConfoundedDelta => delta[j] = uniform(&mut rng, cfg.delta_low, cfg.delta_high),
        }
    }
    ScenarioParameters { beta_x, alpha, delta }
}

struct Sampler<'a> {
    cfg: &'a ScenarioConfig,
    beta: Vec<f64>,
    alpha: &'a [f64],
    delta: &'a [f64],
    /// Genotype thresholds on a 32-bit uniform: P(0) = q², P(≤1) = q² + 2pq.
    t0: u64,
    t1: u64,
    /// Lower Cholesky factor of the risk-factor error correlation (None if independent).
    chol: Option<Vec<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(cfg: &'a ScenarioConfig, par: &'a ScenarioParameters) -> Result<Self> {
        let q = 1.0 - cfg.maf;
        let k = cfg.k;
        let chol = if cfg.rho_x != 0.0 && k > 1 {
            let sigma = Array2::from_shape_fn((k, k), |(a, b)| if a == b { 1.0 } else { cfg.rho_x });
            let l = cholesky(&sigma, 1e-12)
                .ok_or_else(|| MvmrError::Argument("risk-factor error correlation is not positive definite".into()))?;
            Some(l.iter().copied().collect())
        } else {
            None
        };
        Ok(Self {
            cfg,
            beta: par.beta_x.iter().copied().collect(),
            alpha: par.alpha.as_slice().expect("contiguous"),
            delta: par.delta.as_slice().expect("contiguous"),
            t0: (q * q * 4_294_967_296.0).round() as u64,
            t1: ((q * q + 2.0 * q * cfg.maf) * 4_294_967_296.0).round() as u64,
            chol,
        })
    }

    /// Draws genotypes, then w, then the K risk-factor errors, then the outcome error.
    fn draw<R: Rng>(&self, rng: &mut R, g: &mut [u8], x: &mut [f64], z: &mut [f64]) -> f64 {
        let cfg = self.cfg;
        let k = cfg.k;
        for gj in g.iter_mut() {
            let u = rng.next_u32() as u64;
            *gj = (u >= self.t0) as u8 + (u >= self.t1) as u8;
        }
        let mut u_conf = 0.0;
        let mut pleio = 0.0;
        x.fill(cfg.beta_x0);
        for (((&gj, d), a), row) in g.iter().zip(self.delta).zip(self.alpha).zip(self.beta.chunks_exact(k)) {
            let gf = gj as f64;
            u_conf += d * gf;
            pleio += a * gf;
            for (xk, b) in x.iter_mut().zip(row) {
                *xk += b * gf;
            }
        }
        u_conf += cfg.noise_sd * standard_normal(rng);
        for zk in z.iter_mut() {
            *zk = standard_normal(rng);
        }
        let mut y = cfg.theta0_y + pleio + cfg.gamma_y * u_conf;
        for c in 0..k {
            let v = match &self.chol {
                Some(l) => (0..=c).map(|d| l[c * k + d] * z[d]).sum::<f64>(),
                None => z[c],
            };
            x[c] += cfg.gamma_x[c] * u_conf + cfg.noise_sd * v;
            y += cfg.theta[c] * x[c];
        }
        y + cfg.noise_sd * standard_normal(rng)
    }
}

/// Streaming sufficient statistics for per-variant simple regressions of
/// `m` traits on each genotype.
struct Moments {
    p: usize,
    m: usize,
    n: usize,
    sg: Vec<f64>,
    sgg: Vec<f64>,
    /// Σ_i g_ij t_im, row-major p×m
    sgt: Vec<f64>,
    st: Vec<f64>,
    stt: Vec<f64>,
}

impl Moments {
    fn new(p: usize, m: usize) -> Self {
        Self {
            p,
            m,
            n: 0,
            sg: vec![0.0; p],
            sgg: vec![0.0; p],
            sgt: vec![0.0; p * m],
            st: vec![0.0; m],
            stt: vec![0.0; m],
        }
    }

    fn add(&mut self, g: &[u8], t: &[f64]) {
        let m = self.m;
        self.n += 1;
        for (i, &v) in t.iter().enumerate() {
            self.st[i] += v;
            self.stt[i] += v * v;
        }
        for (((&gj, sg), sgg), sums) in g.iter().zip(&mut self.sg).zip(&mut self.sgg).zip(self.sgt.chunks_exact_mut(m)) {
            let gf = gj as f64;
            *sg += gf;
            *sgg += gf * gf;
            for (s, &v) in sums.iter_mut().zip(t) {
                *s += gf * v;
            }
        }
    }

    /// p×m estimates and standard errors.
    fn finish(&self) -> Result<(Array2<f64>, Array2<f64>)> {
        let (p, m) = (self.p, self.m);
        let n = self.n as f64;
        let mut est = Array2::zeros((p, m));
        let mut se = Array2::zeros((p, m));
        for j in 0..p {
            let (sg, sgg) = (self.sg[j], self.sgg[j]);
            let sxx = sgg - sg * sg / n;
            if !(sxx > 0.0) {
                return Err(MvmrError::Degenerate(format!("variant {} has zero genotype variance", j + 1)));
            }
            for i in 0..m {
                let sgt = self.sgt[j * m + i];
                let sxy = sgt - sg * self.st[i] / n;
                let syy = self.stt[i] - self.st[i] * self.st[i] / n;
                let b = sxy / sxx;
                let rss = (syy - b * sxy).max(0.0);
                est[[j, i]] = b;
                se[[j, i]] = (rss / (n - 2.0) / sxx).sqrt();
            }
        }
        Ok((est, se))
    }
}

/// One sample of `cfg.n` individuals for fixed parameters.
pub fn generate_sample(cfg: &ScenarioConfig, par: &ScenarioParameters, rs: RandomSource) -> Result<IndividualData> {
    cfg.validate()?;
    let sampler = Sampler::new(cfg, par)?;
    let mut rng = rs.rng();
    let mut g = Array2::<u8>::zeros((cfg.n, cfg.p));
    let mut x = Array2::<f64>::zeros((cfg.n, cfg.k));
    let mut y = Array1::<f64>::zeros(cfg.n);
    let mut z = vec![0.0; cfg.k];
    for i in 0..cfg.n {
        let gi = g.row_mut(i).into_slice().expect("row-major");
        let xi = x.row_mut(i).into_slice().expect("row-major");
        y[i] = sampler.draw(&mut rng, gi, xi, &mut z);
    }
    Ok(IndividualData { g, x, y })
}

/// Parameters from a fixed sub-stream of `rs`, then the first (risk-factor) sample.
pub fn generate_individual(cfg: &ScenarioConfig, rs: RandomSource) -> Result<IndividualData> {
    cfg.validate()?;
    let par = draw_parameters(cfg, rs.substream(PARAMS_STREAM));
    generate_sample(cfg, &par, rs.substream(SAMPLE_X_STREAM))
}

/// Simple regression with intercept of `trait_values` on each genotype column.
pub fn summarize_associations(g: ArrayView2<'_, u8>, trait_values: ArrayView1<'_, f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    if g.nrows() != trait_values.len() {
        return Err(MvmrError::Invalid(format!(
            "{} genotype rows but {} trait values",
            g.nrows(),
            trait_values.len()
        )));
    }
    let mut mom = Moments::new(g.ncols(), 1);
    let mut row = vec![0u8; g.ncols()];
    for (gi, &t) in g.outer_iter().zip(trait_values) {
        row.iter_mut().zip(gi).for_each(|(r, &v)| *r = v);
        mom.add(&row, &[t]);
    }
    let (est, se) = mom.finish()?;
    Ok((est.column(0).to_owned(), se.column(0).to_owned()))
}

fn stream_moments(cfg: &ScenarioConfig, sampler: &Sampler<'_>, rs: RandomSource, with_x: bool, with_y: bool) -> Moments {
    let (p, k) = (cfg.p, cfg.k);
    let m = if with_x { k } else { 0 } + with_y as usize;
    let mut mom = Moments::new(p, m);
    let mut rng = rs.rng();
    let mut g = vec![0u8; p];
    let mut x = vec![0.0; k];
    let mut z = vec![0.0; k];
    let mut t = vec![0.0; m];
    for _ in 0..cfg.n {
        let y = sampler.draw(&mut rng, &mut g, &mut x, &mut z);
        if with_x {
            t[..k].copy_from_slice(&x);
        }
        if with_y {
            t[m - 1] = y;
        }
        mom.add(&g, &t);
    }
    mom
}

/// Summary statistics for fixed parameters. Two-sample designs take risk-factor
/// associations from the first sample and outcome associations from an
/// independent second sample; one-sample designs use the first for both.
///
/// Equal to running [`summarize_associations`] on [`generate_sample`] output
/// for the same streams, without materialising the genotype matrix.
pub fn make_summary_dataset_with(
    cfg: &ScenarioConfig,
    par: &ScenarioParameters,
    rs: RandomSource,
) -> Result<SummaryDataset<f64>> {
    cfg.validate()?;
    let (p, k) = (cfg.p, cfg.k);
    let sampler = Sampler::new(cfg, par)?;
    let (bx, sx, by, sy) = match cfg.design {
        SampleDesign::OneSample => {
            let (e, s) = stream_moments(cfg, &sampler, rs.substream(SAMPLE_X_STREAM), true, true).finish()?;
            (
                e.slice(ndarray::s![.., ..k]).to_owned(),
                s.slice(ndarray::s![.., ..k]).to_owned(),
                e.column(k).to_owned(),
                s.column(k).to_owned(),
            )
        }
        SampleDesign::TwoSample => {
            let (ex, sx) = stream_moments(cfg, &sampler, rs.substream(SAMPLE_X_STREAM), true, false).finish()?;
            let (ey, sy) = stream_moments(cfg, &sampler, rs.substream(SAMPLE_Y_STREAM), false, true).finish()?;
            (ex, sx, ey.index_axis(Axis(1), 0).to_owned(), sy.index_axis(Axis(1), 0).to_owned())
        }
    };
    let width = p.to_string().len();
    let ids = (1..=p).map(|j| format!("v{j:0width$}")).collect();
    SummaryDataset::new(ids, bx, sx, by, sy)
}

/// Draws parameters from a fixed sub-stream of `rs` and summarises.
pub fn make_summary_dataset(cfg: &ScenarioConfig, rs: RandomSource) -> Result<SummaryDataset<f64>> {
    cfg.validate()?;
    let par = draw_parameters(cfg, rs.substream(PARAMS_STREAM));
    make_summary_dataset_with(cfg, &par, rs)
}

/// Parameter source used by [`make_summary_dataset`] for `rs`.
pub fn parameter_stream(rs: RandomSource) -> RandomSource {
    rs.substream(PARAMS_STREAM)
}

/// Multiple-regression R² (with intercept) of each column of `x` on all genotypes.
pub fn r_squared(g: ArrayView2<'_, u8>, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    let (n, p) = g.dim();
    if x.nrows() != n {
        return Err(MvmrError::Invalid(format!("{n} genotype rows but {} trait rows", x.nrows())));
    }
    if n <= p + 1 {
        return Err(MvmrError::Model(format!("R² needs n > p + 1 (n = {n}, p = {p})")));
    }
    let mut gc = g.mapv(f64::from);
    let gm = gc.mean_axis(Axis(0)).expect("n > 0");
    gc -= &gm;
    let a = gc.t().dot(&gc);
    let l = cholesky(&a, 1e-12).ok_or_else(|| MvmrError::SingularDesign("genotype cross-product matrix is singular".into()))?;
    let mut out = Vec::with_capacity(x.ncols());
    for col in x.columns() {
        let mean = col.sum() / n as f64;
        let xc = col.mapv(|v| v - mean);
        let tss = xc.dot(&xc);
        let b = gc.t().dot(&xc);
        let coef = cholesky_solve(&l, b.as_slice().expect("contiguous"));
        let explained = b.dot(&coef);
        out.push(if tss > 0.0 { (explained / tss).clamp(0.0, 1.0) } else { f64::NAN });
    }
    Ok(out)
}
