use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{MvmrError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pleiotropy {
    None,
    /// α_j ~ N(alpha_mean, alpha_sd²) with zero mean.
    BalancedAlpha,
    /// α_j ~ N(alpha_mean, alpha_sd²) with non-zero mean.
    DirectionalAlpha,
    /// δ_j ~ U(delta_low, delta_high): the variant acts on the confounder.
    ConfoundedDelta,
}

impl Pleiotropy {
    /// Scenario number used in metrics output (0 for no pleiotropy).
    pub fn scenario_id(self) -> u8 {
        match self {
            Pleiotropy::None => 0,
            Pleiotropy::BalancedAlpha => 1,
            Pleiotropy::DirectionalAlpha => 2,
            Pleiotropy::ConfoundedDelta => 3,
        }
    }

    fn key(self) -> &'static str {
        match self {
            Pleiotropy::None => "none",
            Pleiotropy::BalancedAlpha => "balanced_alpha",
            Pleiotropy::DirectionalAlpha => "directional_alpha",
            Pleiotropy::ConfoundedDelta => "confounded_delta",
        }
    }
}

impl FromStr for Pleiotropy {
    type Err = MvmrError;
    fn from_str(s: &str) -> Result<Self> {
        [
            Pleiotropy::None,
            Pleiotropy::BalancedAlpha,
            Pleiotropy::DirectionalAlpha,
            Pleiotropy::ConfoundedDelta,
        ]
        .into_iter()
        .find(|p| p.key() == s)
        .ok_or_else(|| MvmrError::Argument(format!("unknown pleiotropy kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleDesign {
    TwoSample,
    OneSample,
}

impl SampleDesign {
    fn key(self) -> &'static str {
        match self {
            SampleDesign::TwoSample => "two_sample",
            SampleDesign::OneSample => "one_sample",
        }
    }
}

impl FromStr for SampleDesign {
    type Err = MvmrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sample" => Ok(SampleDesign::TwoSample),
            "one_sample" => Ok(SampleDesign::OneSample),
            _ => Err(MvmrError::Argument(format!("unknown sample design `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSet {
    /// θ = (0.2, 0.1, 0.3, 0.4)
    A,
    /// θ = (0, −0.1, 0.1, 0.2)
    B,
}

impl ThetaSet {
    pub fn values(self) -> Vec<f64> {
        match self {
            ThetaSet::A => vec![0.2, 0.1, 0.3, 0.4],
            ThetaSet::B => vec![0.0, -0.1, 0.1, 0.2],
        }
    }
}

impl FromStr for ThetaSet {
    type Err = MvmrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(ThetaSet::A),
            "B" | "b" => Ok(ThetaSet::B),
            _ => Err(MvmrError::Argument(format!("unknown theta set `{s}` (expected A or B)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Base,
    /// 20 variants with β_Xjk ~ U(0, 0.22).
    P20,
    /// Risk-factor errors with common correlation 0.5.
    Corr,
    OneSample,
}

impl FromStr for Variant {
    type Err = MvmrError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "p20" => Ok(Variant::P20),
            "corr" => Ok(Variant::Corr),
            "one-sample" | "one_sample" => Ok(Variant::OneSample),
            _ => Err(MvmrError::Argument(format!(
                "unknown variant `{s}` (expected base, p20, corr or one-sample)"
            ))),
        }
    }
}

/// Full parameterisation of the individual-level generating model
///
/// U_i  = Σ_j δ_j G_ij + w_i
/// X_ik = β_X0k + Σ_j β_Xjk G_ij + γ_Xk U_i + v_Xik
/// Y_i  = θ_0 + Σ_k θ_k X_ik + Σ_j α_j G_ij + γ_Y U_i + v_Yi
///
/// with G_ij ~ Binomial(2, maf) and unit-variance errors scaled by `noise_sd`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub p: usize,
    pub k: usize,
    /// Individuals per sample.
    pub n: usize,
    pub theta: Vec<f64>,
    pub theta0_y: f64,
    pub beta_x0: f64,
    pub gamma_x: Vec<f64>,
    pub gamma_y: f64,
    pub beta_x_low: f64,
    pub beta_x_high: f64,
    pub maf: f64,
    pub prop_invalid: f64,
    pub pleiotropy: Pleiotropy,
    pub alpha_mean: f64,
    pub alpha_sd: f64,
    pub delta_low: f64,
    pub delta_high: f64,
    /// Common correlation of the v_Xik.
    pub rho_x: f64,
    /// Standard deviation of w, v_X and v_Y.
    pub noise_sd: f64,
    pub design: SampleDesign,
    pub n_reps: usize,
    pub seed: u64,
    /// Draw β_X, α and δ afresh in each replication (otherwise once per study).
    pub redraw_parameters: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(1, 0.1, ThetaSet::A, Variant::Base)
    }
}

impl ScenarioConfig {
    /// Scenario 1 (balanced), 2 (directional) or 3 (InSIDE violated); 0 means
    /// no pleiotropy.
    pub fn preset(scenario: u8, prop_invalid: f64, theta: ThetaSet, variant: Variant) -> Self {
        let k = 4;
        let pleiotropy = match scenario {
            1 => Pleiotropy::BalancedAlpha,
            2 => Pleiotropy::DirectionalAlpha,
            3 => Pleiotropy::ConfoundedDelta,
            _ => Pleiotropy::None,
        };
        let mut cfg = Self {
            p: 100,
            k,
            n: 20_000,
            theta: theta.values(),
            theta0_y: 0.0,
            beta_x0: 0.0,
            gamma_x: vec![1.0 / k as f64; k],
            gamma_y: 1.0,
            beta_x_low: 0.0,
            beta_x_high: 0.1,
            maf: 0.3,
            prop_invalid,
            pleiotropy,
            alpha_mean: if scenario == 2 { 0.1 } else { 0.0 },
            alpha_sd: 0.2,
            delta_low: 0.0,
            delta_high: 0.1,
            rho_x: 0.0,
            noise_sd: 1.0,
            design: SampleDesign::TwoSample,
            n_reps: 1000,
            seed: 1,
            redraw_parameters: true,
        };
        match variant {
            Variant::Base => {}
            Variant::P20 => {
                cfg.p = 20;
                cfg.beta_x_high = 0.22;
            }
            Variant::Corr => cfg.rho_x = 0.5,
            Variant::OneSample => cfg.design = SampleDesign::OneSample,
        }
        cfg
    }

    pub fn scenario_id(&self) -> u8 {
        self.pleiotropy.scenario_id()
    }

    /// Number of invalid variants; they are the first ones.
    pub fn n_invalid(&self) -> usize {
        if self.pleiotropy == Pleiotropy::None {
            0
        } else {
            (self.prop_invalid * self.p as f64).round() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MvmrError::Argument(m));
        if self.k < 1 || self.p <= self.k {
            return bad(format!("need p > K >= 1 (p = {}, K = {})", self.p, self.k));
        }
        if self.n < 3 {
            return bad(format!("sample size must be at least 3, got {}", self.n));
        }
        if self.theta.len() != self.k {
            return bad(format!("theta has {} values for K = {}", self.theta.len(), self.k));
        }
        if self.gamma_x.len() != self.k {
            return bad(format!("gamma_x has {} values for K = {}", self.gamma_x.len(), self.k));
        }
        if !(self.maf > 0.0 && self.maf < 1.0) {
            return bad(format!("maf must lie in (0, 1), got {}", self.maf));
        }
        if !(self.rho_x.abs() < 1.0) {
            return bad(format!("rho_x must satisfy |rho_x| < 1, got {}", self.rho_x));
        }
        if self.k > 1 && self.rho_x <= -1.0 / (self.k as f64 - 1.0) {
            return bad(format!("rho_x = {} gives a non-positive-definite error covariance", self.rho_x));
        }
        if !(0.0..1.0).contains(&self.prop_invalid) {
            return bad(format!("prop_invalid must lie in [0, 1), got {}", self.prop_invalid));
        }
        if !(self.beta_x_low <= self.beta_x_high) || !(self.delta_low <= self.delta_high) {
            return bad("uniform bounds must satisfy low <= high".into());
        }
        if !(self.alpha_sd >= 0.0) || !(self.noise_sd >= 0.0) {
            return bad("standard deviations must be non-negative".into());
        }
        if self.n_reps < 1 {
            return bad("n_reps must be at least 1".into());
        }
        let finite = [
            self.theta0_y,
            self.beta_x0,
            self.gamma_y,
            self.beta_x_low,
            self.beta_x_high,
            self.alpha_mean,
            self.alpha_sd,
            self.delta_low,
            self.delta_high,
            self.noise_sd,
        ];
        if finite.iter().chain(&self.theta).chain(&self.gamma_x).any(|v| !v.is_finite()) {
            return bad("non-finite configuration value".into());
        }
        Ok(())
    }

    /// Flat `key = value` text; vectors are comma-separated.
    pub fn to_kv_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("p", self.p.to_string());
        put("k", self.k.to_string());
        put("n", self.n.to_string());
        put("theta", list(&self.theta));
        put("theta0_y", self.theta0_y.to_string());
        put("beta_x0", self.beta_x0.to_string());
        put("gamma_x", list(&self.gamma_x));
        put("gamma_y", self.gamma_y.to_string());
        put("beta_x_low", self.beta_x_low.to_string());
        put("beta_x_high", self.beta_x_high.to_string());
        put("maf", self.maf.to_string());
        put("prop_invalid", self.prop_invalid.to_string());
        put("pleiotropy", self.pleiotropy.key().to_string());
        put("alpha_mean", self.alpha_mean.to_string());
        put("alpha_sd", self.alpha_sd.to_string());
        put("delta_low", self.delta_low.to_string());
        put("delta_high", self.delta_high.to_string());
        put("rho_x", self.rho_x.to_string());
        put("noise_sd", self.noise_sd.to_string());
        put("design", self.design.key().to_string());
        put("n_reps", self.n_reps.to_string());
        put("seed", self.seed.to_string());
        put("redraw_parameters", self.redraw_parameters.to_string());
        s
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are skipped; unknown keys are errors. The result is validated.
    pub fn apply_kv(mut self, text: &str) -> Result<Self> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = lineno + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| MvmrError::Parse {
                row,
                column: "line".into(),
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let perr = |m: String| MvmrError::Parse { row, column: key.to_string(), message: m };
            let num = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("`{v}`: {e}")));
            let int = |v: &str| v.parse::<u64>().map_err(|e| perr(format!("`{v}`: {e}")));
            let list = |v: &str| v.split(',').map(|x| num(x.trim())).collect::<Result<Vec<f64>>>();
            match key {
                "p" => self.p = int(value)? as usize,
                "k" => self.k = int(value)? as usize,
                "n" => self.n = int(value)? as usize,
                "theta" => self.theta = list(value)?,
                "theta0_y" => self.theta0_y = num(value)?,
                "beta_x0" => self.beta_x0 = num(value)?,
                "gamma_x" => self.gamma_x = list(value)?,
                "gamma_y" => self.gamma_y = num(value)?,
                "beta_x_low" => self.beta_x_low = num(value)?,
                "beta_x_high" => self.beta_x_high = num(value)?,
                "maf" => self.maf = num(value)?,
                "prop_invalid" => self.prop_invalid = num(value)?,
                "pleiotropy" => self.pleiotropy = value.parse().map_err(|e: MvmrError| perr(e.to_string()))?,
                "alpha_mean" => self.alpha_mean = num(value)?,
                "alpha_sd" => self.alpha_sd = num(value)?,
                "delta_low" => self.delta_low = num(value)?,
                "delta_high" => self.delta_high = num(value)?,
                "rho_x" => self.rho_x = num(value)?,
                "noise_sd" => self.noise_sd = num(value)?,
                "design" => self.design = value.parse().map_err(|e: MvmrError| perr(e.to_string()))?,
                "n_reps" => self.n_reps = int(value)? as usize,
                "seed" => self.seed = int(value)?,
                "redraw_parameters" => {
                    self.redraw_parameters = value.parse().map_err(|_| perr(format!("`{value}` is not true/false")))?
                }
                _ => return Err(perr("unknown key".into())),
            }
        }
        self.validate()?;
        Ok(self)
    }
}
