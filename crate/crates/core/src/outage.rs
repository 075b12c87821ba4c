//! Outage CDF of the final combined SNR under full-scanning finger
//! replacement.
//!
//! With `Y` the top `N_c - N_s` serving paths, `W_1` the next `N_s`, and `W_n`
//! (`n ≥ 2`) the top `N_s` paths of target base station `n`, the final SNR is
//! `Y + W_1` when that reaches `γ_T` and `Y + max_n W_n` otherwise. Writing
//! `P(x) = Pr[Y + max_n W_n < x]`:
//!
//! * `x < γ_T`: `Pr[γ_F < x] = P(x)`;
//! * `x ≥ γ_T`: `Pr[γ_F < x] = P(γ_T) + Pr[γ_T ≤ Y + W_1 < x]
//!   + Pr[Y + W_1 < γ_T ≤ Y + max_n W_n < x]`.

use std::sync::OnceLock;

use crate::closed_form_stats::{BranchProfile, JointPdf, TopSumCdf};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, QuadratureSettings, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct ShoConfig {
    /// number of base stations (serving plus targets)
    pub l: usize,
    pub n_paths: Vec<usize>,
    pub n_c: usize,
    pub n_s: usize,
    /// target SNR, linear
    pub gamma_t: f64,
}

impl ShoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::Domain(format!("need at least 2 base stations, got {}", self.l)));
        }
        if self.n_paths.len() != self.l {
            return Err(Error::Domain(format!("{} path counts given for {} base stations", self.n_paths.len(), self.l)));
        }
        let min_n = *self.n_paths.iter().min().unwrap();
        if !(1 <= self.n_s && self.n_s < self.n_c && self.n_c < min_n) {
            return Err(Error::Domain(format!(
                "need 1 <= N_s < N_c < min N_n, got N_s={}, N_c={}, min N_n={min_n}",
                self.n_s, self.n_c
            )));
        }
        if !(self.gamma_t.is_finite() && self.gamma_t >= 0.0) {
            return Err(Error::Domain(format!("gamma_T must be finite and >= 0, got {}", self.gamma_t)));
        }
        Ok(())
    }

    pub fn check_profiles(&self, profiles: &[BranchProfile]) -> Result<()> {
        if profiles.len() != self.l {
            return Err(Error::Domain(format!("{} profiles for {} base stations", profiles.len(), self.l)));
        }
        for (p, &n) in profiles.iter().zip(&self.n_paths) {
            if p.len() != n {
                return Err(Error::Domain(format!("base station {} has {} paths, expected {n}", p.bs_id, p.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    BelowTarget,
    AboveTarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutagePoint {
    pub x: f64,
    pub probability: f64,
    pub branch: Branch,
}

/// Cached closed-form objects for one configuration.
#[derive(Debug)]
pub struct OutageModel {
    cfg: ShoConfig,
    settings: QuadratureSettings,
    serving: TopSumCdf,
    joint: JointPdf,
    targets: Vec<TopSumCdf>,
    below_at_target: OnceLock<f64>,
}

impl OutageModel {
    /// `profiles[0]` is the serving base station. Profiles must already be
    /// pairwise distinct (see [`crate::pdp::apply_distinctness_jitter`]).
    pub fn new(cfg: &ShoConfig, profiles: &[BranchProfile], settings: QuadratureSettings) -> Result<Self> {
        cfg.validate()?;
        cfg.check_profiles(profiles)?;
        settings.validate()?;
        let serving = TopSumCdf::new(&profiles[0], cfg.n_c)?;
        let joint = JointPdf::new(&profiles[0], cfg.n_c, cfg.n_s)?;
        let targets = profiles[1..].iter().map(|p| TopSumCdf::new(p, cfg.n_s)).collect::<Result<Vec<_>>>()?;
        Ok(OutageModel { cfg: cfg.clone(), settings, serving, joint, targets, below_at_target: OnceLock::new() })
    }

    pub fn config(&self) -> &ShoConfig {
        &self.cfg
    }

    pub fn serving_cdf(&self, x: f64) -> f64 {
        self.serving.cdf(x)
    }

    fn targets_cdf(&self, v: f64) -> f64 {
        if !(v > 0.0) {
            return 0.0;
        }
        self.targets.iter().map(|t| t.cdf(v)).product()
    }

    // Integration region for Pr[(Y, W_1) ∈ {y + w < top}] with the support
    // and kink lines of the joint density.
    fn region(&self, top: f64) -> Region {
        let p = (self.cfg.n_c - self.cfg.n_s) as f64;
        let s = self.cfg.n_s;
        Region {
            y_max: top,
            g0: top,
            g1: -1.0,
            support_slope: Some(s as f64 / p),
            break_slopes: (1..s).map(|l| l as f64 / p).collect(),
        }
    }

    /// `Pr[γ_T ≤ Y + W_1 < x]`.
    pub fn prob_band_gsc(&self, gamma_t: f64, x: f64) -> Result<f64> {
        if x < gamma_t {
            return Err(Error::Domain(format!("band needs x >= gamma_T, got x={x}, gamma_T={gamma_t}")));
        }
        Ok((self.serving.cdf(x) - self.serving.cdf(gamma_t)).clamp(0.0, 1.0))
    }

    /// `Pr[Y + max{W_1, …, W_L} < x]`.
    pub fn prob_final_below(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Ok(0.0);
        }
        let est = integrate_2d(&self.region(x), &self.settings, |y| {
            let g = self.targets_cdf(x - y);
            (g > 0.0).then_some(move |w| g * self.joint.density(y, w))
        })?;
        Ok(est.value.clamp(0.0, 1.0))
    }

    /// `Pr[Y + W_1 < γ_T ≤ Y + max{W_1, …, W_L} < x]`.
    pub fn prob_two_way_band(&self, gamma_t: f64, x: f64) -> Result<f64> {
        if x < gamma_t {
            return Err(Error::Domain(format!("band needs x >= gamma_T, got x={x}, gamma_T={gamma_t}")));
        }
        if !(gamma_t > 0.0) || x == gamma_t {
            return Ok(0.0);
        }
        let est = integrate_2d(&self.region(gamma_t), &self.settings, |y| {
            let g = self.targets_cdf(x - y) - self.targets_cdf(gamma_t - y);
            (g > 0.0).then_some(move |w| g * self.joint.density(y, w))
        })?;
        Ok(est.value.clamp(0.0, 1.0))
    }

    /// `Pr[γ_F < x]`.
    pub fn outage_cdf(&self, x: f64) -> Result<OutagePoint> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("threshold must be >= 0, got {x}")));
        }
        let gt = self.cfg.gamma_t;
        if x < gt {
            return Ok(OutagePoint { x, probability: self.prob_final_below(x)?, branch: Branch::BelowTarget });
        }
        let below = match self.below_at_target.get() {
            Some(v) => *v,
            None => {
                let v = self.prob_final_below(gt)?;
                *self.below_at_target.get_or_init(|| v)
            }
        };
        let total = below + self.prob_band_gsc(gt, x)? + self.prob_two_way_band(gt, x)?;
        Ok(OutagePoint { x, probability: total.clamp(0.0, 1.0), branch: Branch::AboveTarget })
    }
}

pub fn prob_band_gsc(gamma_t: f64, x: f64, profile: &BranchProfile, cfg: &ShoConfig) -> Result<f64> {
    let serving = TopSumCdf::new(profile, cfg.n_c)?;
    if x < gamma_t {
        return Err(Error::Domain(format!("band needs x >= gamma_T, got x={x}, gamma_T={gamma_t}")));
    }
    Ok((serving.cdf(x) - serving.cdf(gamma_t)).clamp(0.0, 1.0))
}

pub fn prob_final_below(x: f64, cfg: &ShoConfig, profiles: &[BranchProfile]) -> Result<f64> {
    OutageModel::new(cfg, profiles, QuadratureSettings::default())?.prob_final_below(x)
}

pub fn prob_two_way_band(gamma_t: f64, x: f64, cfg: &ShoConfig, profiles: &[BranchProfile]) -> Result<f64> {
    OutageModel::new(cfg, profiles, QuadratureSettings::default())?.prob_two_way_band(gamma_t, x)
}

pub fn outage_cdf(x: f64, cfg: &ShoConfig, profiles: &[BranchProfile]) -> Result<OutagePoint> {
    OutageModel::new(cfg, profiles, QuadratureSettings::default())?.outage_cdf(x)
}
