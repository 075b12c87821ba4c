//! Branch profile construction: exponential and uniform intensity profiles,
//! explicit lists, and the jitter that keeps means pairwise distinct.

use crate::closed_form_stats::BranchProfile;
use crate::error::{Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdpKind {
    Exponential,
    Uniform,
    Explicit,
}

impl std::str::FromStr for PdpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exponential" => Ok(PdpKind::Exponential),
            "uniform" => Ok(PdpKind::Uniform),
            "explicit" => Ok(PdpKind::Explicit),
            other => Err(format!("unknown profile kind '{other}' (expected exponential, uniform or explicit)")),
        }
    }
}

impl std::fmt::Display for PdpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PdpKind::Exponential => "exponential",
            PdpKind::Uniform => "uniform",
            PdpKind::Explicit => "explicit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdpSpec {
    pub kind: PdpKind,
    /// mean SNR of the first path, linear
    pub gamma_bar: f64,
    pub delta: f64,
    pub values: Option<Vec<f64>>,
}

impl PdpSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_bar.is_finite() && self.gamma_bar > 0.0) {
            return Err(Error::Domain(format!("gamma_bar must be positive, got {}", self.gamma_bar)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Domain(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.kind == PdpKind::Explicit {
            match &self.values {
                None => return Err(Error::Domain("explicit profile needs values".into())),
                Some(v) if v.iter().any(|g| !(g.is_finite() && *g > 0.0)) => {
                    return Err(Error::Domain("explicit profile values must be positive".into()))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Profile for `n` paths of base station `bs_id` (before jitter).
    pub fn build(&self, n: usize, bs_id: usize) -> Result<BranchProfile> {
        self.validate()?;
        let gammas = match self.kind {
            PdpKind::Exponential => exponential_mip(self.gamma_bar, self.delta, n).gammas,
            PdpKind::Uniform => vec![self.gamma_bar; n],
            PdpKind::Explicit => {
                let v = self.values.clone().unwrap_or_default();
                if v.len() != n {
                    return Err(Error::Domain(format!("explicit profile has {} values, expected {n}", v.len())));
                }
                v
            }
        };
        BranchProfile::new(gammas, bs_id)
    }
}

/// `γ̄_i = γ̄ · e^{-δ (i - 1)}` for `i = 1..=n`.
pub fn exponential_mip(gamma_bar: f64, delta: f64, n: usize) -> BranchProfile {
    let gammas = (0..n).map(|i| gamma_bar * (-delta * i as f64).exp()).collect();
    BranchProfile { gammas, bs_id: 1 }
}

/// Spread clusters of nearly equal means apart.
///
/// Means are visited in ascending order. A mean that lands below the next free
/// slot of the current cluster (plus half a step) joins the cluster and is
/// moved to `base · (1 + k ε)`, `k` counting members from zero. Otherwise it
/// starts a new cluster and keeps its value. Ties keep their original order.
pub fn apply_distinctness_jitter(profile: &BranchProfile, rel_epsilon: f64) -> BranchProfile {
    let g = &profile.gammas;
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[a].total_cmp(&g[b]));
    let mut out = g.clone();
    let mut base = f64::NAN;
    let mut k = 0usize;
    for &i in &order {
        let v = g[i];
        if k > 0 && v < base * (1.0 + (k as f64 + 0.5) * rel_epsilon) {
            out[i] = base * (1.0 + k as f64 * rel_epsilon);
            k += 1;
        } else {
            base = v;
            k = 1;
        }
    }
    BranchProfile { gammas: out, bs_id: profile.bs_id }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_decay_is_flat() {
        assert_eq!(exponential_mip(3.0, 0.0, 4).gammas, vec![3.0; 4]);
    }

    #[test]
    fn halving_profile() {
        let p = exponential_mip(1.0, std::f64::consts::LN_2, 3);
        for (a, b) in p.gammas.iter().zip([1.0, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn neighbour_ratio() {
        let p = exponential_mip(2.0, 0.5, 5);
        for w in p.gammas.windows(2) {
            assert!((w[1] / w[0] - (-0.5f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn jitter_all_equal() {
        let p = BranchProfile::new(vec![1.0, 1.0, 1.0], 1).unwrap();
        let j = apply_distinctness_jitter(&p, 1e-9);
        assert_eq!(j.gammas, vec![1.0, 1.0 + 1e-9, 1.0 + 2e-9]);
    }

    #[test]
    fn jitter_leaves_distinct_profile() {
        let p = exponential_mip(1.0, 0.5, 5);
        assert_eq!(apply_distinctness_jitter(&p, 1e-9), p);
    }

    #[test]
    fn jitter_handles_neighbouring_cluster() {
        // The third value would collide with the second jittered slot.
        let p = BranchProfile::new(vec![1.0, 1.0, 1.0 + 1e-9, 5.0], 2).unwrap();
        let j = apply_distinctness_jitter(&p, 1e-9);
        assert!(j.min_relative_separation() > 0.9e-9);
        assert_eq!(j.gammas[3], 5.0);
        assert_eq!(j.bs_id, 2);
    }

    #[test]
    fn build_checks() {
        let spec = PdpSpec { kind: PdpKind::Explicit, gamma_bar: 1.0, delta: 0.0, values: Some(vec![1.0, 2.0]) };
        assert!(spec.build(3, 1).is_err());
        assert_eq!(spec.build(2, 1).unwrap().gammas, vec![1.0, 2.0]);
        let bad = PdpSpec { kind: PdpKind::Exponential, gamma_bar: -1.0, delta: 0.0, values: None };
        assert!(bad.build(3, 1).is_err());
        assert_eq!("uniform".parse::<PdpKind>().unwrap(), PdpKind::Uniform);
    }
}
