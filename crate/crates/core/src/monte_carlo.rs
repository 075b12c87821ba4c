//! Direct simulation of the replacement scheme, used as the reference for
//! every closed form.
//!
//! The generator is ChaCha8 (`rand_chacha`). Samples are produced in blocks
//! of [`BLOCK`] slots; block `b` and base station `n` draw from stream
//! `(b << 16) | n` of the seeded generator, so the output does not depend on
//! how blocks are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form_stats::BranchProfile;
use crate::error::{Error, Result};
use crate::outage::ShoConfig;

pub const BLOCK: usize = 1 << 14;

pub const MIN_OUTAGE_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_count(hits: u64, n_samples: u64, seed: u64) -> Self {
        let value = if n_samples == 0 { 0.0 } else { hits as f64 / n_samples as f64 };
        let std_error = if n_samples == 0 { 0.0 } else { (value * (1.0 - value) / n_samples as f64).sqrt() };
        McEstimate { value, std_error, n_samples, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurve {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    /// zero for closed-form curves
    pub std_errors: Vec<f64>,
    pub source: Source,
}

/// Unordered per-path SNRs of every base station in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDraw {
    pub paths: Vec<Vec<f64>>,
}

/// Exponential variate with mean `mean` by inverse transform.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (1.0 - u).ln()
}

fn fill_profile<R: Rng + ?Sized>(rng: &mut R, profile: &BranchProfile, out: &mut [f64]) {
    for (slot, &g) in out.iter_mut().zip(&profile.gammas) {
        *slot = exponential(rng, g);
    }
}

/// Draw one slot, base stations in order, from a single generator.
pub fn sample_slot<R: Rng + ?Sized>(profiles: &[BranchProfile], cfg: &ShoConfig, rng: &mut R) -> SlotDraw {
    debug_assert_eq!(profiles.len(), cfg.l);
    let paths = profiles
        .iter()
        .map(|p| {
            let mut v = vec![0.0; p.len()];
            fill_profile(rng, p, &mut v);
            v
        })
        .collect();
    SlotDraw { paths }
}

fn sort_desc(v: &mut [f64]) {
    v.sort_unstable_by(|a, b| b.total_cmp(a));
}

/// `(Y, W_1)` of a sorted (descending) list: sums over `[0, p)` and `[p, p + s)`.
fn blocks(sorted: &[f64], p: usize, s: usize) -> (f64, f64) {
    (sorted[..p].iter().sum(), sorted[p..p + s].iter().sum())
}

fn final_snr_sorted(sorted: &[Vec<f64>], cfg: &ShoConfig) -> f64 {
    let p = cfg.n_c - cfg.n_s;
    let (y, w1) = blocks(&sorted[0], p, cfg.n_s);
    if y + w1 >= cfg.gamma_t {
        return y + w1;
    }
    let mut best = w1;
    for other in &sorted[1..] {
        let w: f64 = other[..cfg.n_s].iter().sum();
        best = best.max(w);
    }
    y + best
}

/// Final combined SNR of one slot under full-scanning replacement.
pub fn combine_final_snr(draw: &SlotDraw, cfg: &ShoConfig) -> f64 {
    let mut sorted = draw.paths.clone();
    for v in sorted.iter_mut() {
        sort_desc(v);
    }
    final_snr_sorted(&sorted, cfg)
}

fn block_rngs(seed: u64, block: usize, count: usize) -> Vec<ChaCha8Rng> {
    (0..count)
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((block as u64) << 16) | n as u64);
            rng
        })
        .collect()
}

fn for_blocks<T, F>(n_samples: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> Vec<T> + Sync,
{
    let n = n_samples as usize;
    let n_blocks = n.div_ceil(BLOCK);
    let parts: Vec<Vec<T>> = (0..n_blocks).into_par_iter().map(|b| f(b, BLOCK.min(n - b * BLOCK))).collect();
    parts.into_iter().flatten().collect()
}

/// `n_samples` final SNRs in a fixed order.
pub fn simulate_final_snr(cfg: &ShoConfig, profiles: &[BranchProfile], n_samples: u64, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    cfg.check_profiles(profiles)?;
    Ok(for_blocks(n_samples, |b, len| {
        let mut rngs = block_rngs(seed, b, profiles.len());
        let mut bufs: Vec<Vec<f64>> = profiles.iter().map(|p| vec![0.0; p.len()]).collect();
        (0..len)
            .map(|_| {
                for ((rng, p), buf) in rngs.iter_mut().zip(profiles).zip(bufs.iter_mut()) {
                    fill_profile(rng, p, buf);
                    sort_desc(buf);
                }
                final_snr_sorted(&bufs, cfg)
            })
            .collect()
    }))
}

/// Count-based estimates of `Pr[γ_F < x]`, one shared sample set for the
/// whole grid.
pub fn estimate_outage_curve(
    x_grid: &[f64],
    cfg: &ShoConfig,
    profiles: &[BranchProfile],
    n_samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    if n_samples < MIN_OUTAGE_SAMPLES {
        return Err(Error::Domain(format!("need at least {MIN_OUTAGE_SAMPLES} samples, got {n_samples}")));
    }
    let mut snr = simulate_final_snr(cfg, profiles, n_samples, seed)?;
    snr.sort_unstable_by(f64::total_cmp);
    Ok(x_grid
        .iter()
        .map(|&x| McEstimate::from_count(snr.partition_point(|&v| v < x) as u64, n_samples, seed))
        .collect())
}

/// Samples of `(Y, W_1)`: sums of the `p` strongest paths and of the next `s`.
pub fn sample_block_sums(profile: &BranchProfile, p: usize, s: usize, n_samples: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if p + s > profile.len() {
        return Err(Error::Domain(format!("blocks {p} + {s} exceed {} paths", profile.len())));
    }
    Ok(for_blocks(n_samples, |b, len| {
        let mut rng = block_rngs(seed, b, 1).pop().unwrap();
        let mut buf = vec![0.0; profile.len()];
        (0..len)
            .map(|_| {
                fill_profile(&mut rng, profile, &mut buf);
                sort_desc(&mut buf);
                blocks(&buf, p, s)
            })
            .collect()
    }))
}

/// Samples of the sum of the `m` strongest paths.
pub fn sample_top_sum(profile: &BranchProfile, m: usize, n_samples: u64, seed: u64) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Domain("need at least one combined path".into()));
    }
    Ok(sample_block_sums(profile, m, 0, n_samples, seed)?.into_iter().map(|(y, _)| y).collect())
}

/// Empirical CDF `Pr[X < x]` with binomial standard errors.
pub fn empirical_cdf(samples: &[f64], x_grid: &[f64]) -> ProbabilityCurve {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let est: Vec<McEstimate> =
        x_grid.iter().map(|&x| McEstimate::from_count(sorted.partition_point(|&v| v < x) as u64, n, 0)).collect();
    ProbabilityCurve {
        x: x_grid.to_vec(),
        values: est.iter().map(|e| e.value).collect(),
        std_errors: est.iter().map(|e| e.std_error).collect(),
        source: Source::MonteCarlo,
    }
}

/// Rectangular bins given by their edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Bins2d {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinDensity {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub hits: u64,
    pub density: f64,
    pub std_error: f64,
    /// false when no sample fell into the bin
    pub observed: bool,
}

fn locate(edges: &[f64], v: f64) -> Option<usize> {
    if edges.len() < 2 || !(v >= edges[0] && v < edges[edges.len() - 1]) {
        return None;
    }
    Some(edges.partition_point(|&e| e <= v) - 1)
}

/// Histogram density estimate, bins in row-major order (x outer).
pub fn empirical_density_2d(samples: &[(f64, f64)], bins: &Bins2d) -> Vec<BinDensity> {
    let nx = bins.x_edges.len().saturating_sub(1);
    let ny = bins.y_edges.len().saturating_sub(1);
    let mut counts = vec![0u64; nx * ny];
    for &(x, y) in samples {
        if let (Some(i), Some(j)) = (locate(&bins.x_edges, x), locate(&bins.y_edges, y)) {
            counts[i * ny + j] += 1;
        }
    }
    let n = samples.len() as f64;
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let (x_lo, x_hi) = (bins.x_edges[i], bins.x_edges[i + 1]);
            let (y_lo, y_hi) = (bins.y_edges[j], bins.y_edges[j + 1]);
            let area = (x_hi - x_lo) * (y_hi - y_lo);
            let hits = counts[i * ny + j];
            let p = if n > 0.0 { hits as f64 / n } else { 0.0 };
            let se = if n > 0.0 { (p * (1.0 - p) / n).sqrt() } else { 0.0 };
            out.push(BinDensity {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
                hits,
                density: p / area,
                std_error: se / area,
                observed: hits > 0,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdp::exponential_mip;

    fn cfg() -> ShoConfig {
        ShoConfig { l: 3, n_paths: vec![4, 4, 4], n_c: 3, n_s: 2, gamma_t: 2.0 }
    }

    #[test]
    fn first_branch_returns_serving_sum() {
        let draw = SlotDraw { paths: vec![vec![1.0, 0.2, 0.9, 0.5], vec![5.0, 5.0, 0.0, 0.0], vec![0.0; 4]] };
        // Y = 1.0, W_1 = 0.9 + 0.5 = 1.4, Y + W_1 = 2.4 >= 2
        assert_eq!(combine_final_snr(&draw, &cfg()), 2.4);
    }

    #[test]
    fn second_branch_takes_best_target() {
        let draw = SlotDraw { paths: vec![vec![1.0, 0.2, 0.3, 0.1], vec![0.4, 0.1, 0.0, 0.2], vec![0.3, 2.0, 0.5, 0.0]] };
        // Y = 1.0, W_1 = 0.5 < 1; W_2 = 0.6, W_3 = 2.5
        assert_eq!(combine_final_snr(&draw, &cfg()), 3.5);
    }

    #[test]
    fn second_branch_keeps_own_block_when_best() {
        let draw = SlotDraw { paths: vec![vec![1.0, 0.4, 0.3, 0.1], vec![0.1; 4], vec![0.2; 4]] };
        assert!((combine_final_snr(&draw, &cfg()) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn sample_slot_is_deterministic() {
        let c = cfg();
        let profiles: Vec<_> = (0..3).map(|_| exponential_mip(1.0, 0.5, 4)).collect();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            assert_eq!(sample_slot(&profiles, &c, &mut a), sample_slot(&profiles, &c, &mut b));
        }
    }

    #[test]
    fn outage_curve_edges() {
        let c = cfg();
        let profiles: Vec<_> = (0..3).map(|_| exponential_mip(1.0, 0.5, 4)).collect();
        let est = estimate_outage_curve(&[0.0, 1e4], &c, &profiles, 20_000, 3).unwrap();
        assert_eq!(est[0].value, 0.0);
        assert_eq!(est[0].std_error, 0.0);
        assert_eq!(est[1].value, 1.0);
        assert!(estimate_outage_curve(&[1.0], &c, &profiles, 100, 3).is_err());
    }

    #[test]
    fn support_holds_samplewise() {
        let p = exponential_mip(1.0, 0.3, 5);
        for (y, w) in sample_block_sums(&p, 2, 2, 20_000, 5).unwrap() {
            assert!(w / 2.0 <= y / 2.0);
        }
    }

    #[test]
    fn uniform_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let grid = [0.1, 0.25, 0.5, 0.9];
        let c = empirical_cdf(&xs, &grid);
        for i in 0..grid.len() {
            assert!((c.values[i] - grid[i]).abs() <= 3.0 * c.std_errors[i]);
        }
    }

    #[test]
    fn density_bins() {
        let samples = vec![(0.5, 0.5), (0.5, 1.5), (1.5, 1.5), (3.0, 0.0)];
        let bins = Bins2d { x_edges: vec![0.0, 1.0, 2.0], y_edges: vec![0.0, 1.0, 2.0] };
        let d = empirical_density_2d(&samples, &bins);
        assert_eq!(d.len(), 4);
        assert_eq!(d[0].hits, 1);
        assert_eq!(d[2].hits, 0);
        assert!(!d[2].observed && d[2].density == 0.0 && d[2].std_error == 0.0);
        assert!((d[0].density - 0.25).abs() < 1e-15);
    }
}
