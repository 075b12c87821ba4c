//! Closed-form statistics of partial sums of ordered exponential variates.
//!
//! Paths within a base station have independent exponential SNRs with means
//! `γ̄_i` (rates `λ_i = 1/γ̄_i`). Sorting them as `u_1 ≥ u_2 ≥ …` gives:
//!
//! * the GSC output `Σ_{i≤m} u_i` ([`GscSum`], [`gsc_cdf`], [`gsc_pdf`]),
//! * the same CDF through a confluent-safe divided-difference route
//!   ([`BestSumCdf`], [`best_ns_sum_cdf`]),
//! * the joint density of `Y = Σ_{i≤p} u_i` and `W_1 = Σ_{p<i≤N_c} u_i`
//!   ([`JointPdf`], [`joint_pdf_y_w1`]).
//!
//! All series are enumerated once per profile and cached; evaluation only
//! walks the cached term lists.

use crate::combinatorics::{binomial, check_capacity, combinations, density_weights};
use crate::error::{Error, Result};
use crate::kernel::{exp_divided_difference, exp_integral, exprel, pairwise_sum};
use crate::quadrature::{integrate_1d, integrate_1d_try, QuadratureSettings};

/// Per-path average SNRs (linear) of one base station.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProfile {
    pub gammas: Vec<f64>,
    pub bs_id: usize,
}

impl BranchProfile {
    pub fn new(gammas: Vec<f64>, bs_id: usize) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Domain("profile needs at least one path".into()));
        }
        if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Domain(format!("average SNR {g} is not finite and positive")));
        }
        Ok(BranchProfile { gammas, bs_id })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.gammas.iter().map(|g| 1.0 / g).collect()
    }

    /// Smallest pairwise `|γ̄_i - γ̄_j| / max(γ̄_i, γ̄_j)`; infinite for one path.
    pub fn min_relative_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.gammas.len() {
            for j in i + 1..self.gammas.len() {
                let (a, b) = (self.gammas[i], self.gammas[j]);
                best = best.min((a - b).abs() / a.max(b));
            }
        }
        best
    }
}

/// `n_combine` strongest out of `n_total` paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GscSpec {
    pub n_total: usize,
    pub n_combine: usize,
}

impl GscSpec {
    pub fn new(n_total: usize, n_combine: usize) -> Result<Self> {
        if n_combine == 0 || n_combine > n_total {
            return Err(Error::Domain(format!("need 1 <= n_combine <= n_total, got {n_combine} of {n_total}")));
        }
        Ok(GscSpec { n_total, n_combine })
    }
}

fn check_spec(profile: &BranchProfile, spec: GscSpec) -> Result<()> {
    GscSpec::new(spec.n_total, spec.n_combine)?;
    if spec.n_total != profile.len() {
        return Err(Error::Domain(format!("spec has {} paths but profile has {}", spec.n_total, profile.len())));
    }
    Ok(())
}

/// `∫_c^d ∫_a^b e^{e x} e^{f y} dx dy`. Zero rates fall back to the
/// linear-measure limit.
pub fn helper_i(e: f64, a: f64, b: f64, f: f64, c: f64, d: f64) -> f64 {
    exp_integral(e, a, b) * exp_integral(f, c, d)
}

/// `∫_c^d e^{f y} ∫_a^{b0 - bslope·y} e^{e x} dx dy`.
///
/// The closed form is
/// `(1/e) [ e^{e·b0} J(f - e·bslope) - e^{e·a} J(f) ]` with
/// `J(r) = ∫_c^d e^{r y} dy`. When `e` times the inner length is small the
/// bracket cancels, so the trapezoid is split into two triangles and each is
/// integrated exactly through a three-node divided difference of `exp`.
pub fn helper_i_prime(e: f64, a: f64, b0: f64, bslope: f64, f: f64, c: f64, d: f64) -> f64 {
    if c == d {
        return 0.0;
    }
    let uc = b0 - bslope * c;
    let ud = b0 - bslope * d;
    let spread = e.abs() * (uc - a).abs().max((ud - a).abs());
    if spread > 1.0 {
        let first = (e * b0).exp() * exp_integral(f - e * bslope, c, d);
        let second = (e * a).exp() * exp_integral(f, c, d);
        return (first - second) / e;
    }
    let p1 = (a, c);
    let p2 = (uc, c);
    let p3 = (ud, d);
    let p4 = (a, d);
    triangle_exp_integral(e, f, p1, p2, p3) + triangle_exp_integral(e, f, p1, p3, p4)
}

/// Oriented integral of `e^{e x + f y}` over a triangle:
/// `2 · signed area · exp[ℓ(v1), ℓ(v2), ℓ(v3)]`.
fn triangle_exp_integral(e: f64, f: f64, v1: (f64, f64), v2: (f64, f64), v3: (f64, f64)) -> f64 {
    let area2 = (v2.0 - v1.0) * (v3.1 - v1.1) - (v3.0 - v1.0) * (v2.1 - v1.1);
    if area2 == 0.0 {
        return 0.0;
    }
    let l = |v: (f64, f64)| e * v.0 + f * v.1;
    area2 * exp_divided_difference(&[l(v1), l(v2), l(v3)])
}

// Every product over a subset of paths is tracked by bit mask.
fn mask_sum(rates: &[f64], mask: u64) -> f64 {
    let mut s = 0.0;
    let mut m = mask;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        s += rates[j];
        m &= m - 1;
    }
    s
}

fn mask_of(items: &[usize]) -> u64 {
    items.iter().fold(0u64, |m, &i| m | 1 << i)
}

fn sign_of(mask: u64) -> f64 {
    if mask.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// All submasks of `mask`, in increasing numeric order.
fn submasks(mask: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(1 << mask.count_ones());
    let mut sub = 0u64;
    loop {
        out.push(sub);
        if sub == mask {
            break;
        }
        sub = (sub.wrapping_sub(mask)) & mask;
    }
    out
}

fn ids_of(items: &[usize]) -> Vec<usize> {
    items.iter().map(|i| i + 1).collect()
}

/// Largest tolerated `Σ_q |w_q| / λ_q` for hypoexponential weights. The sum is
/// 1 without cancellation; rounding in the partial-fraction sums grows by this
/// factor, so 1e10 keeps the noise near 1e-6.
pub const MAX_AMPLIFICATION: f64 = 1e10;

/// [`density_weights`] that refuses sets whose partial fractions would cancel
/// beyond [`MAX_AMPLIFICATION`], reporting the closest pair.
fn conditioned_weights(rates: &[f64], ids: &[usize]) -> Result<Vec<f64>> {
    let w = density_weights(rates, ids)?;
    let amplification: f64 = w.iter().zip(rates).map(|(w, l)| w.abs() / l).sum();
    if amplification > MAX_AMPLIFICATION {
        let mut worst = (0, 1, f64::INFINITY);
        for i in 0..rates.len() {
            for j in i + 1..rates.len() {
                let gap = (rates[i] - rates[j]).abs() / rates[i].max(rates[j]);
                if gap < worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        let mut indices = vec![ids[worst.0], ids[worst.1]];
        indices.sort_unstable();
        return Err(Error::Singularity { indices, gap: worst.2 });
    }
    Ok(w)
}

/// One partial-fraction term of the GSC series.
#[derive(Debug, Clone, Copy)]
struct GscTerm {
    weight: f64,
    c: f64,
    e: f64,
}

/// Sum of the `m` largest of `N` independent exponentials, with the series
/// built from partial-fraction coefficients.
///
/// The `m`-th largest path `i_m`, the set `S` of the `m - 1` paths above it and
/// a subset `T` of the paths below it index the terms. For `m ≥ 2` each term
/// contributes `w · K(c, e, x)` to the CDF, where `c = λ_q` for `q ∈ S`,
/// `e = (λ_{i_m} + Λ_S + Λ_T) / m`, and
/// `K(c, e, x) = ((1 - e^{-cx})/c - (1 - e^{-ex})/e) / (e - c)`.
#[derive(Debug, Clone)]
pub struct GscSum {
    spec: GscSpec,
    terms: Vec<GscTerm>,
}

impl GscSum {
    pub fn new(profile: &BranchProfile, spec: GscSpec) -> Result<Self> {
        check_spec(profile, spec)?;
        let n = spec.n_total;
        let m = spec.n_combine;
        let count = n as u128 * binomial(n - 1, m - 1) * (1u128 << (n - m)) * (m.max(2) - 1) as u128;
        check_capacity(count)?;
        let rates = profile.rates();
        let mut terms = Vec::with_capacity(count as usize);
        let all: Vec<usize> = (0..n).collect();
        for im in 0..n {
            let rest: Vec<usize> = all.iter().copied().filter(|&i| i != im).collect();
            for s in combinations(&rest, m - 1) {
                let below: Vec<usize> = rest.iter().copied().filter(|i| !s.contains(i)).collect();
                let s_rates: Vec<f64> = s.iter().map(|&i| rates[i]).collect();
                let weights = if m >= 2 { conditioned_weights(&s_rates, &ids_of(&s))? } else { Vec::new() };
                let base = rates[im] + s_rates.iter().sum::<f64>();
                for t in submasks(mask_of(&below)) {
                    let b = base + mask_sum(&rates, t);
                    let sg = sign_of(t) * rates[im];
                    if m == 1 {
                        terms.push(GscTerm { weight: sg, c: 0.0, e: b });
                        continue;
                    }
                    for (k, &q) in s.iter().enumerate() {
                        terms.push(GscTerm { weight: sg * weights[k] / m as f64, c: rates[q], e: b / m as f64 });
                    }
                }
            }
        }
        Ok(GscSum { spec, terms })
    }

    pub fn spec(&self) -> GscSpec {
        self.spec
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let parts: Vec<f64> = if self.spec.n_combine == 1 {
            self.terms.iter().map(|t| t.weight * x * exprel(-t.e * x)).collect()
        } else {
            self.terms.iter().map(|t| t.weight * kernel_k(t.c, t.e, x)).collect()
        };
        pairwise_sum(&parts).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if !(z >= 0.0) {
            return 0.0;
        }
        let parts: Vec<f64> = if self.spec.n_combine == 1 {
            self.terms.iter().map(|t| t.weight * (-t.e * z).exp()).collect()
        } else {
            self.terms.iter().map(|t| t.weight * z * exp_divided_difference(&[-t.c * z, -t.e * z])).collect()
        };
        pairwise_sum(&parts).max(0.0)
    }
}

// K(c, e, x) = x² exp[0, -cx, -ex]
fn kernel_k(c: f64, e: f64, x: f64) -> f64 {
    if ((e - c) * x).abs() > 0.5 {
        let g = |t: f64| x * exprel(-t * x);
        (g(c) - g(e)) / (e - c)
    } else {
        x * x * exp_divided_difference(&[0.0, -c * x, -e * x])
    }
}

/// Density of the sum of the `n_combine` strongest of `n_total` paths.
pub fn gsc_pdf(z: f64, profile: &BranchProfile, spec: GscSpec) -> Result<f64> {
    Ok(GscSum::new(profile, spec)?.pdf(z))
}

/// CDF of the sum of the `n_combine` strongest of `n_total` paths.
pub fn gsc_cdf(x: f64, profile: &BranchProfile, spec: GscSpec) -> Result<f64> {
    Ok(GscSum::new(profile, spec)?.cdf(x))
}

#[derive(Debug, Clone)]
struct DdTerm {
    weight: f64,
    rates: Vec<f64>,
}

/// CDF of the sum of the `m` strongest paths written as a single divided
/// difference per term:
///
/// `F(x) = (x^m / m) Σ λ_{i_m} ∏_S λ (-1)^{|T|} exp[0, -λ_S x, -(λ_{i_m} + Λ_S + Λ_T) x / m]`.
///
/// No partial fractions appear, so coincident means are fine.
#[derive(Debug, Clone)]
pub struct BestSumCdf {
    spec: GscSpec,
    terms: Vec<DdTerm>,
}

impl BestSumCdf {
    pub fn new(profile: &BranchProfile, spec: GscSpec) -> Result<Self> {
        check_spec(profile, spec)?;
        let n = spec.n_total;
        let m = spec.n_combine;
        check_capacity(n as u128 * binomial(n - 1, m - 1) * (1u128 << (n - m)))?;
        let rates = profile.rates();
        let all: Vec<usize> = (0..n).collect();
        let mut terms = Vec::new();
        for im in 0..n {
            let rest: Vec<usize> = all.iter().copied().filter(|&i| i != im).collect();
            for s in combinations(&rest, m - 1) {
                let below: Vec<usize> = rest.iter().copied().filter(|i| !s.contains(i)).collect();
                let s_rates: Vec<f64> = s.iter().map(|&i| rates[i]).collect();
                let prod: f64 = s_rates.iter().product();
                let base = rates[im] + s_rates.iter().sum::<f64>();
                for t in submasks(mask_of(&below)) {
                    let mut r = s_rates.clone();
                    r.push((base + mask_sum(&rates, t)) / m as f64);
                    terms.push(DdTerm { weight: sign_of(t) * rates[im] * prod, rates: r });
                }
            }
        }
        Ok(BestSumCdf { spec, terms })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let m = self.spec.n_combine;
        let mut nodes = vec![0.0; m + 1];
        let parts: Vec<f64> = self
            .terms
            .iter()
            .map(|t| {
                for (slot, r) in nodes[1..].iter_mut().zip(&t.rates) {
                    *slot = -r * x;
                }
                t.weight * exp_divided_difference(&nodes)
            })
            .collect();
        let scale = x.powi(m as i32) / m as f64;
        (scale * pairwise_sum(&parts)).clamp(0.0, 1.0)
    }
}

/// CDF of `W_n`, the sum of the `spec.n_combine` strongest paths.
pub fn best_ns_sum_cdf(x: f64, profile: &BranchProfile, spec: GscSpec) -> Result<f64> {
    Ok(BestSumCdf::new(profile, spec)?.cdf(x))
}

/// Mean path SNRs closer than this (relative) go to the divided-difference
/// route even when the partial fractions are still usable.
pub const CONFLUENT_SEPARATION: f64 = 1e-3;

/// CDF of the sum of the `m` strongest paths through whichever route suits
/// the profile: partial fractions when the means are well apart, divided
/// differences when some nearly coincide.
#[derive(Debug, Clone)]
pub enum TopSumCdf {
    PartialFraction(GscSum),
    DividedDifference(BestSumCdf),
}

impl TopSumCdf {
    pub fn new(profile: &BranchProfile, m: usize) -> Result<Self> {
        let spec = GscSpec::new(profile.len(), m)?;
        if m > 1 && profile.min_relative_separation() < CONFLUENT_SEPARATION {
            return Ok(TopSumCdf::DividedDifference(BestSumCdf::new(profile, spec)?));
        }
        match GscSum::new(profile, spec) {
            Ok(g) => Ok(TopSumCdf::PartialFraction(g)),
            Err(Error::Singularity { .. }) => Ok(TopSumCdf::DividedDifference(BestSumCdf::new(profile, spec)?)),
            Err(e) => Err(e),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TopSumCdf::PartialFraction(g) => g.cdf(x),
            TopSumCdf::DividedDifference(b) => b.cdf(x),
        }
    }
}

/// Rate aggregates of one term of the joint density. The primed variants add
/// the inclusion–exclusion subsets: `'` the paths below position `N_c`,
/// `''` the paths of the lower block that exceed their block bound, `'''`
/// both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermConstants {
    pub alpha: f64,
    pub alpha_p: f64,
    pub alpha_pp: f64,
    pub alpha_ppp: f64,
    pub beta: f64,
    pub beta_p: f64,
}

#[derive(Debug, Clone, Copy)]
struct JointTerm {
    weight: f64,
    /// rate of the upper-block partial-fraction pole (0 when the upper block is one path)
    lam_h: f64,
    lam_k: f64,
    l: usize,
    k: TermConstants,
}

#[derive(Debug, Clone, Copy)]
struct SingleTerm {
    weight: f64,
    /// exponent rate on y
    ry: f64,
    /// index into the cached rate sets of the paths strictly above the
    /// lower block
    group: usize,
}

#[derive(Debug, Clone)]
enum JointKind {
    /// both blocks hold at least two paths, or the upper block holds one
    Blocks(Vec<JointTerm>),
    /// lower block is a single path
    SingleLower { terms: Vec<SingleTerm>, groups: Vec<Vec<f64>> },
}

/// Joint density of `Y` (sum of the `N_c - N_s` strongest paths) and `W_1`
/// (sum of the next `N_s`).
///
/// Terms are indexed by the weakest path `a` of the upper block and the set
/// `S1` above it, the weakest path `b` of the lower block and the set `S2`
/// between, a subset `T` of the paths below `b`, and a subset `U ⊆ S2`
/// (`l = |U|`) from the inclusion–exclusion on the upper bound of `S2`.
#[derive(Debug, Clone)]
pub struct JointPdf {
    p: usize,
    s: usize,
    kind: JointKind,
}

impl JointPdf {
    pub fn new(profile: &BranchProfile, n_c: usize, n_s: usize) -> Result<Self> {
        let n = profile.len();
        if !(n_s >= 1 && n_s < n_c && n_c <= n) {
            return Err(Error::Domain(format!("need 1 <= N_s < N_c <= N, got N_s={n_s}, N_c={n_c}, N={n}")));
        }
        if n > 62 {
            return Err(Error::Capacity { terms: u128::MAX, limit: crate::combinatorics::TERM_LIMIT });
        }
        let p = n_c - n_s;
        let s = n_s;
        let rates = profile.rates();
        let all: Vec<usize> = (0..n).collect();
        if s == 1 {
            let m = n_c;
            let count = n as u128 * binomial(n - 1, m - 1) * (1u128 << (n - m)) * (m - 1) as u128;
            check_capacity(count)?;
            let mut terms = Vec::new();
            let mut groups = Vec::new();
            for a in 0..n {
                let rest: Vec<usize> = all.iter().copied().filter(|&i| i != a).collect();
                for set in combinations(&rest, m - 1) {
                    let below: Vec<usize> = rest.iter().copied().filter(|i| !set.contains(i)).collect();
                    let s_rates: Vec<f64> = set.iter().map(|&i| rates[i]).collect();
                    let base = rates[a] + s_rates.iter().sum::<f64>();
                    let group = groups.len();
                    groups.push(s_rates);
                    for t in submasks(mask_of(&below)) {
                        let ry = base + mask_sum(&rates, t);
                        terms.push(SingleTerm { weight: sign_of(t) * rates[a], ry, group });
                    }
                }
            }
            return Ok(JointPdf { p, s, kind: JointKind::SingleLower { terms, groups } });
        }
        let count = n as u128
            * binomial(n - 1, p - 1)
            * (n - p) as u128
            * binomial(n - p - 1, s - 1)
            * (1u128 << (n - n_c))
            * (1u128 << (s - 1))
            * (s - 1) as u128
            * (p - 1).max(1) as u128;
        check_capacity(count)?;
        let mut terms = Vec::new();
        for a in 0..n {
            let r1: Vec<usize> = all.iter().copied().filter(|&i| i != a).collect();
            for s1 in combinations(&r1, p - 1) {
                let r2: Vec<usize> = r1.iter().copied().filter(|i| !s1.contains(i)).collect();
                let s1_rates: Vec<f64> = s1.iter().map(|&i| rates[i]).collect();
                let w1 = if p >= 2 { conditioned_weights(&s1_rates, &ids_of(&s1))? } else { vec![1.0] };
                let upper = rates[a] + s1_rates.iter().sum::<f64>();
                for &b in &r2 {
                    let r3: Vec<usize> = r2.iter().copied().filter(|&i| i != b).collect();
                    for s2 in combinations(&r3, s - 1) {
                        let below: Vec<usize> = r3.iter().copied().filter(|i| !s2.contains(i)).collect();
                        let s2_rates: Vec<f64> = s2.iter().map(|&i| rates[i]).collect();
                        let w2 = conditioned_weights(&s2_rates, &ids_of(&s2))?;
                        let lower = rates[b] + s2_rates.iter().sum::<f64>();
                        let s2_mask = mask_of(&s2);
                        for t in submasks(mask_of(&below)) {
                            let lam_t = mask_sum(&rates, t);
                            for u in submasks(s2_mask) {
                                let lam_u = mask_sum(&rates, u);
                                let l = u.count_ones() as usize;
                                let sg = sign_of(t) * sign_of(u);
                                for (kk, &k) in s2.iter().enumerate() {
                                    let lk = rates[k];
                                    let alpha = -(lower - s as f64 * lk);
                                    let alpha_pp = -(lower - lam_u - (s - l) as f64 * lk);
                                    let hs: Vec<(f64, f64)> = if p >= 2 {
                                        s1.iter().enumerate().map(|(hh, &h)| (w1[hh], rates[h])).collect()
                                    } else {
                                        vec![(1.0, 0.0)]
                                    };
                                    for (wh, lh) in hs {
                                        let beta = -(upper - p as f64 * lh);
                                        let beta_p = -(upper + lam_u - p as f64 * lh - l as f64 * lk);
                                        let consts = TermConstants {
                                            alpha,
                                            alpha_p: alpha - lam_t,
                                            alpha_pp,
                                            alpha_ppp: alpha_pp - lam_t,
                                            beta,
                                            beta_p,
                                        };
                                        terms.push(JointTerm {
                                            weight: sg * rates[a] * rates[b] * wh * w2[kk],
                                            lam_h: lh,
                                            lam_k: lk,
                                            l,
                                            k: consts,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(JointPdf { p, s, kind: JointKind::Blocks(terms) })
    }

    pub fn upper_block(&self) -> usize {
        self.p
    }

    pub fn lower_block(&self) -> usize {
        self.s
    }

    /// Whether `(x, y)` satisfies the ordering constraint `y/N_s ≤ x/(N_c - N_s)`.
    pub fn in_support(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && y * self.p as f64 <= x * self.s as f64
    }

    /// Constants of every cached term, in enumeration order (empty when the
    /// lower block is a single path).
    pub fn term_constants(&self) -> Vec<TermConstants> {
        match &self.kind {
            JointKind::Blocks(t) => t.iter().map(|t| t.k).collect(),
            JointKind::SingleLower { .. } => Vec::new(),
        }
    }

    pub fn term_count(&self) -> usize {
        match &self.kind {
            JointKind::Blocks(t) => t.len(),
            JointKind::SingleLower { terms, .. } => terms.len(),
        }
    }

    /// Density at `Y = x`, `W_1 = y`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        if !self.in_support(x, y) || x == 0.0 {
            return 0.0;
        }
        let p = self.p as f64;
        let s = self.s as f64;
        let parts: Vec<f64> = match &self.kind {
            JointKind::SingleLower { terms, groups } => {
                // x holds the p strongest paths, all above y: x ≥ p·y. The
                // excesses over y are hypoexponential, with density
                // ∏λ · t^(k-1) · E[-λ t] at t = x - p·y.
                let shift = x - p * y;
                let hypo: Vec<f64> = groups
                    .iter()
                    .map(|g| {
                        let z: Vec<f64> = g.iter().map(|l| -l * shift).collect();
                        g.iter().product::<f64>() * shift.powi(g.len() as i32 - 1) * exp_divided_difference(&z)
                    })
                    .collect();
                terms.iter().map(|t| t.weight * (-t.ry * y).exp() * hypo[t.group]).collect()
            }
            JointKind::Blocks(terms) if self.p == 1 => terms
                .iter()
                .map(|t| {
                    let l = t.l as f64;
                    let up = if t.l == 0 { y / s } else { (y / s).min((y - l * x) / (s - l)) };
                    if up <= 0.0 {
                        return 0.0;
                    }
                    t.weight * (-t.lam_k * y + t.k.beta_p * x).exp() * exp_integral(t.k.alpha_ppp, 0.0, up)
                })
                .collect(),
            JointKind::Blocks(terms) => terms
                .iter()
                .map(|t| {
                    let pre = t.weight * (-t.lam_h * x - t.lam_k * y).exp();
                    let (lo2, hi2) = (y / s, x / p);
                    let v = if t.l == 0 {
                        helper_i(t.k.beta_p, lo2, hi2, t.k.alpha_ppp, 0.0, y / s)
                    } else {
                        let l = t.l as f64;
                        let cstar = ((y - l * x / p) / (s - l)).clamp(0.0, y / s);
                        helper_i(t.k.beta_p, lo2, hi2, t.k.alpha_ppp, 0.0, cstar)
                            + helper_i_prime(t.k.beta_p, lo2, y / l, (s - l) / l, t.k.alpha_ppp, cstar, y / s)
                    };
                    pre * v
                })
                .collect(),
        };
        pairwise_sum(&parts).max(0.0)
    }
}

impl JointPdf {
    /// `Pr[x_lo ≤ Y < x_hi, y_lo ≤ W_1 < y_hi]` by iterated quadrature.
    pub fn rect_probability(
        &self,
        (x_lo, x_hi): (f64, f64),
        (y_lo, y_hi): (f64, f64),
        settings: &QuadratureSettings,
    ) -> Result<f64> {
        let p = self.p as f64;
        let s = self.s as f64;
        let x_lo = x_lo.max(0.0);
        let y_lo = y_lo.max(0.0);
        // inner over y up to the support edge s·x/p; kinks along y = l·x/p
        let outer_breaks: Vec<f64> = (1..=self.s).map(|l| y_lo * p / l as f64).chain([y_hi * p / s]).collect();
        let inner = QuadratureSettings { rel_tol: settings.rel_tol * 0.1, abs_tol: settings.abs_tol * 0.1, ..*settings };
        let est = integrate_1d_try(
            |x| {
                let top = y_hi.min(s * x / p);
                if top <= y_lo {
                    return Ok(0.0);
                }
                let breaks: Vec<f64> = (1..self.s).map(|l| l as f64 * x / p).collect();
                Ok(integrate_1d(|y| self.density(x, y), y_lo, top, &breaks, &inner)?.value)
            },
            x_lo,
            x_hi,
            &outer_breaks,
            settings,
        )?;
        Ok(est.value)
    }
}

/// Joint density of `Y` and `W_1` at `(x, y)`.
pub fn joint_pdf_y_w1(x: f64, y: f64, profile: &BranchProfile, n_c: usize, n_s: usize) -> Result<f64> {
    Ok(JointPdf::new(profile, n_c, n_s)?.density(x, y))
}
