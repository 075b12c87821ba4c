//! Globally adaptive Gauss–Kronrod (7/15) quadrature in one dimension and an
//! iterated version over regions `0 ≤ y ≤ Y, 0 ≤ w ≤ min(g(y), s·y)`.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { rel_tol: 1e-6, abs_tol: 1e-9, max_depth: 20 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_depth == 0 || self.max_depth > 60 {
            return Err(Error::Domain(format!("max_depth must be in 1..=60, got {}", self.max_depth)));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Bisections allowed per 1-D integral before giving up with
/// `NonConvergence`.
pub const SUBDIVISION_LIMIT: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kron * h;
    let asc = asc * h.abs();
    let mut err = ((kron - gauss) * h).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if !value.is_finite() {
        return Err(Error::Domain(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok((value, err.max(50.0 * f64::EPSILON * value.abs())))
}

/// Integrate a fallible integrand over `[a, b]`, splitting first at `breaks`.
pub fn integrate_1d_try<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    settings: &QuadratureSettings,
) -> Result<Estimate> {
    if !(b > a) {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut pts: Vec<f64> = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut splits = 0;
    for w in pts.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1])?;
        heap.push(Segment { a: w[0], b: w[1], value, error, depth: 0 });
    }
    loop {
        let (mut total, mut err) = (frozen_value, frozen_error);
        for s in heap.iter() {
            total += s.value;
            err += s.error;
        }
        if err <= settings.tolerance(total) {
            return Ok(Estimate { value: total, error: err });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Err(Error::NonConvergence { estimate: total, error: err }),
        };
        if splits == SUBDIVISION_LIMIT {
            return Err(Error::NonConvergence { estimate: total, error: err });
        }
        splits += 1;
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= settings.max_depth || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.b)?;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1, depth: worst.depth + 1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2, depth: worst.depth + 1 });
    }
}

pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    settings: &QuadratureSettings,
) -> Result<Estimate> {
    integrate_1d_try(|x| Ok(f(x)), a, b, breaks, settings)
}

/// `{0 ≤ y ≤ y_max, 0 ≤ w ≤ min(g0 + g1·y, support_slope·y)}`.
///
/// `break_slopes` are lines `w = k·y` along which the integrand has a kink;
/// the inner integral splits there and the outer integral splits where those
/// lines (and the support line) cross `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub y_max: f64,
    pub g0: f64,
    pub g1: f64,
    pub support_slope: Option<f64>,
    pub break_slopes: Vec<f64>,
}

impl Region {
    pub fn triangle(y_max: f64, g0: f64, g1: f64) -> Self {
        Region { y_max, g0, g1, support_slope: None, break_slopes: Vec::new() }
    }

    fn upper(&self, y: f64) -> f64 {
        let g = self.g0 + self.g1 * y;
        match self.support_slope {
            Some(s) => g.min(s * y),
            None => g,
        }
    }

    fn outer_breaks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let slopes = self.support_slope.iter().chain(self.break_slopes.iter());
        for &k in slopes {
            // g0 + g1 y = k y
            if k != self.g1 {
                out.push(self.g0 / (k - self.g1));
            }
        }
        if self.g1 != 0.0 {
            out.push(-self.g0 / self.g1);
        }
        out.retain(|&y| y > 0.0 && y < self.y_max);
        out
    }
}

/// Iterated quadrature. For each outer abscissa `y`, `make_inner(y)` returns
/// the inner integrand in `w`, or `None` when it vanishes identically.
pub fn integrate_2d<M, G>(region: &Region, settings: &QuadratureSettings, mut make_inner: M) -> Result<Estimate>
where
    M: FnMut(f64) -> Option<G>,
    G: FnMut(f64) -> f64,
{
    settings.validate()?;
    let inner_settings = QuadratureSettings {
        rel_tol: settings.rel_tol * 0.1,
        abs_tol: settings.abs_tol * 0.1 / region.y_max.max(1.0),
        max_depth: settings.max_depth,
    };
    let mut worst_inner: f64 = 0.0;
    let outer = integrate_1d_try(
        |y| {
            let top = region.upper(y);
            if !(top > 0.0) {
                return Ok(0.0);
            }
            let Some(g) = make_inner(y) else { return Ok(0.0) };
            let breaks: Vec<f64> = region.break_slopes.iter().map(|k| k * y).collect();
            let est = integrate_1d(g, 0.0, top, &breaks, &inner_settings)?;
            worst_inner = worst_inner.max(est.error);
            Ok(est.value)
        },
        0.0,
        region.y_max,
        &region.outer_breaks(),
        settings,
    )?;
    Ok(Estimate { value: outer.value, error: outer.error + worst_inner * region.y_max })
}

/// `∫∫_region f(y, w) dw dy`.
pub fn quadrature_2d<F: Fn(f64, f64) -> f64>(f: F, region: &Region, settings: &QuadratureSettings) -> Result<Estimate> {
    let f = &f;
    integrate_2d(region, settings, |y| Some(move |w| f(y, w)))
}
