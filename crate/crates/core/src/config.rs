//! Run configuration: flat `key = value` text with dotted section keys.
//!
//! ```text
//! # Four-station run
//! sho.l = 4
//! sho.n_paths = 5
//! sho.n_c = 3
//! sho.n_s = 2
//! sho.gamma_t_db = 0
//! pdp.kind = exponential
//! pdp.gamma_bar = 1.0
//! pdp.delta = 0.5
//! pdp.bs3.delta = 1.0      # per-base-station override
//! grid.start_db = -10
//! grid.stop_db = 10
//! grid.points = 20
//! mc.samples = 1000000
//! mc.seed = 42
//! ```
//!
//! Every error carries the 1-based line it refers to.

use std::collections::BTreeMap;

use crate::closed_form_stats::BranchProfile;
use crate::error::{Error, Result};
use crate::outage::ShoConfig;
use crate::pdp::{apply_distinctness_jitter, PdpKind, PdpSpec, DEFAULT_JITTER};
use crate::quadrature::QuadratureSettings;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Split text into entries. Syntax errors and duplicate keys are reported
/// with their line number; key names are not checked here.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(Error::Config { line, message: format!("expected 'key = value', got '{body}'") });
        };
        let key = k.trim();
        let value = v.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return Err(Error::Config { line, message: format!("invalid key '{key}'") });
        }
        if key.starts_with('.') || key.ends_with('.') || key.contains("..") {
            return Err(Error::Config { line, message: format!("invalid key '{key}'") });
        }
        if value.is_empty() {
            return Err(Error::Config { line, message: format!("key '{key}' has no value") });
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(Error::Config { line, message: format!("key '{key}' already set on line {prev}") });
        }
        out.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(out)
}

/// Comma-separated reals, e.g. `0, 0.5, 1e-3`.
pub fn parse_f64_list(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let v: f64 = t.parse().map_err(|_| format!("'{t}' is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("'{t}' is not finite"))
            }
        })
        .collect()
}

/// Comma-separated `x:y` pairs.
pub fn parse_pair_list(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    text.split(',')
        .map(|t| {
            let (a, b) = t.split_once(':').ok_or_else(|| format!("'{}' is not an x:y pair", t.trim()))?;
            let a = parse_f64_list(a)?;
            let b = parse_f64_list(b)?;
            match (a.as_slice(), b.as_slice()) {
                ([x], [y]) => Ok((*x, *y)),
                _ => Err(format!("'{}' is not an x:y pair", t.trim())),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    GscCdf,
    WnCdf,
    JointPdf,
}

impl std::str::FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gsc-cdf" => Ok(Statistic::GscCdf),
            "wn-cdf" => Ok(Statistic::WnCdf),
            "joint-pdf" => Ok(Statistic::JointPdf),
            other => Err(format!("unknown statistic '{other}' (expected gsc-cdf, wn-cdf or joint-pdf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Delta,
    GammaBar,
    GammaT,
}

impl std::str::FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "delta" => Ok(SweepParameter::Delta),
            "gamma_bar" | "gamma-bar" => Ok(SweepParameter::GammaBar),
            "gamma_t" | "gamma-t" => Ok(SweepParameter::GammaT),
            other => Err(format!("unknown sweep parameter '{other}' (expected delta, gamma_bar or gamma_t)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatPoints {
    Scalar(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSection {
    pub statistic: Option<Statistic>,
    pub points: Option<StatPoints>,
    /// 1-based base station the statistic refers to
    pub bs: Option<usize>,
    pub bin_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub parameter: Option<SweepParameter>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start_db: f64,
    pub stop_db: f64,
    pub points: usize,
}

impl Grid {
    /// Thresholds equally spaced in dB, returned as `(x_db, x_linear)`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.points)
            .map(|i| {
                let db = if self.points == 1 {
                    self.start_db
                } else {
                    self.start_db + (self.stop_db - self.start_db) * i as f64 / (self.points - 1) as f64
                };
                (db, db_to_linear(db))
            })
            .collect()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sho: ShoConfig,
    /// one spec per base station, serving station first
    pub pdp: Vec<PdpSpec>,
    pub grid: Option<Grid>,
    pub mc_samples: Option<u64>,
    pub mc_seed: Option<u64>,
    pub quadrature: QuadratureSettings,
    pub jitter: f64,
    pub output: Option<String>,
    pub stats: StatsSection,
    pub sweep: SweepSection,
    /// normalized `key = value` lines, sorted by key
    pub echo: Vec<String>,
}

struct Lookup {
    map: BTreeMap<String, Entry>,
    used: BTreeMap<String, bool>,
    last_line: usize,
}

impl Lookup {
    fn take(&mut self, key: &str) -> Option<&Entry> {
        let e = self.map.get(key)?;
        self.used.insert(key.to_string(), true);
        Some(e)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<(T, usize)>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let line = e.line;
                e.value
                    .parse::<T>()
                    .map(|v| Some((v, line)))
                    .map_err(|err| Error::Config { line, message: format!("{key}: {err}") })
            }
        }
    }

    fn real(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.parse::<f64>(key)? {
            Some((v, line)) if !v.is_finite() => {
                Err(Error::Config { line, message: format!("{key}: value must be finite") })
            }
            other => Ok(other),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<(Vec<f64>, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let line = e.line;
                parse_f64_list(&e.value)
                    .map(|v| Some((v, line)))
                    .map_err(|m| Error::Config { line, message: format!("{key}: {m}") })
            }
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map(|e| e.line).unwrap_or(0)
    }

    fn missing(&self, key: &str) -> Error {
        Error::Config { line: 0, message: format!("missing required key '{key}' (checked through line {})", self.last_line) }
    }
}

fn positive(key: &str, v: Option<(f64, usize)>) -> Result<Option<f64>> {
    match v {
        Some((x, line)) if !(x > 0.0) => Err(Error::Config { line, message: format!("{key} must be > 0") }),
        other => Ok(other.map(|(x, _)| x)),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let last_line = text.lines().count();
        let echo: Vec<String> = {
            let mut v: Vec<String> = entries.iter().map(|e| format!("{} = {}", e.key, e.value)).collect();
            v.sort();
            v
        };
        let mut lk = Lookup {
            used: entries.iter().map(|e| (e.key.clone(), false)).collect(),
            map: entries.into_iter().map(|e| (e.key.clone(), e)).collect(),
            last_line,
        };

        // sho
        let n_paths_raw = lk.list("sho.n_paths")?.ok_or_else(|| lk.missing("sho.n_paths"))?;
        let l_entry = lk.parse::<usize>("sho.l")?;
        let as_count = |v: f64, line: usize| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e6 {
                Ok(v as usize)
            } else {
                Err(Error::Config { line, message: format!("sho.n_paths: '{v}' is not a positive integer") })
            }
        };
        let counts: Vec<usize> =
            n_paths_raw.0.iter().map(|&v| as_count(v, n_paths_raw.1)).collect::<Result<Vec<_>>>()?;
        let (l, n_paths) = match (l_entry, counts.len()) {
            (Some((l, _)), 1) => (l, vec![counts[0]; l]),
            (Some((l, line)), k) if k != l => {
                return Err(Error::Config { line, message: format!("sho.l = {l} but sho.n_paths lists {k} values") })
            }
            (_, k) => (k, counts),
        };
        let n_c = lk.parse::<usize>("sho.n_c")?.ok_or_else(|| lk.missing("sho.n_c"))?.0;
        let n_s = lk.parse::<usize>("sho.n_s")?.ok_or_else(|| lk.missing("sho.n_s"))?.0;
        let gt_lin = lk.real("sho.gamma_t")?;
        let gt_db = lk.real("sho.gamma_t_db")?;
        let gamma_t = match (gt_lin, gt_db) {
            (Some(_), Some((_, line))) => {
                return Err(Error::Config { line, message: "set only one of sho.gamma_t and sho.gamma_t_db".into() })
            }
            (Some((v, line)), None) if v < 0.0 => {
                return Err(Error::Config { line, message: "sho.gamma_t must be >= 0".into() })
            }
            (Some((v, _)), None) => v,
            (None, Some((db, _))) => db_to_linear(db),
            (None, None) => return Err(lk.missing("sho.gamma_t")),
        };
        let sho = ShoConfig { l, n_paths, n_c, n_s, gamma_t };
        let sho_line = lk.line_of("sho.n_s").max(lk.line_of("sho.n_c"));
        sho.validate().map_err(|e| Error::Config { line: sho_line, message: e.to_string() })?;

        // pdp, with per-station overrides
        let base = Self::pdp_section(&mut lk, "pdp", None)?;
        let mut pdp = Vec::with_capacity(l);
        for bs in 1..=l {
            let spec = Self::pdp_section(&mut lk, &format!("pdp.bs{bs}"), Some(&base))?;
            let line = lk.line_of(&format!("pdp.bs{bs}.kind")).max(lk.line_of("pdp.kind"));
            let spec = spec.ok_or_else(|| lk.missing("pdp.kind"))?;
            spec.build(sho.n_paths[bs - 1], bs).map_err(|e| Error::Config { line, message: format!("base station {bs}: {e}") })?;
            pdp.push(spec);
        }

        // grid
        let start = lk.real("grid.start_db")?;
        let stop = lk.real("grid.stop_db")?;
        let pts = lk.parse::<usize>("grid.points")?;
        let grid = match (start, stop, pts) {
            (None, None, None) => None,
            (Some((a, _)), Some((b, line)), Some((n, _))) => {
                if n == 0 || n > 100_000 {
                    return Err(Error::Config { line: lk.line_of("grid.points"), message: "grid.points must be in 1..=100000".into() });
                }
                if b < a {
                    return Err(Error::Config { line, message: "grid.stop_db must be >= grid.start_db".into() });
                }
                Some(Grid { start_db: a, stop_db: b, points: n })
            }
            _ => {
                let line = lk.line_of("grid.start_db").max(lk.line_of("grid.stop_db")).max(lk.line_of("grid.points"));
                return Err(Error::Config { line, message: "grid needs grid.start_db, grid.stop_db and grid.points".into() });
            }
        };

        let mc_samples = lk.parse::<u64>("mc.samples")?.map(|v| v.0);
        let mc_seed = lk.parse::<u64>("mc.seed")?.map(|v| v.0);

        let mut quadrature = QuadratureSettings::default();
        if let Some(v) = positive("quad.rel_tol", lk.real("quad.rel_tol")?)? {
            quadrature.rel_tol = v;
        }
        if let Some(v) = positive("quad.abs_tol", lk.real("quad.abs_tol")?)? {
            quadrature.abs_tol = v;
        }
        if let Some((d, line)) = lk.parse::<u32>("quad.max_depth")? {
            if d == 0 || d > 60 {
                return Err(Error::Config { line, message: "quad.max_depth must be in 1..=60".into() });
            }
            quadrature.max_depth = d;
        }

        let jitter = match lk.real("jitter.rel_epsilon")? {
            None => DEFAULT_JITTER,
            Some((v, line)) => {
                if !(1e-12..=1e-6).contains(&v) {
                    return Err(Error::Config { line, message: "jitter.rel_epsilon must be in [1e-12, 1e-6]".into() });
                }
                v
            }
        };

        let output = lk.take("output.csv").map(|e| e.value.clone());

        let statistic = lk.parse::<Statistic>("stats.statistic")?.map(|v| v.0);
        let points = match lk.take("stats.points") {
            None => None,
            Some(e) => {
                let line = e.line;
                let v = e.value.clone();
                let parsed = if v.contains(':') {
                    parse_pair_list(&v).map(StatPoints::Pairs)
                } else {
                    parse_f64_list(&v).map(StatPoints::Scalar)
                };
                Some(parsed.map_err(|m| Error::Config { line, message: format!("stats.points: {m}") })?)
            }
        };
        let bs = match lk.parse::<usize>("stats.bs")? {
            Some((b, line)) if b == 0 || b > l => {
                return Err(Error::Config { line, message: format!("stats.bs must be in 1..={l}") })
            }
            other => other.map(|v| v.0),
        };
        let bin_width = positive("stats.bin_width", lk.real("stats.bin_width")?)?.unwrap_or(0.1);
        let stats = StatsSection { statistic, points, bs, bin_width };

        let parameter = lk.parse::<SweepParameter>("sweep.parameter")?.map(|v| v.0);
        let values = lk.list("sweep.values")?.map(|v| v.0);
        let sweep = SweepSection { parameter, values };

        if let Some((key, _)) = lk.used.iter().find(|(_, used)| !**used) {
            return Err(Error::Config { line: lk.line_of(key), message: format!("unknown key '{key}'") });
        }

        Ok(RunConfig { sho, pdp, grid, mc_samples, mc_seed, quadrature, jitter, output, stats, sweep, echo })
    }

    fn pdp_section(lk: &mut Lookup, prefix: &str, base: Option<&Option<PdpSpec>>) -> Result<Option<PdpSpec>> {
        let kind = lk.parse::<PdpKind>(&format!("{prefix}.kind"))?.map(|v| v.0);
        let gb = lk.real(&format!("{prefix}.gamma_bar"))?;
        let gb_db = lk.real(&format!("{prefix}.gamma_bar_db"))?;
        let delta = lk.real(&format!("{prefix}.delta"))?;
        let values = lk.list(&format!("{prefix}.values"))?;
        let gamma_bar = match (gb, gb_db) {
            (Some(_), Some((_, line))) => {
                return Err(Error::Config { line, message: format!("set only one of {prefix}.gamma_bar and {prefix}.gamma_bar_db") })
            }
            (Some((v, line)), None) if !(v > 0.0) => {
                return Err(Error::Config { line, message: format!("{prefix}.gamma_bar must be > 0") })
            }
            (Some((v, _)), None) => Some(v),
            (None, Some((db, _))) => Some(db_to_linear(db)),
            (None, None) => None,
        };
        if let Some((d, line)) = delta {
            if d < 0.0 {
                return Err(Error::Config { line, message: format!("{prefix}.delta must be >= 0") });
            }
        }
        let inherited = base.and_then(|b| b.clone());
        let kind = match kind.or(inherited.as_ref().map(|b| b.kind)) {
            Some(k) => k,
            None if gamma_bar.is_none() && delta.is_none() && values.is_none() => return Ok(inherited),
            None => return Ok(Some(PdpSpec { kind: PdpKind::Exponential, gamma_bar: gamma_bar.unwrap_or(1.0), delta: delta.map(|d| d.0).unwrap_or(0.0), values: values.map(|v| v.0) })),
        };
        Ok(Some(PdpSpec {
            kind,
            gamma_bar: gamma_bar.or(inherited.as_ref().map(|b| b.gamma_bar)).unwrap_or(1.0),
            delta: delta.map(|d| d.0).or(inherited.as_ref().map(|b| b.delta)).unwrap_or(0.0),
            values: values.map(|v| v.0).or(inherited.and_then(|b| b.values)),
        }))
    }

    /// Profiles exactly as configured (used by the simulator).
    pub fn raw_profiles(&self) -> Result<Vec<BranchProfile>> {
        self.pdp.iter().enumerate().map(|(i, spec)| spec.build(self.sho.n_paths[i], i + 1)).collect()
    }

    /// Profiles with the distinctness jitter applied (used by closed forms).
    pub fn jittered_profiles(&self) -> Result<Vec<BranchProfile>> {
        Ok(self.raw_profiles()?.iter().map(|p| apply_distinctness_jitter(p, self.jitter)).collect())
    }
}
