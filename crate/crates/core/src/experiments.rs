//! Decay-rate fits, expectation baselines, the Franke study and s* tables.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optimize::{optimize, Init, Objective, ObjectiveKind, OptOptions};
use crate::pointgen::{equal_area_partition, random_uniform, randomized_equal_area, spiral};
use crate::quality::{franke, qmc_integrate, wce, wce_squared_raw, SobolevSpace, FRANKE_INTEGRAL};
use crate::rng::derive_seed;
use crate::sphere::PointSet;

pub const SCHEMA_VERSION: u32 = 1;

/// Default N grid: perfect squares 16, 64, ..., 4096.
pub fn default_n_grid() -> Vec<usize> {
    (1..=16).map(|k| (4 * k) * (4 * k)).collect()
}

/// Default smoothness grid for s* tables on S^2. Integer s is excluded
/// because the distance kernel degenerates there.
pub const DEFAULT_S_GRID: [f64; 7] = [1.25, 1.5, 1.75, 2.25, 2.5, 3.5, 4.5];

/// Least-squares fit `value ~ alpha N^-beta` in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub series: String,
    pub alpha: f64,
    pub beta: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// RMS residual of the fit in natural-log units.
    pub residual: f64,
    pub points: usize,
}

pub fn decay_fit(data: &[(usize, f64)]) -> Result<FitReport> {
    if data.len() < 3 {
        return Err(invalid(format!("decay fit needs at least 3 points, got {}", data.len())));
    }
    if let Some((n, v)) = data.iter().find(|(n, v)| !(*v > 0.0) || !v.is_finite() || *n == 0) {
        return Err(invalid(format!("decay fit needs positive values, got {v} at N={n}")));
    }
    let xs: Vec<f64> = data.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = data.iter().map(|(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("decay fit needs at least two distinct N"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitReport {
        series: String::new(),
        alpha: intercept.exp(),
        beta: -slope,
        n_min: data.iter().map(|p| p.0).min().unwrap_or(0),
        n_max: data.iter().map(|p| p.0).max().unwrap_or(0),
        residual: (ss / m).sqrt(),
        points: data.len(),
    })
}

impl FitReport {
    pub fn with_series(mut self, series: impl Into<String>) -> Self {
        self.series = series.into();
        self
    }
}

/// Monte Carlo mean of `wce^2` against a predicted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    pub kernel: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub predicted: f64,
    pub estimated: f64,
    #[serde(rename = "stderr")]
    pub std_error: f64,
    #[serde(rename = "z")]
    pub z_score: f64,
    pub trials: usize,
    pub seed: u64,
}

struct Moments {
    mean: f64,
    std_error: f64,
}

fn moments(v: &[f64]) -> Moments {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    Moments {
        mean,
        std_error: (var / m).sqrt(),
    }
}

fn trial_values<F>(trials: usize, seed: u64, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(derive_seed(seed, t as u64)))
        .collect()
}

/// Expected `wce^2` of `n` i.i.d. uniform points is `(K(1) - a_0) / n`.
pub fn expect_random_wce(space: &SobolevSpace, n: usize, trials: usize, seed: u64) -> Result<ExpectationReport> {
    if trials < 2 {
        return Err(invalid("need at least 2 trials"));
    }
    if n < 1 {
        return Err(invalid("need n >= 1"));
    }
    let k = space.kernel();
    let predicted = (k.eval(1.0)? - k.a0()) / n as f64;
    let d = space.dim();
    let v = trial_values(trials, seed, |ts| Ok(wce_squared_raw(space, &random_uniform(d, n, ts)?)))?;
    let m = moments(&v);
    Ok(ExpectationReport {
        kernel: space.spec().tag(),
        s: space.s(),
        n,
        predicted,
        estimated: m.mean,
        std_error: m.std_error,
        z_score: (m.mean - predicted) / m.std_error,
        trials,
        seed,
    })
}

/// Monte Carlo `E[wce^2]` for one draw per region of the equal-area partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub kernel: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub mean_wce2: f64,
    #[serde(rename = "stderr")]
    pub std_error: f64,
    /// `sqrt(E[wce^2])`.
    pub rms_wce: f64,
    pub trials: usize,
    pub seed: u64,
}

pub fn expect_equal_area_wce(space: &SobolevSpace, n: usize, trials: usize, seed: u64) -> Result<StratifiedReport> {
    if space.dim() != 2 {
        return Err(invalid("equal-area sampling is implemented for d=2"));
    }
    if trials < 2 {
        return Err(invalid("need at least 2 trials"));
    }
    let part = equal_area_partition(n)?;
    let v = trial_values(trials, seed, |ts| Ok(wce_squared_raw(space, &part.sample(ts))))?;
    let m = moments(&v);
    Ok(StratifiedReport {
        kernel: space.spec().tag(),
        s: space.s(),
        n,
        mean_wce2: m.mean,
        std_error: m.std_error,
        rms_wce: m.mean.max(0.0).sqrt(),
        trials,
        seed,
    })
}

/// Decay exponent the stratified estimator should show: `s/d` inside
/// `(d/2, d/2+1)`, flattening to `(d/2+1)/d` above.
pub fn stratified_rate(d: usize, s: f64) -> f64 {
    let h = d as f64 / 2.0;
    if s < h + 1.0 {
        s / d as f64
    } else {
        (h + 1.0) / d as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualAreaStudy {
    pub rows: Vec<StratifiedReport>,
    pub fit: FitReport,
    pub expected_beta: f64,
    pub tolerance: f64,
    pub within: bool,
}

pub fn equal_area_study(space: &SobolevSpace, n_grid: &[usize], trials: usize, seed: u64) -> Result<EqualAreaStudy> {
    let rows: Vec<StratifiedReport> = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| expect_equal_area_wce(space, n, trials, derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let data: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.rms_wce)).collect();
    let fit = decay_fit(&data)?.with_series(format!("randomized-equal-area s={}", space.s()));
    let d = space.dim();
    let expected_beta = stratified_rate(d, space.s());
    let tolerance = if space.s() < d as f64 / 2.0 + 1.0 { 0.07 } else { 0.10 };
    let within = (fit.beta - expected_beta).abs() <= tolerance;
    Ok(EqualAreaStudy {
        rows,
        fit,
        expected_beta,
        tolerance,
        within,
    })
}

/// Expectation reports over an N grid plus a fit of `sqrt(E[wce^2])`.
pub fn random_study(space: &SobolevSpace, n_grid: &[usize], trials: usize, seed: u64) -> Result<(Vec<ExpectationReport>, FitReport)> {
    let rows: Vec<ExpectationReport> = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| expect_random_wce(space, n, trials, derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;
    let data: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.estimated.sqrt())).collect();
    let fit = decay_fit(&data)?.with_series(format!("random {}", space.spec().tag()));
    Ok((rows, fit))
}

/// A point-set family indexed by N.
#[derive(Debug, Clone)]
pub enum Family {
    /// Uniform random points; the set for N uses seed `derive_seed(seed, N)`.
    Random { d: usize, seed: u64 },
    Spiral,
    EqualArea,
    /// One uniform point per region; seed `derive_seed(seed, N)`.
    RandomizedEqualArea { seed: u64 },
    /// Local maximizers of the distance sum with exponent `2s - 2`, started from the spiral.
    Optimized { s: f64, max_iter: usize },
    /// Fixed sets (for instance loaded from files); they define their own N values.
    Sets { name: String, sets: Vec<PointSet> },
}

impl Family {
    pub fn name(&self) -> String {
        match self {
            Family::Random { .. } => "random".into(),
            Family::Spiral => "spiral".into(),
            Family::EqualArea => "equal-area".into(),
            Family::RandomizedEqualArea { .. } => "randomized-equal-area".into(),
            Family::Optimized { s, .. } => format!("distance-optimized-s{s}"),
            Family::Sets { name, .. } => name.clone(),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Family::Random { seed, .. } | Family::RandomizedEqualArea { seed } => Some(*seed),
            _ => None,
        }
    }

    pub fn generate(&self, n: usize) -> Result<PointSet> {
        match self {
            Family::Random { d, seed } => random_uniform(*d, n, derive_seed(*seed, n as u64)),
            Family::Spiral => spiral(n),
            Family::EqualArea => Ok(equal_area_partition(n)?.centers()),
            Family::RandomizedEqualArea { seed } => randomized_equal_area(n, derive_seed(*seed, n as u64)),
            Family::Optimized { s, max_iter } => {
                if n < 2 {
                    return spiral(n);
                }
                let obj = Objective::new(ObjectiveKind::DistanceSum { s: *s }, 2)?;
                let opts = OptOptions {
                    max_iter: *max_iter,
                    grad_tol: 1e-12,
                    restarts: 1,
                    seed: 0,
                };
                let r = optimize(&obj, n, Init::Points(spiral(n)?), &opts)?;
                Ok(r.points().clone().with_label(format!("distance-optimized-{n}")))
            }
            Family::Sets { sets, .. } => sets
                .iter()
                .find(|x| x.len() == n)
                .cloned()
                .ok_or_else(|| invalid(format!("family {} has no set with N={n}", self.name()))),
        }
    }

    /// Members used for an N grid; `Sets` families ignore the grid.
    pub fn members(&self, n_grid: &[usize]) -> Result<Vec<PointSet>> {
        match self {
            Family::Sets { sets, .. } => {
                let mut v = sets.clone();
                v.sort_by_key(|x| x.len());
                Ok(v)
            }
            _ => n_grid.iter().map(|&n| self.generate(n)).collect(),
        }
    }

    /// Conjectured s* for this family, if one is known.
    pub fn reference_s_star(&self) -> Option<f64> {
        let key = match self {
            Family::Spiral => "spiral",
            Family::EqualArea => "equal area",
            Family::Optimized { .. } => "distance",
            Family::Sets { name, .. } => name.as_str(),
            _ => return None,
        };
        REFERENCE_S_STAR
            .iter()
            .find(|(k, _)| key.eq_ignore_ascii_case(k))
            .map(|(_, v)| *v)
    }
}

/// Conjectured s* values for d=2.
pub const REFERENCE_S_STAR: [(&str, f64); 7] = [
    ("fekete", 1.5),
    ("equal area", 2.0),
    ("coulomb", 2.0),
    ("log", 3.0),
    ("spiral", 3.0),
    ("distance", 4.0),
    ("designs", f64::INFINITY),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WceRow {
    pub family: String,
    pub kernel: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub wce: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub family: String,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
}

/// Distance-kernel wce for every family, s and N.
pub fn wce_table(families: &[Family], s_grid: &[f64], n_grid: &[usize]) -> Result<Vec<WceRow>> {
    let mut rows = Vec::new();
    for fam in families {
        let sets = fam.members(n_grid)?;
        for &s in s_grid {
            for x in &sets {
                let space = SobolevSpace::gen_distance(x.dim(), s)?;
                rows.push(WceRow {
                    family: fam.name(),
                    kernel: space.spec().tag(),
                    s,
                    n: x.len(),
                    wce: wce(&space, x)?.wce,
                });
            }
        }
    }
    Ok(rows)
}

/// Fit of each (family, s) series in a wce table, in first-seen order.
pub fn fit_table(rows: &[WceRow]) -> Result<Vec<FitRow>> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(f, s)| *f == r.family && *s == r.s) {
            keys.push((r.family.clone(), r.s));
        }
    }
    keys.into_iter()
        .map(|(family, s)| {
            let data: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.family == family && r.s == s)
                .map(|r| (r.n, r.wce))
                .collect();
            let f = decay_fit(&data)?;
            Ok(FitRow {
                family,
                s,
                alpha: f.alpha,
                beta: f.beta,
                residual: f.residual,
            })
        })
        .collect()
}

/// Saturation estimate for one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SStarEstimate {
    pub family: String,
    /// `2 max_s min(beta(s), s/2)`.
    pub s_star: f64,
    /// The largest s in the grid sits above the estimate, so the decay has
    /// visibly stopped improving. When false the estimate is only a lower bound.
    pub saturated: bool,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SStarTable {
    pub schema_version: u32,
    pub s_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub wce: Vec<WceRow>,
    pub fits: Vec<FitRow>,
    pub estimates: Vec<SStarEstimate>,
}

/// Plateau margin below the `s/2` line that counts as saturation.
pub const PLATEAU_MARGIN: f64 = 0.05;

pub fn s_star_estimate(family: &str, fits: &[FitRow], d: usize) -> SStarEstimate {
    let series: Vec<&FitRow> = fits.iter().filter(|f| f.family == family).collect();
    let best = series
        .iter()
        .map(|f| f.beta.min(f.s / d as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let top = series.iter().max_by(|a, b| a.s.total_cmp(&b.s));
    let saturated = top.is_some_and(|f| best < f.s / d as f64 - PLATEAU_MARGIN);
    SStarEstimate {
        family: family.to_string(),
        s_star: d as f64 * best,
        saturated,
        reference: None,
    }
}

pub fn s_star_table(families: &[Family], s_grid: &[f64], n_grid: &[usize]) -> Result<SStarTable> {
    let wce = wce_table(families, s_grid, n_grid)?;
    let fits = fit_table(&wce)?;
    let estimates = families
        .iter()
        .map(|f| {
            let mut e = s_star_estimate(&f.name(), &fits, 2);
            e.reference = f.reference_s_star();
            e
        })
        .collect();
    Ok(SStarTable {
        schema_version: SCHEMA_VERSION,
        s_grid: s_grid.to_vec(),
        n_grid: n_grid.to_vec(),
        wce,
        fits,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationRow {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub estimate: f64,
    pub error: f64,
}

/// Absolute equal-weight integration error of `f` for every family and N.
pub fn integration_study<F>(families: &[Family], n_grid: &[usize], f: F, exact: f64) -> Result<Vec<IntegrationRow>>
where
    F: Fn(&[f64]) -> f64 + Copy,
{
    let mut rows = Vec::new();
    for fam in families {
        for x in fam.members(n_grid)? {
            let estimate = qmc_integrate(f, &x);
            rows.push(IntegrationRow {
                family: fam.name(),
                n: x.len(),
                estimate,
                error: (estimate - exact).abs(),
            });
        }
    }
    Ok(rows)
}

pub fn franke_study(families: &[Family], n_grid: &[usize]) -> Result<Vec<IntegrationRow>> {
    integration_study(families, n_grid, franke, FRANKE_INTEGRAL)
}

/// JSON envelope for any table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub table: String,
    pub seed: Option<u64>,
    pub rows: Vec<T>,
}

impl<T> Envelope<T> {
    pub fn new(table: &str, seed: Option<u64>, rows: Vec<T>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            table: table.to_string(),
            seed,
            rows,
        }
    }
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize, W: Write>(env: &Envelope<T>, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, env)?;
    writeln!(out)?;
    Ok(())
}
