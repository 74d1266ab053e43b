//! Worst-case error through the harmonic expansion
//! `wce^2 = sum_{l >= 1} a_l Phi_l(X)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SobolevSpace;
use crate::error::{invalid, Result};
use crate::harmonic::LegendreEvaluator;
use crate::kernels::{Kernel, KernelSpec};
use crate::sphere::{dist2, PointSet};
use crate::sum::ExactSum;

/// Largest degree the automatic cutoff will consider.
pub const AUTO_MAX_DEGREE: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    pub ell_max: usize,
    /// `sum_{l=1}^{ell_max} a_l Phi_l(X)`, a lower bound for `wce^2`.
    pub partial_sum: f64,
    /// Diagonal (`i = j`) share of the tail, known exactly:
    /// `(1/N) sum_{l > ell_max} a_l Z(d,l)`.
    pub diagonal_tail: f64,
    /// `partial_sum + diagonal_tail`.
    pub estimate: f64,
    /// `sum_{l > ell_max} a_l Z(d,l)`, the bound that only uses `Phi_l <= Z(d,l)`.
    pub tail_bound: f64,
    /// Bound on `|wce^2 - estimate|` from the off-diagonal terms alone. For
    /// `d = 2` it uses Bernstein's inequality
    /// `|P_n(cos t)| <= sqrt(2 / (pi n sin t))`; otherwise `|P_n| <= 1`.
    pub refined_bound: f64,
}

/// Suffix sums of the Legendre weights `c_l = a_l Z(d,l)`.
struct CoefficientTails {
    /// `c[l]` for `l <= cap`.
    c: Vec<f64>,
    /// `s0[l] = sum_{k > l} c_k`, for `l <= cap`.
    s0: Vec<f64>,
    /// `sh[l] = sum_{k > l} c_k / sqrt(k)`, for `l <= cap`.
    sh: Vec<f64>,
}

impl CoefficientTails {
    fn new(kernel: &Kernel, cap: usize) -> Self {
        let spec = kernel.spec();
        let d = kernel.dim() as f64;
        let s = kernel.smoothness();
        // Explicit summation far beyond the cap, then a power-law remainder.
        let (horizon, decay) = match spec {
            KernelSpec::Truncated { degree, .. } => (*degree, None),
            _ => ((16 * cap).max(1 << 20), Some(2.0 * s - d + 1.0)),
        };
        let c_all = kernel.legendre_weights(horizon.max(cap));
        let mut s0 = vec![0.0; cap + 1];
        let mut sh = vec![0.0; cap + 1];
        let (mut r0, mut rh) = match decay {
            Some(p) => {
                let m = horizon as f64;
                let cm = c_all[horizon] * m.powf(p);
                let a = m + 0.5;
                // 5% safety on the remainder estimate.
                (
                    1.05 * cm * a.powf(1.0 - p) / (p - 1.0),
                    1.05 * cm * a.powf(0.5 - p) / (p - 0.5),
                )
            }
            None => (0.0, 0.0),
        };
        for l in (1..c_all.len()).rev() {
            if l <= cap {
                s0[l] = r0;
                sh[l] = rh;
            }
            r0 += c_all[l];
            rh += c_all[l] / (l as f64).sqrt();
        }
        s0[0] = r0;
        sh[0] = rh;
        if let KernelSpec::CuiFreeden = spec {
            for (l, v) in s0.iter_mut().enumerate() {
                *v = 1.0 / (l as f64 + 1.0);
            }
        }
        let mut c = c_all;
        c.truncate(cap + 1);
        Self { c, s0, sh }
    }

    fn cap(&self) -> usize {
        self.s0.len() - 1
    }

    /// Bound on `|sum_{l > big_l} c_l P_l(cos t)|` given `sin t`.
    fn pair_bound(&self, big_l: usize, sin_t: Option<f64>) -> f64 {
        let Some(st) = sin_t else {
            return self.s0[big_l];
        };
        if st <= 0.0 {
            return self.s0[big_l];
        }
        // Bernstein beats the trivial bound once l > 2 / (pi sin t).
        let g = (2.0 / (PI * st)).sqrt();
        let cross = (2.0 / (PI * st)).ceil();
        if cross > self.cap() as f64 {
            return self.s0[big_l];
        }
        let k = (cross as usize).max(big_l);
        (self.s0[big_l] - self.s0[k]) + g * self.sh[k]
    }
}

/// Pair geometry: `z = x_i . x_j` and `sin` of the angle for off-diagonal pairs.
fn pair_geometry(x: &PointSet) -> Vec<(f64, f64)> {
    let n = x.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let t = dist2(x.point(i), x.point(j));
            let z = (1.0 - 0.5 * t).clamp(-1.0, 1.0);
            // sin^2 = 1 - z^2 = t (4 - t) / 4, accurate near both poles.
            let sin_t = (0.25 * t * (4.0 - t)).max(0.0).sqrt();
            out.push((z, sin_t));
        }
    }
    out
}

fn offdiag_bound(
    tails: &CoefficientTails,
    geom: &[(f64, f64)],
    big_l: usize,
    bernstein: bool,
    n: usize,
) -> f64 {
    let s: ExactSum = geom
        .iter()
        .map(|&(_, st)| tails.pair_bound(big_l, bernstein.then_some(st)))
        .collect();
    let nf = n as f64;
    2.0 * s.value() / (nf * nf)
}

fn report(
    space: &SobolevSpace,
    x: &PointSet,
    tails: &CoefficientTails,
    geom: &[(f64, f64)],
    ell_max: usize,
) -> Result<HarmonicReport> {
    let d = space.dim();
    let n = x.len();
    let nf = n as f64;
    let mut w = tails.c[..=ell_max].to_vec();
    w[0] = 0.0;
    let ev = LegendreEvaluator::new(d, ell_max.max(1))?;
    let mut acc = geom
        .par_chunks(256)
        .map(|chunk| {
            let mut s = ExactSum::new();
            for &(z, _) in chunk {
                s.add(ev.weighted_sum(&w, z));
            }
            s
        })
        .reduce(ExactSum::new, |mut a, b| {
            a.merge(&b);
            a
        });
    acc.double();
    let diag: f64 = w.iter().sum();
    let p = nf * diag;
    acc.add(p);
    acc.add(nf.mul_add(diag, -p));
    let partial_sum = acc.value() / (nf * nf);
    let tail_bound = tails.s0[ell_max];
    let diagonal_tail = tail_bound / nf;
    let refined_bound = offdiag_bound(tails, geom, ell_max, d == 2, n);
    Ok(HarmonicReport {
        ell_max,
        partial_sum,
        diagonal_tail,
        estimate: partial_sum + diagonal_tail,
        tail_bound,
        refined_bound,
    })
}

/// Harmonic-route squared worst-case error truncated at degree `ell_max`.
pub fn wce_harmonic(space: &SobolevSpace, x: &PointSet, ell_max: usize) -> Result<HarmonicReport> {
    space.check(x)?;
    if ell_max < 1 {
        return Err(invalid("ell_max must be at least 1"));
    }
    let tails = CoefficientTails::new(space.kernel(), ell_max);
    let geom = pair_geometry(x);
    report(space, x, &tails, &geom, ell_max)
}

/// Harmonic route with the smallest degree whose refined bound is below
/// `target` (searched up to [`AUTO_MAX_DEGREE`]; if even that is not enough
/// the report carries the bound actually achieved).
pub fn wce_harmonic_auto(space: &SobolevSpace, x: &PointSet, target: f64) -> Result<HarmonicReport> {
    space.check(x)?;
    if !(target > 0.0) {
        return Err(invalid("target bound must be positive"));
    }
    let cap = match space.spec() {
        KernelSpec::Truncated { degree, .. } => *degree,
        _ => AUTO_MAX_DEGREE,
    };
    let tails = CoefficientTails::new(space.kernel(), cap);
    let geom = pair_geometry(x);
    let bern = space.dim() == 2;
    let n = x.len();
    let (mut lo, mut hi) = (1usize, cap);
    if offdiag_bound(&tails, &geom, hi, bern, n) <= target {
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if offdiag_bound(&tails, &geom, mid, bern, n) <= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
    }
    report(space, x, &tails, &geom, hi)
}
