//! Spherical cap discrepancies and separation diagnostics.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clamp_radicand, wce_squared_raw, SobolevSpace};
use crate::error::{invalid, Result};
use crate::rng::sub_rng;
use crate::special::gauss_legendre;
use crate::sphere::{cap_measure_cos, dist2, dot, gamma_d, PointSet};
use crate::sum::ExactSum;

/// Centers drawn per independent random stream.
const CENTER_BLOCK: usize = 512;

/// Cap `L2` discrepancy through the distance-kernel identity
/// `D_L2 = sqrt(gamma_d) * wce(H^{(d+1)/2})`.
pub fn cap_l2_discrepancy(x: &PointSet) -> Result<f64> {
    let d = x.dim();
    let space = SobolevSpace::gen_distance(d, (d as f64 + 1.0) / 2.0)?;
    let w2 = clamp_radicand(wce_squared_raw(&space, x))?;
    Ok((gamma_d(d)? * w2).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectL2Estimate {
    /// Estimate of `D_L2`.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    /// Estimate of `D_L2^2` (mean over centers).
    pub squared: f64,
    /// Standard error of `squared`.
    pub squared_std_error: f64,
    pub n_centers: usize,
    pub n_theta: usize,
    pub seed: u64,
}

fn random_direction<R: Rng>(rng: &mut R, amb: usize, out: &mut [f64]) {
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut().take(amb) {
            *v = rng.sample(StandardNormal);
            n2 += *v * *v;
        }
        if n2 > 1e-20 {
            let n = n2.sqrt();
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// `int_{-1}^{1} (#{y_i >= u}/N - sigma(u))^2 du` for one center, with an
/// `n_theta`-point Gauss-Legendre rule on every interval between sorted
/// heights `y_i`. In `u = cos(theta)` this is the radial integral of the
/// cap `L2` discrepancy.
fn center_integral(ys: &mut [f64], d: usize, nodes: &[f64], weights: &[f64]) -> f64 {
    ys.sort_unstable_by(f64::total_cmp);
    let n = ys.len();
    let nf = n as f64;
    let mut total = ExactSum::new();
    let mut lo = -1.0;
    for m in 0..=n {
        let hi = if m < n { ys[m].clamp(-1.0, 1.0) } else { 1.0 };
        if hi > lo {
            let frac = (n - m) as f64 / nf;
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let mut s = 0.0;
            for (t, w) in nodes.iter().zip(weights) {
                let u = mid + half * t;
                let e = frac - cap_measure_cos(d, u);
                s += w * e * e;
            }
            total.add(half * s);
        }
        lo = lo.max(hi);
    }
    total.value()
}

/// Monte Carlo estimate of the cap `L2` discrepancy from its definition:
/// uniformly random cap centers, quadrature over the cap radius.
pub fn cap_l2_discrepancy_direct(
    x: &PointSet,
    n_centers: usize,
    n_theta: usize,
    seed: u64,
) -> Result<DirectL2Estimate> {
    if n_centers < 2 || n_theta < 1 {
        return Err(invalid("need at least 2 centers and 1 quadrature node"));
    }
    let d = x.dim();
    let amb = x.ambient_dim();
    let (nodes, weights) = gauss_legendre(n_theta);
    let blocks = n_centers.div_ceil(CENTER_BLOCK);
    let values: Vec<f64> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = sub_rng(seed, b as u64);
            let count = CENTER_BLOCK.min(n_centers - b * CENTER_BLOCK);
            let mut c = vec![0.0; amb];
            let mut ys = vec![0.0; x.len()];
            (0..count)
                .map(|_| {
                    random_direction(&mut rng, amb, &mut c);
                    for (y, p) in ys.iter_mut().zip(x.iter()) {
                        *y = dot(&c, p);
                    }
                    center_integral(&mut ys, d, &nodes, &weights)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let nf = values.len() as f64;
    let mean = values.iter().copied().collect::<ExactSum>().value() / nf;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<ExactSum>()
        .value()
        / (nf - 1.0);
    let se2 = (var / nf).sqrt();
    let value = mean.max(0.0).sqrt();
    let std_error = if value > 0.0 { se2 / (2.0 * value) } else { se2.sqrt() };
    Ok(DirectL2Estimate {
        value,
        std_error,
        squared: mean,
        squared_std_error: se2,
        n_centers,
        n_theta,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinfEstimate {
    /// Largest cap deviation found; a lower bound on the true supremum.
    pub value: f64,
    /// Closed-form `D_L2` of the same set.
    pub l2: f64,
    /// True when `D_L2 > sqrt(2) * value`, i.e. the candidate caps missed the
    /// worst cap by more than the known inequality allows.
    pub candidate_gap: bool,
    pub n_candidates: usize,
    pub seed: u64,
}

fn center_linf(ys: &mut [f64], d: usize) -> f64 {
    ys.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = ys.len();
    let nf = n as f64;
    let mut best = 0.0f64;
    let mut k = 0;
    while k < n {
        let u = ys[k];
        let mut j = k;
        while j < n && ys[j] == u {
            j += 1;
        }
        let sigma = cap_measure_cos(d, u);
        // Closed cap holds the first j points, the open one the first k.
        best = best
            .max((j as f64 / nf - sigma).abs())
            .max((k as f64 / nf - sigma).abs());
        k = j;
    }
    best
}

/// Lower-bound estimate of the cap `L_inf` discrepancy. Candidate caps are
/// centered at the points of `x` and at `n_extra_centers` random directions;
/// for each center every point height is tried as a closed and as an open
/// boundary.
pub fn cap_linf_discrepancy_estimate(
    x: &PointSet,
    n_extra_centers: usize,
    seed: u64,
) -> Result<LinfEstimate> {
    let d = x.dim();
    let amb = x.ambient_dim();
    let n = x.len();
    let total = n + n_extra_centers;
    let value = (0..total)
        .into_par_iter()
        .map(|c| {
            let center: Vec<f64> = if c < n {
                x.point(c).to_vec()
            } else {
                let mut rng = sub_rng(seed, (c - n) as u64);
                let mut v = vec![0.0; amb];
                random_direction(&mut rng, amb, &mut v);
                v
            };
            let mut ys: Vec<f64> = x.iter().map(|p| dot(&center, p)).collect();
            center_linf(&mut ys, d)
        })
        .reduce(|| 0.0, f64::max);
    let l2 = cap_l2_discrepancy(x)?;
    Ok(LinfEstimate {
        value,
        l2,
        candidate_gap: l2 > std::f64::consts::SQRT_2 * value,
        n_candidates: total,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyRReport {
    /// Largest number of points in a point-centered cap of radius `radius`.
    pub max_cap_count: usize,
    /// Geodesic cap radius `c1 N^{-1/d}`.
    pub radius: f64,
    /// Minimum pairwise Euclidean distance times `N^{1/d}`.
    pub min_separation: f64,
    pub note: String,
}

/// Property R surrogate: counts in caps centered at the points themselves.
/// Any cap of radius `r` lies inside a point-centered cap of radius `2r`, so
/// the supremum over all centers is bounded by this count at doubled `c1`.
pub fn property_r_check(x: &PointSet, c1: f64) -> Result<PropertyRReport> {
    if !(c1 > 0.0) {
        return Err(invalid("c1 must be positive"));
    }
    let n = x.len();
    let d = x.dim() as f64;
    let scale = (n as f64).powf(1.0 / d);
    let radius = (c1 / scale).min(std::f64::consts::PI);
    // Geodesic radius r corresponds to squared chord 2 - 2 cos r.
    let chord2 = 2.0 - 2.0 * radius.cos();
    let (max_cap_count, min_d2) = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.point(i);
            let mut count = 0;
            let mut m = f64::INFINITY;
            for j in 0..n {
                let t = dist2(xi, x.point(j));
                if t <= chord2 {
                    count += 1;
                }
                if j != i {
                    m = m.min(t);
                }
            }
            (count, m)
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
    let min_separation = if n > 1 { min_d2.sqrt() * scale } else { f64::INFINITY };
    Ok(PropertyRReport {
        max_cap_count,
        radius,
        min_separation,
        note: "point-centered caps only; the supremum over all caps is bounded by the count at 2*c1"
            .into(),
    })
}
