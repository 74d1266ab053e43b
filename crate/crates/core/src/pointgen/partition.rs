//! Equal-area partition of `S^2` into polar caps and collars of sectors.
//!
//! Zonal construction: two polar caps of area `4 pi / N`; the band between
//! them is split into collars whose angular height is close to the side of an
//! ideal square region; the ideal (fractional) region count of each collar is
//! rounded with the rounding error carried into the next collar so the
//! counts sum to `N`. Collar boundaries are then placed at the heights that
//! make every collar hold exactly its region count, and each collar is cut
//! into equal azimuthal sectors. Successive collars are rotated against each
//! other to avoid aligned sector edges.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;
use crate::sphere::PointSet;

const TAU: f64 = 2.0 * PI;

/// `{ z_bot <= z <= z_top, phi_start <= phi <= phi_end (mod 2 pi) }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub z_top: f64,
    pub z_bot: f64,
    pub phi_start: f64,
    pub phi_end: f64,
}

impl Region {
    /// Normalized area.
    pub fn area(&self) -> f64 {
        (self.z_top - self.z_bot) * (self.phi_end - self.phi_start) / (2.0 * TAU)
    }

    fn full_turn(&self) -> bool {
        self.phi_end - self.phi_start >= TAU - 1e-12
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        const EPS: f64 = 1e-12;
        let z = p[2];
        if z > self.z_top + EPS || z < self.z_bot - EPS {
            return false;
        }
        if self.full_turn() || (p[0] == 0.0 && p[1] == 0.0) {
            return true;
        }
        let phi = p[1].atan2(p[0]);
        let off = (phi - self.phi_start).rem_euclid(TAU);
        off <= self.phi_end - self.phi_start + EPS || off >= TAU - EPS
    }

    /// Point with mid colatitude and mid azimuth (the pole for polar caps).
    pub fn center(&self) -> [f64; 3] {
        if self.full_turn() {
            if self.z_top >= 1.0 {
                return [0.0, 0.0, 1.0];
            }
            if self.z_bot <= -1.0 {
                return [0.0, 0.0, -1.0];
            }
        }
        let theta = 0.5 * (self.z_top.acos() + self.z_bot.acos());
        let phi = 0.5 * (self.phi_start + self.phi_end);
        [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
    }

    /// Normalized direction of the region's center of mass.
    pub fn centroid(&self) -> [f64; 3] {
        let (zt, zb) = (self.z_top, self.z_bot);
        let zbar = 0.5 * (zt + zb);
        if self.full_turn() {
            return [0.0, 0.0, zbar.signum()];
        }
        // Mean of sqrt(1 - z^2) over z in [zb, zt].
        let f = |z: f64| 0.5 * (z * (1.0 - z * z).max(0.0).sqrt() + z.asin());
        let rbar = (f(zt) - f(zb)) / (zt - zb);
        let dp = self.phi_end - self.phi_start;
        let sinc = (0.5 * dp).sin() / (0.5 * dp);
        let pm = 0.5 * (self.phi_start + self.phi_end);
        let v = [rbar * sinc * pm.cos(), rbar * sinc * pm.sin(), zbar];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    }

    /// Uniform sample: `z` is uniform by Archimedes' theorem.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let z: f64 = self.z_bot + (self.z_top - self.z_bot) * rng.random::<f64>();
        let phi = self.phi_start + (self.phi_end - self.phi_start) * rng.random::<f64>();
        let r = (1.0 - z * z).max(0.0).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    fn point(&self, z: f64, phi: f64) -> [f64; 3] {
        let r = (1.0 - z * z).max(0.0).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    }

    /// Euclidean diameter by dense sampling of the boundary (the farthest
    /// pair of a region of this shape lies on its boundary).
    pub fn diameter(&self) -> f64 {
        const K: usize = 48;
        let mut pts = Vec::with_capacity(4 * K + 4);
        let dphi = self.phi_end - self.phi_start;
        for i in 0..=K {
            let phi = self.phi_start + dphi * i as f64 / K as f64;
            pts.push(self.point(self.z_top, phi));
            pts.push(self.point(self.z_bot, phi));
            let z = self.z_bot + (self.z_top - self.z_bot) * i as f64 / K as f64;
            pts.push(self.point(z, self.phi_start));
            pts.push(self.point(z, self.phi_end));
        }
        let mut best = 0.0f64;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
                best = best.max(d2);
            }
        }
        best.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    n: usize,
    regions: Vec<Region>,
    /// Region count per zone, north cap first.
    zone_counts: Vec<usize>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Equal-area partition of `S^2` into `n` regions.
pub fn equal_area_partition(n: usize) -> Result<Partition> {
    if n < 2 {
        return Err(invalid("equal-area partition needs n >= 2"));
    }
    if n == 2 {
        let regions = vec![
            Region {
                z_top: 1.0,
                z_bot: 0.0,
                phi_start: 0.0,
                phi_end: TAU,
            },
            Region {
                z_top: 0.0,
                z_bot: -1.0,
                phi_start: 0.0,
                phi_end: TAU,
            },
        ];
        return Ok(Partition {
            n,
            regions,
            zone_counts: vec![1, 1],
        });
    }
    let nf = n as f64;
    let area = 2.0 * TAU / nf;
    let theta_cap = (1.0 - 2.0 / nf).acos();
    let ideal = area.sqrt();
    let band = PI - 2.0 * theta_cap;
    let n_collars = ((band / ideal).round() as usize).max(1);
    let fitting = band / n_collars as f64;
    let mut ideal_counts = vec![1.0];
    for k in 0..n_collars {
        let t1 = theta_cap + k as f64 * fitting;
        let t2 = t1 + fitting;
        ideal_counts.push(TAU * (t1.cos() - t2.cos()) / area);
    }
    ideal_counts.push(1.0);
    let mut counts = Vec::with_capacity(ideal_counts.len());
    let mut carry = 0.0;
    for x in &ideal_counts {
        let m = (x + carry).round().max(1.0);
        carry += x - m;
        counts.push(m as usize);
    }
    // Carry rounding keeps the total; guard against pathological drift.
    let total: usize = counts.iter().sum();
    let last = counts.len() - 2;
    counts[last] = (counts[last] + n).checked_sub(total).filter(|&c| c >= 1).ok_or_else(|| {
        invalid(format!("collar rounding failed for n={n}"))
    })?;

    let mut regions = Vec::with_capacity(n);
    let mut cum = 0usize;
    let mut offset = 0.0f64;
    let zones = counts.len();
    for (i, &m) in counts.iter().enumerate() {
        let z_top = if i == 0 { 1.0 } else { 1.0 - 2.0 * cum as f64 / nf };
        cum += m;
        let z_bot = if i + 1 == zones { -1.0 } else { 1.0 - 2.0 * cum as f64 / nf };
        for k in 0..m {
            let start = TAU * (offset + k as f64 / m as f64);
            regions.push(Region {
                z_top,
                z_bot,
                phi_start: start,
                phi_end: start + TAU / m as f64,
            });
        }
        if i > 0 && i + 2 < zones {
            let (a, b) = (m as f64, counts[i + 1] as f64);
            offset += 0.5 * (1.0 / a - 1.0 / b) + gcd(m, counts[i + 1]) as f64 / (2.0 * a * b);
            offset = offset.rem_euclid(1.0);
        }
    }
    Ok(Partition {
        n,
        regions,
        zone_counts: counts,
    })
}

impl Partition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn zone_counts(&self) -> &[usize] {
        &self.zone_counts
    }

    pub fn areas(&self) -> Vec<f64> {
        self.regions.iter().map(Region::area).collect()
    }

    /// Region centers (mid colatitude, mid azimuth).
    pub fn centers(&self) -> PointSet {
        let coords: Vec<f64> = self.regions.iter().flat_map(|r| r.center()).collect();
        PointSet::from_directions(2, coords).with_label(format!("equal-area-{}", self.n))
    }

    /// Normalized region centroids.
    pub fn centroids(&self) -> PointSet {
        let coords: Vec<f64> = self.regions.iter().flat_map(|r| r.centroid()).collect();
        PointSet::from_directions(2, coords).with_label(format!("equal-area-centroid-{}", self.n))
    }

    pub fn max_diameter(&self) -> f64 {
        self.regions.iter().map(Region::diameter).fold(0.0, f64::max)
    }

    /// `max diam * sqrt(n)`.
    pub fn diameter_constant(&self) -> f64 {
        self.max_diameter() * (self.n as f64).sqrt()
    }

    /// One uniform sample in every region.
    pub fn sample(&self, seed: u64) -> PointSet {
        let mut rng = rng_from_seed(seed);
        let coords: Vec<f64> = self.regions.iter().flat_map(|r| r.sample(&mut rng)).collect();
        PointSet::from_directions(2, coords)
            .with_label(format!("randomized-equal-area-{}-seed{seed}", self.n))
    }
}

/// One uniform random point from each region of the `n`-region partition.
pub fn randomized_equal_area(n: usize, seed: u64) -> Result<PointSet> {
    Ok(equal_area_partition(n)?.sample(seed))
}
