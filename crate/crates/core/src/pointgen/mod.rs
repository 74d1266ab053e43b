//! Point-set generators.

mod partition;

pub use partition::{equal_area_partition, randomized_equal_area, Partition, Region};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::rng_from_seed;
use crate::sphere::PointSet;

/// `n` independent uniform points on `S^d` (normalized Gaussian vectors).
pub fn random_uniform(d: usize, n: usize, seed: u64) -> Result<PointSet> {
    if d < 2 {
        return Err(invalid("sphere dimension must be at least 2"));
    }
    if n < 1 {
        return Err(invalid("need at least one point"));
    }
    let amb = d + 1;
    let mut rng = rng_from_seed(seed);
    let mut coords = Vec::with_capacity(n * amb);
    let mut v = vec![0.0; amb];
    for _ in 0..n {
        loop {
            let mut n2 = 0.0f64;
            for c in v.iter_mut() {
                *c = rng.sample(StandardNormal);
                n2 += *c * *c;
            }
            if n2 > 1e-20 {
                coords.extend(v.iter().map(|c| c / n2.sqrt()));
                break;
            }
        }
    }
    Ok(PointSet::from_directions(d, coords).with_label(format!("random-{n}-seed{seed}")))
}

/// Generalized spiral points on `S^2`:
/// `z_j = 1 - (2j - 1)/N`, `phi_j = 1.8 sqrt(N) theta_j mod 2 pi`.
pub fn spiral(n: usize) -> Result<PointSet> {
    if n < 2 {
        return Err(invalid("spiral points need n >= 2"));
    }
    let nf = n as f64;
    let mut coords = Vec::with_capacity(3 * n);
    for j in 1..=n {
        let z = 1.0 - (2.0 * j as f64 - 1.0) / nf;
        let theta = z.acos();
        let phi = (1.8 * nf.sqrt() * theta).rem_euclid(2.0 * PI);
        let r = theta.sin();
        coords.extend_from_slice(&[r * phi.cos(), r * phi.sin(), z]);
    }
    Ok(PointSet::from_directions(2, coords).with_label(format!("spiral-{n}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polytope {
    Tetrahedron,
    Octahedron,
    Cube,
    Icosahedron,
}

impl std::str::FromStr for Polytope {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tetrahedron" => Ok(Self::Tetrahedron),
            "octahedron" => Ok(Self::Octahedron),
            "cube" => Ok(Self::Cube),
            "icosahedron" => Ok(Self::Icosahedron),
            other => Err(invalid(format!("unknown polytope '{other}'"))),
        }
    }
}

/// Vertices of a regular polytope, scaled onto `S^2`.
pub fn polytope(kind: Polytope) -> PointSet {
    let raw: Vec<[f64; 3]> = match kind {
        Polytope::Tetrahedron => vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ],
        Polytope::Octahedron => vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ],
        Polytope::Cube => {
            let mut v = Vec::new();
            for a in [1.0, -1.0] {
                for b in [1.0, -1.0] {
                    for c in [1.0, -1.0] {
                        v.push([a, b, c]);
                    }
                }
            }
            v
        }
        Polytope::Icosahedron => {
            let g = (1.0 + 5f64.sqrt()) / 2.0;
            let mut v = Vec::new();
            for a in [1.0, -1.0] {
                for b in [g, -g] {
                    v.push([0.0, a, b]);
                    v.push([a, b, 0.0]);
                    v.push([b, 0.0, a]);
                }
            }
            v
        }
    };
    let coords: Vec<f64> = raw
        .iter()
        .flat_map(|p| {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            [p[0] / n, p[1] / n, p[2] / n]
        })
        .collect();
    let name = format!("{kind:?}").to_lowercase();
    PointSet::from_directions(2, coords).with_label(name)
}
