//! Point sets, caps and the global constants of `S^d`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::special::{adaptive_simpson, ln_gamma};

/// Norms within this distance of 1 are kept verbatim.
pub const NORM_EXACT_TOL: f64 = 1e-12;
/// Norms within this distance of 1 are renormalized; anything farther is rejected.
pub const NORM_RENORM_TOL: f64 = 1e-8;

/// `N` unit vectors in `R^{d+1}`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    label: Option<String>,
}

impl PointSet {
    /// Builds a point set on `S^d` from explicit vectors.
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let amb = dim + 1;
        let mut coords = Vec::with_capacity(points.len() * amb);
        for (i, p) in points.iter().enumerate() {
            if p.len() != amb {
                return Err(invalid(format!(
                    "point {i} has {} coordinates, expected {amb}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a point set from a flat coordinate buffer of length `N (d+1)`.
    pub fn from_flat(dim: usize, mut coords: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("sphere dimension must be at least 2, got {dim}")));
        }
        let amb = dim + 1;
        if coords.is_empty() || coords.len() % amb != 0 {
            return Err(invalid(format!(
                "coordinate buffer of length {} does not hold a nonempty set of {amb}-vectors",
                coords.len()
            )));
        }
        for (index, p) in coords.chunks_mut(amb).enumerate() {
            normalize_checked(p).map_err(|norm| Error::NotOnSphere { index, norm })?;
        }
        Ok(Self {
            dim,
            coords,
            label: None,
        })
    }

    /// Construction for generators whose output is unit length by design:
    /// every vector is divided by its norm.
    pub(crate) fn from_directions(dim: usize, mut coords: Vec<f64>) -> Self {
        let amb = dim + 1;
        debug_assert!(!coords.is_empty() && coords.len() % amb == 0);
        for p in coords.chunks_mut(amb) {
            let n = norm(p);
            if (n - 1.0).abs() > NORM_EXACT_TOL {
                p.iter_mut().for_each(|v| *v /= n);
            }
        }
        Self {
            dim,
            coords,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Sphere dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ambient dimension `d + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.dim + 1
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (self.dim + 1)
    }

    /// Always false: a point set holds at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let a = self.dim + 1;
        &self.coords[i * a..(i + 1) * a]
    }

    pub fn iter(&self) -> std::slice::Chunks<'_, f64> {
        self.coords.chunks(self.dim + 1)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(|p| p.to_vec()).collect()
    }

    /// Applies the matrix `q` (row-major, `(d+1) x (d+1)`) to every point.
    pub fn transformed(&self, q: &[Vec<f64>]) -> Result<Self> {
        let a = self.ambient_dim();
        if q.len() != a || q.iter().any(|r| r.len() != a) {
            return Err(invalid("transformation matrix has the wrong shape"));
        }
        let mut out = Vec::with_capacity(self.coords.len());
        for p in self.iter() {
            for row in q {
                out.push(dot(row, p));
            }
        }
        let mut x = Self::from_flat(self.dim, out)?;
        x.label = self.label.clone();
        Ok(x)
    }

    /// Reorders the points: output point `k` is input point `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(invalid("permutation length differs from the point count"));
        }
        let mut coords = Vec::with_capacity(self.coords.len());
        for &k in perm {
            if k >= n || std::mem::replace(&mut seen[k], true) {
                return Err(invalid("not a permutation"));
            }
            coords.extend_from_slice(self.point(k));
        }
        Ok(Self {
            dim: self.dim,
            coords,
            label: self.label.clone(),
        })
    }

    /// Concatenates two point sets of the same dimension.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        if self.dim != other.dim {
            return Err(invalid("cannot concatenate point sets of different dimension"));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self {
            dim: self.dim,
            coords,
            label: self.label.clone(),
        })
    }
}

/// Returns `Err(norm)` when the vector is too far from the sphere.
fn normalize_checked(p: &mut [f64]) -> std::result::Result<(), f64> {
    let n = norm(p);
    if !n.is_finite() || (n - 1.0).abs() > NORM_RENORM_TOL {
        return Err(n);
    }
    if (n - 1.0).abs() > NORM_EXACT_TOL {
        p.iter_mut().for_each(|v| *v /= n);
    }
    Ok(())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean distance, computed from coordinate differences so that
/// nearby points keep full relative accuracy.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closed spherical cap `{ y : y . center >= cos theta }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    center: Vec<f64>,
    theta: f64,
}

impl Cap {
    pub fn new(center: Vec<f64>, theta: f64) -> Result<Self> {
        if (norm(&center) - 1.0).abs() > NORM_EXACT_TOL {
            return Err(invalid("cap center must be a unit vector"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(invalid(format!("cap radius {theta} outside [0, pi]")));
        }
        Ok(Self { center, theta })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.theta >= PI || dot(&self.center, x) >= self.theta.cos()
    }

    /// Normalized measure of the cap on `S^d` with `d = center.len() - 1`.
    pub fn measure(&self) -> f64 {
        cap_measure_unchecked(self.center.len() - 1, self.theta)
    }

    /// Number of points of `x` inside the cap.
    pub fn count(&self, x: &PointSet) -> usize {
        x.iter().filter(|p| self.contains(p)).count()
    }
}

/// Surface area `omega_d` of `S^d`.
pub fn surface_area(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(invalid("surface area needs d >= 1"));
    }
    Ok(surface_area_unchecked(d))
}

fn surface_area_unchecked(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    (2.0f64.ln() + h * PI.ln() - ln_gamma(h)).exp()
}

/// `gamma_d = (1/d) omega_{d-1} / omega_d`.
pub fn gamma_d(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(invalid("gamma_d needs d >= 2"));
    }
    Ok(surface_area_unchecked(d - 1) / surface_area_unchecked(d) / d as f64)
}

/// `gamma_d` through `Gamma((d+1)/2) / (sqrt(pi) Gamma(d/2)) / d`.
pub fn gamma_d_ratio_form(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(invalid("gamma_d needs d >= 2"));
    }
    let df = d as f64;
    Ok((ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / PI.sqrt() / df)
}

/// Normalized measure of a cap of geodesic radius `theta` on `S^d`.
pub fn cap_measure(d: usize, theta: f64) -> Result<f64> {
    if d < 1 {
        return Err(invalid("cap measure needs d >= 1"));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("cap radius {theta} outside [0, pi]")));
    }
    Ok(cap_measure_unchecked(d, theta))
}

pub(crate) fn cap_measure_unchecked(d: usize, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta >= PI {
        return 1.0;
    }
    if d == 2 {
        return 0.5 * (1.0 - theta.cos());
    }
    let half = 0.5 * (d as f64);
    let small = |t: f64| {
        let s = t.sin();
        0.5 * statrs::function::beta::beta_reg(half, 0.5, (s * s).min(1.0))
    };
    if theta <= PI / 2.0 {
        small(theta)
    } else {
        1.0 - small(PI - theta)
    }
}

/// Normalized cap measure as a function of `u = cos theta`.
#[inline]
pub(crate) fn cap_measure_cos(d: usize, u: f64) -> f64 {
    if d == 2 {
        return (0.5 * (1.0 - u)).clamp(0.0, 1.0);
    }
    cap_measure_unchecked(d, u.clamp(-1.0, 1.0).acos())
}

/// Cap measure by adaptive Simpson integration of `sin^{d-1}`; the slow
/// reference path.
pub fn cap_measure_quadrature(d: usize, theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid(format!("cap radius {theta} outside [0, pi]")));
    }
    let ratio = match d {
        0 => return Err(invalid("cap measure needs d >= 1")),
        1 => 1.0 / PI,
        _ => surface_area_unchecked(d - 1) / surface_area_unchecked(d),
    };
    let p = d as i32 - 1;
    let integral = adaptive_simpson(|t: f64| t.sin().powi(p), 0.0, theta, 1e-13)?;
    Ok((ratio * integral).clamp(0.0, 1.0))
}

/// `V_{d-2s}(S^d)`: the mean of `|x - y|^{2s-d}` over independent uniform pairs.
pub fn v_const(d: usize, s: f64) -> Result<f64> {
    let df = d as f64;
    if d < 1 || !(s > df / 2.0) || !s.is_finite() {
        return Err(invalid(format!("v_const needs s > d/2, got d={d}, s={s}")));
    }
    let ln = (2.0 * s - 1.0) * 2.0f64.ln() + ln_gamma((df + 1.0) / 2.0) + ln_gamma(s)
        - 0.5 * PI.ln()
        - ln_gamma(df / 2.0 + s);
    Ok(ln.exp())
}

/// Uniformly random rotation of `R^{m}` (Gram-Schmidt on a Gaussian matrix,
/// sign-corrected so that the distribution is Haar).
pub fn random_rotation<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let mut q: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let mut ok = true;
        for i in 0..m {
            for j in 0..i {
                let c = dot(&q[i], &q[j]);
                let (head, tail) = q.split_at_mut(i);
                tail[0].iter_mut().zip(&head[j]).for_each(|(a, b)| *a -= c * b);
            }
            let n = norm(&q[i]);
            if n < 1e-8 {
                ok = false;
                break;
            }
            q[i].iter_mut().for_each(|v| *v /= n);
        }
        if ok {
            if determinant_sign(&q) < 0.0 {
                q[0].iter_mut().for_each(|v| *v = -*v);
            }
            return q;
        }
    }
}

fn determinant_sign(q: &[Vec<f64>]) -> f64 {
    let m = q.len();
    let mut a: Vec<Vec<f64>> = q.to_vec();
    let mut sign = 1.0;
    for c in 0..m {
        let p = (c..m)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap_or(c);
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            sign = -sign;
        }
        if a[c][c] < 0.0 {
            sign = -sign;
        }
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    sign
}
