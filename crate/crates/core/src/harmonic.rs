//! Normalized Gegenbauer polynomials `P_l^(d)` with `P_l^(d)(1) = 1`,
//! harmonic dimensions and the addition-theorem sums `Phi_l`.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::special::ln_gamma;
use crate::sphere::{dist2, PointSet};
use crate::sum::ExactSum;

/// Inputs this far outside `[-1, 1]` are clamped rather than rejected.
pub const ARG_CLAMP_TOL: f64 = 1e-12;
/// `Phi_l` values in `[-PHI_NEG_TOL, 0)` are clamped to zero.
pub const PHI_NEG_TOL: f64 = 1e-10;

/// Precomputed three-term recurrence
/// `P_l = A_l z P_{l-1} - B_l P_{l-2}` for a fixed sphere dimension.
#[derive(Debug, Clone)]
pub struct LegendreEvaluator {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl LegendreEvaluator {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        if dim < 2 {
            return Err(invalid(format!("Legendre polynomials need d >= 2, got {dim}")));
        }
        Ok(Self::with_parameter(dim, max_degree))
    }

    /// Same recurrence without the `d >= 2` restriction; `d + 2` families are
    /// needed for derivatives.
    fn with_parameter(dim: usize, max_degree: usize) -> Self {
        let df = dim as f64;
        let mut a = vec![0.0; max_degree + 1];
        let mut b = vec![0.0; max_degree + 1];
        for l in 2..=max_degree {
            let lf = l as f64;
            a[l] = (2.0 * lf + df - 3.0) / (lf + df - 2.0);
            b[l] = (lf - 1.0) / (lf + df - 2.0);
        }
        let ev = Self { dim, a, b };
        if cfg!(debug_assertions) {
            let mut p = vec![0.0; max_degree + 1];
            ev.eval_all(1.0, &mut p);
            for (l, v) in p.iter().enumerate() {
                let lf = l as f64;
                debug_assert!((v - 1.0).abs() <= 1e-12 + 1e-16 * lf * lf, "P_{l}(1) = {v}");
            }
        }
        ev
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 1
    }

    /// `P_l(z)` for `l <= max_degree`; `z` is used as given.
    pub fn eval(&self, l: usize, z: f64) -> f64 {
        assert!(l <= self.max_degree(), "degree {l} beyond evaluator range");
        if l == 0 {
            return 1.0;
        }
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=l {
            let p2 = self.a[k] * z * p1 - self.b[k] * p0;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    /// Fills `out[l] = P_l(z)` for `l < out.len()`.
    pub fn eval_all(&self, z: f64, out: &mut [f64]) {
        assert!(out.len() <= self.a.len(), "output longer than evaluator range");
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() > 1 {
            out[1] = z;
        }
        for k in 2..out.len() {
            out[k] = self.a[k] * z * out[k - 1] - self.b[k] * out[k - 2];
        }
    }

    /// `sum_l w[l] P_l(z)` over `l < w.len()`.
    #[inline]
    pub fn weighted_sum(&self, w: &[f64], z: f64) -> f64 {
        assert!(w.len() <= self.a.len(), "weights longer than evaluator range");
        match w.len() {
            0 => return 0.0,
            1 => return w[0],
            _ => {}
        }
        let (mut p0, mut p1) = (1.0, z);
        let mut s = w[0] + w[1] * z;
        for k in 2..w.len() {
            let p2 = self.a[k] * z * p1 - self.b[k] * p0;
            s += w[k] * p2;
            p0 = p1;
            p1 = p2;
        }
        s
    }
}

fn clamp_arg(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 + ARG_CLAMP_TOL) {
        return Err(invalid(format!("argument {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Normalized Gegenbauer polynomial `P_l^(d)(x)`.
pub fn legendre_p(d: usize, ell: usize, x: f64) -> Result<f64> {
    let x = clamp_arg(x)?;
    Ok(LegendreEvaluator::new(d, ell)?.eval(ell, x))
}

/// Derivative `P_l^(d)'(x) = l (l + d - 1) / d * P_{l-1}^(d+2)(x)`.
pub fn legendre_p_derivative(d: usize, ell: usize, x: f64) -> Result<f64> {
    let x = clamp_arg(x)?;
    if d < 2 {
        return Err(invalid("Legendre polynomials need d >= 2"));
    }
    if ell == 0 {
        return Ok(0.0);
    }
    let lf = ell as f64;
    let df = d as f64;
    let ev = LegendreEvaluator::with_parameter(d + 2, ell - 1);
    Ok(lf * (lf + df - 1.0) / df * ev.eval(ell - 1, x))
}

/// Evaluator for derivatives of weighted sums, `d/dz sum w_l P_l^(d)(z)`.
#[derive(Debug, Clone)]
pub(crate) struct DerivativeSeries {
    shifted: LegendreEvaluator,
    weights: Vec<f64>,
}

impl DerivativeSeries {
    /// `w[l]` multiplies `P_l^(d)`.
    pub(crate) fn new(d: usize, w: &[f64]) -> Self {
        let df = d as f64;
        let n = w.len().saturating_sub(1);
        let weights: Vec<f64> = (0..n)
            .map(|k| {
                let l = (k + 1) as f64;
                w[k + 1] * l * (l + df - 1.0) / df
            })
            .collect();
        Self {
            shifted: LegendreEvaluator::with_parameter(d + 2, n.max(1)),
            weights,
        }
    }

    pub(crate) fn eval(&self, z: f64) -> f64 {
        self.shifted.weighted_sum(&self.weights, z)
    }
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // r * (n - i) is divisible by (i + 1) at every step.
        r = r.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(r)
}

/// Dimension `Z(d, n)` of the degree-`n` spherical harmonics on `S^d`,
/// exact in integer arithmetic.
pub fn z_dim(d: usize, n: usize) -> Result<u64> {
    if d < 2 {
        return Err(invalid(format!("Z(d, n) needs d >= 2, got {d}")));
    }
    let (d, n) = (d as u64, n as u64);
    // Z = (2n + d - 1) C(n + d - 2, n) / (d - 1)
    let overflow = || Error::Overflow(format!("Z({d}, {n})"));
    let c = binomial_u128(n + d - 2, n).ok_or_else(overflow)?;
    let z = c
        .checked_mul((2 * n + d - 1) as u128)
        .ok_or_else(overflow)?
        / (d - 1) as u128;
    u64::try_from(z).map_err(|_| overflow())
}

/// `Z(d, n)` as a float; falls back to log-Gamma when the integer overflows.
pub fn z_dim_f64(d: usize, n: usize) -> f64 {
    match z_dim(d, n) {
        Ok(z) => z as f64,
        Err(_) => {
            let (df, nf) = (d as f64, n as f64);
            (2.0 * nf + df - 1.0)
                * (ln_gamma(nf + df - 1.0) - ln_gamma(df) - ln_gamma(nf + 1.0)).exp()
        }
    }
}

/// Eigenvalue `l (l + d - 1)` of the negative Laplace-Beltrami operator.
pub fn eigenvalue(d: usize, ell: usize) -> f64 {
    let l = ell as f64;
    l * (l + d as f64 - 1.0)
}

/// `Phi_0 ..= Phi_{ell_max}` of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    /// `values[l] = Phi_l`; `values[0]` is always 1.
    pub values: Vec<f64>,
    /// Number of entries whose round-off went slightly negative and were set to 0.
    pub clamped: usize,
}

impl PhiTable {
    pub fn get(&self, ell: usize) -> f64 {
        self.values[ell]
    }
}

/// `Phi_l(X) = (1/N^2) sum_{i,j} Z(d,l) P_l(x_i . x_j)` for `l = 0..=ell_max`.
pub fn phi_table(x: &PointSet, ell_max: usize) -> Result<PhiTable> {
    let d = x.dim();
    let ev = LegendreEvaluator::new(d, ell_max)?;
    let n = x.len();
    let m = ell_max + 1;
    let mut sums = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![ExactSum::new(); m];
            let mut p = vec![0.0; m];
            let xi = x.point(i);
            for j in i + 1..n {
                let z = 1.0 - 0.5 * dist2(xi, x.point(j));
                ev.eval_all(z.clamp(-1.0, 1.0), &mut p);
                for (a, v) in acc.iter_mut().zip(&p) {
                    a.add(*v);
                }
            }
            acc
        })
        .reduce(
            || vec![ExactSum::new(); m],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(u, v)| u.merge(v));
                a
            },
        );
    let nf = n as f64;
    let mut values = Vec::with_capacity(m);
    let mut clamped = 0;
    for (l, s) in sums.iter_mut().enumerate() {
        s.double();
        s.add(nf);
        let phi = z_dim_f64(d, l) * (s.value() / (nf * nf));
        if phi < 0.0 {
            if phi < -PHI_NEG_TOL {
                return Err(Error::Consistency(format!(
                    "Phi_{l} = {phi:e} is negative beyond round-off"
                )));
            }
            clamped += 1;
            values.push(0.0);
        } else {
            values.push(phi);
        }
    }
    Ok(PhiTable { values, clamped })
}

/// Single addition-theorem sum `Phi_l(X)`.
pub fn phi_sum(ell: usize, x: &PointSet) -> Result<f64> {
    if ell == 0 {
        return Err(invalid("phi_sum needs l >= 1"));
    }
    Ok(phi_table(x, ell)?.values[ell])
}

/// Largest `t <= t_max` with `Phi_l <= tol Z(d,l)` for all `1 <= l <= t`.
pub fn design_strength(x: &PointSet, t_max: usize, tol: f64) -> Result<usize> {
    if t_max < 1 {
        return Err(invalid("t_max must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let table = phi_table(x, t_max)?;
    let d = x.dim();
    Ok((1..=t_max)
        .take_while(|&l| table.values[l] <= tol * z_dim_f64(d, l))
        .last()
        .unwrap_or(0))
}

/// Delsarte-Goethals-Seidel lower bound on the size of a spherical `t`-design.
pub fn dgs_lower_bound(d: usize, t: usize) -> Result<u64> {
    if d < 2 || t < 1 {
        return Err(invalid("DGS bound needs d >= 2 and t >= 1"));
    }
    let (d, h) = (d as u64, (t / 2) as u64);
    let overflow = || Error::Overflow(format!("DGS bound for d={d}, t={t}"));
    let c = |n: u64| binomial_u128(n, d).ok_or_else(overflow);
    let v = if t % 2 == 0 {
        c(d + h)? + c(d + h - 1)?
    } else {
        2 * c(d + h)?
    };
    u64::try_from(v).map_err(|_| overflow())
}
