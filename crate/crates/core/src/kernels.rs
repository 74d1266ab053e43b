//! Zonal reproducing kernels for Sobolev spaces on the sphere and their
//! Laplace-Fourier coefficients.
//!
//! Every kernel is written as `K(x . y) = sum_l a_l Z(d,l) P_l(x . y)`.
//! Internally kernels are evaluated as functions of the squared chord
//! `t = |x - y|^2 = 2 - 2 x . y`, split as `K = c + term(t)` with a constant
//! `c`; worst-case errors only ever need `term`, which keeps cancellation low.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::harmonic::{eigenvalue, z_dim_f64, DerivativeSeries, LegendreEvaluator};
use crate::special::ln_gamma;
use crate::sphere::v_const;

/// Default absolute accuracy of the canonical-kernel series.
pub const CANONICAL_TOL: f64 = 1e-10;
/// Hard cap on canonical-series length.
pub const CANONICAL_MAX_TERMS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// Closed-form kernel for `H^{3/2}(S^2)`.
    CuiFreeden,
    /// Generalized distance kernel built from `|x - y|^{2s-d}`.
    GenDistance { d: usize, s: f64 },
    /// Coefficients `(1 + lambda_l)^{-s}`; `tol` is the series accuracy.
    Canonical { d: usize, s: f64, tol: f64 },
    /// Degrees `1..=degree` of `base`, without the constant term.
    Truncated { base: Box<KernelSpec>, degree: usize },
}

impl KernelSpec {
    pub fn gen_distance(d: usize, s: f64) -> Self {
        KernelSpec::GenDistance { d, s }
    }

    pub fn canonical(d: usize, s: f64) -> Self {
        KernelSpec::Canonical {
            d,
            s,
            tol: CANONICAL_TOL,
        }
    }

    pub fn truncated(base: KernelSpec, degree: usize) -> Self {
        KernelSpec::Truncated {
            base: Box::new(base),
            degree,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::CuiFreeden => 2,
            KernelSpec::GenDistance { d, .. } | KernelSpec::Canonical { d, .. } => *d,
            KernelSpec::Truncated { base, .. } => base.dim(),
        }
    }

    pub fn smoothness(&self) -> f64 {
        match self {
            KernelSpec::CuiFreeden => 1.5,
            KernelSpec::GenDistance { s, .. } | KernelSpec::Canonical { s, .. } => *s,
            KernelSpec::Truncated { base, .. } => base.smoothness(),
        }
    }

    /// Short tag used in reports: `cf`, `gd`, `canonical`, `truncated-cf-5`, ...
    pub fn tag(&self) -> String {
        match self {
            KernelSpec::CuiFreeden => "cf".into(),
            KernelSpec::GenDistance { .. } => "gd".into(),
            KernelSpec::Canonical { .. } => "canonical".into(),
            KernelSpec::Truncated { base, degree } => format!("truncated-{}-{degree}", base.tag()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(d={}, s={})", self.tag(), self.dim(), self.smoothness())
    }
}

/// `L = floor(s - d/2)`.
pub fn distance_order(d: usize, s: f64) -> usize {
    (s - d as f64 / 2.0).floor().max(0.0) as usize
}

fn check_gen_distance(d: usize, s: f64) -> Result<()> {
    let df = d as f64;
    if d < 2 {
        return Err(invalid(format!("sphere dimension must be at least 2, got {d}")));
    }
    if !s.is_finite() || s <= df / 2.0 {
        return Err(invalid(format!("need s > d/2, got d={d}, s={s}")));
    }
    let e = 2.0 * s - df;
    if (e / 2.0).fract() == 0.0 {
        return Err(invalid(format!(
            "2s - d = {e} is an even integer; the distance expansion terminates"
        )));
    }
    Ok(())
}

/// Signed distance-kernel coefficient
/// `alpha_l = V (-1)^{L+1} (d/2 - s)_l / (d/2 + s)_l`, evaluated as a
/// product of ratios so that large `l` does not overflow.
pub fn alpha_coeff(d: usize, s: f64, ell: usize) -> Result<f64> {
    check_gen_distance(d, s)?;
    if ell == 0 {
        return Err(invalid("alpha_l is defined for l >= 1"));
    }
    let v = v_const(d, s)?;
    Ok(v * sign_l(d, s) * pochhammer_ratio(d, s, ell))
}

/// `(d/2 - s)_l / (d/2 + s)_l`.
fn pochhammer_ratio(d: usize, s: f64, ell: usize) -> f64 {
    let h = d as f64 / 2.0;
    (0..ell).fold(1.0, |r, k| {
        let k = k as f64;
        r * (h - s + k) / (h + s + k)
    })
}

/// `(-1)^{L+1}`.
fn sign_l(d: usize, s: f64) -> f64 {
    if distance_order(d, s) % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Limit of `alpha_l l^{2s}` as `l -> infinity`.
pub fn alpha_asymptotic_constant(d: usize, s: f64) -> Result<f64> {
    check_gen_distance(d, s)?;
    let df = d as f64;
    let g = statrs::function::gamma::gamma(df / 2.0 - s);
    let ln = (2.0 * s - 1.0) * 2.0f64.ln() + ln_gamma((df + 1.0) / 2.0) + ln_gamma(s)
        - 0.5 * PI.ln();
    Ok(ln.exp() / (sign_l(d, s) * g))
}

/// `Q_L(z) = sum_{l=1}^{L} ((-1)^{L+1-l} - 1) alpha_l Z(d,l) P_l(z)`.
pub fn q_l_eval(d: usize, s: f64, z: f64) -> Result<f64> {
    check_gen_distance(d, s)?;
    if distance_order(d, s) == 0 {
        return Err(invalid(format!(
            "Q_L is only defined for s > d/2 + 1 (got s={s}, d={d})"
        )));
    }
    if !(z.abs() <= 1.0 + 1e-12) {
        return Err(invalid(format!("argument {z} outside [-1, 1]")));
    }
    let parts = DistanceParts::new(d, s)?;
    Ok(parts.q.eval(z.clamp(-1.0, 1.0)))
}

/// `sum_l w[l] P_l^(d)(z)` with fixed weights.
#[derive(Debug, Clone)]
struct Series {
    ev: LegendreEvaluator,
    w: Vec<f64>,
    dw: DerivativeSeries,
}

impl Series {
    fn new(d: usize, w: Vec<f64>) -> Result<Self> {
        let ev = LegendreEvaluator::new(d, w.len().max(2) - 1)?;
        let dw = DerivativeSeries::new(d, &w);
        Ok(Self { ev, w, dw })
    }

    #[inline]
    fn eval(&self, z: f64) -> f64 {
        self.ev.weighted_sum(&self.w, z)
    }

    #[inline]
    fn derivative(&self, z: f64) -> f64 {
        self.dw.eval(z)
    }

    fn len(&self) -> usize {
        self.w.len()
    }
}

/// Generalized distance kernel
/// `K = (1 - sigma) V + Q_L(z) + sigma t^p` with `sigma = (-1)^{L+1}`,
/// `p = s - d/2`.
#[derive(Debug, Clone)]
struct DistanceParts {
    v: f64,
    sigma: f64,
    p: f64,
    /// `Some(floor(p))` when `2p` is an odd integer.
    half_int: Option<i32>,
    q: Series,
}

impl DistanceParts {
    fn new(d: usize, s: f64) -> Result<Self> {
        check_gen_distance(d, s)?;
        let v = v_const(d, s)?;
        let l = distance_order(d, s);
        let sigma = sign_l(d, s);
        let mut w = vec![0.0; l + 1];
        for (ell, wl) in w.iter_mut().enumerate().skip(1) {
            let flip = if (l + 1 - ell) % 2 == 0 { 0.0 } else { -2.0 };
            *wl = flip * v * sigma * pochhammer_ratio(d, s, ell) * z_dim_f64(d, ell);
        }
        let p = s - d as f64 / 2.0;
        let half_int = {
            let tp = 2.0 * p;
            (tp.fract() == 0.0 && (tp as i64) % 2 == 1).then(|| p.floor() as i32)
        };
        Ok(Self {
            v,
            sigma,
            p,
            half_int,
            q: Series::new(d, w)?,
        })
    }

    #[inline]
    fn power(&self, t: f64) -> f64 {
        match self.half_int {
            Some(k) => t.powi(k) * t.sqrt(),
            None => t.powf(self.p),
        }
    }

    fn constant(&self) -> f64 {
        (1.0 - self.sigma) * self.v
    }

    #[inline]
    fn term(&self, t: f64) -> f64 {
        let mut r = self.sigma * self.power(t);
        if self.q.len() > 1 {
            r += self.q.eval(1.0 - 0.5 * t);
        }
        r
    }

    #[inline]
    fn term_derivative(&self, t: f64) -> f64 {
        let mut r = if t > 0.0 {
            self.sigma * self.p * self.power(t) / t
        } else {
            0.0
        };
        if self.q.len() > 1 {
            r -= 0.5 * self.q.derivative(1.0 - 0.5 * t);
        }
        r
    }

    /// `|alpha_l|` for `l >= 1`.
    fn abs_alpha(&self, d: usize, s: f64, ell: usize) -> f64 {
        (self.v * pochhammer_ratio(d, s, ell)).abs()
    }
}

#[derive(Debug, Clone)]
enum Form {
    CuiFreeden,
    Distance(DistanceParts),
    /// Canonical series accelerated against the distance kernel of the same
    /// smoothness: `K = 1 + kappa (K_gd - V) + sum_l (a_l - kappa |alpha_l|) Z P_l`.
    CanonicalAccelerated {
        gd: DistanceParts,
        kappa: f64,
        series: Series,
    },
    CanonicalDirect {
        series: Series,
    },
    Truncated {
        base: Box<Kernel>,
        series: Series,
    },
}

/// Validated kernel ready for evaluation.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    d: usize,
    s: f64,
    a0: f64,
    form: Form,
}

impl Kernel {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        let (d, s) = (spec.dim(), spec.smoothness());
        let (a0, form) = match spec {
            KernelSpec::CuiFreeden => (1.0, Form::CuiFreeden),
            KernelSpec::GenDistance { d, s } => {
                let parts = DistanceParts::new(*d, *s)?;
                (parts.v, Form::Distance(parts))
            }
            KernelSpec::Canonical { d, s, tol } => {
                if *d < 2 {
                    return Err(invalid("sphere dimension must be at least 2"));
                }
                if !s.is_finite() || *s <= *d as f64 / 2.0 {
                    return Err(invalid(format!("need s > d/2, got d={d}, s={s}")));
                }
                if !(*tol > 0.0) {
                    return Err(invalid("canonical series tolerance must be positive"));
                }
                (1.0, canonical_form(*d, *s, *tol)?)
            }
            KernelSpec::Truncated { base, degree } => {
                if *degree < 1 {
                    return Err(invalid("truncation degree must be at least 1"));
                }
                if matches!(**base, KernelSpec::Truncated { .. }) {
                    return Err(invalid("cannot truncate a truncated kernel"));
                }
                let base = Kernel::new(base)?;
                let mut w = vec![0.0; degree + 1];
                for (l, wl) in w.iter_mut().enumerate().skip(1) {
                    *wl = base.legendre_weight(l);
                }
                let series = Series::new(d, w)?;
                (
                    0.0,
                    Form::Truncated {
                        base: Box::new(base),
                        series,
                    },
                )
            }
        };
        Ok(Self {
            spec: spec.clone(),
            d,
            s,
            a0,
            form,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn smoothness(&self) -> f64 {
        self.s
    }

    /// Constant Laplace-Fourier coefficient `a_0`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Laplace-Fourier coefficient `a_l`.
    pub fn coeff(&self, ell: usize) -> f64 {
        if ell == 0 {
            return self.a0;
        }
        match &self.form {
            Form::CuiFreeden => {
                let l = ell as f64;
                1.0 / (l * (l + 1.0) * (2.0 * l + 1.0))
            }
            Form::Distance(p) => p.abs_alpha(self.d, self.s, ell),
            Form::CanonicalAccelerated { .. } | Form::CanonicalDirect { .. } => {
                (1.0 + eigenvalue(self.d, ell)).powf(-self.s)
            }
            Form::Truncated { base, series } => {
                if ell < series.len() {
                    base.coeff(ell)
                } else {
                    0.0
                }
            }
        }
    }

    /// Weight of `P_l` in the expansion, `a_l Z(d, l)`.
    pub fn legendre_weight(&self, ell: usize) -> f64 {
        match &self.form {
            Form::CuiFreeden if ell > 0 => {
                let l = ell as f64;
                1.0 / (l * (l + 1.0))
            }
            _ => self.coeff(ell) * z_dim_f64(self.d, ell),
        }
    }

    /// `a_l Z(d,l)` for `l = 0..=upto`, generated incrementally.
    pub fn legendre_weights(&self, upto: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(upto + 1);
        out.push(self.a0);
        match &self.form {
            Form::Distance(p) => {
                let h = self.d as f64 / 2.0;
                let mut r = p.v;
                for ell in 1..=upto {
                    let k = (ell - 1) as f64;
                    r *= (h - self.s + k) / (h + self.s + k);
                    out.push(r.abs() * z_dim_f64(self.d, ell));
                }
            }
            _ => out.extend((1..=upto).map(|l| self.legendre_weight(l))),
        }
        out
    }

    pub fn coeffs(&self) -> KernelCoeffs {
        KernelCoeffs {
            kernel: self.clone(),
        }
    }

    /// Kernel value at inner product `z`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z.abs() <= 1.0 + 1e-12) {
            return Err(invalid(format!("argument {z} outside [-1, 1]")));
        }
        Ok(self.eval_t((2.0 - 2.0 * z).max(0.0)))
    }

    /// Kernel value at squared chord length `t = |x - y|^2`.
    #[inline]
    pub fn eval_t(&self, t: f64) -> f64 {
        self.constant() + self.term(t)
    }

    /// Constant part `c` of `K = c + term(t)`.
    pub(crate) fn constant(&self) -> f64 {
        match &self.form {
            Form::CuiFreeden => 2.0,
            Form::Distance(p) => p.constant(),
            Form::CanonicalAccelerated { gd, kappa, .. } => 1.0 - kappa * gd.sigma * gd.v,
            Form::CanonicalDirect { series } => series.w[0],
            Form::Truncated { .. } => 0.0,
        }
    }

    /// Variable part of the kernel as a function of `t = |x - y|^2`.
    #[inline]
    pub(crate) fn term(&self, t: f64) -> f64 {
        match &self.form {
            Form::CuiFreeden => -2.0 * (0.5 * t.sqrt()).ln_1p(),
            Form::Distance(p) => p.term(t),
            Form::CanonicalAccelerated { gd, kappa, series } => {
                kappa * gd.term(t) + series.eval(1.0 - 0.5 * t)
            }
            Form::CanonicalDirect { series } => series.eval(1.0 - 0.5 * t) - series.w[0],
            Form::Truncated { series, .. } => series.eval(1.0 - 0.5 * t),
        }
    }

    /// `d term / dt`; at `t = 0` singular derivatives are replaced by 0.
    #[inline]
    pub(crate) fn term_derivative(&self, t: f64) -> f64 {
        match &self.form {
            Form::CuiFreeden => {
                if t > 0.0 {
                    -1.0 / (2.0 * t.sqrt() + t)
                } else {
                    0.0
                }
            }
            Form::Distance(p) => p.term_derivative(t),
            Form::CanonicalAccelerated { gd, kappa, series } => {
                kappa * gd.term_derivative(t) - 0.5 * series.derivative(1.0 - 0.5 * t)
            }
            Form::CanonicalDirect { series } | Form::Truncated { series, .. } => {
                -0.5 * series.derivative(1.0 - 0.5 * t)
            }
        }
    }

    /// Number of Legendre terms evaluated per kernel call (0 for closed forms).
    pub fn series_terms(&self) -> usize {
        match &self.form {
            Form::CuiFreeden => 0,
            Form::Distance(p) => p.q.len().saturating_sub(1),
            Form::CanonicalAccelerated { series, .. }
            | Form::CanonicalDirect { series }
            | Form::Truncated { series, .. } => series.len() - 1,
        }
    }

    /// Truncated kernel `sum_{l=1}^{t} a_l Z(d,l) P_l(z)`.
    pub fn truncated_eval(&self, degree: usize, z: f64) -> Result<f64> {
        if !(z.abs() <= 1.0 + 1e-12) {
            return Err(invalid(format!("argument {z} outside [-1, 1]")));
        }
        let mut w = self.legendre_weights(degree);
        w[0] = 0.0;
        let ev = LegendreEvaluator::new(self.d, degree.max(1))?;
        Ok(ev.weighted_sum(&w, z.clamp(-1.0, 1.0)))
    }

    /// Tail `K(z) - a_0 - truncated_eval(degree, z)`.
    pub fn tail_eval(&self, degree: usize, z: f64) -> Result<f64> {
        Ok(self.eval(z)? - self.a0 - self.truncated_eval(degree, z)?)
    }
}

fn canonical_form(d: usize, s: f64, tol: f64) -> Result<Form> {
    let df = d as f64;
    let can = |l: usize| (1.0 + eigenvalue(d, l)).powf(-s);
    if check_gen_distance(d, s).is_ok() {
        let gd = DistanceParts::new(d, s)?;
        let kappa = 1.0 / alpha_asymptotic_constant(d, s)?.abs();
        // Difference coefficients decay like l^{-(2s + 2)}, Legendre weights
        // like l^{-q} with q below.
        let q = 2.0 * s - df + 3.0;
        let mut w = vec![0.0];
        let mut r = gd.v;
        let h = df / 2.0;
        for ell in 1..=CANONICAL_MAX_TERMS {
            let k = (ell - 1) as f64;
            r *= (h - s + k) / (h + s + k);
            let e = (can(ell) - kappa * r.abs()) * z_dim_f64(d, ell);
            w.push(e);
            if ell >= 64 && 2.0 * e.abs() * ell as f64 / (q - 1.0) < tol {
                break;
            }
        }
        Ok(Form::CanonicalAccelerated {
            gd,
            kappa,
            series: Series::new(d, w)?,
        })
    } else {
        let q = 2.0 * s - df + 1.0;
        let mut w = vec![1.0];
        for ell in 1..=CANONICAL_MAX_TERMS {
            let e = can(ell) * z_dim_f64(d, ell);
            w.push(e);
            if ell >= 64 && 2.0 * e * ell as f64 / (q - 1.0) < tol {
                break;
            }
        }
        Ok(Form::CanonicalDirect {
            series: Series::new(d, w)?,
        })
    }
}

/// Laplace-Fourier coefficient sequence of a kernel.
#[derive(Debug, Clone)]
pub struct KernelCoeffs {
    kernel: Kernel,
}

impl KernelCoeffs {
    pub fn a0(&self) -> f64 {
        self.kernel.a0
    }

    pub fn a(&self, ell: usize) -> f64 {
        self.kernel.coeff(ell)
    }
}

pub fn kernel_coeffs(spec: &KernelSpec) -> Result<KernelCoeffs> {
    Ok(Kernel::new(spec)?.coeffs())
}

pub fn kernel_eval(spec: &KernelSpec, z: f64) -> Result<f64> {
    Kernel::new(spec)?.eval(z)
}
