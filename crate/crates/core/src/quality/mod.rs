//! Quality measures of point sets viewed as equal-weight integration rules.

mod discrepancy;
mod integrate;
mod series;

pub use discrepancy::{
    cap_l2_discrepancy, cap_l2_discrepancy_direct, cap_linf_discrepancy_estimate,
    property_r_check, DirectL2Estimate, LinfEstimate, PropertyRReport,
};
pub use integrate::{franke, qmc_integrate, FRANKE_INTEGRAL};
pub use series::{wce_harmonic, wce_harmonic_auto, HarmonicReport};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{Kernel, KernelSpec};
use crate::pairs::pair_mean;
use crate::sphere::PointSet;

/// Squared worst-case errors in `[-RADICAND_TOL, 0)` are round-off and clamp to 0.
pub const RADICAND_TOL: f64 = 1e-10;

/// `H^s(S^d)` equipped with the norm induced by a particular kernel.
#[derive(Debug, Clone)]
pub struct SobolevSpace {
    kernel: Kernel,
}

impl SobolevSpace {
    pub fn new(spec: &KernelSpec) -> Result<Self> {
        Ok(Self {
            kernel: Kernel::new(spec)?,
        })
    }

    /// Checks that `spec` really describes `H^s(S^d)`.
    pub fn with_params(d: usize, s: f64, spec: &KernelSpec) -> Result<Self> {
        if spec.dim() != d || spec.smoothness() != s {
            return Err(invalid(format!(
                "kernel {spec} does not belong to H^{s}(S^{d})"
            )));
        }
        Self::new(spec)
    }

    pub fn cui_freeden() -> Self {
        Self::new(&KernelSpec::CuiFreeden).expect("CF kernel is always valid")
    }

    pub fn gen_distance(d: usize, s: f64) -> Result<Self> {
        Self::new(&KernelSpec::gen_distance(d, s))
    }

    pub fn canonical(d: usize, s: f64) -> Result<Self> {
        Self::new(&KernelSpec::canonical(d, s))
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn s(&self) -> f64 {
        self.kernel.smoothness()
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn spec(&self) -> &KernelSpec {
        self.kernel.spec()
    }

    fn check(&self, x: &PointSet) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(invalid(format!(
                "point set lives on S^{} but the space is over S^{}",
                x.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WceMethod {
    ClosedForm,
    HarmonicSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WceReport {
    pub n: usize,
    pub d: usize,
    pub s: f64,
    pub kernel: String,
    pub wce: f64,
    /// `(1/N^2) sum_{i,j} K(x_i . x_j)`.
    pub energy: f64,
    pub a0: f64,
    pub method: WceMethod,
}

impl WceReport {
    pub const CSV_HEADER: &'static str = "n,d,s,kernel,wce,energy,a0,method";

    pub fn csv_row(&self) -> String {
        let m = match self.method {
            WceMethod::ClosedForm => "closed-form",
            WceMethod::HarmonicSum => "harmonic-sum",
        };
        format!(
            "{},{},{},{},{:e},{:e},{:e},{}",
            self.n, self.d, self.s, self.kernel, self.wce, self.energy, self.a0, m
        )
    }
}

pub(crate) fn clamp_radicand(r: f64) -> Result<f64> {
    if r.is_nan() {
        return Err(Error::Consistency("squared worst-case error is NaN".into()));
    }
    if r < 0.0 {
        if r < -RADICAND_TOL {
            return Err(Error::Consistency(format!(
                "squared worst-case error {r:e} is negative beyond round-off"
            )));
        }
        return Ok(0.0);
    }
    Ok(r)
}

/// Squared worst-case error straight from the closed-form kernel, unclamped.
pub(crate) fn wce_squared_raw(space: &SobolevSpace, x: &PointSet) -> f64 {
    let k = &space.kernel;
    let mean = pair_mean(x, |t| k.term(t));
    (k.constant() - k.a0()) + mean
}

/// Worst-case error of the equal-weight rule on `x`:
/// `wce^2 = (1/N^2) sum_{i,j} K(x_i . x_j) - a_0`.
pub fn wce(space: &SobolevSpace, x: &PointSet) -> Result<WceReport> {
    space.check(x)?;
    let k = &space.kernel;
    let mean = pair_mean(x, |t| k.term(t));
    let energy = k.constant() + mean;
    let w2 = clamp_radicand((k.constant() - k.a0()) + mean)?;
    Ok(WceReport {
        n: x.len(),
        d: space.dim(),
        s: space.s(),
        kernel: space.spec().tag(),
        wce: w2.sqrt(),
        energy,
        a0: k.a0(),
        method: WceMethod::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn antipodal() -> PointSet {
        PointSet::new(2, &[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0]]).unwrap()
    }

    #[test]
    fn single_point_cf() {
        let x = PointSet::new(2, &[vec![0.0, 1.0, 0.0]]).unwrap();
        let r = wce(&SobolevSpace::cui_freeden(), &x).unwrap();
        assert_eq!(r.wce, 1.0);
        assert_eq!(r.energy, 2.0);
    }

    #[test]
    fn antipodal_pair_closed_forms() {
        let x = antipodal();
        let gd = wce(&SobolevSpace::gen_distance(2, 1.5).unwrap(), &x).unwrap();
        assert!((gd.wce.powi(2) - 1.0 / 3.0).abs() < 1e-14);
        let cf = wce(&SobolevSpace::cui_freeden(), &x).unwrap();
        assert!((cf.wce.powi(2) - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((cf.wce.powi(2) - (cf.energy - cf.a0)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = PointSet::new(3, &[vec![0.0, 0.0, 0.0, 1.0]]).unwrap();
        assert!(wce(&SobolevSpace::cui_freeden(), &x).is_err());
    }

    #[test]
    fn radicand_policy() {
        assert_eq!(clamp_radicand(-1e-12).unwrap(), 0.0);
        assert!(clamp_radicand(-1e-9).is_err());
        assert_eq!(clamp_radicand(0.25).unwrap(), 0.25);
    }
}
