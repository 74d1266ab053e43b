//! Equal-weight integration of functions on the sphere.

use crate::sphere::PointSet;
use crate::sum::ExactSum;

/// Integral of [`franke`] over `S^2` with respect to normalized surface measure.
pub const FRANKE_INTEGRAL: f64 = 0.5328652500843890;

/// `Q[X](f) = (1/N) sum f(x_j)`.
///
/// The mean is formed as `f(x_1) + (1/N) sum (f(x_j) - f(x_1))` with an exact
/// inner sum, so a constant integrand is reproduced without rounding.
pub fn qmc_integrate<F: Fn(&[f64]) -> f64>(f: F, x: &PointSet) -> f64 {
    let vals: Vec<f64> = x.iter().map(&f).collect();
    let base = vals[0];
    let dev: ExactSum = vals.iter().map(|v| v - base).collect();
    base + dev.value() / vals.len() as f64
}

/// Franke's test function, evaluated on `(x, y, z)`.
pub fn franke(p: &[f64]) -> f64 {
    let (x, y, z) = (9.0 * p[0], 9.0 * p[1], 9.0 * p[2]);
    let sq = |v: f64| v * v;
    0.75 * (-sq(x - 2.0) / 4.0 - sq(y - 2.0) / 4.0 - sq(z - 2.0) / 4.0).exp()
        + 0.75 * (-sq(x + 1.0) / 49.0 - (y + 1.0) / 10.0 - (z + 1.0) / 10.0).exp()
        + 0.5 * (-sq(x - 7.0) / 4.0 - sq(y - 3.0) / 4.0 - sq(z - 5.0) / 4.0).exp()
        - 0.2 * (-sq(x - 4.0) - sq(y - 7.0) - sq(z - 5.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn franke_regression_value() {
        let v = franke(&[1.0, 0.0, 0.0]);
        assert!((v - 0.07981663781594978).abs() < 1e-15);
    }

    #[test]
    fn constant_is_exact() {
        let x = PointSet::new(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(qmc_integrate(|_| 0.1, &x), 0.1);
    }
}
