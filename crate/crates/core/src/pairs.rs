//! Double sums over all ordered pairs of a point set.

use rayon::prelude::*;

use crate::sphere::{dist2, PointSet};
use crate::sum::ExactSum;

/// `sum_{i,j} g(|x_i - x_j|^2)` over all ordered pairs, diagonal included
/// (where `g(0)` is used verbatim). The result is the correctly rounded value
/// of the sum of the computed terms, so it is invariant under permutation of
/// the points and under changes of thread count.
pub(crate) fn ordered_pair_sum<G>(x: &PointSet, g: G) -> f64
where
    G: Fn(f64) -> f64 + Sync,
{
    let mut acc = upper_pair_sum(x, &g);
    // Every off-diagonal term appears twice.
    acc.double();
    let n = x.len() as f64;
    let g0 = g(0.0);
    let p = n * g0;
    acc.add(p);
    acc.add(n.mul_add(g0, -p));
    acc.value()
}

/// Exact sum of `g(t_ij)` over `i < j`.
pub(crate) fn upper_pair_sum<G>(x: &PointSet, g: &G) -> ExactSum
where
    G: Fn(f64) -> f64 + Sync,
{
    let n = x.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.point(i);
            let mut s = ExactSum::new();
            for j in i + 1..n {
                s.add(g(dist2(xi, x.point(j))));
            }
            s
        })
        .reduce(ExactSum::new, |mut a, b| {
            a.merge(&b);
            a
        })
}

/// Mean of `g` over all ordered pairs: `(1/N^2) sum_{i,j} g(t_ij)`.
pub(crate) fn pair_mean<G>(x: &PointSet, g: G) -> f64
where
    G: Fn(f64) -> f64 + Sync,
{
    let n = x.len() as f64;
    ordered_pair_sum(x, g) / (n * n)
}
