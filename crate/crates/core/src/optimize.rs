//! Projected-gradient optimization of pair energies on `(S^d)^N`.
//!
//! All objectives are ordered double sums `sum_{i,j} g(|x_i - x_j|^2)`.
//! Steps move along the negative tangential gradient and are retracted to
//! the sphere by renormalization; a backtracking Armijo search makes every
//! accepted step decrease the (sign-adjusted) objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonic::{z_dim_f64, DerivativeSeries, LegendreEvaluator};
use crate::kernels::{Kernel, KernelSpec};
use crate::pairs::upper_pair_sum;
use crate::pointgen::random_uniform;
use crate::quality::{wce, SobolevSpace, WceReport};
use crate::rng::derive_seed;
use crate::sphere::{dist2, PointSet};
use crate::sum::ExactSum;

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Minimize `sum K(x_i . x_j)`, diagonal included.
    KernelEnergy { kernel: KernelSpec },
    /// Maximize `sum |x_i - x_j|^{2s-d}`.
    DistanceSum { s: f64 },
    /// Minimize `sum_{i != j} 1 / |x_i - x_j|`.
    Coulomb,
    /// Minimize `sum_{i != j} log(1 / |x_i - x_j|)`.
    LogEnergy,
}

/// Design-side penalty `mu sum_{l=1}^{degree} N^2 Phi_l(X)` added to the
/// minimized function; pushes the configuration toward a `degree`-design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPenalty {
    pub mu: f64,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct Objective {
    kind: ObjectiveKind,
    d: usize,
    penalty: Option<DesignPenalty>,
    pot: Potential,
    pen: Option<(LegendreEvaluator, Vec<f64>, DerivativeSeries, f64)>,
}

#[derive(Debug, Clone)]
enum Potential {
    Kernel(Box<Kernel>),
    Power(f64),
    Coulomb,
    Log,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(invalid("sphere dimension must be at least 2"));
        }
        let pot = match &kind {
            ObjectiveKind::KernelEnergy { kernel } => {
                if kernel.dim() != d {
                    return Err(invalid("kernel dimension differs from the objective's"));
                }
                Potential::Kernel(Box::new(Kernel::new(kernel)?))
            }
            ObjectiveKind::DistanceSum { s } => {
                let h = d as f64 / 2.0;
                if !(*s > h && *s < h + 1.0) {
                    return Err(invalid(format!(
                        "distance-sum maximization needs d/2 < s < d/2 + 1, got s={s}"
                    )));
                }
                Potential::Power(s - h)
            }
            ObjectiveKind::Coulomb => Potential::Coulomb,
            ObjectiveKind::LogEnergy => Potential::Log,
        };
        Ok(Self {
            kind,
            d,
            penalty: None,
            pot,
            pen: None,
        })
    }

    pub fn with_penalty(mut self, penalty: DesignPenalty) -> Result<Self> {
        if !(penalty.mu >= 0.0) || penalty.degree < 1 {
            return Err(invalid("penalty needs mu >= 0 and degree >= 1"));
        }
        let mut w: Vec<f64> = (0..=penalty.degree).map(|l| z_dim_f64(self.d, l)).collect();
        w[0] = 0.0;
        let ev = LegendreEvaluator::new(self.d, penalty.degree.max(1))?;
        let dw = DerivativeSeries::new(self.d, &w);
        self.pen = Some((ev, w, dw, penalty.mu));
        self.penalty = Some(penalty);
        Ok(self)
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn maximize(&self) -> bool {
        matches!(self.kind, ObjectiveKind::DistanceSum { .. })
    }

    fn singular(&self) -> bool {
        matches!(self.pot, Potential::Coulomb | Potential::Log)
    }

    /// Natural pair term `g(t)`.
    #[inline]
    fn g(&self, t: f64) -> f64 {
        match &self.pot {
            Potential::Kernel(k) => k.eval_t(t),
            Potential::Power(p) => {
                if *p == 0.5 {
                    t.sqrt()
                } else {
                    t.powf(*p)
                }
            }
            Potential::Coulomb => 1.0 / t.sqrt(),
            Potential::Log => -0.5 * t.ln(),
        }
    }

    #[inline]
    fn dg(&self, t: f64) -> f64 {
        match &self.pot {
            Potential::Kernel(k) => k.term_derivative(t),
            Potential::Power(p) => {
                if t > 0.0 && *p == 0.5 {
                    0.5 / t.sqrt()
                } else if t > 0.0 {
                    p * t.powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Potential::Coulomb => -0.5 / (t * t.sqrt()),
            Potential::Log => -0.5 / t,
        }
    }

    /// Minimized pair term: sign-adjusted `g` plus the penalty polynomial.
    #[inline]
    fn phi(&self, t: f64) -> f64 {
        let base = if self.maximize() { -self.g(t) } else { self.g(t) };
        match &self.pen {
            Some((ev, w, _, mu)) => base + mu * ev.weighted_sum(w, 1.0 - 0.5 * t),
            None => base,
        }
    }

    #[inline]
    fn dphi(&self, t: f64) -> f64 {
        let base = if self.maximize() { -self.dg(t) } else { self.dg(t) };
        match &self.pen {
            Some((_, _, dw, mu)) => base - 0.5 * mu * dw.eval(1.0 - 0.5 * t),
            None => base,
        }
    }

    fn check_points(&self, x: &PointSet) -> Result<()> {
        if x.dim() != self.d {
            return Err(invalid("point set dimension differs from the objective's"));
        }
        if x.len() < 2 {
            return Err(invalid("need at least two points"));
        }
        Ok(())
    }

    /// Ordered double sum of `f`, diagonal handled per potential.
    fn double_sum<F: Fn(f64) -> f64 + Sync>(&self, x: &PointSet, f: F) -> f64 {
        let mut acc = upper_pair_sum(x, &f);
        acc.double();
        if !self.singular() {
            let n = x.len() as f64;
            let f0 = f(0.0);
            let p = n * f0;
            acc.add(p);
            acc.add(n.mul_add(f0, -p));
        }
        acc.value()
    }

    fn find_coincident(&self, x: &PointSet) -> Result<()> {
        if self.singular() {
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    if dist2(x.point(i), x.point(j)) == 0.0 {
                        return Err(Error::CoincidentPoints { i, j });
                    }
                }
            }
        }
        Ok(())
    }

    /// Objective value: the pair sum, plus the design penalty when one is set
    /// (subtracted for distance sums, so that it always works against the
    /// optimization direction).
    pub fn value(&self, x: &PointSet) -> Result<f64> {
        self.check_points(x)?;
        self.find_coincident(x)?;
        let v = self.double_sum(x, |t| self.g(t));
        let p = self.penalty_value(x);
        Ok(if self.maximize() { v - p } else { v + p })
    }

    /// `mu N^2 sum_{l<=degree} Phi_l(X)`, or 0 without a penalty.
    pub fn penalty_value(&self, x: &PointSet) -> f64 {
        match &self.pen {
            Some((ev, w, _, mu)) => {
                let h = |t: f64| ev.weighted_sum(w, 1.0 - 0.5 * t);
                let mut acc = upper_pair_sum(x, &h);
                acc.double();
                acc.add(x.len() as f64 * h(0.0));
                mu * acc.value()
            }
            None => 0.0,
        }
    }

    /// Minimized function: `+-value + penalty`.
    fn minimized(&self, x: &PointSet) -> f64 {
        self.double_sum(x, |t| self.phi(t))
    }

    /// Tangential gradient of the minimized function, one vector per point.
    fn gradient(&self, x: &PointSet) -> Vec<f64> {
        let n = x.len();
        let a = x.ambient_dim();
        let mut out = vec![0.0; n * a];
        out.par_chunks_mut(a).enumerate().for_each(|(j, gj)| {
            let xj = x.point(j);
            for i in 0..n {
                if i == j {
                    continue;
                }
                let xi = x.point(i);
                let c = 4.0 * self.dphi(dist2(xj, xi));
                for k in 0..a {
                    gj[k] += c * (xj[k] - xi[k]);
                }
            }
            let r: f64 = gj.iter().zip(xj).map(|(g, p)| g * p).sum();
            for k in 0..a {
                gj[k] -= r * xj[k];
            }
        });
        out
    }

    /// Objective value and its tangential gradient.
    pub fn energy_and_gradient(&self, x: &PointSet) -> Result<(f64, Vec<Vec<f64>>)> {
        let value = self.value(x)?;
        let mut g = self.gradient(x);
        if self.maximize() {
            g.iter_mut().for_each(|v| *v = -*v);
        }
        Ok((value, g.chunks(x.ambient_dim()).map(<[f64]>::to_vec).collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptOptions {
    pub max_iter: usize,
    /// Stop once the gradient of `objective / N^2` has norm below this.
    pub grad_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            grad_tol: 1e-9,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    #[serde(skip)]
    pub points: Option<PointSet>,
    pub objective_value: f64,
    pub maximize: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub restarts_used: usize,
    /// Index of the restart that produced the result.
    pub best_restart: usize,
    pub failed_restarts: usize,
    pub seed: u64,
}

impl OptResult {
    pub fn points(&self) -> &PointSet {
        self.points.as_ref().expect("optimizer result always carries points")
    }
}

struct Run {
    points: PointSet,
    minimized: f64,
    iterations: usize,
    grad_norm: f64,
}

fn retract(x: &PointSet, g: &[f64], alpha: f64) -> PointSet {
    let coords: Vec<f64> = x.coords().iter().zip(g).map(|(p, v)| p - alpha * v).collect();
    PointSet::from_directions(x.dim(), coords)
}

fn run_one(obj: &Objective, init: PointSet, opts: &OptOptions) -> Option<Run> {
    let n = init.len();
    let n2 = (n * n) as f64;
    let mut x = init;
    let mut f = obj.minimized(&x);
    if !f.is_finite() {
        return None;
    }
    let step = 1.0 / n as f64;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let g = obj.gradient(&x);
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        grad_norm = gn2.sqrt() / n2;
        if !grad_norm.is_finite() {
            return None;
        }
        if grad_norm <= opts.grad_tol {
            break;
        }
        let mut alpha = step;
        let accepted = loop {
            let cand = retract(&x, &g, alpha);
            let fc = obj.minimized(&cand);
            if fc.is_finite() && fc <= f - ARMIJO * alpha * gn2 {
                break Some((cand, fc));
            }
            alpha *= SHRINK;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some((cand, fc)) = accepted else {
            break;
        };
        x = cand;
        f = fc;
        iterations += 1;
        if iterations == opts.max_iter {
            let g = obj.gradient(&x);
            grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt() / n2;
        }
    }
    Some(Run {
        points: x,
        minimized: f,
        iterations,
        grad_norm,
    })
}

/// Starting configuration: explicit points or a seed for uniform random points.
#[derive(Debug, Clone)]
pub enum Init {
    Points(PointSet),
    Seed(u64),
}

/// Multi-start projected gradient descent (ascent for distance sums).
/// Restart 0 starts from `init`; restart `r > 0` from random points drawn
/// with seed `derive_seed(opts.seed, r)`. The best final value wins, ties
/// going to the lower restart index.
pub fn optimize(obj: &Objective, n: usize, init: Init, opts: &OptOptions) -> Result<OptResult> {
    if n < 2 {
        return Err(invalid("optimization needs n >= 2"));
    }
    if opts.restarts < 1 {
        return Err(invalid("need at least one restart"));
    }
    let first = match init {
        Init::Points(p) => {
            if p.len() != n {
                return Err(invalid("initial point set has the wrong size"));
            }
            obj.check_points(&p)?;
            obj.find_coincident(&p)?;
            p
        }
        Init::Seed(s) => random_uniform(obj.d, n, s)?,
    };
    let starts: Vec<PointSet> = std::iter::once(Ok(first))
        .chain((1..opts.restarts).map(|r| random_uniform(obj.d, n, derive_seed(opts.seed, r as u64))))
        .collect::<Result<_>>()?;
    let runs: Vec<Option<Run>> = starts
        .into_par_iter()
        .map(|s| run_one(obj, s, opts))
        .collect();
    let failed = runs.iter().filter(|r| r.is_none()).count();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .fold(None::<(usize, Run)>, |acc, (i, r)| match acc {
            Some((j, b)) if b.minimized <= r.minimized => Some((j, b)),
            _ => Some((i, r)),
        })
        .ok_or_else(|| Error::Consistency("every restart hit a non-finite objective".into()))?;
    let objective_value = obj.value(&best.points)?;
    Ok(OptResult {
        points: Some(best.points),
        objective_value,
        maximize: obj.maximize(),
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        restarts_used: opts.restarts,
        best_restart,
        failed_restarts: failed,
        seed: opts.seed,
    })
}

/// Minimizes the kernel energy of `space`, i.e. its worst-case error.
pub fn wce_objective(
    space: &SobolevSpace,
    n: usize,
    init: Init,
    opts: &OptOptions,
) -> Result<(OptResult, WceReport)> {
    let obj = Objective::new(
        ObjectiveKind::KernelEnergy {
            kernel: space.spec().clone(),
        },
        space.dim(),
    )?;
    let r = optimize(&obj, n, init, opts)?;
    let w = wce(space, r.points())?;
    Ok((r, w))
}

/// `sum_{i,j} |x_i - x_j|^{2s-d}` (ordered pairs, zero diagonal).
pub fn distance_sum(x: &PointSet, s: f64) -> Result<f64> {
    let p = s - x.dim() as f64 / 2.0;
    let acc: ExactSum = {
        let mut a = upper_pair_sum(x, &|t: f64| t.powf(p));
        a.double();
        a
    };
    Ok(acc.value())
}
