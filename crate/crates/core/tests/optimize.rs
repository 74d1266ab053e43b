use proptest::prelude::*;
use qmc_sphere::kernels::KernelSpec;
use qmc_sphere::optimize::*;
use qmc_sphere::pointgen::{random_uniform, spiral};
use qmc_sphere::quality::{wce, SobolevSpace};
use qmc_sphere::rng::rng_from_seed;
use qmc_sphere::sphere::{random_rotation, v_const};
use qmc_sphere::PointSet;
use rand_distr::{Distribution, StandardNormal};

fn objectives() -> Vec<Objective> {
    vec![
        Objective::new(ObjectiveKind::DistanceSum { s: 1.5 }, 2).unwrap(),
        Objective::new(ObjectiveKind::DistanceSum { s: 1.8 }, 2).unwrap(),
        Objective::new(ObjectiveKind::Coulomb, 2).unwrap(),
        Objective::new(ObjectiveKind::LogEnergy, 2).unwrap(),
        Objective::new(ObjectiveKind::KernelEnergy { kernel: KernelSpec::CuiFreeden }, 2).unwrap(),
        Objective::new(ObjectiveKind::KernelEnergy { kernel: KernelSpec::gen_distance(2, 2.5) }, 2).unwrap(),
        Objective::new(ObjectiveKind::KernelEnergy { kernel: KernelSpec::gen_distance(2, 4.5) }, 2).unwrap(),
        Objective::new(ObjectiveKind::KernelEnergy { kernel: KernelSpec::canonical(2, 2.0) }, 2).unwrap(),
        Objective::new(ObjectiveKind::KernelEnergy { kernel: KernelSpec::gen_distance(3, 2.2) }, 3).unwrap(),
        Objective::new(ObjectiveKind::Coulomb, 2)
            .unwrap()
            .with_penalty(DesignPenalty { mu: 0.3, degree: 4 })
            .unwrap(),
    ]
}

fn moved(x: &PointSet, j: usize, v: &[f64], h: f64) -> PointSet {
    let mut pts = x.to_vecs();
    for (c, vk) in pts[j].iter_mut().zip(v) {
        *c += h * vk;
    }
    let n = pts[j].iter().map(|c| c * c).sum::<f64>().sqrt();
    pts[j].iter_mut().for_each(|c| *c /= n);
    PointSet::new(x.dim(), &pts).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-6;
    for obj in objectives() {
        for trial in 0..10u64 {
            let x = random_uniform(obj.dim(), 8, 100 + trial).unwrap();
            let (_, g) = obj.energy_and_gradient(&x).unwrap();
            let scale = g.iter().flatten().map(|c| c.abs()).fold(0.0, f64::max);
            let mut rng = rng_from_seed(trial);
            for (j, gj) in g.iter().enumerate() {
                let xj = x.point(j);
                let mut v: Vec<f64> = (0..xj.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let r: f64 = v.iter().zip(xj).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(xj).for_each(|(a, b)| *a -= r * b);
                let fd = (obj.value(&moved(&x, j, &v, h)).unwrap() - obj.value(&moved(&x, j, &v, -h)).unwrap()) / (2.0 * h);
                let an: f64 = gj.iter().zip(&v).map(|(a, b)| a * b).sum();
                let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!(
                    (fd - an).abs() <= 1e-5 * scale * vn,
                    "{:?} trial {trial} point {j}: fd {fd} analytic {an}",
                    obj.kind()
                );
            }
        }
    }
}

#[test]
fn gradient_is_tangential() {
    for obj in objectives() {
        let x = random_uniform(obj.dim(), 12, 5).unwrap();
        let (_, g) = obj.energy_and_gradient(&x).unwrap();
        for (j, gj) in g.iter().enumerate() {
            let r: f64 = gj.iter().zip(x.point(j)).map(|(a, b)| a * b).sum();
            assert!(r.abs() <= 1e-12, "{:?}: radial component {r}", obj.kind());
        }
    }
}

fn opts(restarts: usize) -> OptOptions {
    OptOptions {
        max_iter: 2000,
        grad_tol: 1e-12,
        restarts,
        seed: 17,
    }
}

#[test]
fn two_points_become_antipodal() {
    let obj = Objective::new(ObjectiveKind::DistanceSum { s: 1.5 }, 2).unwrap();
    let r = optimize(&obj, 2, Init::Seed(3), &opts(2)).unwrap();
    assert!((r.objective_value - 4.0).abs() < 1e-10, "{}", r.objective_value);
    let rv = obj.value(r.points()).unwrap();
    assert!((rv - r.objective_value).abs() <= 1e-12 * rv.abs());
}

#[test]
fn four_charges_form_a_tetrahedron() {
    let obj = Objective::new(ObjectiveKind::Coulomb, 2).unwrap();
    let r = optimize(&obj, 4, Init::Seed(9), &opts(4)).unwrap();
    let expect = 6.0 * (3.0f64 / 8.0).sqrt();
    assert!((r.objective_value / 2.0 - expect).abs() < 1e-9, "{}", r.objective_value / 2.0);
}

#[test]
fn six_point_distance_maximizer_beats_the_spiral() {
    let obj = Objective::new(ObjectiveKind::DistanceSum { s: 1.5 }, 2).unwrap();
    let r = optimize(&obj, 6, Init::Seed(1), &opts(8)).unwrap();
    let space = SobolevSpace::gen_distance(2, 1.5).unwrap();
    let w = wce(&space, r.points()).unwrap().wce;
    let w0 = wce(&space, &spiral(6).unwrap()).unwrap().wce;
    assert!(w <= w0, "{w} vs spiral {w0}");
}

#[test]
fn cf_pair_minimizer() {
    let space = SobolevSpace::cui_freeden();
    let (_, rep) = wce_objective(&space, 2, Init::Seed(4), &opts(1)).unwrap();
    assert!((rep.wce.powi(2) - (1.0 - 2f64.ln())).abs() < 1e-10);
}

#[test]
fn wce_never_increases_from_the_initial_set() {
    for (sp, n) in [
        (SobolevSpace::cui_freeden(), 20),
        (SobolevSpace::gen_distance(2, 2.5).unwrap(), 30),
        (SobolevSpace::gen_distance(2, 1.5).unwrap(), 40),
    ] {
        let x0 = random_uniform(2, n, 8).unwrap();
        let w0 = wce(&sp, &x0).unwrap().wce;
        let o = OptOptions {
            max_iter: 50,
            grad_tol: 1e-12,
            restarts: 1,
            seed: 0,
        };
        let (_, rep) = wce_objective(&sp, n, Init::Points(x0), &o).unwrap();
        assert!(rep.wce <= w0);
    }
}

#[test]
fn accepted_steps_are_monotone() {
    let obj = Objective::new(ObjectiveKind::LogEnergy, 2).unwrap();
    let mut x = random_uniform(2, 15, 2).unwrap();
    let mut prev = obj.value(&x).unwrap();
    for _ in 0..10 {
        let o = OptOptions {
            max_iter: 3,
            grad_tol: 0.0,
            restarts: 1,
            seed: 0,
        };
        let r = optimize(&obj, 15, Init::Points(x.clone()), &o).unwrap();
        assert!(r.objective_value <= prev);
        prev = r.objective_value;
        x = r.points().clone();
    }
    let obj = Objective::new(ObjectiveKind::DistanceSum { s: 1.5 }, 2).unwrap();
    let x = random_uniform(2, 15, 2).unwrap();
    let v0 = obj.value(&x).unwrap();
    let o = OptOptions {
        max_iter: 5,
        grad_tol: 0.0,
        restarts: 1,
        seed: 0,
    };
    assert!(optimize(&obj, 15, Init::Points(x), &o).unwrap().objective_value >= v0);
}

#[test]
fn rotated_start_gives_the_same_optimum() {
    let obj = Objective::new(ObjectiveKind::Coulomb, 2).unwrap();
    let x = random_uniform(2, 10, 21).unwrap();
    let q = random_rotation(3, &mut rng_from_seed(5));
    let o = OptOptions {
        max_iter: 3000,
        grad_tol: 1e-10,
        restarts: 1,
        seed: 0,
    };
    let a = optimize(&obj, 10, Init::Points(x.clone()), &o).unwrap();
    let b = optimize(&obj, 10, Init::Points(x.transformed(&q).unwrap()), &o).unwrap();
    assert!((a.objective_value - b.objective_value).abs() <= 1e-8 * a.objective_value);
}

#[test]
fn restart_selection_is_deterministic() {
    let obj = Objective::new(ObjectiveKind::LogEnergy, 2).unwrap();
    let o = OptOptions {
        max_iter: 40,
        grad_tol: 1e-12,
        restarts: 4,
        seed: 99,
    };
    let a = optimize(&obj, 12, Init::Seed(1), &o).unwrap();
    let b = optimize(&obj, 12, Init::Seed(1), &o).unwrap();
    assert_eq!(a.objective_value, b.objective_value);
    assert_eq!(a.best_restart, b.best_restart);
    assert_eq!(a.points().coords(), b.points().coords());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distance_sum_matches_wce(seed in any::<u64>(), n in 1usize..40) {
        let x = random_uniform(2, n, seed).unwrap();
        let v = distance_sum(&x, 1.5).unwrap();
        let w = wce(&SobolevSpace::gen_distance(2, 1.5).unwrap(), &x).unwrap().wce;
        let lhs = v_const(2, 1.5).unwrap() - v / (n * n) as f64;
        prop_assert!((lhs - w * w).abs() <= 1e-12);
    }
}
