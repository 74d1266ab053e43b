use proptest::prelude::*;
use qmc_sphere::harmonic::{eigenvalue, z_dim_f64, LegendreEvaluator};
use qmc_sphere::kernels::*;
use qmc_sphere::pointgen::random_uniform;
use qmc_sphere::quality::{wce, SobolevSpace};
use qmc_sphere::sphere::v_const;

fn closed_form_specs() -> Vec<KernelSpec> {
    vec![
        KernelSpec::CuiFreeden,
        KernelSpec::gen_distance(2, 1.5),
        KernelSpec::gen_distance(2, 1.25),
        KernelSpec::gen_distance(2, 2.5),
        KernelSpec::gen_distance(2, 3.5),
        KernelSpec::gen_distance(2, 4.5),
        KernelSpec::gen_distance(3, 2.0),
        KernelSpec::gen_distance(3, 3.25),
        KernelSpec::gen_distance(4, 2.5),
    ]
}

fn all_specs() -> Vec<KernelSpec> {
    let mut v = closed_form_specs();
    v.push(KernelSpec::canonical(2, 1.5));
    v.push(KernelSpec::canonical(2, 3.0));
    v.push(KernelSpec::canonical(3, 2.5));
    v
}

#[test]
fn series_matches_closed_form() {
    let t = 5000;
    for spec in closed_form_specs() {
        let k = Kernel::new(&spec).unwrap();
        let w = k.legendre_weights(t);
        let ev = LegendreEvaluator::new(spec.dim(), t).unwrap();
        for i in 0..200 {
            let z = -1.0 + 1.999 * i as f64 / 199.0;
            let series = ev.weighted_sum(&w, z);
            let closed = k.eval(z).unwrap();
            assert!((series - closed).abs() < 1e-6, "{spec} z={z}: series {series} closed {closed}");
        }
    }
}

#[test]
fn closed_values() {
    let cf = Kernel::new(&KernelSpec::CuiFreeden).unwrap();
    assert_eq!(cf.eval(1.0).unwrap(), 2.0);
    assert!((cf.eval(-1.0).unwrap() - (2.0 - 2.0 * 2f64.ln())).abs() < 1e-15);
    let gd = Kernel::new(&KernelSpec::gen_distance(2, 1.5)).unwrap();
    assert!((gd.eval(1.0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
    assert!((gd.coeff(1) - 4.0 / 15.0).abs() < 1e-15);
    assert!((alpha_coeff(2, 1.5, 1).unwrap() - 4.0 / 15.0).abs() < 1e-15);
    assert!((gd.a0() - 4.0 / 3.0).abs() < 1e-14);
    assert_eq!(cf.a0(), 1.0);
    // The Legendre weight a_l Z(2,l) of the closed form is 1/(l(l+1)).
    assert!((cf.legendre_weight(3) - 1.0 / 12.0).abs() < 1e-16);
    assert!((cf.coeff(3) - 1.0 / 84.0).abs() < 1e-16);
    let can = Kernel::new(&KernelSpec::canonical(2, 1.5)).unwrap();
    assert!((can.coeff(1) - 3f64.powf(-1.5)).abs() < 1e-16);
}

#[test]
fn rejected_parameters() {
    assert!(Kernel::new(&KernelSpec::gen_distance(2, 1.0)).is_err());
    assert!(Kernel::new(&KernelSpec::gen_distance(2, 2.0)).is_err());
    assert!(Kernel::new(&KernelSpec::gen_distance(3, 2.5)).is_err());
    assert!(Kernel::new(&KernelSpec::gen_distance(3, 1.5)).is_err());
    assert!(Kernel::new(&KernelSpec::canonical(2, 0.9)).is_err());
    assert!(Kernel::new(&KernelSpec::gen_distance(3, 3.0)).is_ok());
    assert!(q_l_eval(2, 1.5, 0.2).is_err());
    assert!(Kernel::new(&KernelSpec::CuiFreeden).unwrap().eval(1.01).is_err());
}

#[test]
fn alpha_signs_and_asymptotics() {
    // L = 2 for d=2, s=3.5: alpha_2 < 0, alpha_1 > 0, positive from l=3 on.
    assert!(alpha_coeff(2, 3.5, 1).unwrap() > 0.0);
    assert!(alpha_coeff(2, 3.5, 2).unwrap() < 0.0);
    for (d, s) in [(2, 1.5), (2, 2.5), (2, 3.5), (2, 4.5), (3, 2.25), (4, 5.5)] {
        let big_l = distance_order(d, s);
        for l in 1..=big_l {
            let a = alpha_coeff(d, s, l).unwrap();
            let expect = if (big_l - l) % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(a.signum(), expect, "d={d} s={s} l={l}");
        }
        for l in big_l + 1..big_l + 50 {
            assert!(alpha_coeff(d, s, l).unwrap() > 0.0);
        }
        let c = alpha_asymptotic_constant(d, s).unwrap();
        let r = alpha_coeff(d, s, 1000).unwrap() * 1000f64.powf(2.0 * s) / c;
        assert!((r - 1.0).abs() < 0.02, "d={d} s={s}: ratio {r}");
    }
}

#[test]
fn case_two_coefficients() {
    // L = 3 for d=2, s=4.5; the sign-corrected low coefficients are all positive.
    let k = Kernel::new(&KernelSpec::gen_distance(2, 4.5)).unwrap();
    for l in 1..=3 {
        let a = alpha_coeff(2, 4.5, l).unwrap();
        let corrected = if (3 + 1 - l) % 2 == 0 { a } else { -a };
        assert!(corrected > 0.0);
        assert!((k.coeff(l) - a.abs()).abs() < 1e-15 * a.abs().max(1.0));
    }
    // Coefficient of Q_L at degree l vanishes when L+1-l is even.
    let ev = LegendreEvaluator::new(2, 3).unwrap();
    let z_grid: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    for &z in &z_grid {
        let q: f64 = (1..=3)
            .map(|l| {
                let f = if (3 + 1 - l) % 2 == 0 { 0.0 } else { -2.0 };
                f * alpha_coeff(2, 4.5, l).unwrap() * z_dim_f64(2, l) * ev.eval(l, z)
            })
            .sum();
        assert!((q - q_l_eval(2, 4.5, z).unwrap()).abs() < 1e-12);
    }
    // L = 1: Q_1(1) - Q_1(z) = -alpha_1 (d+1) (2 - 2z).
    let a1 = alpha_coeff(2, 2.5, 1).unwrap();
    for &z in &z_grid {
        let lhs = q_l_eval(2, 2.5, 1.0).unwrap() - q_l_eval(2, 2.5, z).unwrap();
        assert!((lhs + a1 * 3.0 * (2.0 - 2.0 * z)).abs() < 1e-13);
    }
}

#[test]
fn coefficients_positive_and_bracketed() {
    for spec in all_specs() {
        let k = Kernel::new(&spec).unwrap();
        let s = spec.smoothness();
        let d = spec.dim() as f64;
        let w = k.legendre_weights(10_000);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for l in 1..=10_000usize {
            let a = w[l] / z_dim_f64(spec.dim(), l);
            if l % 997 == 0 {
                assert!((a - k.coeff(l)).abs() <= 1e-12 * a);
            }
            assert!(a > 0.0, "{spec} l={l}");
            if l >= 10 {
                let r = a * (1.0 + l as f64).powf(2.0 * s);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        assert!(hi / lo < 10.0, "{spec}: bracket [{lo}, {hi}]");
        // Same decay in the eigenvalue scale.
        let r = k.coeff(5000) * (1.0 + eigenvalue(spec.dim(), 5000)).powf(s);
        assert!(r > 0.0 && r.is_finite(), "{spec} d={d}");
    }
}

#[test]
fn truncation_splits_the_kernel() {
    for spec in all_specs() {
        let k = Kernel::new(&spec).unwrap();
        let mut prev = 0.0;
        for t in [1, 2, 5, 20, 100] {
            let at_one = k.truncated_eval(t, 1.0).unwrap();
            assert!(at_one > prev);
            prev = at_one;
            for z in [-1.0, -0.3, 0.0, 0.5, 0.9] {
                let total = k.truncated_eval(t, z).unwrap() + k.tail_eval(t, z).unwrap();
                let full = k.eval(z).unwrap() - k.a0();
                assert!((total - full).abs() < 1e-10, "{spec} t={t} z={z}");
            }
        }
    }
    let cf = Kernel::new(&KernelSpec::CuiFreeden).unwrap();
    for z in [-1.0, 0.25, 1.0] {
        assert!((cf.truncated_eval(1, z).unwrap() - 0.5 * z).abs() < 1e-15);
    }
    let tk = Kernel::new(&KernelSpec::truncated(KernelSpec::CuiFreeden, 4)).unwrap();
    assert_eq!(tk.a0(), 0.0);
    assert!((tk.eval(0.3).unwrap() - cf.truncated_eval(4, 0.3).unwrap()).abs() < 1e-15);
}

#[test]
fn canonical_converges_to_tolerance() {
    for (d, s) in [(2, 1.5), (2, 2.5), (2, 3.0), (3, 2.0)] {
        let k = Kernel::new(&KernelSpec::canonical(d, s)).unwrap();
        let n = 200_000;
        let w: Vec<f64> = (0..=n).map(|l| k.legendre_weight(l)).collect();
        let ev = LegendreEvaluator::new(d, n).unwrap();
        for z in [-1.0, -0.5, 0.0, 0.7] {
            let direct = ev.weighted_sum(&w, z);
            assert!((direct - k.eval(z).unwrap()).abs() < 1e-8, "d={d} s={s} z={z}");
        }
        let sum_at_one: f64 = w.iter().sum();
        assert!(sum_at_one <= k.eval(1.0).unwrap() + 1e-9);
    }
}

#[test]
fn cf_and_distance_kernels_are_equivalent() {
    // wce^2 = sum a_l Phi_l with Phi_l >= 0, so the ratio of two wce^2 values
    // lies between the extreme coefficient ratios.
    let cf = Kernel::new(&KernelSpec::CuiFreeden).unwrap();
    let gd = Kernel::new(&KernelSpec::gen_distance(2, 1.5)).unwrap();
    let n = 1_000_000usize;
    let wcf = cf.legendre_weights(n);
    let wgd = gd.legendre_weights(n);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for l in 1..=n {
        let r = wcf[l] / wgd[l];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let limit = 0.5 / alpha_asymptotic_constant(2, 1.5).unwrap();
    lo = lo.min(limit);
    hi = hi.max(limit);
    assert!(hi / lo < 2.0);
    let scf = SobolevSpace::cui_freeden();
    let sgd = SobolevSpace::gen_distance(2, 1.5).unwrap();
    for seed in 0..50 {
        let x = random_uniform(2, 5 + 3 * seed as usize, seed).unwrap();
        let r = wce(&scf, &x).unwrap().wce.powi(2) / wce(&sgd, &x).unwrap().wce.powi(2);
        assert!(r >= lo * (1.0 - 1e-9) && r <= hi * (1.0 + 1e-9), "seed {seed}: {r} not in [{lo}, {hi}]");
    }
}

#[test]
fn spec_serialization() {
    let s = KernelSpec::truncated(KernelSpec::gen_distance(2, 2.5), 7);
    let j = serde_json::to_string(&s).unwrap();
    assert_eq!(serde_json::from_str::<KernelSpec>(&j).unwrap(), s);
    assert_eq!(s.tag(), "truncated-gd-7");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gd_kernel_reproduces_distance(s in 1.01f64..4.99, z in -1.0f64..1.0) {
        prop_assume!(((2.0 * s - 2.0) / 2.0).fract().abs() > 1e-3);
        // K = 2V - (2-2z)^{s-1} for s < 2, by construction.
        if s < 2.0 {
            let k = Kernel::new(&KernelSpec::gen_distance(2, s)).unwrap();
            let v = v_const(2, s).unwrap();
            let expect = 2.0 * v - (2.0 - 2.0 * z).powf(s - 1.0);
            prop_assert!((k.eval(z).unwrap() - expect).abs() < 1e-13);
        } else {
            let k = Kernel::new(&KernelSpec::gen_distance(2, s)).unwrap();
            let v = k.eval(z).unwrap();
            prop_assert!(v.is_finite());
            prop_assert!(v <= k.eval(1.0).unwrap() + 1e-12);
        }
    }
}
