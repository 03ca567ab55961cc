use krein::harmonic::{make_grids, LambdaGrid};
use krein::kreincore::*;
use krein::kreinsol::{evaluate_p, extract_a};
use krein::remainder::*;
use krein::weights::{make_weight, Weight, WeightSpec};
use krein::KreinError;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn setup(w: &Weight, dr: f64, r: f64) -> (LambdaGrid, Accelerant, Sweep) {
    let (lg, rg) = make_grids(128.0, 4096, dr, r).unwrap();
    let acc = compute_accelerant(w, &rg, &lg).unwrap();
    let sw = direct_sweep(&acc, &rg).unwrap();
    (lg, acc, sw)
}

fn gauss(delta: f64) -> Weight {
    make_weight(WeightSpec::Gauss { delta, center: 0.0, width: 1.0 }).unwrap()
}

#[test]
fn flat_weight_has_no_remainder() {
    let w = make_weight(WeightSpec::Const { c: 1.0 }).unwrap();
    let (lg, acc, sw) = setup(&w, 0.05, 5.0);
    for k in 0..=3 {
        let ev = compute_remainder(&w, &sw.slices[100], k, &lg).unwrap();
        assert!(ev.values.sup() == 0.0);
        assert!(ev.c.iter().chain(&ev.d).all(|v| v.norm() == 0.0));
    }
    let al = alpha_decomposition(&extract_a(&sw), acc.h0, &sw.rgrid).unwrap();
    assert!(al.alpha_inf.iter().chain(&al.alpha_2).all(|v| v.norm() == 0.0));
}

#[test]
fn first_boundary_values_are_index_identities() {
    let w = make_weight(WeightSpec::bump(0.2)).unwrap();
    let (_, _, sw) = setup(&w, 0.05, 10.0);
    let a = extract_a(&sw);
    for i in [20, 99, 200] {
        let sl = &sw.slices[i];
        let (c, d) = gamma_boundary_derivatives(&w, sl, 2).unwrap();
        assert_eq!(c[0], sl.g[0]);
        assert_eq!(d[0], a[i].conj());
    }
}

#[test]
fn second_boundary_derivative_follows_accelerant_slope() {
    // g_r ≈ H to first order in delta, and d_2 = -g_r'(r)
    let (delta, r) = (1e-3, 1.5);
    let w = gauss(delta);
    let (_, _, sw) = setup(&w, 0.025, 3.0);
    let (_, d) = gamma_boundary_derivatives(&w, &sw.slices[60], 2).unwrap();
    let hprime = -delta / (2.0 * PI).sqrt() * r * (-0.5 * r * r).exp();
    assert!((d[1] + hprime).norm() < 1e-7, "{} {}", d[1], -hprime);
}

#[test]
fn order_zero_is_the_polynomial_difference() {
    let w = make_weight(WeightSpec::bump(0.1)).unwrap();
    let (lg, _, sw) = setup(&w, 0.05, 10.0);
    let ev = compute_remainder(&w, &sw.slices[150], 0, &lg).unwrap();
    let p = evaluate_p(&sw.slices[150], &lg);
    assert_eq!(ev.values.values, p.values);
}

#[test]
fn integral_and_algebraic_remainders_agree() {
    let w = gauss(1e-2);
    let (lg, _, sw) = setup(&w, 0.05, 20.0);
    let ev = compute_remainder(&w, &sw.slices[200], 1, &lg).unwrap();
    eprintln!("gauss k=1 discrepancy {}", ev.discrepancy);
    assert!(ev.discrepancy <= 1e-6);
    let wb = make_weight(WeightSpec::bump(0.1)).unwrap();
    let mut last = Vec::new();
    for dr in [0.05, 0.025] {
        let (lg, _, sw) = setup(&wb, dr, 5.0);
        let ev = compute_remainder(&wb, sw.slices.last().unwrap(), 2, &lg).unwrap();
        last.push(ev.discrepancy);
    }
    eprintln!("bump k=2 discrepancy {last:?}");
    assert!(last[1] < last[0] / 3.5);
}

#[test]
fn slowly_decaying_tail_is_not_certified() {
    let w = make_weight(WeightSpec::LogTail { a: 1.5, b: 0.0, delta: 0.1 }).unwrap();
    let (lg, rg) = make_grids(128.0, 4096, 0.05, 2.0).unwrap();
    let acc = compute_accelerant(&w, &rg, &lg).unwrap();
    let sl = solve_resolvent(&acc, 2.0, 0.0).unwrap();
    assert!(compute_remainder(&w, &sl, 0, &lg).is_ok());
    assert!(matches!(compute_remainder(&w, &sl, 1, &lg), Err(KreinError::RegularityNotCertified { .. })));
}

#[test]
fn alpha_split_reconstructs_first_coefficient() {
    let delta = 0.2;
    let w = make_weight(WeightSpec::bump(delta)).unwrap();
    let (lg, acc, sw) = setup(&w, 0.05, 20.0);
    let a = extract_a(&sw);
    let al = alpha_decomposition(&a, acc.h0, &sw.rgrid).unwrap();
    assert!((al.alpha_inf[0] - C64::new(0.0, delta / PI)).norm() < 1e-12);
    let mut a2 = 0.0;
    for i in 0..a.len() {
        if i > 0 {
            a2 += 0.5 * 0.05 * (a[i - 1].norm_sqr() + a[i].norm_sqr());
        }
        assert!(al.alpha_inf[i].norm() <= acc.h0.norm() + a2 + 1e-9);
    }
    for i in [40, 160, 400] {
        let sl = &sw.slices[i];
        let (c, d) = gamma_boundary_derivatives(&w, sl, 1).unwrap();
        let a1 = compute_a_coeffs(&c, &d, 1, sl.r, &lg);
        for (j, x) in lg.nodes().enumerate().step_by(61) {
            let rec = C64::from_polar(1.0, x * sl.r) * al.alpha_inf[i] + al.alpha_2[i];
            assert!((rec - a1.values[j]).norm() < 1e-8, "{}", (rec - a1.values[j]).norm());
        }
    }
}

#[test]
fn coefficient_bound_ratio_is_uniform() {
    let mut ratios = Vec::new();
    for delta in [0.1, 0.3, 0.5] {
        let w = make_weight(WeightSpec::bump(delta)).unwrap();
        let (lg, _, sw) = setup(&w, 0.05, 10.0);
        // <lambda> (w - 1) on [-1, 1]
        let l = delta * ((2.0f64).sqrt() + (1.0 + 2.0f64.sqrt()).ln());
        let mut sup = 0.0f64;
        for sl in sw.slices.iter().step_by(20) {
            let (c, d) = gamma_boundary_derivatives(&w, sl, 1).unwrap();
            let a1 = compute_a_coeffs(&c, &d, 1, sl.r, &lg);
            sup = sup.max(a1.sup());
            assert!(a1.sup() <= c[0].norm() + d[0].norm() + 1e-15);
        }
        ratios.push(sup / (l / (1.0 - delta)));
    }
    eprintln!("coefficient bound ratios {ratios:?}");
    assert!(ratios.iter().all(|&q| q <= 1.0));
}

#[test]
fn first_remainder_norm_is_stable_under_refinement() {
    let w = make_weight(WeightSpec::bump(0.1)).unwrap();
    let mut norms = Vec::new();
    for dr in [0.05, 0.025] {
        let (lg, _, sw) = setup(&w, dr, 5.0);
        let ev = compute_remainder(&w, sw.slices.last().unwrap(), 1, &lg).unwrap();
        norms.push(grid_lp_norm(&ev.values, 1.5));
    }
    assert!(norms[0].is_finite() && ((norms[0] - norms[1]) / norms[1]).abs() < 1e-3, "{norms:?}");
}
