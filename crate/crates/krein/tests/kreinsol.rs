use krein::harmonic::{make_grids, LambdaGrid};
use krein::kreincore::*;
use krein::kreinsol::*;
use krein::quad::Rule;
use krein::weights::{make_weight, Weight, WeightSpec};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn setup(w: &Weight, half: f64, n: usize, dr: f64, r: f64) -> (LambdaGrid, Sweep) {
    let (lg, rg) = make_grids(half, n, dr, r).unwrap();
    let acc = compute_accelerant(w, &rg, &lg).unwrap();
    let sw = direct_sweep(&acc, &rg).unwrap();
    (lg, sw)
}

fn bump(delta: f64) -> Weight {
    make_weight(WeightSpec::bump(delta)).unwrap()
}

#[test]
fn grid_and_pointwise_evaluation_agree() {
    let w = bump(0.1);
    let (lg, sw) = setup(&w, 128.0, 4096, 0.05, 10.0);
    let sl = &sw.slices[150];
    let d = evaluate_p(sl, &lg);
    let idx: Vec<usize> = (0..lg.n).step_by(97).collect();
    let pts: Vec<f64> = idx.iter().map(|&j| lg.node(j)).collect();
    let at = evaluate_p_at(sl, &pts);
    for (k, &j) in idx.iter().enumerate() {
        assert!((d.values[j] - at[k]).norm() < 1e-12);
    }
}

#[test]
fn integral_form_matches_fine_quadrature_of_interpolant() {
    // oracle: the same difference by Gauss on a fine panel rule applied to
    // linear interpolation of g at half the step; only smooth data matter here
    let w = make_weight(WeightSpec::Gauss { delta: 0.2, center: 0.0, width: 1.0 }).unwrap();
    let (_, sw) = setup(&w, 128.0, 4096, 0.025, 5.0);
    let coarse = &sw.slices[100];
    let fine_sw = setup(&w, 128.0, 4096, 0.0125, 5.0).1;
    let fine = &fine_sw.slices[200];
    let rule = Rule::panels(0.0, 2.5, 0.0125);
    let interp = |x: f64| {
        let t = x / 0.0125;
        let i = (t.floor() as usize).min(199);
        let u = t - i as f64;
        fine.g[i] * (1.0 - u) + fine.g[i + 1] * u
    };
    for lam in [-7.0, -1.5, 0.0, 2.0, 9.0] {
        let want = -C64::from_polar(1.0, lam * 2.5) * rule.integrate_c(|s| interp(s) * C64::from_polar(1.0, -lam * s));
        let got = evaluate_p_at(coarse, &[lam])[0];
        assert!((got - want).norm() < 1e-4, "{lam} {}", (got - want).norm());
    }
}

#[test]
fn plancherel_a_priori_identity() {
    let w = bump(0.2);
    let (lg, sw) = setup(&w, 128.0, 4096, 0.05, 20.0);
    for i in [40, 200, 400] {
        let sl = &sw.slices[i];
        let d = evaluate_p(sl, &lg);
        let lhs = (d.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * lg.step()).sqrt();
        let g2: f64 = Rule::panels(0.0, sl.r, 0.05).integrate(|s| {
            let t = s / 0.05;
            let k = (t.floor() as usize).min(sl.n() - 1);
            let u = t - k as f64;
            (sl.g[k] * (1.0 - u) + sl.g[k + 1] * u).norm_sqr()
        });
        let rhs = (2.0 * PI * g2).sqrt();
        assert!((lhs - rhs).abs() <= 0.01 * rhs, "{lhs} {rhs}");
    }
}

#[test]
fn ode_oracle_against_integral_polynomial() {
    let lams: Vec<f64> = (0..=200).map(|k| -10.0 + 0.1 * k as f64).collect();
    let mut errs = Vec::new();
    for dr in [0.05, 0.025] {
        let w = bump(0.1);
        let (_, sw) = setup(&w, 128.0, 4096, dr, 20.0);
        let a = extract_a(&sw);
        let ode = ode_oracle_many(&a, dr, &lams).unwrap();
        let last = sw.slices.last().unwrap();
        let d = evaluate_p_at(last, &lams);
        let mut err = 0.0f64;
        for (k, &lam) in lams.iter().enumerate() {
            let p = d[k] + C64::from_polar(1.0, lam * 20.0);
            err = err.max((ode[k].0 - p).norm());
            let ps = C64::from_polar(1.0, lam * 20.0) * p.conj();
            assert!((ode[k].0.norm() - ode[k].1.norm()).abs() < 1e-9);
            err = err.max((ode[k].1 - ps).norm());
        }
        errs.push(err);
    }
    eprintln!("ode vs integral {errs:?}");
    assert!(errs[0] <= 1e-5);
    assert!(errs[0] / errs[1] >= 8.0);
}

#[test]
fn zero_coefficient_flow_is_free() {
    let a = vec![C64::new(0.0, 0.0); 401];
    for lam in [-10.0, 3.3, 10.0] {
        let (p, ps) = ode_oracle(&a, 0.05, lam).unwrap();
        assert!((p - C64::from_polar(1.0, lam * 20.0)).norm() < 1e-12);
        assert!((ps - 1.0).norm() < 1e-14);
    }
}

#[test]
fn orthonormality_flat_weight_is_plancherel() {
    let w = make_weight(WeightSpec::Const { c: 1.0 }).unwrap();
    let (lg, sw) = setup(&w, 128.0, 4096, 0.05, 20.0);
    let f = SplineBump::new(5.0, 0.25);
    let g = SplineBump::new(5.3, 0.4);
    let r = orthonormality_check(&w, &f, &g, &sw, &lg).unwrap();
    assert!(r.residual <= 1e-6, "{}", r.residual);
}

#[test]
fn orthonormality_bump_weight_and_refinement() {
    let w = bump(0.1);
    let f = SplineBump::new(5.0, 0.25);
    let g = SplineBump::new(6.0, 0.5);
    let (lg, sw) = setup(&w, 128.0, 4096, 0.05, 20.0);
    let a = orthonormality_check(&w, &f, &f, &sw, &lg).unwrap();
    let (lg2, sw2) = setup(&w, 256.0, 8192, 0.05, 20.0);
    let b = orthonormality_check(&w, &f, &f, &sw2, &lg2).unwrap();
    eprintln!("orthonormality {} {}", a.residual, b.residual);
    assert!(a.residual <= 5e-3);
    assert!(b.residual <= 2.5e-3);
    let fg = orthonormality_check(&w, &f, &g, &sw, &lg).unwrap();
    let gf = orthonormality_check(&w, &g, &f, &sw, &lg).unwrap();
    assert!((fg.spectral - gf.spectral.conj()).norm() < 1e-12);
}

#[test]
fn support_near_right_end_is_rejected() {
    let w = bump(0.1);
    let (lg, sw) = setup(&w, 128.0, 1024, 0.05, 5.0);
    let f = SplineBump::new(4.5, 0.25);
    assert!(orthonormality_check(&w, &f, &f, &sw, &lg).is_err());
}

#[test]
fn band_orthogonality() {
    let f = SplineBump::new(5.0, 0.5);
    let flat = make_weight(WeightSpec::Const { c: 1.0 }).unwrap();
    let (lg, sw) = setup(&flat, 128.0, 4096, 0.05, 10.0);
    let v = band_orthogonality_check(&flat, 0, &f, &sw.slices[200], &lg).unwrap();
    assert!(v.norm() <= 1e-8, "{}", v.norm());
    let w = bump(0.1);
    let (lg, sw) = setup(&w, 128.0, 4096, 0.05, 10.0);
    let v0 = band_orthogonality_check(&w, 0, &f, &sw.slices[200], &lg).unwrap();
    let v1 = band_orthogonality_check(&w, 1, &f, &sw.slices[200], &lg).unwrap();
    let (lg2, sw2) = setup(&w, 256.0, 8192, 0.05, 10.0);
    let v0b = band_orthogonality_check(&w, 0, &f, &sw2.slices[200], &lg2).unwrap();
    eprintln!("band {} {} {}", v0.norm(), v1.norm(), v0b.norm());
    assert!(v0.norm() <= 1e-4);
    assert!(v1.norm() <= 1e-3);
    assert!(v0b.norm() < v0.norm());
}
