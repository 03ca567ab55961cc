use krein::harmonic::LambdaGrid;
use krein::weights::*;
use proptest::prelude::*;

fn w(spec: WeightSpec) -> Weight {
    make_weight(spec).unwrap()
}

fn power(beta: f64) -> Weight {
    w(WeightSpec::Power { beta, center: 0.0, scale: 1.0 })
}

/// `<w>_I <w^-1>_I` for the bump on `[-1, 1]` over all intervals with endpoints
/// on a uniform mesh of `[-3, 3]`.
fn bump_a2_mesh(delta: f64, per_unit: usize) -> f64 {
    let h = 1.0 / per_unit as f64;
    let m = 6 * per_unit;
    let inside = |a: f64, b: f64| (b.min(1.0) - a.max(-1.0)).max(0.0);
    let mut best = 1.0f64;
    for i in 0..m {
        for j in i + 1..=m {
            let (a, b) = (-3.0 + i as f64 * h, -3.0 + j as f64 * h);
            let (len, t) = (b - a, inside(a, b));
            let avg = (len + delta * t) / len;
            let inv = (len - t + t / (1.0 + delta)) / len;
            best = best.max(avg * inv);
        }
    }
    best
}

#[test]
fn constant_weight_is_trivial() {
    let one = w(WeightSpec::Const { c: 1.0 });
    assert!(one.singularities.is_empty() && one.is_constant());
    assert_eq!(weight_gap_norm(&one, 2.0, 2.0, 0.0, 8.0).unwrap(), 0.0);
    let d = decompose_deviation(&one, &LambdaGrid::new(8.0, 256).unwrap());
    assert_eq!((d.norm1, d.norm2), (0.0, 0.0));
    assert!(bmo_estimate(&w(WeightSpec::Const { c: 5.0 }), 4) < 1e-13);
}

#[test]
fn bump_characteristic_matches_mesh_search() {
    let mesh = bump_a2_mesh(0.2, 16);
    let closed = 2.2 * 2.2 / (4.0 * 1.2);
    assert!((mesh - closed).abs() < 1e-12, "{mesh}");
    assert!((closed - 1.00833).abs() < 1e-5);
    let est = a2_characteristic(&w(WeightSpec::bump(0.2)), 2.0, 6).unwrap();
    assert!((est.value - mesh).abs() < 1e-3);
}

#[test]
fn characteristic_blows_up_near_the_endpoint_exponent() {
    // over [0, t]: <x^b> <x^-b> = 1 / (1 - b^2)
    let est = a2_characteristic(&power(0.9), 2.0, 6).unwrap();
    assert!(est.value > 5.0);
    assert!(a2_characteristic(&power(0.5), 2.0, 6).unwrap().value < est.value);
}

#[test]
fn deviation_split_at_unit_height() {
    let g = LambdaGrid::new(8.0, 1024).unwrap();
    let d = decompose_deviation(&w(WeightSpec::bump(0.5)), &g);
    assert_eq!(d.norm1, 0.0);
    assert!(d.u1.values.iter().all(|v| v.norm() == 0.0));
    assert!((d.u2.l2() - 0.5 * 2f64.sqrt()).abs() < 1e-2, "{}", d.u2.l2());
    let d = decompose_deviation(&power(-0.5), &g);
    for (x, v) in g.nodes().zip(&d.u1.values) {
        if v.norm() > 0.0 {
            assert!(x.abs() < 0.25, "u1 at {x}");
        }
    }
    assert!(d.norm1 > 0.0);
}

#[test]
fn gap_norm_is_linear_in_delta() {
    let deltas = [1e-3, 1e-2, 1e-1];
    let v: Vec<f64> = deltas.iter().map(|&d| weight_gap_norm(&w(WeightSpec::bump(d)), 2.0, 2.0, 0.0, 8.0).unwrap()).collect();
    let slope = (v[2] / v[0]).ln() / (deltas[2] / deltas[0]).ln();
    assert!((slope - 1.0).abs() <= 0.05, "{slope}");
}

#[test]
fn perturbative_gap_estimate() {
    // |(1+d)^(1/2) - (1+d)^(-1/2)| sqrt 2 / d = sqrt(2 / (1 + d))
    for tau in [1e-4f64, 1e-3, 1e-2] {
        let d = tau.sqrt();
        let r = weight_gap_norm(&w(WeightSpec::bump(d)), 2.0, 2.0, 0.0, 8.0).unwrap() / d;
        assert!((r - (2.0 / (1.0 + d)).sqrt()).abs() < 1e-10, "tau {tau}: {r}");
        assert!((1.3..=1.5).contains(&r));
    }
}

#[test]
fn bmo_tracks_root_tau() {
    for delta in [0.05, 0.1, 0.2] {
        let bw = w(WeightSpec::bump(delta));
        let tau = a2_characteristic(&bw, 2.0, 6).unwrap().value - 1.0;
        // tau = delta^2 / (4 (1 + delta))
        assert!((tau - delta * delta / (4.0 * (1.0 + delta))).abs() < 1e-12);
        let b = bmo_estimate(&bw, 6);
        assert!(b > 0.0 && b <= 2.0 * tau.sqrt(), "delta {delta}: {b} vs {}", tau.sqrt());
    }
}

#[test]
fn bad_parameters() {
    let b = w(WeightSpec::bump(0.1));
    assert!(a2_characteristic(&b, 1.0, 4).is_err());
    assert!(a2_characteristic(&b, 2.0, 0).is_err());
    assert!(weight_gap_norm(&b, 1.0, 2.0, 0.0, 8.0).is_err());
    assert!(make_weight(WeightSpec::Const { c: 0.0 }).is_err());
    assert!(make_weight(WeightSpec::bump(-1.0)).is_err());
}

fn local_spec() -> impl Strategy<Value = WeightSpec> {
    prop_oneof![
        (0.01f64..2.0, -2.0f64..1.0, 0.25f64..3.0).prop_map(|(delta, a, l)| WeightSpec::Bump { delta, a, b: a + l }),
        (-0.8f64..0.8, -2.0f64..2.0, 0.25f64..2.0).prop_map(|(beta, center, scale)| WeightSpec::Power { beta, center, scale }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characteristic_at_least_one(spec in local_spec()) {
        let e = a2_characteristic(&w(spec), 2.0, 4).unwrap();
        prop_assert!(e.value >= 1.0);
    }

    #[test]
    fn characteristic_of_nonconstant_bump_exceeds_one(delta in 0.01f64..2.0) {
        let e = a2_characteristic(&w(WeightSpec::bump(delta)), 2.0, 4).unwrap();
        prop_assert!(e.value > 1.0 + 1e-9);
    }

    #[test]
    fn characteristic_is_affine_invariant(spec in local_spec(), shift in -8.0f64..8.0, k in -3i32..3) {
        let scale = 2f64.powi(k);
        let base = a2_characteristic(&w(spec.clone()), 2.0, 4).unwrap().value;
        let moved = w(spec.affine(shift, scale).unwrap());
        let framed = ap_characteristic_in_frame(&moved, 2.0, 4, shift, scale).unwrap().value;
        prop_assert!((framed - base).abs() <= 1e-6 * base, "{} vs {}", framed, base);
    }

    #[test]
    fn gap_norm_swap_identity(spec in local_spec(), pt in 1.2f64..4.0, p in 1.0f64..4.0, q in 0.0f64..2.0) {
        let a = weight_gap_norm(&w(spec.clone()), pt, p, q, 8.0);
        let b = weight_gap_norm(&w(spec.reciprocal().unwrap()), pt / (pt - 1.0), p, q, 8.0);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} vs {}", a, b),
            // a divergent singularity diverges on both sides
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn weights_are_positive_off_singularities(spec in local_spec(), x in -10.0f64..10.0) {
        let ww = w(spec);
        if ww.singularities.iter().all(|(c, _)| *c != x) {
            prop_assert!(ww.eval(x) > 0.0);
        }
    }
}
