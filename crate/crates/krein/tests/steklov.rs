use krein::harmonic::{make_grids, LambdaGrid};
use krein::kreincore::*;
use krein::steklov::*;
use krein::weights::{make_weight, Weight, WeightSpec};
use krein::KreinError;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(delta: f64) -> Weight {
    make_weight(WeightSpec::bump(delta)).unwrap()
}

fn flat() -> Weight {
    make_weight(WeightSpec::Const { c: 1.0 }).unwrap()
}

fn small_grid() -> LambdaGrid {
    LambdaGrid::new(16.0, 512).unwrap()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

fn slice_at(w: &Weight, half: f64, n: usize, r: f64) -> (LambdaGrid, ResolventSlice) {
    let (lg, rg) = make_grids(half, n, 0.05, r).unwrap();
    let acc = compute_accelerant(w, &rg, &lg).unwrap();
    (lg, solve_resolvent(&acc, r, 0.0).unwrap())
}

#[test]
fn band_matrix_is_an_orthogonal_projection() {
    let g = small_grid();
    let m = assemble_band_matrix(5.0, &g).unwrap();
    assert!(max_abs(&(&m.entries - m.entries.adjoint())) <= 1e-10);
    assert!(max_abs(&(&m.entries * &m.entries - &m.entries)) <= 1e-10);
    let tr = m.entries.trace().re;
    let bins = 5.0 * 512.0 * g.step() / (2.0 * std::f64::consts::PI);
    assert!((tr - bins).abs() <= 1.0, "{tr} {bins}");
    let n2 = operator_pnorm(&m, 2.0, NormMode::Exact2, 1).unwrap();
    assert!((n2.value - 1.0).abs() <= 1e-10);
    assert!(matches!(assemble_band_matrix(g.nyquist() + 1.0, &g), Err(KreinError::BandOutOfRange { .. })));
}

#[test]
fn q_vanishes_for_flat_weight_and_is_antisymmetric_at_two() {
    let g = small_grid();
    assert_eq!(max_abs(&assemble_q(&flat(), 2.7, 5.0, &g).unwrap().entries), 0.0);
    for w in [bump(0.3), make_weight(WeightSpec::Power { beta: 0.5, center: 0.0, scale: 1.0 }).unwrap()] {
        let gw = LambdaGrid::for_weight(16.0, 512, &w).unwrap();
        let q = assemble_q(&w, 2.0, 5.0, &gw).unwrap();
        assert!(max_abs(&(&q.entries + q.entries.adjoint())) <= 1e-10);
        let n = gw.n;
        let iq = DMatrix::<C64>::identity(n, n) - &q.entries;
        let sv = OperatorMatrix { grid: gw, entries: iq, label: String::new() }.singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(smin >= 1.0 - 1e-8, "{smin}");
    }
}

#[test]
fn q_norm_is_linear_in_delta() {
    let g = small_grid();
    let deltas = [1e-3, 1e-2, 1e-1];
    let norms: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let q = QOperator::new(&bump(d), 2.0, 5.0, &g).unwrap();
            operator_pnorm(&q, 2.0, NormMode::Exact2, 3).unwrap().value
        })
        .collect();
    let slope = (norms[2] / norms[0]).ln() / (deltas[2] / deltas[0]).ln();
    eprintln!("Q norms {norms:?} slope {slope}");
    assert!((slope - 1.0).abs() <= 0.1);
}

#[test]
fn norms_of_simple_matrices() {
    let g = LambdaGrid::new(4.0, 64).unwrap();
    let id = OperatorMatrix { grid: g, entries: DMatrix::identity(64, 64), label: "I".into() };
    let d: Vec<C64> = (0..64).map(|i| if i == 17 { C64::new(-1.5, 0.5) } else { C64::new((i as f64 / 10.0).sin(), 0.3) }).collect();
    let dmax = d.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    let diag = OperatorMatrix { grid: g, entries: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)), label: "D".into() };
    for p in [1.3, 2.0, 3.5] {
        let a = operator_pnorm(&id, p, NormMode::Lower, 9).unwrap().value;
        let b = operator_pnorm(&diag, p, NormMode::Lower, 9).unwrap().value;
        assert!((a - 1.0).abs() < 1e-12);
        assert!((b - dmax).abs() < 1e-6 * dmax, "{p} {b} {dmax}");
    }
    assert!(operator_pnorm(&id, 1.0, NormMode::Lower, 0).is_err());
}

#[test]
fn band_norm_duality() {
    let g = LambdaGrid::new(16.0, 256).unwrap();
    let m = assemble_band_matrix(4.0, &g).unwrap();
    for p in [1.5, 3.0] {
        let a = operator_pnorm(&m, p, NormMode::Lower, 11).unwrap().value;
        let b = operator_pnorm(&m, p / (p - 1.0), NormMode::Lower, 11).unwrap().value;
        assert!((a - b).abs() <= 0.05 * a.max(b), "{a} {b}");
    }
}

#[test]
fn inverse_certificates() {
    let g = small_grid();
    let c = inverse_norm_certificate(&flat(), 2.4, 5.0, &g, 5).unwrap();
    assert!((c.lower - 1.0).abs() < 1e-12 && (c.norm2 - 1.0).abs() < 1e-12);
    let w = bump(0.2);
    let c2 = inverse_norm_certificate(&w, 2.0, 5.0, &g, 5).unwrap();
    assert!(c2.norm2 <= 1.0 + 1e-8);
    let (lg, _) = make_grids(128.0, 4096, 0.05, 20.0).unwrap();
    let mut worst = 0.0f64;
    for r in [0.0, 5.0, 10.0, 20.0] {
        worst = worst.max(inverse_norm_certificate(&w, 2.2, r, &lg, 5).unwrap().lower);
    }
    eprintln!("certificate p=2.2 sup over r {worst}");
    assert!(worst <= 3.0);
}

#[test]
fn conjugated_band_norm_is_uniform_in_r() {
    let w = bump(0.2);
    let g = LambdaGrid::new(32.0, 1024).unwrap();
    let vals: Vec<f64> = [2.0, 5.0, 10.0, 20.0].iter().map(|&r| conjugated_band_norm(&w, 2.4, r, &g, 2).unwrap().value).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    eprintln!("conjugated band norms {vals:?}");
    assert!(hi <= 1.1 * lo);
}

#[test]
fn functional_equation_residuals() {
    let w = bump(0.1);
    let (lg, sl) = slice_at(&w, 128.0, 4096, 5.0);
    let (lg2, sl2) = slice_at(&w, 256.0, 8192, 5.0);
    for p in [2.0, 2.2] {
        let a = functional_residual(&w, p, &sl, 0, &lg).unwrap().residual;
        let b = functional_residual(&w, p, &sl2, 0, &lg2).unwrap().residual;
        eprintln!("functional residual p={p}: {a} -> {b}");
        assert!(a <= 5e-3);
        assert!(a / b >= 1.9);
    }
    let k1 = functional_residual(&w, 2.0, &sl, 1, &lg).unwrap().residual;
    eprintln!("functional residual k=1: {k1}");
    assert!(k1 <= 2e-2);
    let f = flat();
    let (lf, sf) = slice_at(&f, 128.0, 4096, 5.0);
    let z = functional_residual(&f, 2.0, &sf, 0, &lf).unwrap();
    assert!(z.rhs.iter().chain(&z.x).all(|v| v.norm() == 0.0));
}

#[test]
fn solved_x_matches_direct_construction() {
    let w = bump(0.1);
    let (lg, sl) = slice_at(&w, 128.0, 4096, 5.0);
    for p in [1.8, 2.0, 2.2] {
        let s = solve_x(&w, p, &sl, 0, &lg).unwrap();
        let d = s.discrepancy.unwrap();
        eprintln!("solve_X p={p}: discrepancy {d}");
        assert!(d <= 1e-2);
    }
}

#[test]
fn neumann_series_inverse() {
    let g = LambdaGrid::new(16.0, 256).unwrap();
    let id = neumann_inverse(&flat(), 5.0, &g, 1e-12).unwrap();
    assert_eq!(id.terms, 1);
    assert_eq!(max_abs(&(&id.matrix.entries - DMatrix::<C64>::identity(256, 256))), 0.0);
    let w = bump(0.3);
    let tol = 1e-12;
    let nm = neumann_inverse(&w, 5.0, &g, tol).unwrap();
    assert!((nm.terms as f64) <= tol.ln() / (0.3f64 * 1.05).ln() + 2.0, "{}", nm.terms);
    for delta in [0.1, 0.3, 0.45] {
        let w = bump(delta);
        let nm = neumann_inverse(&w, 5.0, &g, tol).unwrap();
        let direct = neumann_system(&w, 5.0, &g).unwrap().entries.try_inverse().unwrap();
        assert!(max_abs(&(&nm.matrix.entries - direct)) <= 1e-8);
    }
    assert!(matches!(neumann_inverse(&bump(1.5), 5.0, &g, tol), Err(KreinError::NotContractive { .. })));
}

#[test]
fn antisymmetry_on_random_vectors() {
    let w = bump(0.4);
    let g = LambdaGrid::new(64.0, 2048).unwrap();
    let q = QOperator::new(&w, 2.0, 7.0, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let f: Vec<C64> = (0..2048).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let h: Vec<C64> = (0..2048).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let qf = q.apply(&f).unwrap();
        let qh = q.apply(&h).unwrap();
        let a: C64 = qf.iter().zip(&h).map(|(x, y)| x * y.conj()).sum();
        let b: C64 = f.iter().zip(&qh).map(|(x, y)| x * y.conj()).sum();
        assert!((a + b).norm() <= 1e-10 * 2048.0);
    }
}

#[test]
fn vanishing_weight_is_rejected() {
    let w = make_weight(WeightSpec::Power { beta: 0.5, center: 0.0, scale: 1.0 }).unwrap();
    let g = LambdaGrid::new(16.0, 512).unwrap();
    assert!(matches!(assemble_q(&w, 2.0, 3.0, &g), Err(KreinError::WeightVanishes { .. })));
}
