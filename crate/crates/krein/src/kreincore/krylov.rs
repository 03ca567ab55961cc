use crate::error::{KreinError, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate gradients for a Hermitian operator; reports an indefinite
/// operator as `NotPositive`.
pub fn cg_solve<F: Fn(&[C64]) -> Vec<C64>>(apply: F, b: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>> {
    let n = b.len();
    let bn = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bn == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(KreinError::NotPositive { r: f64::NAN, pivot: pap });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = dot(&r, &r).re;
        if rr_new.sqrt() <= tol * bn {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
        rr = rr_new;
    }
    Err(KreinError::NoConvergence { iterations: max_iter })
}

/// Smallest Ritz value of a Hermitian operator after `steps` Lanczos steps
/// with full reorthogonalization, from a seeded random start.
pub fn lanczos_min_eig<F: Fn(&[C64]) -> Vec<C64>>(apply: F, n: usize, steps: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|v| *v /= qn);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for k in 0..steps {
        let mut w = apply(&basis[k]);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * c;
                }
            }
        }
        let b = norm(&w);
        if k + 1 == steps || b < 1e-13 {
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}
