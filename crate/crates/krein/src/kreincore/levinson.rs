//! Levinson recursion for Hermitian Toeplitz systems with several right-hand sides.

use crate::error::{KreinError, Result};
use num_complex::Complex64 as C64;

/// Solves `T x = y` for each `y` in `rhs`, where `T_{ij} = t_{i-j}` and
/// `t_{-k} = conj(t_k)`. Fails with `NotPositive` when a prediction-error
/// pivot is not positive; `r_at_fail` maps the failing order to an r value.
pub fn levinson_multi(t: &[C64], rhs: &[Vec<C64>], r_at_fail: impl Fn(usize) -> f64) -> Result<Vec<Vec<C64>>> {
    let n = t.len();
    for y in rhs {
        assert_eq!(y.len(), n);
    }
    let t0 = t[0].re;
    if !(t0 > 0.0) {
        return Err(KreinError::NotPositive { r: r_at_fail(0), pivot: t0 });
    }
    let mut f = Vec::with_capacity(n);
    f.push(C64::new(1.0 / t0, 0.0));
    let mut b = f.clone();
    let mut pivot = t0;
    let mut xs: Vec<Vec<C64>> = rhs.iter().map(|y| vec![y[0] / t0]).collect();
    for k in 1..n {
        // eps_f = sum_j t_{k-j} f_j
        let mut ef = C64::new(0.0, 0.0);
        for (j, fj) in f.iter().enumerate() {
            ef += t[k - j] * fj;
        }
        let eb = ef.conj();
        let den = 1.0 - (ef * eb).re;
        pivot *= den;
        if !(den > 0.0) || !(pivot > 0.0) {
            return Err(KreinError::NotPositive { r: r_at_fail(k), pivot });
        }
        let mut nf = vec![C64::new(0.0, 0.0); k + 1];
        let mut nb = vec![C64::new(0.0, 0.0); k + 1];
        for j in 0..=k {
            let fj = if j < k { f[j] } else { C64::new(0.0, 0.0) };
            let bj = if j > 0 { b[j - 1] } else { C64::new(0.0, 0.0) };
            nf[j] = (fj - ef * bj) / den;
            nb[j] = (bj - eb * fj) / den;
        }
        f = nf;
        b = nb;
        for (x, y) in xs.iter_mut().zip(rhs) {
            let mut e = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                e += t[k - j] * xj;
            }
            let c = y[k] - e;
            x.push(C64::new(0.0, 0.0));
            for (xj, bj) in x.iter_mut().zip(&b) {
                *xj += c * bj;
            }
        }
    }
    Ok(xs)
}
