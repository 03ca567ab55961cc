//! Restarted GMRES, discrete `l^p` norms and duality maps.

use crate::error::{KreinError, Result};
use num_complex::Complex64 as C64;

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `(Σ |x_i|^p)^{1/p}`.
pub fn lp(x: &[C64], p: f64) -> f64 {
    if p == 2.0 {
        return norm2(x);
    }
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.norm()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.norm() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Duality map: the unit `l^{p'}` vector `y` with `<y, x> = ||x||_p`.
pub fn dual_vector(x: &[C64], p: f64) -> Vec<C64> {
    let n = lp(x, p);
    if n == 0.0 {
        return vec![C64::new(0.0, 0.0); x.len()];
    }
    x.iter()
        .map(|v| {
            let a = v.norm();
            if a == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                v / a * (a / n).powf(p - 1.0)
            }
        })
        .collect()
}

/// Restarted GMRES(m) with modified Gram–Schmidt and Givens rotations.
/// Returns the solution and the iteration count.
pub fn gmres<F: Fn(&[C64]) -> Vec<C64>>(apply: F, b: &[C64], tol: f64, restart: usize, max_iter: usize) -> Result<(Vec<C64>, usize)> {
    let n = b.len();
    let bn = norm2(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let mut iters = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let beta = norm2(&r);
        if beta <= tol * bn {
            return Ok((x, iters));
        }
        if iters >= max_iter {
            return Err(KreinError::NoConvergence { iterations: iters });
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<C64> = Vec::new();
        let mut sn: Vec<C64> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut k = 0;
        while k < restart && iters < max_iter {
            let mut w = apply(&v[k]);
            let mut col = vec![C64::new(0.0, 0.0); k + 2];
            for (i, vi) in v.iter().enumerate() {
                let c = dot(vi, &w);
                col[i] = c;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= b * c);
            }
            let hn = norm2(&w);
            col[k + 1] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * col[i] + sn[i].conj() * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let den = (col[k].norm_sqr() + col[k + 1].norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (col[k] / den, col[k + 1] / den) };
            col[k] = C64::new(den, 0.0);
            col[k + 1] = C64::new(0.0, 0.0);
            let gk = g[k];
            g[k] = c.conj() * gk;
            g.push(-s * gk);
            cs.push(c);
            sn.push(s);
            h.push(col);
            iters += 1;
            k += 1;
            if g[k].norm() <= tol * bn || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            if h[i][i].norm() == 0.0 {
                return Err(KreinError::Singular("GMRES breakdown on a zero pivot".into()));
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&v[j]).for_each(|(a, b)| *a += b * yj);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 60;
        let a = |i: usize, j: usize| -> C64 {
            if i == j {
                C64::new(3.0, 0.5)
            } else {
                C64::new(((i * 7 + j * 3) % 11) as f64 / 40.0, ((i + 2 * j) % 5) as f64 / 50.0 - 0.04)
            }
        };
        let xs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mv = |x: &[C64]| (0..n).map(|i| (0..n).map(|j| a(i, j) * x[j]).sum()).collect::<Vec<C64>>();
        let b = mv(&xs);
        let (x, _) = gmres(mv, &b, 1e-13, 10, 1000).unwrap();
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).norm() < 1e-9);
        }
    }

    #[test]
    fn duality_map_attains_the_norm() {
        let x = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0), C64::new(0.0, 3.0)];
        for p in [1.5, 2.0, 3.7] {
            let y = dual_vector(&x, p);
            assert!((dot(&y, &x).re - lp(&x, p)).abs() < 1e-12);
            assert!((lp(&y, p / (p - 1.0)) - 1.0).abs() < 1e-12);
        }
    }
}
