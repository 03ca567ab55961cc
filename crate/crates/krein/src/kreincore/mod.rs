//! Accelerant and resolvent solvers.
//!
//! The resolvent column `gamma = Γ_r(., s)` solves the Nyström system
//! `(I + T D) gamma = h`, `T_{ij} = H((i-j) dr)`, `D = diag(dr W)` with `W`
//! the Gregory weights on `[0, r]`. Since `W - 1` lives on three nodes at each
//! end, `I + T D` is the Hermitian Toeplitz matrix `I + dr T` plus a rank-six
//! correction: Levinson handles the first, Woodbury the second.

mod continuation;
mod krylov;
mod levinson;

pub use continuation::{continuation_sweep, direct_sweep, Sweep, CHECKPOINT_EVERY};
pub use krylov::{cg_solve, lanczos_min_eig};
pub use levinson::levinson_multi;

use crate::error::{KreinError, Result};
use crate::fft::{fft, ifft};
use crate::harmonic::{LambdaGrid, RGrid};
use crate::quad::{gregory_weights, Rule};
use crate::weights::Weight;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

/// Samples `H_k = H(k dr)`, `k = 0..=M`; negative indices follow from
/// `H(-x) = conj(H(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerant {
    pub rgrid: RGrid,
    pub samples: Vec<C64>,
    pub weight_id: u64,
    pub h0: C64,
}

impl Accelerant {
    pub fn at(&self, k: isize) -> C64 {
        if k >= 0 { self.samples[k as usize] } else { self.samples[(-k) as usize].conj() }
    }

    /// Accelerant of a given sample vector (used for closed-form kernels in tests).
    pub fn from_samples(rgrid: RGrid, samples: Vec<C64>) -> Accelerant {
        assert_eq!(samples.len(), rgrid.m + 1);
        let h0 = C64::new(samples[0].re, 0.0);
        let mut samples = samples;
        samples[0] = h0;
        Accelerant { rgrid, samples, weight_id: 0, h0 }
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| *v == C64::new(0.0, 0.0))
    }
}

/// `(1/2pi) Σ c_m (w(lambda_m) - 1) e^{i lambda_m x_k}` for `x_k = k dx`, `k < count`.
pub fn accelerant_values(rule: &Rule, w: &Weight, dx: f64, count: usize) -> Vec<C64> {
    let terms: Vec<(f64, f64)> = rule
        .x
        .iter()
        .zip(&rule.w)
        .map(|(&x, &c)| (x, c * (w.eval(x) - 1.0) / (2.0 * PI)))
        .filter(|(_, a)| *a != 0.0)
        .collect();
    let chunk = 256;
    terms
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = vec![C64::new(0.0, 0.0); count];
            for &(x, a) in part {
                let step = C64::from_polar(1.0, x * dx);
                let mut ph = C64::new(a, 0.0);
                for (k, v) in acc.iter_mut().enumerate() {
                    if k % 64 == 0 {
                        ph = C64::from_polar(a, x * dx * k as f64);
                    }
                    *v += ph;
                    ph *= step;
                }
            }
            acc
        })
        .reduce(
            || vec![C64::new(0.0, 0.0); count],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
                a
            },
        )
}

pub fn compute_accelerant(w: &Weight, rgrid: &RGrid, lgrid: &LambdaGrid) -> Result<Accelerant> {
    if rgrid.r_max() >= lgrid.nyquist() {
        return Err(KreinError::NyquistViolation { r: rgrid.r_max(), limit: lgrid.nyquist() });
    }
    let rule = w.deviation_rule(lgrid.half_width, 0.25);
    let mut samples = accelerant_values(&rule, w, rgrid.dr, rgrid.m + 1);
    if samples.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(KreinError::NonFinite("accelerant".into()));
    }
    samples[0] = C64::new(samples[0].re, 0.0);
    let h0 = samples[0];
    Ok(Accelerant { rgrid: *rgrid, samples, weight_id: w.id, h0 })
}

/// FFT application of the Toeplitz matrix `T_{ij} = H_{i-j}`, `0 <= i, j <= n`.
pub struct ToeplitzOp {
    n: usize,
    spectrum: Vec<C64>,
}

impl ToeplitzOp {
    pub fn new(acc: &Accelerant, n: usize) -> ToeplitzOp {
        let len = (2 * (n + 1)).next_power_of_two();
        let mut col = vec![C64::new(0.0, 0.0); len];
        for m in 0..=n {
            col[m] = acc.at(m as isize);
        }
        for m in 1..=n {
            col[len - m] = acc.at(-(m as isize));
        }
        fft(&mut col);
        ToeplitzOp { n, spectrum: col }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.spectrum.len()];
        v[..=self.n].copy_from_slice(x);
        fft(&mut v);
        v.iter_mut().zip(&self.spectrum).for_each(|(a, b)| *a *= b);
        ifft(&mut v);
        v.truncate(self.n + 1);
        v
    }
}

fn n_of(acc: &Accelerant, r: f64) -> Result<usize> {
    let n = acc.rgrid.index(r)?;
    Ok(n)
}

/// `(H_r f)(s_i) = Σ_j H((i-j) dr) dr W_j f_j` on the nodes of `[0, r]`.
pub fn apply_hr(acc: &Accelerant, f: &[C64], r: f64) -> Result<Vec<C64>> {
    let n = n_of(acc, r)?;
    if f.len() != n + 1 {
        return Err(KreinError::GridMismatch);
    }
    let w = gregory_weights(n);
    let dr = acc.rgrid.dr;
    let x: Vec<C64> = f.iter().zip(&w).map(|(v, c)| v * (c * dr)).collect();
    Ok(ToeplitzOp::new(acc, n).apply(&x))
}

/// One resolvent column on `[0, r]` sampled at `s_i = i dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSlice {
    pub r: f64,
    pub dr: f64,
    pub g: Vec<C64>,
}

impl ResolventSlice {
    pub fn n(&self) -> usize {
        self.g.len() - 1
    }

    /// `Γ_r(r, t_i) = g_r(r - t_i)`.
    pub fn edge_row(&self) -> Vec<C64> {
        self.g.iter().rev().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Levinson,
    Cg,
}

fn rhs_column(acc: &Accelerant, n: usize, s_idx: usize) -> Vec<C64> {
    (0..=n).map(|i| acc.at(i as isize - s_idx as isize)).collect()
}

/// Column `Γ_r(., s)`; Levinson plus a Woodbury correction for the end weights.
pub fn solve_resolvent(acc: &Accelerant, r: f64, s: f64) -> Result<ResolventSlice> {
    solve_resolvent_with(acc, r, s, Solver::Levinson)
}

pub fn solve_resolvent_with(acc: &Accelerant, r: f64, s: f64, solver: Solver) -> Result<ResolventSlice> {
    let n = n_of(acc, r)?;
    let si = acc.rgrid.index(s)?;
    if si > n {
        return Err(KreinError::BadParameter(format!("offset {s} exceeds r = {r}")));
    }
    let h = rhs_column(acc, n, si);
    let g = match solver {
        Solver::Levinson => solve_system_levinson(acc, n, &[h])?.pop().unwrap(),
        Solver::Cg => solve_system_cg(acc, n, &h)?,
    };
    Ok(ResolventSlice { r, dr: acc.rgrid.dr, g })
}

/// Solves `(I + T D) x = y` for each right side by Levinson plus Woodbury.
pub(crate) fn solve_system_levinson(acc: &Accelerant, n: usize, rhs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let dr = acc.rgrid.dr;
    if n == 0 {
        return Ok(rhs.to_vec());
    }
    let w = gregory_weights(n);
    let t: Vec<C64> = (0..=n)
        .map(|k| if k == 0 { C64::new(1.0, 0.0) + acc.at(0) * dr } else { acc.at(k as isize) * dr })
        .collect();
    let corr: Vec<usize> = (0..=n).filter(|&j| w[j] != 1.0).collect();
    // columns of U: dr (W_j - 1) T[:, j]
    let us: Vec<Vec<C64>> = corr
        .iter()
        .map(|&j| (0..=n).map(|i| acc.at(i as isize - j as isize) * (dr * (w[j] - 1.0))).collect())
        .collect();
    let mut all = rhs.to_vec();
    all.extend(us);
    let rg = acc.rgrid;
    let sol = levinson_multi(&t, &all, |k| rg.node(k))?;
    let (ys, zs) = sol.split_at(rhs.len());
    let m = corr.len();
    let cap = DMatrix::from_fn(m, m, |a, b| {
        let d = if a == b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        d + zs[b][corr[a]]
    });
    let lu = cap.lu();
    let mut out = Vec::with_capacity(rhs.len());
    for y in ys {
        let ey = DVector::from_iterator(m, corr.iter().map(|&j| y[j]));
        let c = lu.solve(&ey).ok_or_else(|| KreinError::Singular("Woodbury capacitance matrix".into()))?;
        let mut x = y.clone();
        for (b, z) in zs.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi -= c[b] * zi;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// CG on the symmetrized system `(I + D^{1/2} T D^{1/2}) y = D^{1/2} h`.
fn solve_system_cg(acc: &Accelerant, n: usize, h: &[C64]) -> Result<Vec<C64>> {
    if n == 0 {
        return Ok(h.to_vec());
    }
    let dr = acc.rgrid.dr;
    let d: Vec<f64> = gregory_weights(n).iter().map(|w| (w * dr).sqrt()).collect();
    let op = ToeplitzOp::new(acc, n);
    let apply = |x: &[C64]| {
        let scaled: Vec<C64> = x.iter().zip(&d).map(|(v, s)| v * s).collect();
        let tx = op.apply(&scaled);
        x.iter().zip(tx).zip(&d).map(|((xi, ti), s)| xi + ti * s).collect::<Vec<_>>()
    };
    let b: Vec<C64> = h.iter().zip(&d).map(|(v, s)| v * s).collect();
    let rg = acc.rgrid;
    let y = cg_solve(apply, &b, 1e-14, 10 * (n + 1) + 100).map_err(|e| match e {
        KreinError::NotPositive { pivot, .. } => KreinError::NotPositive { r: rg.node(n), pivot },
        e => e,
    })?;
    Ok(y.iter().zip(&d).map(|(v, s)| v / s).collect())
}

/// Residual `max_i |x_i + (T D x)_i - h_i|` of a column against its right side.
pub fn resolvent_residual(acc: &Accelerant, slice: &ResolventSlice, s: f64) -> Result<(f64, f64)> {
    let n = slice.n();
    let si = acc.rgrid.index(s)?;
    let h = rhs_column(acc, n, si);
    let th = apply_hr(acc, &slice.g, slice.r)?;
    let res = slice.g.iter().zip(&th).zip(&h).map(|((g, t), h)| (g + t - h).norm()).fold(0.0, f64::max);
    let hn = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok((res, hn))
}

/// Smallest eigenvalue of the symmetrized discretization of `I + H_r`.
pub fn positivity_margin(acc: &Accelerant, r: f64) -> Result<f64> {
    let n = n_of(acc, r)?;
    if n == 0 {
        return Ok(1.0 + acc.rgrid.dr * 0.0);
    }
    let dr = acc.rgrid.dr;
    let d: Vec<f64> = gregory_weights(n).iter().map(|w| (w * dr).sqrt()).collect();
    let op = ToeplitzOp::new(acc, n);
    let apply = |x: &[C64]| {
        let scaled: Vec<C64> = x.iter().zip(&d).map(|(v, s)| v * s).collect();
        let tx = op.apply(&scaled);
        x.iter().zip(tx).zip(&d).map(|((xi, ti), s)| xi + ti * s).collect::<Vec<_>>()
    };
    Ok(lanczos_min_eig(apply, n + 1, 120.min(n + 1), 7))
}

/// Dense `I + T D` (test and small-n use).
pub fn dense_system(acc: &Accelerant, n: usize) -> DMatrix<C64> {
    let dr = acc.rgrid.dr;
    let w = gregory_weights(n);
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        let d = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        d + acc.at(i as isize - j as isize) * (dr * w[j])
    })
}

type SliceKey = (u64, u64, u64, u64);

/// Concurrent cache of resolvent columns keyed by weight, step, r and offset.
#[derive(Default)]
pub struct SliceCache {
    map: RwLock<HashMap<SliceKey, Arc<ResolventSlice>>>,
}

impl SliceCache {
    pub fn new() -> SliceCache {
        SliceCache::default()
    }

    pub fn get_or_solve(&self, acc: &Accelerant, r: f64, s: f64) -> Result<Arc<ResolventSlice>> {
        let key = (acc.weight_id, acc.rgrid.dr.to_bits(), r.to_bits(), s.to_bits());
        if let Some(v) = self.map.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(solve_resolvent(acc, r, s)?);
        self.map.write().unwrap().entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_weight, WeightSpec};

    fn bump_acc(delta: f64, dr: f64, r: f64) -> Accelerant {
        let rg = RGrid::new(dr, r).unwrap();
        let samples = (0..=rg.m)
            .map(|k| {
                let x = k as f64 * dr;
                C64::new(if k == 0 { delta / PI } else { delta * x.sin() / (PI * x) }, 0.0)
            })
            .collect();
        Accelerant::from_samples(rg, samples)
    }

    #[test]
    fn quadrature_accelerant_matches_closed_form() {
        let w = make_weight(WeightSpec::bump(0.1)).unwrap();
        let (lg, rg) = crate::harmonic::make_grids(128.0, 4096, 0.05, 20.0).unwrap();
        let acc = compute_accelerant(&w, &rg, &lg).unwrap();
        let exact = bump_acc(0.1, 0.05, 20.0);
        for k in 0..=rg.m {
            assert!((acc.samples[k] - exact.samples[k]).norm() < 1e-14);
        }
        assert!((acc.h0.re - 0.031831).abs() < 1e-6);
    }

    #[test]
    fn levinson_woodbury_matches_dense() {
        let acc = bump_acc(0.3, 0.1, 6.0);
        for n in [0usize, 1, 2, 3, 4, 5, 6, 9, 40, 60] {
            let r = n as f64 * 0.1;
            let sl = solve_resolvent(&acc, r, 0.0).unwrap();
            let a = dense_system(&acc, n);
            let h = DVector::from_iterator(n + 1, (0..=n).map(|i| acc.at(i as isize)));
            let want = a.lu().solve(&h).unwrap();
            for i in 0..=n {
                assert!((sl.g[i] - want[i]).norm() < 1e-13, "n {n} i {i}");
            }
            let cg = solve_resolvent_with(&acc, r, 0.0, Solver::Cg).unwrap();
            for i in 0..=n {
                assert!((cg.g[i] - want[i]).norm() < 1e-12, "cg n {n} i {i}");
            }
        }
    }

    #[test]
    fn margin_matches_dense() {
        let acc = bump_acc(-0.4, 0.1, 8.0);
        let n = 80;
        let dr = 0.1;
        let d: Vec<f64> = gregory_weights(n).iter().map(|w| (w * dr).sqrt()).collect();
        let m = DMatrix::from_fn(n + 1, n + 1, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            C64::new(id, 0.0) + acc.at(i as isize - j as isize) * (d[i] * d[j])
        });
        let eig = m.map(|z| z.re).symmetric_eigenvalues();
        let want = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let got = positivity_margin(&acc, 8.0).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}
