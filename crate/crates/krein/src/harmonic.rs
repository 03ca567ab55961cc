//! Grids, the Fourier pair, the Hilbert transform, band projections and
//! weighted quadrature on the spatial line.
//!
//! Convention: `f^(xi) = ∫ f(x) e^{-2 pi i x xi} dx`. Bands are given in
//! `e^{i lambda s}` units, so the band `[a, b]` is `xi ∈ [a/2pi, b/2pi]`.

use crate::error::{KreinError, Result};
use crate::fft::{fft, ifft};
use crate::quad::GREGORY6_END;
use crate::weights::Weight;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform grid `lambda_j = -half_width + offset + j dl`, `dl = 2 half_width / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub half_width: f64,
    pub n: usize,
    pub offset: f64,
    /// Offset of the grid this one is the Fourier dual of (0 for primal grids).
    pub paired_offset: f64,
}

impl LambdaGrid {
    pub fn new(half_width: f64, n: usize) -> Result<LambdaGrid> {
        LambdaGrid::with_offset(half_width, n, 0.0)
    }

    pub fn with_offset(half_width: f64, n: usize, offset: f64) -> Result<LambdaGrid> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(KreinError::BadParameter(format!("half width {half_width}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(KreinError::BadParameter(format!("N = {n} must be a power of two >= 16")));
        }
        Ok(LambdaGrid { half_width, n, offset, paired_offset: 0.0 })
    }

    /// Grid shifted by half a cell when a singular point of `w` lands on a node.
    pub fn for_weight(half_width: f64, n: usize, w: &Weight) -> Result<LambdaGrid> {
        let g = LambdaGrid::new(half_width, n)?;
        let dl = g.step();
        let hit = w.singularities.iter().any(|(c, _)| {
            let t = (c + half_width) / dl;
            (t - t.round()).abs() < 1e-9
        });
        if hit { LambdaGrid::with_offset(half_width, n, 0.5 * dl) } else { Ok(g) }
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn origin(&self) -> f64 {
        -self.half_width + self.offset
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin() + j as f64 * self.step()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.node(j))
    }

    /// Largest `s` with `e^{i lambda s}` resolved: `pi N / (2 Lambda)`.
    pub fn nyquist(&self) -> f64 {
        PI / self.step()
    }

    /// The grid carrying the Fourier transform.
    pub fn dual(&self) -> LambdaGrid {
        LambdaGrid {
            half_width: self.n as f64 / (4.0 * self.half_width),
            n: self.n,
            offset: self.paired_offset,
            paired_offset: self.offset,
        }
    }

    /// Index of the node at `x`, if `x` is a node.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let t = (x - self.origin()) / self.step();
        let k = t.round();
        ((t - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.n).then_some(k as usize)
    }

    /// Angular frequencies `s = 2 pi xi` of the DFT bins in FFT order.
    pub fn bin_frequencies(&self) -> Vec<f64> {
        let ds = 2.0 * PI / (self.n as f64 * self.step());
        (0..self.n).map(|k| if k < self.n / 2 { k as f64 * ds } else { (k as f64 - self.n as f64) * ds }).collect()
    }
}

/// Uniform grid `r_i = i dr`, `i = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub dr: f64,
    pub m: usize,
}

impl RGrid {
    pub fn new(dr: f64, r_max: f64) -> Result<RGrid> {
        if !(dr > 0.0) || !(r_max > 0.0) || !dr.is_finite() || !r_max.is_finite() {
            return Err(KreinError::BadParameter("dr and R must be positive".into()));
        }
        if dr > r_max {
            return Err(KreinError::BadParameter(format!("dr = {dr} exceeds R = {r_max}")));
        }
        let m = (r_max / dr).round();
        if (m * dr - r_max).abs() > 1e-9 * r_max {
            return Err(KreinError::BadParameter(format!("R = {r_max} is not a multiple of dr = {dr}")));
        }
        Ok(RGrid { dr, m: m as usize })
    }

    pub fn r_max(&self) -> f64 {
        self.m as f64 * self.dr
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    /// Index of `r` on the grid.
    pub fn index(&self, r: f64) -> Result<usize> {
        let t = r / self.dr;
        let k = t.round();
        if (t - k).abs() > 1e-9 || k < 0.0 || k as usize > self.m {
            return Err(KreinError::GridMismatch);
        }
        Ok(k as usize)
    }
}

pub fn make_grids(half_width: f64, n: usize, dr: f64, r_max: f64) -> Result<(LambdaGrid, RGrid)> {
    if !(dr > 0.0) || !(r_max > 0.0) {
        return Err(KreinError::BadParameter("dr and R must be positive".into()));
    }
    let lg = LambdaGrid::new(half_width, n)?;
    let rg = RGrid::new(dr, r_max)?;
    if r_max >= lg.nyquist() {
        return Err(KreinError::NyquistViolation { r: r_max, limit: lg.nyquist() });
    }
    Ok((lg, rg))
}

/// Complex samples on a [`LambdaGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: LambdaGrid,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(grid: LambdaGrid, values: Vec<C64>) -> GridFunction {
        assert_eq!(values.len(), grid.n, "values do not match the grid");
        GridFunction { grid, values }
    }

    pub fn zeros(grid: LambdaGrid) -> GridFunction {
        GridFunction::new(grid, vec![C64::new(0.0, 0.0); grid.n])
    }

    pub fn sample<F: Fn(f64) -> C64>(grid: LambdaGrid, f: F) -> GridFunction {
        GridFunction::new(grid, grid.nodes().map(f).collect())
    }

    pub fn sample_real<F: Fn(f64) -> f64>(grid: LambdaGrid, f: F) -> GridFunction {
        GridFunction::sample(grid, |x| C64::new(f(x), 0.0))
    }

    /// Discrete `l^2` norm with the `dl` quadrature weight.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.step()).sqrt()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    fn check(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(KreinError::GridMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Scaled DFT approximating the Fourier integral (forward) or its inverse.
///
/// Forward maps a function on `G` to one on `G.dual()`; inverse maps a
/// function on `G.dual()` back to `G`.
pub fn fourier_pair(f: &GridFunction, direction: Direction) -> GridFunction {
    let src = f.grid;
    let dst = src.dual();
    let n = src.n;
    let (x0, dx, k0, dk) = (src.origin(), src.step(), dst.origin(), dst.step());
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let mut v: Vec<C64> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, &fj)| fj * C64::from_polar(1.0, sign * 2.0 * PI * j as f64 * dx * k0))
        .collect();
    match direction {
        Direction::Forward => fft(&mut v),
        Direction::Inverse => {
            ifft(&mut v);
            v.iter_mut().for_each(|z| *z *= n as f64);
        }
    }
    let out = v
        .into_iter()
        .enumerate()
        .map(|(k, z)| z * dx * C64::from_polar(1.0, sign * 2.0 * PI * x0 * (k0 + k as f64 * dk)))
        .collect();
    GridFunction::new(dst, out)
}

/// Applies the Fourier multiplier `m(s)` (with `s = 2 pi xi`) to the samples.
pub fn apply_multiplier(f: &GridFunction, m: &[C64]) -> GridFunction {
    let mut v = f.values.clone();
    fft(&mut v);
    v.iter_mut().zip(m).for_each(|(z, w)| *z *= w);
    ifft(&mut v);
    GridFunction::new(f.grid, v)
}

/// Multiplier `-i sign(xi)`; the DC and Nyquist bins are annihilated.
pub fn hilbert_multiplier(grid: &LambdaGrid) -> Vec<C64> {
    grid.bin_frequencies()
        .iter()
        .enumerate()
        .map(|(k, s)| if k == 0 || k == grid.n / 2 { C64::new(0.0, 0.0) } else { C64::new(0.0, -s.signum()) })
        .collect()
}

pub fn hilbert_transform(f: &GridFunction) -> GridFunction {
    apply_multiplier(f, &hilbert_multiplier(&f.grid))
}

/// Indicator of `[a, b]` on the DFT bins, half weight on bins at an endpoint.
pub fn band_multiplier(grid: &LambdaGrid, a: f64, b: f64) -> Result<Vec<f64>> {
    let lim = grid.nyquist();
    if !(a < b) {
        return Err(KreinError::BadParameter(format!("band [{a}, {b}] is empty")));
    }
    if a.abs() > lim || b.abs() > lim {
        return Err(KreinError::BandOutOfRange { a, b, limit: lim });
    }
    let ds = 2.0 * PI / (grid.n as f64 * grid.step());
    let tol = 1e-9 * ds;
    Ok(grid
        .bin_frequencies()
        .into_iter()
        .map(|s| {
            if (s - a).abs() <= tol || (s - b).abs() <= tol {
                0.5
            } else if s > a && s < b {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

pub fn band_project(f: &GridFunction, a: f64, b: f64) -> Result<GridFunction> {
    let m: Vec<C64> = band_multiplier(&f.grid, a, b)?.into_iter().map(|v| C64::new(v, 0.0)).collect();
    Ok(apply_multiplier(f, &m))
}

/// Multiplication by `e^{i lambda r}`.
pub fn modulate(f: &GridFunction, r: f64) -> GridFunction {
    let values = f.values.iter().zip(f.grid.nodes()).map(|(v, x)| v * C64::from_polar(1.0, r * x)).collect();
    GridFunction::new(f.grid, values)
}

/// Nodal weights `omega_j = ∫ w <x>^q hat_j` over periodic hat functions,
/// integrated with the singularity-adapted rule of `w`.
#[derive(Debug, Clone)]
pub struct ProductWeights {
    pub grid: LambdaGrid,
    pub q: f64,
    pub omega: Vec<f64>,
}

impl ProductWeights {
    pub fn new(grid: &LambdaGrid, w: &Weight, q: f64) -> Result<ProductWeights> {
        let n = grid.n;
        let dl = grid.step();
        let cells: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|j| {
                let a = grid.node(j);
                let rule = w.rule(a, a + dl, 1.0, dl);
                let (mut left, mut right) = (0.0, 0.0);
                for (x, c) in rule.x.iter().zip(&rule.w) {
                    let t = (x - a) / dl;
                    let v = c * w.eval(*x) * (1.0 + x * x).powf(q / 2.0);
                    left += v * (1.0 - t);
                    right += v * t;
                }
                (left, right)
            })
            .collect();
        let mut omega = vec![0.0; n];
        for (j, (l, r)) in cells.into_iter().enumerate() {
            omega[j] += l;
            omega[(j + 1) % n] += r;
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err(KreinError::NonFinite("product quadrature weights".into()));
        }
        Ok(ProductWeights { grid: *grid, q, omega })
    }

    pub fn lp_norm(&self, f: &GridFunction, p: f64) -> Result<f64> {
        if f.grid != self.grid {
            return Err(KreinError::GridMismatch);
        }
        let s: f64 = f.values.iter().zip(&self.omega).map(|(v, o)| v.norm().powf(p) * o).sum();
        let out = s.powf(1.0 / p);
        if !out.is_finite() {
            return Err(KreinError::NonFinite("weighted norm".into()));
        }
        Ok(out)
    }
}

/// `(∫ |f|^p w <x>^q dx)^{1/p}` over the grid window.
pub fn weighted_lp_norm(f: &GridFunction, w: &Weight, p: f64, q: f64) -> Result<f64> {
    if !(p >= 1.0) || !(q >= 0.0) {
        return Err(KreinError::BadParameter("need p >= 1 and q >= 0".into()));
    }
    ProductWeights::new(&f.grid, w, q)?.lp_norm(f, p)
}

/// `(1/2pi) ∫ f conj(g) w dx`.
pub fn sigma_inner_product(f: &GridFunction, g: &GridFunction, w: &Weight) -> Result<C64> {
    f.check(g)?;
    let pw = ProductWeights::new(&f.grid, w, 0.0)?;
    Ok(f.values.iter().zip(&g.values).zip(&pw.omega).map(|((a, b), o)| a * b.conj() * *o).sum::<C64>() / (2.0 * PI))
}

/// Band projection realised on the line: Toeplitz convolution with
/// `K(x) = (e^{ibx} - e^{iax}) / (2 pi i x)` against nodal quadrature
/// weights, applied through a circulant embedding of size `2N`.
///
/// Nodes sitting on a jump of the integrand get the order-6 Gregory end
/// profile on both sides.
#[derive(Debug, Clone)]
pub struct LineProjector {
    pub grid: LambdaGrid,
    kernel: Vec<C64>,
    pub weights: Vec<f64>,
}

impl LineProjector {
    pub fn new(grid: &LambdaGrid, a: f64, b: f64, jumps: &[f64]) -> Result<LineProjector> {
        if !(a < b) {
            return Err(KreinError::BadParameter(format!("band [{a}, {b}] is empty")));
        }
        let lim = grid.nyquist();
        if a.abs() > lim || b.abs() > lim {
            return Err(KreinError::BandOutOfRange { a, b, limit: lim });
        }
        let n = grid.n;
        let dl = grid.step();
        let k = |x: f64| {
            if x == 0.0 {
                C64::new((b - a) / (2.0 * PI), 0.0)
            } else {
                (C64::from_polar(1.0, b * x) - C64::from_polar(1.0, a * x)) / C64::new(0.0, 2.0 * PI * x)
            }
        };
        let mut col = vec![C64::new(0.0, 0.0); 2 * n];
        for m in 0..n {
            col[m] = k(m as f64 * dl);
        }
        for m in 1..n {
            col[2 * n - m] = k(-(m as f64) * dl);
        }
        fft(&mut col);
        let mut c = vec![1.0; n];
        c[0] = 0.5;
        c[n - 1] = 0.5;
        for &x in jumps {
            if let Some(j) = grid.node_index(x) {
                c[j] = 2.0 * GREGORY6_END[0];
                for (o, v) in GREGORY6_END.iter().enumerate().skip(1) {
                    if j >= o {
                        c[j - o] = *v;
                    }
                    if j + o < n {
                        c[j + o] = *v;
                    }
                }
            }
        }
        let weights = c.into_iter().map(|v| v * dl).collect();
        Ok(LineProjector { grid: *grid, kernel: col, weights })
    }

    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let n = self.grid.n;
        let mut x = vec![C64::new(0.0, 0.0); 2 * n];
        for j in 0..n {
            x[j] = f[j] * self.weights[j];
        }
        fft(&mut x);
        x.iter_mut().zip(&self.kernel).for_each(|(u, v)| *u *= v);
        ifft(&mut x);
        x.truncate(n);
        x
    }
}
