//! Integration-by-parts remainders `R_{k,r}`, the boundary coefficients
//! `a_{l,r}` and the `alpha_inf` / `alpha_2` split of `a_{1,r}`.

use crate::error::{KreinError, Result};
use crate::harmonic::{GridFunction, LambdaGrid, RGrid};
use crate::kreincore::ResolventSlice;
use crate::kreinsol::{evaluate_p, filon_on_grid};
use crate::quad::{fornberg, CubicCells};
use crate::weights::Weight;
use num_complex::Complex64 as C64;

pub const MAX_ORDER: usize = 3;
const CROSS_CHECK_TOL: f64 = 1e-4;

/// `i^l`
fn ipow(l: usize) -> C64 {
    [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][l % 4]
}

/// Samples of `d^j/ds^j g` on the slice nodes: five-point one-sided
/// stencils in the first and last two nodes, centered five-point inside.
pub fn derivative_samples(g: &[C64], dr: f64, j: usize) -> Result<Vec<C64>> {
    if j == 0 {
        return Ok(g.to_vec());
    }
    let n = g.len();
    if n < 5 {
        return Err(KreinError::BadParameter(format!("{n} nodes are too few for a derivative of order {j}")));
    }
    let scale = dr.powi(j as i32);
    let mut out = vec![C64::new(0.0, 0.0); n];
    let stencil = |x0: f64, first: usize| -> Vec<f64> {
        let xs: Vec<f64> = (0..5).map(|m| (first + m) as f64).collect();
        fornberg(x0, &xs, j)
    };
    for (i, o) in out.iter_mut().enumerate() {
        let first = i.saturating_sub(2).min(n - 5);
        let c = stencil(i as f64, first);
        *o = (0..5).map(|m| g[first + m] * c[m]).sum::<C64>() / scale;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RemainderEval {
    pub k: usize,
    pub r: f64,
    /// `c_l = d^{l-1}/dt^{l-1} Gamma_r(r, t)` at `t = r`, `l = 1..k`.
    pub c: Vec<C64>,
    /// The same derivative at `t = 0`.
    pub d: Vec<C64>,
    pub values: GridFunction,
    /// Sup over `|lambda| <= Lambda/2` of the gap to the algebraic identity.
    pub discrepancy: f64,
}

fn certify(w: &Weight, k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(KreinError::BadParameter(format!("remainder order {k} exceeds {MAX_ORDER}")));
    }
    if !w.moment_certified(k) {
        return Err(KreinError::RegularityNotCertified {
            k,
            detail: format!("<lambda>^{k} (w - 1) is not certified integrable for {}", w.id),
        });
    }
    Ok(())
}

/// `Gamma_r(r, t) = g_r(r - t)`, so the t-derivatives at the two ends are
/// `(-1)^{l-1} g_r^{(l-1)}(0)` and `(-1)^{l-1} g_r^{(l-1)}(r)`.
pub fn gamma_boundary_derivatives(w: &Weight, slice: &ResolventSlice, k: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    certify(w, k)?;
    let n = slice.n();
    let mut c = Vec::with_capacity(k);
    let mut d = Vec::with_capacity(k);
    for l in 1..=k {
        let der = derivative_samples(&slice.g, slice.dr, l - 1)?;
        let sgn = if l % 2 == 1 { 1.0 } else { -1.0 };
        c.push(der[0] * sgn);
        d.push(der[n] * sgn);
    }
    Ok((c, d))
}

/// `a_{l,r}(lambda) = i^l (e^{i lambda r} c_l - d_l)`.
pub fn compute_a_coeffs(c: &[C64], d: &[C64], l: usize, r: f64, grid: &LambdaGrid) -> GridFunction {
    let (cl, dl) = (c[l - 1], d[l - 1]);
    let il = ipow(l);
    GridFunction::new(*grid, grid.nodes().map(|x| il * (C64::from_polar(1.0, x * r) * cl - dl)).collect())
}

/// `R_{k,r}(lambda) = -i^k ∫_0^r d^k/dt^k Gamma_r(r, t) e^{i lambda t} dt`,
/// checked against `lambda^k (P - e^{i lambda r}) - Σ_l lambda^{k-l} a_{l,r}`.
pub fn compute_remainder(w: &Weight, slice: &ResolventSlice, k: usize, grid: &LambdaGrid) -> Result<RemainderEval> {
    let (c, d) = gamma_boundary_derivatives(w, slice, k)?;
    let diff = evaluate_p(slice, grid);
    if k == 0 {
        return Ok(RemainderEval { k, r: slice.r, c, d, values: diff, discrepancy: 0.0 });
    }
    let der = derivative_samples(&slice.g, slice.dr, k)?;
    let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
    let phi: Vec<C64> = der.iter().rev().map(|v| v * sgn).collect();
    let tr = filon_on_grid(&CubicCells::new(&phi, slice.dr), grid, 1.0);
    let ik = ipow(k);
    let values: Vec<C64> = tr.iter().map(|t| -ik * t).collect();
    let coeffs: Vec<GridFunction> = (1..=k).map(|l| compute_a_coeffs(&c, &d, l, slice.r, grid)).collect();
    let mut discrepancy = 0.0f64;
    for (j, x) in grid.nodes().enumerate() {
        if x.abs() > 0.5 * grid.half_width {
            continue;
        }
        let mut alg = diff.values[j] * x.powi(k as i32);
        for (l, a) in coeffs.iter().enumerate() {
            alg -= a.values[j] * x.powi((k - l - 1) as i32);
        }
        discrepancy = discrepancy.max((alg - values[j]).norm());
    }
    if discrepancy > CROSS_CHECK_TOL {
        return Err(KreinError::CrossCheckFailed { discrepancy });
    }
    Ok(RemainderEval { k, r: slice.r, c, d, values: GridFunction::new(*grid, values), discrepancy })
}

/// Unweighted `L^p` norm on the lambda grid.
pub fn grid_lp_norm(f: &GridFunction, p: f64) -> f64 {
    (f.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * f.grid.step()).powf(1.0 / p)
}

#[derive(Debug, Clone)]
pub struct AlphaDecomposition {
    pub alpha_inf: Vec<C64>,
    pub alpha_2: Vec<C64>,
    /// `alpha_inf(R)`; the tail `∫_R^∞ |A|^2` is taken as zero.
    pub limit: C64,
    pub tail_extrapolated: bool,
}

/// `alpha_inf(r) = -i(-H(0) + ∫_0^r |A|^2)`, `alpha_2(r) = -i conj(A(r))`.
pub fn alpha_decomposition(a: &[C64], h0: C64, rgrid: &RGrid) -> Result<AlphaDecomposition> {
    if a.len() != rgrid.m + 1 {
        return Err(KreinError::GridMismatch);
    }
    let sq: Vec<C64> = a.iter().map(|v| C64::new(v.norm_sqr(), 0.0)).collect();
    let cum = CubicCells::new(&sq, rgrid.dr).cumulative();
    let mi = C64::new(0.0, -1.0);
    let alpha_inf: Vec<C64> = cum.iter().map(|s| mi * (s - h0)).collect();
    let alpha_2 = a.iter().map(|v| mi * v.conj()).collect();
    let limit = *alpha_inf.last().unwrap();
    Ok(AlphaDecomposition { alpha_inf, alpha_2, limit, tail_extrapolated: true })
}
