//! Continuous orthogonal polynomials `P(r, lambda)`, `P_*(r, lambda)`, the
//! coefficient `A(r)`, an independent ODE oracle and the orthogonality checks.

use crate::error::{KreinError, Result};
use crate::fft::chirp_sum;
use crate::harmonic::{GridFunction, LambdaGrid, RGrid};
use crate::kreincore::{ResolventSlice, Sweep};
use crate::quad::{gregory_weights, CubicCells, Rule};
use crate::weights::Weight;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// `∫_0^{n dr} p(s) e^{i sign lambda s} ds` on the whole grid, by Filon
/// moments and four chirp-z sums.
pub fn filon_on_grid(cells: &CubicCells, grid: &LambdaGrid, sign: f64) -> Vec<C64> {
    let n = grid.n;
    let dr = cells.dr;
    if cells.cells() == 0 {
        return vec![C64::new(0.0, 0.0); n];
    }
    let sums: Vec<Vec<C64>> = (0..4)
        .map(|k| {
            let col: Vec<C64> = cells.coeffs.iter().map(|a| a[k]).collect();
            chirp_sum(&col, -sign * grid.origin() * dr, -sign * grid.step() * dr, n)
        })
        .collect();
    (0..n)
        .map(|j| {
            let mu = crate::quad::filon_moments(sign * grid.node(j) * dr);
            (sums[0][j] * mu[0] + sums[1][j] * mu[1] + sums[2][j] * mu[2] + sums[3][j] * mu[3]) * dr
        })
        .collect()
}

/// `P(r, .) - e^{i lambda r} = -e^{i lambda r} ∫_0^r g_r(s) e^{-i lambda s} ds`.
pub fn evaluate_p(slice: &ResolventSlice, grid: &LambdaGrid) -> GridFunction {
    let cells = CubicCells::new(&slice.g, slice.dr);
    let tr = filon_on_grid(&cells, grid, -1.0);
    let values = tr.into_iter().zip(grid.nodes()).map(|(t, x)| -C64::from_polar(1.0, x * slice.r) * t).collect();
    GridFunction::new(*grid, values)
}

/// The same difference at arbitrary real points.
pub fn evaluate_p_at(slice: &ResolventSlice, lambdas: &[f64]) -> Vec<C64> {
    let cells = CubicCells::new(&slice.g, slice.dr);
    lambdas.par_iter().map(|&x| -C64::from_polar(1.0, x * slice.r) * cells.transform(x, -1.0)).collect()
}

/// `P_*(r, lambda) = e^{i lambda r} conj(P(r, lambda))` for real lambda.
pub fn evaluate_pstar(p: &GridFunction, r: f64) -> GridFunction {
    let values = p.values.iter().zip(p.grid.nodes()).map(|(v, x)| C64::from_polar(1.0, x * r) * v.conj()).collect();
    GridFunction::new(p.grid, values)
}

/// `A(r_i) = conj(g_{r_i}(r_i))`.
pub fn extract_a(sweep: &Sweep) -> Vec<C64> {
    sweep.coefficient()
}

#[derive(Debug, Clone)]
pub struct KreinEvaluation {
    pub rgrid: RGrid,
    pub grid: LambdaGrid,
    /// `P(r_i, lambda_j)`, one row per r.
    pub p: Vec<Vec<C64>>,
    pub pstar: Vec<Vec<C64>>,
    pub a: Vec<C64>,
}

impl KreinEvaluation {
    pub fn new(sweep: &Sweep, grid: &LambdaGrid) -> KreinEvaluation {
        let rows: Vec<(Vec<C64>, Vec<C64>)> = sweep
            .slices
            .par_iter()
            .map(|s| {
                let d = evaluate_p(s, grid);
                let p: Vec<C64> = d.values.iter().zip(grid.nodes()).map(|(v, x)| v + C64::from_polar(1.0, x * s.r)).collect();
                let ps = evaluate_pstar(&GridFunction::new(*grid, p.clone()), s.r).values;
                (p, ps)
            })
            .collect();
        let (p, pstar) = rows.into_iter().unzip();
        KreinEvaluation { rgrid: sweep.rgrid, grid: *grid, p, pstar, a: extract_a(sweep) }
    }
}

fn cubic_mid(a: &[C64], i: usize) -> C64 {
    let m = a.len() - 1;
    if m < 3 {
        return (a[i] + a[(i + 1).min(m)]) * 0.5;
    }
    let j = (i as isize - 1).clamp(0, m as isize - 3) as usize;
    let x = i as f64 + 0.5 - j as f64;
    let mut tot = C64::new(0.0, 0.0);
    for p in 0..4 {
        let mut l = 1.0;
        for q in 0..4 {
            if q != p {
                l *= (x - q as f64) / (p as f64 - q as f64);
            }
        }
        tot += a[j + p] * l;
    }
    tot
}

/// Integrates `P' = i lambda P - conj(A) P_*`, `P_*' = -A P` from 0 to `R`
/// by RK4 in the interaction picture `U = e^{-i lambda r} P`, with `A`
/// interpolated by local cubics at the half steps.
pub fn ode_oracle(a: &[C64], dr: f64, lambda: f64) -> Result<(C64, C64)> {
    Ok(ode_oracle_many(a, dr, &[lambda])?.pop().unwrap())
}

pub fn ode_oracle_many(a: &[C64], dr: f64, lambdas: &[f64]) -> Result<Vec<(C64, C64)>> {
    let m = a.len() - 1;
    for (i, v) in a.iter().enumerate() {
        if v.norm() * dr > 0.5 {
            return Err(KreinError::StepTooLarge { r: i as f64 * dr, value: v.norm() * dr });
        }
    }
    let mids: Vec<C64> = (0..m).map(|i| cubic_mid(a, i)).collect();
    Ok(lambdas
        .par_iter()
        .map(|&lam| {
            let f = |r: f64, av: C64, u: C64, ps: C64| {
                let e = C64::from_polar(1.0, lam * r);
                (-av.conj() * e.conj() * ps, -av * e * u)
            };
            let (mut u, mut ps) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
            for i in 0..m {
                let r = i as f64 * dr;
                let k1 = f(r, a[i], u, ps);
                let k2 = f(r + dr / 2.0, mids[i], u + k1.0 * (dr / 2.0), ps + k1.1 * (dr / 2.0));
                let k3 = f(r + dr / 2.0, mids[i], u + k2.0 * (dr / 2.0), ps + k2.1 * (dr / 2.0));
                let k4 = f(r + dr, a[i + 1], u + k3.0 * dr, ps + k3.1 * dr);
                u += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (dr / 6.0);
                ps += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (dr / 6.0);
            }
            (C64::from_polar(1.0, lam * m as f64 * dr) * u, ps)
        })
        .collect())
}

/// Centered cubic B-spline `B((s - center)/h)` with knots spaced `h`;
/// `∫ B = h`, supported on `[center - 2h, center + 2h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineBump {
    pub center: f64,
    pub h: f64,
}

impl SplineBump {
    pub fn new(center: f64, h: f64) -> SplineBump {
        SplineBump { center, h }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - 2.0 * self.h, self.center + 2.0 * self.h)
    }

    pub fn value(&self, s: f64) -> f64 {
        let t = ((s - self.center) / self.h).abs();
        if t >= 2.0 {
            0.0
        } else if t >= 1.0 {
            (2.0 - t).powi(3) / 6.0
        } else {
            2.0 / 3.0 - t * t + t * t * t / 2.0
        }
    }

    /// `∫ f(s) e^{i lambda s} ds = h e^{i lambda c} sinc^4(lambda h / 2)`.
    pub fn transform(&self, lambda: f64) -> C64 {
        let x = 0.5 * lambda * self.h;
        let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        C64::from_polar(self.h * sinc.powi(4), lambda * self.center)
    }

    /// Exact `∫ f g ds` for two bumps (Gauss on the joint knot pieces).
    pub fn inner(&self, other: &SplineBump) -> f64 {
        let mut knots: Vec<f64> = (-2..=2)
            .map(|k| self.center + k as f64 * self.h)
            .chain((-2..=2).map(|k| other.center + k as f64 * other.h))
            .collect();
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| Rule::panel(w[0], w[1]).integrate(|s| self.value(s) * other.value(s)))
            .sum()
    }
}

fn check_support(f: &SplineBump, lo: f64, hi: f64, margin: f64) -> Result<()> {
    let (a, b) = f.support();
    if a < lo + margin - 1e-12 || b > hi - margin + 1e-12 {
        return Err(KreinError::SupportViolation(format!(
            "[{a}, {b}] is not inside [{}, {}]",
            lo + margin,
            hi - margin
        )));
    }
    Ok(())
}

/// `B(v_k) = ∫_{v_k}^R f(s) g_s(s - v_k) ds`, so that `∫ f P ds = f~ - ∫ B e^{i lambda v} dv`.
fn fold_kernel(f: &SplineBump, sweep: &Sweep) -> Vec<C64> {
    let m = sweep.rgrid.m;
    let dr = sweep.rgrid.dr;
    (0..=m)
        .into_par_iter()
        .map(|k| {
            let w = gregory_weights(m - k);
            let mut acc = C64::new(0.0, 0.0);
            for i in k..=m {
                let s = i as f64 * dr;
                let fv = f.value(s);
                if fv != 0.0 {
                    acc += sweep.slices[i].g[i - k] * (fv * w[i - k] * dr);
                }
            }
            acc
        })
        .collect()
}

/// `O f(lambda) = ∫_0^R f(s) P(s, lambda) ds` on the grid and at extra points.
pub struct OrthoTransform {
    pub on_grid: Vec<C64>,
    pub at_points: Vec<C64>,
}

pub fn ortho_transform(f: &SplineBump, sweep: &Sweep, grid: &LambdaGrid, points: &[f64]) -> OrthoTransform {
    let b = fold_kernel(f, sweep);
    let cells = CubicCells::new(&b, sweep.rgrid.dr);
    let tr = filon_on_grid(&cells, grid, 1.0);
    let on_grid = grid.nodes().zip(tr).map(|(x, t)| f.transform(x) - t).collect();
    let at_points = points.par_iter().map(|&x| f.transform(x) - cells.transform(x, 1.0)).collect();
    OrthoTransform { on_grid, at_points }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthoReport {
    /// `<f, g>` on the half-line.
    pub direct: f64,
    /// `<O f, O g>_sigma`.
    pub spectral: C64,
    pub residual: f64,
}

/// `(1/2pi) [dl Σ_grid u conj(v) + Σ_m c_m (w_m - 1) u(x_m) conj(v(x_m))]`.
fn sigma_pair(grid: &LambdaGrid, rule: &Rule, w: &Weight, u: &OrthoTransform, v: &OrthoTransform) -> C64 {
    let flat: C64 = u.on_grid.iter().zip(&v.on_grid).map(|(a, b)| a * b.conj()).sum::<C64>() * grid.step();
    let dev: C64 = rule
        .x
        .iter()
        .zip(&rule.w)
        .enumerate()
        .map(|(m, (x, c))| u.at_points[m] * v.at_points[m].conj() * (c * (w.eval(*x) - 1.0)))
        .sum();
    (flat + dev) / (2.0 * PI)
}

pub fn orthonormality_check(w: &Weight, f: &SplineBump, g: &SplineBump, sweep: &Sweep, grid: &LambdaGrid) -> Result<OrthoReport> {
    let rmax = sweep.rgrid.r_max();
    let margin = 2.0 * sweep.rgrid.dr;
    check_support(f, 0.0, rmax, margin)?;
    check_support(g, 0.0, rmax, margin)?;
    let rule = w.deviation_rule(grid.half_width, 0.25);
    let of = ortho_transform(f, sweep, grid, &rule.x);
    let og = if f == g { OrthoTransform { on_grid: of.on_grid.clone(), at_points: of.at_points.clone() } } else { ortho_transform(g, sweep, grid, &rule.x) };
    let spectral = sigma_pair(grid, &rule, w, &of, &og);
    let direct = f.inner(g);
    Ok(OrthoReport { direct, spectral, residual: (spectral - direct).norm() })
}

/// `(1/2pi) ∫ P(r, lambda) w(lambda) conj(lambda^k ∫_0^r f(s) e^{i lambda s} ds) dlambda`.
pub fn band_orthogonality_check(w: &Weight, k: u32, f: &SplineBump, slice: &ResolventSlice, grid: &LambdaGrid) -> Result<C64> {
    check_support(f, 0.0, slice.r, 0.0)?;
    let d = evaluate_p(slice, grid);
    let r = slice.r;
    let flat: C64 = grid
        .nodes()
        .zip(&d.values)
        .map(|(x, dv)| (dv + C64::from_polar(1.0, x * r)) * (f.transform(x) * x.powi(k as i32)).conj())
        .sum::<C64>()
        * grid.step();
    let rule = w.deviation_rule(grid.half_width, 0.25);
    let pd = evaluate_p_at(slice, &rule.x);
    let dev: C64 = rule
        .x
        .iter()
        .zip(&rule.w)
        .zip(pd)
        .map(|((x, c), dv)| (dv + C64::from_polar(1.0, x * r)) * (f.transform(*x) * x.powi(k as i32)).conj() * (c * (w.eval(*x) - 1.0)))
        .sum();
    Ok((flat + dev) / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_transform_and_norm() {
        let f = SplineBump::new(3.0, 0.5);
        let rule = Rule::panels(1.0, 5.0, 0.5);
        for lam in [0.0, 0.7, -4.0, 31.0] {
            let want = rule.integrate_c(|s| C64::from_polar(f.value(s), lam * s));
            assert!((f.transform(lam) - want).norm() < 1e-13);
        }
        assert!((f.inner(&f) - 0.5 * 151.0 / 315.0).abs() < 1e-14);
    }

    #[test]
    fn ode_with_zero_coefficient() {
        let a = vec![C64::new(0.0, 0.0); 101];
        let (p, ps) = ode_oracle(&a, 0.1, 2.5).unwrap();
        assert!((p - C64::from_polar(1.0, 25.0)).norm() < 1e-14);
        assert!((ps - 1.0).norm() < 1e-15);
        let big = vec![C64::new(20.0, 0.0); 3];
        assert!(matches!(ode_oracle(&big, 0.1, 0.0), Err(KreinError::StepTooLarge { .. })));
    }
}
