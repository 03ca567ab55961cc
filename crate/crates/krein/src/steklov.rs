//! Weighted band projections, the operator `Q_{w,p}`, `p`-norm estimates,
//! and the functional equations satisfied by `X_p` and `Y_p`.

use crate::error::{KreinError, Result};
use crate::fft::{fft, ifft};
use crate::harmonic::{band_multiplier, LambdaGrid, LineProjector};
use crate::kreincore::ResolventSlice;
use crate::kreinsol::evaluate_p;
use crate::linalg::{dual_vector, gmres, lp, norm2};
use crate::remainder::{compute_a_coeffs, compute_remainder};
use crate::weights::Weight;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Largest grid for which dense matrices are assembled.
pub const DENSE_CAP: usize = 4096;
const MAX_POWER_STEPS: usize = 10_000;
const PROBES: usize = 64;
const BOYD_STARTS: usize = 4;
const BOYD_TOL: f64 = 1e-7;
const GMRES_TOL: f64 = 1e-12;
const GMRES_RESTART: usize = 50;

/// A linear map on grid vectors together with its adjoint.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>>;
    fn adjoint(&self, x: &[C64]) -> Result<Vec<C64>>;
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: LambdaGrid,
    pub entries: DMatrix<C64>,
    pub label: String,
}

impl LinearOp for OperatorMatrix {
    fn dim(&self) -> usize {
        self.entries.nrows()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok((&self.entries * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec())
    }
    fn adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        Ok((self.entries.adjoint() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec())
    }
}

impl OperatorMatrix {
    pub fn singular_values(&self) -> Vec<f64> {
        self.entries.clone().singular_values().as_slice().to_vec()
    }
}

fn check_dense(grid: &LambdaGrid) -> Result<()> {
    if grid.n > DENSE_CAP {
        return Err(KreinError::BadParameter(format!("dense assembly is capped at N = {DENSE_CAP}, got {}", grid.n)));
    }
    Ok(())
}

/// Nodal `w`, `w^{1/p}` and `w^{1/p'}`.
#[derive(Debug, Clone)]
pub struct WeightPowers {
    pub p: f64,
    pub w: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl WeightPowers {
    pub fn new(w: &Weight, p: f64, grid: &LambdaGrid) -> Result<WeightPowers> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(KreinError::BadParameter(format!("p = {p} is outside (1, inf)")));
        }
        let pp = p / (p - 1.0);
        let mut vals = Vec::with_capacity(grid.n);
        for x in grid.nodes() {
            let v = w.eval(x);
            if !(v.is_finite() && v > f64::MIN_POSITIVE) {
                return Err(KreinError::WeightVanishes { lambda: x });
            }
            vals.push(v);
        }
        let d1 = vals.iter().map(|v| v.powf(1.0 / p)).collect();
        let d2 = vals.iter().map(|v| v.powf(1.0 / pp)).collect();
        Ok(WeightPowers { p, w: vals, d1, d2 })
    }
}

/// `P_{[0,r]}` as a DFT multiplier over the closed band, so that the
/// matrix is an orthogonal projection.
#[derive(Debug, Clone)]
pub struct DftBand {
    mult: Vec<C64>,
}

impl DftBand {
    pub fn new(grid: &LambdaGrid, r: f64) -> Result<DftBand> {
        if r == 0.0 {
            return Ok(DftBand { mult: vec![C64::new(0.0, 0.0); grid.n] });
        }
        Ok(DftBand { mult: band_multiplier(grid, 0.0, r)?.into_iter().map(|v| C64::new(if v > 0.0 { 1.0 } else { 0.0 }, 0.0)).collect() })
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut v = x.to_vec();
        fft(&mut v);
        v.iter_mut().zip(&self.mult).for_each(|(a, m)| *a *= m);
        ifft(&mut v);
        v
    }

    /// Rank of the projector.
    pub fn trace(&self) -> f64 {
        self.mult.iter().map(|m| m.re).sum()
    }
}

pub fn assemble_band_matrix(r: f64, grid: &LambdaGrid) -> Result<OperatorMatrix> {
    check_dense(grid)?;
    let band = DftBand::new(grid, r)?;
    let n = grid.n;
    let mut e0 = vec![C64::new(0.0, 0.0); n];
    e0[0] = C64::new(1.0, 0.0);
    let c = band.apply(&e0);
    let entries = DMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n]);
    Ok(OperatorMatrix { grid: *grid, entries, label: format!("band[0,{r}] N={n} L={}", grid.half_width) })
}

/// `Q_{w,p} = D1 M D1^{-1} - D2^{-1} M D2`, `D1 = w^{1/p}`, `D2 = w^{1/p'}`.
pub fn assemble_q(w: &Weight, p: f64, r: f64, grid: &LambdaGrid) -> Result<OperatorMatrix> {
    let m = assemble_band_matrix(r, grid)?;
    let wp = WeightPowers::new(w, p, grid)?;
    let n = grid.n;
    let entries = DMatrix::from_fn(n, n, |i, j| {
        let mij = m.entries[(i, j)];
        mij * (wp.d1[i] / wp.d1[j] - wp.d2[j] / wp.d2[i])
    });
    Ok(OperatorMatrix { grid: *grid, entries, label: format!("Q[{}] p={p} r={r} N={n}", w.id) })
}

/// Matrix-free `Q_{w,p}` over the DFT band projector.
pub struct QOperator {
    pub band: DftBand,
    pub powers: WeightPowers,
}

impl QOperator {
    pub fn new(w: &Weight, p: f64, r: f64, grid: &LambdaGrid) -> Result<QOperator> {
        Ok(QOperator { band: DftBand::new(grid, r)?, powers: WeightPowers::new(w, p, grid)? })
    }

    fn sandwich(&self, left: &[f64], right: &[f64], x: &[C64], inv_left: bool, inv_right: bool) -> Vec<C64> {
        let y: Vec<C64> = x.iter().zip(right).map(|(v, d)| if inv_right { v / d } else { v * d }).collect();
        self.band.apply(&y).into_iter().zip(left).map(|(v, d)| if inv_left { v / d } else { v * d }).collect()
    }
}

impl LinearOp for QOperator {
    fn dim(&self) -> usize {
        self.powers.w.len()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let (d1, d2) = (&self.powers.d1, &self.powers.d2);
        let a = self.sandwich(d1, d1, x, false, true);
        let b = self.sandwich(d2, d2, x, true, false);
        Ok(a.into_iter().zip(b).map(|(u, v)| u - v).collect())
    }
    fn adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        let (d1, d2) = (&self.powers.d1, &self.powers.d2);
        let a = self.sandwich(d1, d1, x, true, false);
        let b = self.sandwich(d2, d2, x, false, true);
        Ok(a.into_iter().zip(b).map(|(u, v)| u - v).collect())
    }
}

/// `(I - Q)^{-1}` applied by GMRES.
pub struct InverseOp<'a> {
    pub q: &'a QOperator,
}

impl LinearOp for InverseOp<'_> {
    fn dim(&self) -> usize {
        self.q.dim()
    }
    fn apply(&self, b: &[C64]) -> Result<Vec<C64>> {
        let op = |x: &[C64]| {
            let qx = self.q.apply(x).unwrap();
            x.iter().zip(qx).map(|(u, v)| u - v).collect()
        };
        gmres(op, b, GMRES_TOL, GMRES_RESTART, 5000).map(|r| r.0).map_err(|e| KreinError::Singular(e.to_string()))
    }
    fn adjoint(&self, b: &[C64]) -> Result<Vec<C64>> {
        let op = |x: &[C64]| {
            let qx = self.q.adjoint(x).unwrap();
            x.iter().zip(qx).map(|(u, v)| u - v).collect()
        };
        gmres(op, b, GMRES_TOL, GMRES_RESTART, 5000).map(|r| r.0).map_err(|e| KreinError::Singular(e.to_string()))
    }
}

/// `w^{1/p} P_{[0,r]} w^{-1/p}`, matrix-free.
pub struct ConjugatedBand {
    pub band: DftBand,
    pub d1: Vec<f64>,
}

impl LinearOp for ConjugatedBand {
    fn dim(&self) -> usize {
        self.d1.len()
    }
    fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        let y: Vec<C64> = x.iter().zip(&self.d1).map(|(v, d)| v / d).collect();
        Ok(self.band.apply(&y).into_iter().zip(&self.d1).map(|(v, d)| v * d).collect())
    }
    fn adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        let y: Vec<C64> = x.iter().zip(&self.d1).map(|(v, d)| v * d).collect();
        Ok(self.band.apply(&y).into_iter().zip(&self.d1).map(|(v, d)| v / d).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// Largest singular value by power iteration on `M* M` (p = 2 only).
    Exact2,
    /// Boyd's nonlinear power method plus random probes: a lower bound.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNorm {
    pub value: f64,
    /// True when `value` is only a certified lower bound.
    pub lower_bound: bool,
    pub iterations: usize,
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}

pub fn operator_pnorm(op: &dyn LinearOp, p: f64, mode: NormMode, seed: u64) -> Result<PNorm> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(KreinError::BadParameter(format!("p = {p} is outside (1, inf)")));
    }
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        NormMode::Exact2 => {
            if p != 2.0 {
                return Err(KreinError::BadParameter("exact norms are available for p = 2 only".into()));
            }
            let mut x = random_vector(&mut rng, n);
            let mut prev = 0.0;
            for it in 1..=MAX_POWER_STEPS {
                let nx = norm2(&x);
                x.iter_mut().for_each(|v| *v /= nx);
                let y = op.apply(&x)?;
                let s = norm2(&y);
                if s == 0.0 {
                    return Ok(PNorm { value: 0.0, lower_bound: false, iterations: it });
                }
                if it > 1 && (s - prev).abs() <= 1e-10 * s {
                    return Ok(PNorm { value: s, lower_bound: false, iterations: it });
                }
                prev = s;
                x = op.adjoint(&y)?;
            }
            Err(KreinError::NoConvergence { iterations: MAX_POWER_STEPS })
        }
        NormMode::Lower => {
            let pp = p / (p - 1.0);
            let probes: Vec<Vec<C64>> = (0..PROBES).map(|_| random_vector(&mut rng, n)).collect();
            let mut scored = probes
                .into_par_iter()
                .map(|x| {
                    let y = op.apply(&x)?;
                    Ok((lp(&y, p) / lp(&x, p), x))
                })
                .collect::<Result<Vec<_>>>()?;
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let starts: Vec<Vec<C64>> = scored.iter().take(BOYD_STARTS).map(|s| s.1.clone()).collect();
            let mut best = scored[0].0;
            let runs = starts
                .into_par_iter()
                .map(|mut x| {
                    let mut val = 0.0f64;
                    for it in 1..=MAX_POWER_STEPS {
                        let nx = lp(&x, p);
                        x.iter_mut().for_each(|v| *v /= nx);
                        let y = op.apply(&x)?;
                        let s = lp(&y, p);
                        if s <= val * (1.0 + BOYD_TOL) {
                            return Ok((val.max(s), it));
                        }
                        val = s;
                        let z = op.adjoint(&dual_vector(&y, p))?;
                        x = dual_vector(&z, pp);
                    }
                    Err(KreinError::NoConvergence { iterations: MAX_POWER_STEPS })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut iterations = PROBES;
            for (v, it) in runs {
                best = best.max(v);
                iterations += it;
            }
            Ok(PNorm { value: best, lower_bound: true, iterations })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub p: f64,
    pub r: f64,
    /// Lower bound for `||(I - Q)^{-1}||_{p,p}`.
    pub lower: f64,
    /// `||(I - Q)^{-1}||_{2,2}`.
    pub norm2: f64,
}

pub fn inverse_norm_certificate(w: &Weight, p: f64, r: f64, grid: &LambdaGrid, seed: u64) -> Result<Certificate> {
    let q = QOperator::new(w, p, r, grid)?;
    let inv = InverseOp { q: &q };
    let lower = if p == 2.0 { None } else { Some(operator_pnorm(&inv, p, NormMode::Lower, seed)?.value) };
    let q2 = QOperator::new(w, 2.0, r, grid)?;
    let norm2 = operator_pnorm(&InverseOp { q: &q2 }, 2.0, NormMode::Exact2, seed)?.value;
    Ok(Certificate { p, r, lower: lower.unwrap_or(norm2), norm2 })
}

/// Lower bound for `||w^{1/p} P_{[0,r]} w^{-1/p}||_{p,p}`.
pub fn conjugated_band_norm(w: &Weight, p: f64, r: f64, grid: &LambdaGrid, seed: u64) -> Result<PNorm> {
    let op = ConjugatedBand { band: DftBand::new(grid, r)?, d1: WeightPowers::new(w, p, grid)?.d1 };
    operator_pnorm(&op, p, NormMode::Lower, seed)
}

#[derive(Debug, Clone)]
pub struct SteklovSolution {
    pub p: f64,
    pub r: f64,
    pub k: usize,
    /// `X_p = w^{1/p}(P - e^{i lambda r})` (k = 0) or `Y_p = w^{1/p} R_{1,r}` (k = 1).
    pub x: Vec<C64>,
    pub rhs: Vec<C64>,
    /// `||(I - Q) x - rhs||_p / ||rhs||_p` on the grid.
    pub residual: f64,
    /// Relative `l^2` gap between a solved and the direct `x`, when solved.
    pub discrepancy: Option<f64>,
}

struct LineQ {
    proj: LineProjector,
    powers: WeightPowers,
}

impl LineQ {
    fn new(w: &Weight, p: f64, r: f64, grid: &LambdaGrid) -> Result<LineQ> {
        Ok(LineQ { proj: LineProjector::new(grid, 0.0, r, &w.jumps)?, powers: WeightPowers::new(w, p, grid)? })
    }

    fn i_minus_q(&self, x: &[C64]) -> Vec<C64> {
        let (d1, d2) = (&self.powers.d1, &self.powers.d2);
        let a: Vec<C64> = x.iter().zip(d1).map(|(v, d)| v / d).collect();
        let b: Vec<C64> = x.iter().zip(d2).map(|(v, d)| v * d).collect();
        let pa = self.proj.apply(&a);
        let pb = self.proj.apply(&b);
        (0..x.len()).map(|i| x[i] - pa[i] * d1[i] + pb[i] / d2[i]).collect()
    }

    /// `-D2^{-1} P D2 (w^{1/p} - w^{-1/p'}) f`.
    fn forcing(&self, f: &[C64]) -> Vec<C64> {
        let (d1, d2) = (&self.powers.d1, &self.powers.d2);
        let g: Vec<C64> = (0..f.len()).map(|i| f[i] * (d2[i] * (d1[i] - 1.0 / d2[i]))).collect();
        self.proj.apply(&g).into_iter().zip(d2).map(|(v, d)| -v / d).collect()
    }
}

fn krein_side(w: &Weight, p: f64, slice: &ResolventSlice, k: usize, grid: &LambdaGrid) -> Result<(Vec<C64>, Vec<C64>)> {
    let r = slice.r;
    let d1 = WeightPowers::new(w, p, grid)?.d1;
    let phase: Vec<C64> = grid.nodes().map(|x| C64::from_polar(1.0, x * r)).collect();
    match k {
        0 => {
            let d = evaluate_p(slice, grid);
            let x = d.values.iter().zip(&d1).map(|(v, s)| v * s).collect();
            Ok((x, phase))
        }
        1 => {
            let rem = compute_remainder(w, slice, 1, grid)?;
            let a1 = compute_a_coeffs(&rem.c, &rem.d, 1, r, grid);
            let x = rem.values.values.iter().zip(&d1).map(|(v, s)| v * s).collect();
            let f = grid.nodes().zip(&phase).zip(&a1.values).map(|((l, e), a)| e * l + a).collect();
            Ok((x, f))
        }
        _ => Err(KreinError::BadParameter(format!("functional equation order {k} is not 0 or 1"))),
    }
}

fn grid_lp(x: &[C64], p: f64) -> f64 {
    lp(x, p)
}

pub fn functional_residual(w: &Weight, p: f64, slice: &ResolventSlice, k: usize, grid: &LambdaGrid) -> Result<SteklovSolution> {
    let lq = LineQ::new(w, p, slice.r, grid)?;
    let (x, f) = krein_side(w, p, slice, k, grid)?;
    let rhs = lq.forcing(&f);
    let lhs = lq.i_minus_q(&x);
    let res: Vec<C64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let scale = grid_lp(&rhs, p);
    let residual = if scale == 0.0 { grid_lp(&res, p) } else { grid_lp(&res, p) / scale };
    Ok(SteklovSolution { p, r: slice.r, k, x, rhs, residual, discrepancy: None })
}

pub fn solve_x(w: &Weight, p: f64, slice: &ResolventSlice, k: usize, grid: &LambdaGrid) -> Result<SteklovSolution> {
    let lq = LineQ::new(w, p, slice.r, grid)?;
    let (direct, f) = krein_side(w, p, slice, k, grid)?;
    let rhs = lq.forcing(&f);
    let (x, _) = gmres(|v| lq.i_minus_q(v), &rhs, GMRES_TOL, GMRES_RESTART, 5000).map_err(|e| KreinError::Singular(e.to_string()))?;
    let res: Vec<C64> = lq.i_minus_q(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let scale = grid_lp(&rhs, p);
    let residual = if scale == 0.0 { 0.0 } else { grid_lp(&res, p) / scale };
    let dn = norm2(&direct);
    let gap = norm2(&x.iter().zip(&direct).map(|(a, b)| a - b).collect::<Vec<_>>());
    let discrepancy = Some(if dn == 0.0 { gap } else { gap / dn });
    Ok(SteklovSolution { p, r: slice.r, k, x, rhs, residual, discrepancy })
}

#[derive(Debug, Clone)]
pub struct NeumannInverse {
    pub matrix: OperatorMatrix,
    pub terms: usize,
    pub delta: f64,
}

/// `(I - P_{[0,r]}(1 - w))^{-1} = Σ_k (P_{[0,r]}(1 - w))^k`, summed until the
/// Frobenius norm of the newest term drops below `tol`.
pub fn neumann_inverse(w: &Weight, r: f64, grid: &LambdaGrid, tol: f64) -> Result<NeumannInverse> {
    let n = grid.n;
    let one_minus: Vec<f64> = grid.nodes().map(|x| 1.0 - w.eval(x)).collect();
    let delta = one_minus.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(delta < 1.0) {
        return Err(KreinError::NotContractive { delta });
    }
    let m = assemble_band_matrix(r, grid)?;
    let k = DMatrix::from_fn(n, n, |i, j| m.entries[(i, j)] * one_minus[j]);
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut terms = 1;
    loop {
        term = &k * &term;
        if term.norm() < tol {
            break;
        }
        if terms >= MAX_POWER_STEPS {
            return Err(KreinError::NoConvergence { iterations: terms });
        }
        sum += &term;
        terms += 1;
    }
    Ok(NeumannInverse {
        matrix: OperatorMatrix { grid: *grid, entries: sum, label: format!("neumann[{}] r={r} N={n}", w.id) },
        terms,
        delta,
    })
}

/// `I - P_{[0,r]}(1 - w)` as a dense matrix, for direct solves.
pub fn neumann_system(w: &Weight, r: f64, grid: &LambdaGrid) -> Result<OperatorMatrix> {
    let m = assemble_band_matrix(r, grid)?;
    let n = grid.n;
    let one_minus: Vec<f64> = grid.nodes().map(|x| 1.0 - w.eval(x)).collect();
    let entries = DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - m.entries[(i, j)] * one_minus[j]);
    Ok(OperatorMatrix { grid: *grid, entries, label: format!("I-P(1-w)[{}] r={r} N={n}", w.id) })
}
