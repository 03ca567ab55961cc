use super::{solve_system_levinson, Accelerant, ResolventSlice};
use crate::error::{KreinError, Result};
use crate::harmonic::RGrid;
use crate::quad::gregory_weights;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

pub const CHECKPOINT_EVERY: usize = 10;
const STARTUP: usize = 8;
const MAX_DISCREPANCY: f64 = 1e-4;

/// Resolvent slices `g_{r_i}` for every node of an r-grid.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub rgrid: RGrid,
    pub slices: Vec<ResolventSlice>,
    /// `(r, relative discrepancy)` at the continuation checkpoints.
    pub checkpoints: Vec<(f64, f64)>,
}

impl Sweep {
    /// `A(r_i) = conj(g_{r_i}(r_i))`.
    pub fn coefficient(&self) -> Vec<C64> {
        self.slices.iter().map(|s| s.g[s.n()].conj()).collect()
    }
}

fn direct(acc: &Accelerant, n: usize) -> Result<Vec<C64>> {
    let h: Vec<C64> = (0..=n).map(|i| acc.at(i as isize)).collect();
    Ok(solve_system_levinson(acc, n, &[h])?.pop().unwrap())
}

/// Independent Levinson solve at every grid node (parallel over r).
pub fn direct_sweep(acc: &Accelerant, rgrid: &RGrid) -> Result<Sweep> {
    if rgrid.dr != acc.rgrid.dr || rgrid.m > acc.rgrid.m {
        return Err(KreinError::GridMismatch);
    }
    let slices = (0..=rgrid.m)
        .into_par_iter()
        .map(|i| Ok(ResolventSlice { r: rgrid.node(i), dr: rgrid.dr, g: direct(acc, i)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sweep { rgrid: *rgrid, slices, checkpoints: Vec::new() })
}

/// Marches `g_r` in r with `d/dr g_r(s) = -conj(g_r(r - s)) g_r(r)`:
/// Adams–Bashforth 2 predictor, Adams–Moulton 3 corrector, the new boundary
/// node from the last row of the Nyström system. Direct solves seed the first
/// steps and audit every tenth.
pub fn continuation_sweep(acc: &Accelerant, rgrid: &RGrid) -> Result<Sweep> {
    if rgrid.dr != acc.rgrid.dr || rgrid.m > acc.rgrid.m {
        return Err(KreinError::GridMismatch);
    }
    let dr = rgrid.dr;
    let m = rgrid.m;
    let h = |k: usize| acc.at(k as isize);
    let boundary = |gint: &[C64], n: usize| {
        let w = gregory_weights(n);
        let mut rhs = h(n);
        for j in 0..n {
            rhs -= h(n - j) * gint[j] * (w[j] * dr);
        }
        rhs / (C64::new(1.0, 0.0) + h(0) * (w[n] * dr))
    };
    let start = STARTUP.min(m);
    let mut slices: Vec<ResolventSlice> = (0..=start)
        .into_par_iter()
        .map(|i| Ok(ResolventSlice { r: rgrid.node(i), dr, g: direct(acc, i)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut checkpoints = Vec::new();
    if m <= start {
        return Ok(Sweep { rgrid: *rgrid, slices, checkpoints });
    }
    let rhs_of = |g: &[C64]| {
        let last = g[g.len() - 1];
        g.iter().rev().map(|v| -v.conj() * last).collect::<Vec<C64>>()
    };
    let mut fprev = rhs_of(&slices[start - 1].g);
    for i in start..m {
        let g = slices[i].g.clone();
        let f = rhs_of(&g);
        let mut gp = g.clone();
        for j in 0..i {
            gp[j] += (f[j] * 3.0 - fprev[j]) * (dr / 2.0);
        }
        gp[i] += f[i] * dr;
        let b = boundary(&gp, i + 1);
        gp.push(b);
        let fc: Vec<C64> = (0..=i).map(|j| -gp[i + 1 - j].conj() * gp[i + 1]).collect();
        let mut gn = g.clone();
        for j in 0..i {
            gn[j] += (fc[j] * 5.0 + f[j] * 8.0 - fprev[j]) * (dr / 12.0);
        }
        gn[i] += (f[i] + fc[i]) * (dr / 2.0);
        let b = boundary(&gn, i + 1);
        gn.push(b);
        if gn.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(KreinError::NonFinite(format!("continuation at r = {}", rgrid.node(i + 1))));
        }
        fprev = f;
        if (i + 1) % CHECKPOINT_EVERY == 0 {
            let d = direct(acc, i + 1)?;
            let scale = d.iter().fold(0.0f64, |a, v| a.max(v.norm()));
            let diff = d.iter().zip(&gn).fold(0.0f64, |a, (x, y)| a.max((x - y).norm()));
            let rel = if scale > 0.0 { diff / scale } else { diff };
            checkpoints.push((rgrid.node(i + 1), rel));
            if rel > MAX_DISCREPANCY {
                return Err(KreinError::DivergedFromDirect { r: rgrid.node(i + 1), discrepancy: rel });
            }
        }
        slices.push(ResolventSlice { r: rgrid.node(i + 1), dr, g: gn });
    }
    Ok(Sweep { rgrid: *rgrid, slices, checkpoints })
}
