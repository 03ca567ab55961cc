//! Sweeps behind the `steklov`, `slope`, `diverge`, `remainder` and `mixed`
//! subcommands. Each returns a table plus a JSON summary.

use crate::config::ExperimentConfig;
use crate::report::{cell, Table};
use krein::harmonic::{band_project, GridFunction, LambdaGrid, ProductWeights, RGrid};
use krein::kreincore::{compute_accelerant, solve_resolvent, Accelerant};
use krein::kreinsol::evaluate_p;
use krein::remainder::{compute_remainder, grid_lp_norm};
use krein::weights::{make_weight, Weight, WeightSpec};
use krein::{KreinError, Result};
use rayon::prelude::*;
use serde_json::json;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub table: Table,
    pub summary: serde_json::Value,
}

/// Least-squares line through `(ln x, ln y)`: slope, intercept, R².
pub fn loglog_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

struct Setup {
    lg: LambdaGrid,
    rg: RGrid,
    acc: Accelerant,
}

fn setup(w: &Weight, cfg: &ExperimentConfig) -> Result<Setup> {
    let lg = LambdaGrid::for_weight(cfg.lambda, cfg.n, w)?;
    let rg = RGrid::new(cfg.dr, cfg.r_max)?;
    let acc = compute_accelerant(w, &rg, &lg)?;
    Ok(Setup { lg, rg, acc })
}

/// Node indices visited by sups over r: every `r_every`-th from `first`, and the last.
fn r_indices(rg: &RGrid, every: usize, first: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (first..=rg.m).step_by(every).collect();
    if v.last() != Some(&rg.m) {
        v.push(rg.m);
    }
    v
}

/// `r -> ||P(r, .) - e^{i . r}||_{L^p_w}` on the r-grid (stride `r_every`).
pub fn deviation_curve(w: &Weight, cfg: &ExperimentConfig, p: f64) -> Result<Vec<(f64, f64)>> {
    let s = setup(w, cfg)?;
    let pw = ProductWeights::new(&s.lg, w, 0.0)?;
    r_indices(&s.rg, cfg.r_every, 0)
        .into_par_iter()
        .map(|i| {
            let r = s.rg.node(i);
            let sl = solve_resolvent(&s.acc, r, 0.0)?;
            Ok((r, pw.lp_norm(&evaluate_p(&sl, &s.lg), p)?))
        })
        .collect()
}

pub fn steklov_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let w = cfg.weight()?;
    let curve = deviation_curve(&w, cfg, cfg.p)?;
    let mut t = Table::new(&["r", "p", "norm"]);
    for &(r, v) in &curve {
        t.push(vec![cell(r), cell(cfg.p), cell(v)]);
    }
    let sup = curve.iter().map(|c| c.1).fold(0.0, f64::max);
    let tail = &curve[curve.len() * 3 / 4..];
    let tail_max = tail.iter().map(|c| c.1).fold(0.0, f64::max);
    let plateau = if sup > 0.0 { tail_max / sup } else { 1.0 };
    t.push(vec!["sup".into(), cell(cfg.p), cell(sup)]);
    Ok(Outcome { name: "steklov".into(), table: t, summary: json!({ "sup": sup, "plateau": plateau }) })
}

#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub deltas: Vec<f64>,
    pub sups: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
}

fn fit_outcome(name: &str, column: &str, f: &SlopeFit, extra: serde_json::Value) -> Outcome {
    let mut t = Table::new(&["delta", column]);
    for (d, v) in f.deltas.iter().zip(&f.sups) {
        t.push(vec![cell(*d), cell(*v)]);
    }
    let mut summary = json!({ "slope": f.slope, "r2": f.r2 });
    if let (Some(o), serde_json::Value::Object(e)) = (summary.as_object_mut(), extra) {
        o.extend(e);
    }
    Outcome { name: name.into(), table: t, summary }
}

/// `sup_r ||P - e^{i lambda r}||_{L^p_w}` across the bump family `1 + delta chi_[-1,1]`.
pub fn perturbative_slope_fit(cfg: &ExperimentConfig, p: f64) -> Result<SlopeFit> {
    cfg.validate()?;
    if cfg.deltas.len() < 2 {
        return Err(KreinError::BadParameter("slope needs at least two deltas".into()));
    }
    let sups = cfg
        .deltas
        .iter()
        .map(|&d| {
            let w = make_weight(WeightSpec::bump(d))?;
            Ok(deviation_curve(&w, cfg, p)?.iter().map(|c| c.1).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (slope, _, r2) = loglog_fit(&cfg.deltas, &sups);
    Ok(SlopeFit { deltas: cfg.deltas.clone(), sups, slope, r2 })
}

pub fn perturbative_slope(cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = perturbative_slope_fit(cfg, cfg.p)?;
    Ok(fit_outcome("slope", "sup_norm", &f, json!({ "p": cfg.p })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `<lambda>^{-1/p2} log(e + |lambda|)^{-2/p2}`, in `L^q` iff `q >= p2`.
    Critical,
    /// `chi_[-1,1]`.
    Bump,
}

#[derive(Debug, Clone)]
pub struct Divergence {
    pub ns: Vec<f64>,
    pub norms: Vec<f64>,
    pub increasing: bool,
    pub ratio: f64,
}

/// `n -> ||P_[-n,n] u||_{L^p}` on a grid of half width `lambda` with `n_grid` nodes.
pub fn divergence_probe(p2: f64, p: f64, ns: &[f64], lambda: f64, n_grid: usize, profile: Profile) -> Result<Divergence> {
    if !(p > 1.0) || !(p2 >= p) {
        return Err(KreinError::BadParameter(format!("need 1 < p <= p2, got p = {p}, p2 = {p2}")));
    }
    if ns.is_empty() || ns.iter().any(|n| !(*n > 0.0)) {
        return Err(KreinError::BadParameter("band half widths must be positive".into()));
    }
    let lg = LambdaGrid::new(lambda, n_grid)?;
    let u = match profile {
        Profile::Critical => GridFunction::sample_real(lg, |x| {
            (1.0 + x * x).powf(-0.5 / p2) * (std::f64::consts::E + x.abs()).ln().powf(-2.0 / p2)
        }),
        Profile::Bump => GridFunction::sample_real(lg, |x| if x.abs() <= 1.0 { 1.0 } else { 0.0 }),
    };
    let norms = ns.iter().map(|&n| Ok(grid_lp_norm(&band_project(&u, -n, n)?, p))).collect::<Result<Vec<f64>>>()?;
    let increasing = norms.windows(2).all(|w| w[1] > w[0]);
    let ratio = norms[norms.len() - 1] / norms[0];
    Ok(Divergence { ns: ns.to_vec(), norms, increasing, ratio })
}

pub fn divergence_outcome(d: &Divergence, p: f64, p2: f64) -> Outcome {
    let mut t = Table::new(&["n", "norm"]);
    for (n, v) in d.ns.iter().zip(&d.norms) {
        t.push(vec![cell(*n), cell(*v)]);
    }
    Outcome { name: "diverge".into(), table: t, summary: json!({ "p": p, "p2": p2, "increasing": d.increasing, "ratio": d.ratio }) }
}

/// `sup_r ||R_{k,r}||_{L^p}` over the r-grid for one weight.
pub fn remainder_sup(w: &Weight, cfg: &ExperimentConfig, k: usize, p: f64) -> Result<f64> {
    let s = setup(w, cfg)?;
    // the boundary stencils need five nodes
    let first = cfg.r_every.max(4);
    let vals = r_indices(&s.rg, cfg.r_every, first)
        .into_par_iter()
        .map(|i| {
            let sl = solve_resolvent(&s.acc, s.rg.node(i), 0.0)?;
            Ok(grid_lp_norm(&compute_remainder(w, &sl, k, &s.lg)?.values, p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

pub fn remainder_scaling_fit(cfg: &ExperimentConfig, k: usize, p: f64) -> Result<SlopeFit> {
    cfg.validate()?;
    if cfg.deltas.len() < 2 {
        return Err(KreinError::BadParameter("scaling needs at least two deltas".into()));
    }
    let sups = cfg
        .deltas
        .iter()
        .map(|&d| remainder_sup(&make_weight(WeightSpec::bump(d))?, cfg, k, p))
        .collect::<Result<Vec<f64>>>()?;
    let (slope, _, r2) = loglog_fit(&cfg.deltas, &sups);
    Ok(SlopeFit { deltas: cfg.deltas.clone(), sups, slope, r2 })
}

pub fn remainder_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let f = remainder_scaling_fit(cfg, cfg.k, cfg.p)?;
    let (slope, intercept, _) = loglog_fit(&f.deltas, &f.sups);
    Ok(fit_outcome("remainder", "sup_norm", &f, json!({ "k": cfg.k, "p": cfg.p, "slope": slope, "prefactor": intercept.exp() })))
}

/// `min_theta ||(c - theta)_+||_{l^2(dr)} + theta`, a convex function of theta.
pub fn best_split(curve: &[f64], dr: f64) -> f64 {
    let f = |th: f64| (curve.iter().map(|v| (v - th).max(0.0).powi(2)).sum::<f64>() * dr).sqrt() + th;
    let (mut lo, mut hi) = (0.0, curve.iter().cloned().fold(0.0, f64::max));
    for _ in 0..200 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0))
}

#[derive(Debug, Clone)]
pub struct MixedNorm {
    pub curve: Vec<(f64, f64)>,
    pub split: f64,
}

/// `r -> ||R_{1,r}||_{L^p_w}` with its `L^2 + L^inf` split value.
pub fn mixed_norm(w: &Weight, cfg: &ExperimentConfig, p: f64) -> Result<MixedNorm> {
    if !w.moment_certified(1) {
        return Err(KreinError::RegularityNotCertified { k: 1, detail: "<lambda> (w - 1) is not certified integrable".into() });
    }
    let s = setup(w, cfg)?;
    let pw = ProductWeights::new(&s.lg, w, 0.0)?;
    let curve = r_indices(&s.rg, cfg.r_every, cfg.r_every.max(4))
        .into_par_iter()
        .map(|i| {
            let r = s.rg.node(i);
            let sl = solve_resolvent(&s.acc, r, 0.0)?;
            Ok((r, pw.lp_norm(&compute_remainder(w, &sl, 1, &s.lg)?.values, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let vals: Vec<f64> = curve.iter().map(|c| c.1).collect();
    let split = best_split(&vals, cfg.dr * cfg.r_every as f64);
    Ok(MixedNorm { curve, split })
}

pub fn mixed_norm_table(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let m = mixed_norm(&cfg.weight()?, cfg, cfg.p)?;
    let mut t = Table::new(&["r", "norm"]);
    for (r, v) in &m.curve {
        t.push(vec![cell(*r), cell(*v)]);
    }
    Ok(Outcome { name: "mixed".into(), table: t, summary: json!({ "split": m.split, "p": cfg.p }) })
}
