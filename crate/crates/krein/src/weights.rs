//! Closed-form weights, their A_p characteristic and BMO estimates, the
//! canonical deviation split and weight-gap norms.

use crate::error::{KreinError, Result};
use crate::harmonic::{GridFunction, LambdaGrid};
use crate::quad::Rule;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// Grading depth used next to power singularities.
const GRADE_LEVELS: usize = 30;

/// Closed-form weight descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    /// `w = c`.
    Const { c: f64 },
    /// `w = 1 + delta` on `[a, b]`, 1 elsewhere.
    Bump { delta: f64, a: f64, b: f64 },
    /// `w = |(x - center)/scale|^beta` when `|x - center| <= scale`, 1 elsewhere.
    Power { beta: f64, center: f64, scale: f64 },
    /// `w = 1 + delta exp(-(x - center)^2 / (2 width^2))`.
    Gauss { delta: f64, center: f64, width: f64 },
    /// `w = 1 + delta <x>^{-a} log(e + |x|)^{-b}`.
    LogTail { a: f64, b: f64, delta: f64 },
    Product(Vec<WeightSpec>),
}

impl WeightSpec {
    pub fn bump(delta: f64) -> WeightSpec {
        WeightSpec::Bump { delta, a: -1.0, b: 1.0 }
    }

    fn factors(&self) -> Vec<&WeightSpec> {
        match self {
            WeightSpec::Product(v) => v.iter().flat_map(|f| f.factors()).collect(),
            s => vec![s],
        }
    }

    /// The spec of `x -> w((x - origin) / scale)`.
    pub fn affine(&self, origin: f64, scale: f64) -> Result<WeightSpec> {
        if !(scale > 0.0) {
            return Err(KreinError::BadSpec("affine scale must be positive".into()));
        }
        Ok(match self {
            WeightSpec::Const { c } => WeightSpec::Const { c: *c },
            WeightSpec::Bump { delta, a, b } => {
                WeightSpec::Bump { delta: *delta, a: origin + scale * a, b: origin + scale * b }
            }
            WeightSpec::Power { beta, center, scale: s } => {
                WeightSpec::Power { beta: *beta, center: origin + scale * center, scale: scale * s }
            }
            WeightSpec::Gauss { delta, center, width } => {
                WeightSpec::Gauss { delta: *delta, center: origin + scale * center, width: scale * width }
            }
            WeightSpec::LogTail { .. } => {
                return Err(KreinError::BadSpec("logtail has no closed-form affine image".into()))
            }
            WeightSpec::Product(v) => {
                WeightSpec::Product(v.iter().map(|f| f.affine(origin, scale)).collect::<Result<_>>()?)
            }
        })
    }

    /// The spec of `1 / w`.
    pub fn reciprocal(&self) -> Result<WeightSpec> {
        Ok(match self {
            WeightSpec::Const { c } => WeightSpec::Const { c: 1.0 / c },
            WeightSpec::Bump { delta, a, b } => WeightSpec::Bump { delta: 1.0 / (1.0 + delta) - 1.0, a: *a, b: *b },
            WeightSpec::Power { beta, center, scale } => WeightSpec::Power { beta: -beta, center: *center, scale: *scale },
            WeightSpec::Product(v) => WeightSpec::Product(v.iter().map(|f| f.reciprocal()).collect::<Result<_>>()?),
            _ => return Err(KreinError::BadSpec("reciprocal is not closed-form for this spec".into())),
        })
    }
}

/// A piece of `[a, b]` free of interior breakpoints; the endpoint fields hold
/// the exponent of a power singularity sitting there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub sing_a: Option<f64>,
    pub sing_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub spec: WeightSpec,
    /// `(lambda_0, beta)` for each power factor.
    pub singularities: Vec<(f64, f64)>,
    /// Points where `w` jumps.
    pub jumps: Vec<f64>,
    /// All points where `w` fails to be smooth, sorted.
    pub breakpoints: Vec<f64>,
    pub deviation_exponents: (f64, f64),
    pub id: u64,
}

pub fn make_weight(spec: WeightSpec) -> Result<Weight> {
    let mut singularities = Vec::new();
    let mut jumps = Vec::new();
    let mut breakpoints = Vec::new();
    let mut p2: f64 = 1.0;
    let bad = |m: &str| Err(KreinError::BadSpec(m.to_string()));
    for f in spec.factors() {
        match *f {
            WeightSpec::Const { c } => {
                if !(c > 0.0) || !c.is_finite() {
                    return bad("constant must be positive");
                }
            }
            WeightSpec::Bump { delta, a, b } => {
                if !(delta > -1.0) || !delta.is_finite() || !(a < b) {
                    return bad("bump needs delta > -1 and a < b");
                }
                if delta != 0.0 {
                    jumps.extend([a, b]);
                    breakpoints.extend([a, b]);
                }
                p2 = p2.max(1.0);
            }
            WeightSpec::Power { beta, center, scale } => {
                if !(beta > -1.0 && beta < 1.0) {
                    return bad("power exponent must lie in (-1, 1)");
                }
                if !(scale > 0.0) || !scale.is_finite() || !center.is_finite() {
                    return bad("power scale must be positive");
                }
                if beta != 0.0 {
                    singularities.push((center, beta));
                    breakpoints.extend([center - scale, center, center + scale]);
                }
            }
            WeightSpec::Gauss { delta, center, width } => {
                if !(delta > -1.0) || !(width > 0.0) || !center.is_finite() {
                    return bad("gauss needs delta > -1 and width > 0");
                }
            }
            WeightSpec::LogTail { a, b, delta } => {
                if !(delta > -1.0) || !(a > 0.0) || !b.is_finite() || b < 0.0 {
                    return bad("logtail needs delta > -1, a > 0, b >= 0");
                }
                let q = 1.0 / a;
                if q > 2.0 || (q == 2.0 && b * q <= 1.0) {
                    return bad("logtail deviation is not in L^2");
                }
                if q >= 1.0 && b * q <= 1.0 && q < 2.0 {
                    p2 = p2.max((q * 1.01).min(2.0));
                } else {
                    p2 = p2.max(q);
                }
                breakpoints.push(0.0);
            }
            WeightSpec::Product(_) => unreachable!(),
        }
    }
    let mut pts: Vec<f64> = singularities.iter().map(|s| s.0).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if pts.windows(2).any(|w| w[0] == w[1]) {
        return bad("coincident singularities");
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup();
    jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    jumps.dedup();
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    format!("{spec:?}").hash(&mut hasher);
    Ok(Weight { spec, singularities, jumps, breakpoints, deviation_exponents: (1.0, p2.clamp(1.0, 2.0)), id: hasher.finish() })
}

fn jpow(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn eval_factor(f: &WeightSpec, x: f64) -> f64 {
    match *f {
        WeightSpec::Const { c } => c,
        WeightSpec::Bump { delta, a, b } => {
            if x == a || x == b {
                1.0 + delta / 2.0
            } else if x > a && x < b {
                1.0 + delta
            } else {
                1.0
            }
        }
        WeightSpec::Power { beta, center, scale } => {
            let t = (x - center).abs() / scale;
            if t <= 1.0 {
                if t == 0.0 {
                    if beta < 0.0 { f64::INFINITY } else if beta > 0.0 { 0.0 } else { 1.0 }
                } else {
                    t.powf(beta)
                }
            } else {
                1.0
            }
        }
        WeightSpec::Gauss { delta, center, width } => {
            let t = (x - center) / width;
            1.0 + delta * (-0.5 * t * t).exp()
        }
        WeightSpec::LogTail { a, b, delta } => {
            1.0 + delta * jpow(x).powf(-a) * (std::f64::consts::E + x.abs()).ln().powf(-b)
        }
        WeightSpec::Product(ref v) => v.iter().map(|g| eval_factor(g, x)).product(),
    }
}

fn deviation_support(f: &WeightSpec) -> Option<Vec<(f64, f64)>> {
    match *f {
        WeightSpec::Const { c } => {
            if c == 1.0 { Some(vec![]) } else { None }
        }
        WeightSpec::Bump { delta, a, b } => Some(if delta == 0.0 { vec![] } else { vec![(a, b)] }),
        WeightSpec::Power { beta, center, scale } => {
            Some(if beta == 0.0 { vec![] } else { vec![(center - scale, center + scale)] })
        }
        WeightSpec::Gauss { delta, .. } | WeightSpec::LogTail { delta, .. } => {
            if delta == 0.0 { Some(vec![]) } else { None }
        }
        WeightSpec::Product(ref v) => {
            let mut all = Vec::new();
            for g in v {
                all.extend(deviation_support(g)?);
            }
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (a, b) in all {
                match merged.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => merged.push((a, b)),
                }
            }
            Some(merged)
        }
    }
}

impl Weight {
    pub fn eval(&self, x: f64) -> f64 {
        eval_factor(&self.spec, x)
    }

    pub fn is_constant(&self) -> bool {
        self.spec.factors().iter().all(|f| match **f {
            WeightSpec::Const { .. } => true,
            WeightSpec::Bump { delta, .. } | WeightSpec::Gauss { delta, .. } | WeightSpec::LogTail { delta, .. } => delta == 0.0,
            WeightSpec::Power { beta, .. } => beta == 0.0,
            WeightSpec::Product(_) => false,
        })
    }

    /// Intervals outside which `w == 1`; `None` when `w - 1` has unbounded support.
    pub fn deviation_support(&self) -> Option<Vec<(f64, f64)>> {
        deviation_support(&self.spec)
    }

    /// Same as [`Weight::deviation_support`] but clipped to `[-window, window]`.
    pub fn deviation_window(&self, window: f64) -> Vec<(f64, f64)> {
        match self.deviation_support() {
            None => vec![(-window, window)],
            Some(v) => v
                .into_iter()
                .filter_map(|(a, b)| {
                    let (a, b) = (a.max(-window), b.min(window));
                    (b > a).then_some((a, b))
                })
                .collect(),
        }
    }

    fn singular_exponent(&self, x: f64) -> Option<f64> {
        self.singularities
            .iter()
            .find(|(c, _)| (x - c).abs() <= 1e-14 * (1.0 + c.abs()))
            .map(|(_, b)| *b)
    }

    /// Splits `[a, b]` at breakpoints and tags singular endpoints.
    pub fn pieces(&self, a: f64, b: f64) -> Vec<Piece> {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints.iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| Piece { a: w[0], b: w[1], sing_a: self.singular_exponent(w[0]), sing_b: self.singular_exponent(w[1]) })
            .collect()
    }

    /// Quadrature rule on `[a, b]` for integrands behaving like `w^s` times a
    /// smooth function on each piece.
    pub fn rule(&self, a: f64, b: f64, s: f64, h_max: f64) -> Rule {
        let mut r = Rule::default();
        for p in self.pieces(a, b) {
            match (p.sing_a, p.sing_b) {
                (None, None) => r.append(Rule::panels(p.a, p.b, h_max)),
                (Some(e), None) => r.append(Rule::graded(p.a, p.b, true, Some(e * s), GRADE_LEVELS, h_max)),
                (None, Some(e)) => r.append(Rule::graded(p.a, p.b, false, Some(e * s), GRADE_LEVELS, h_max)),
                (Some(e1), Some(e2)) => {
                    let m = 0.5 * (p.a + p.b);
                    r.append(Rule::graded(p.a, m, true, Some(e1 * s), GRADE_LEVELS, h_max));
                    r.append(Rule::graded(m, p.b, false, Some(e2 * s), GRADE_LEVELS, h_max));
                }
            }
        }
        r
    }

    /// Rule covering the support of `w - 1` inside `[-window, window]`.
    pub fn deviation_rule(&self, window: f64, h_max: f64) -> Rule {
        let mut r = Rule::default();
        for (a, b) in self.deviation_window(window) {
            r.append(self.rule(a, b, 1.0, h_max));
        }
        r
    }

    /// Essential infimum of `w` on `[-window, window]`.
    pub fn positivity_floor(&self, window: f64) -> f64 {
        let mut m = f64::INFINITY;
        for p in self.pieces(-window, window) {
            for k in 0..=256 {
                let t = k as f64 / 256.0;
                let x = p.a + t * (p.b - p.a);
                let x = x.clamp(p.a + 1e-12 * (p.b - p.a), p.b - 1e-12 * (p.b - p.a));
                m = m.min(self.eval(x));
            }
        }
        m
    }

    /// Whether `<x>^k (w - 1)` is integrable, judged from the closed form.
    pub fn moment_certified(&self, k: usize) -> bool {
        self.spec.factors().iter().all(|f| match **f {
            WeightSpec::Const { c } => c == 1.0,
            WeightSpec::LogTail { a, b, delta } => {
                delta == 0.0 || a - k as f64 > 1.0 || (a - k as f64 == 1.0 && b > 1.0)
            }
            _ => true,
        })
    }

    /// `∫_{|x| > window} |w - 1|^p dx`, estimated from the closed form.
    pub fn tail_bound(&self, window: f64, p: f64) -> f64 {
        let mut total = 0.0;
        for f in self.spec.factors() {
            if let WeightSpec::LogTail { a, b, delta } = *f {
                // log variable x = window e^u covers many decades
                let g = |u: f64| {
                    let x = window * u.exp();
                    (delta.abs() * jpow(x).powf(-a) * (std::f64::consts::E + x).ln().powf(-b)).powf(p) * x
                };
                let rule = Rule::panels(0.0, 60.0, 0.25);
                total += 2.0 * rule.integrate(g);
            }
            if let WeightSpec::Gauss { delta, center, width } = *f {
                let z1 = (window - center) / (width * std::f64::consts::SQRT_2);
                let z2 = (window + center) / (width * std::f64::consts::SQRT_2);
                let tail = |z: f64| if z > 0.0 { (-z * z).exp() / (z * 2.0) } else { 1.0 };
                let jac = width * std::f64::consts::SQRT_2 / p.sqrt();
                total += delta.abs().powf(p) * jac * (tail(z1 * p.sqrt()) + tail(z2 * p.sqrt()));
            }
            if let WeightSpec::Const { c } = *f {
                if c != 1.0 {
                    return f64::INFINITY;
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApEstimate {
    pub p: f64,
    pub value: f64,
    pub search_depth: u32,
    pub argmax_interval: (f64, f64),
}

/// Dyadic and half-shifted dyadic intervals with lengths `2^-depth ..= 2^depth`
/// meeting the support of `w - 1` inside `[-2^depth, 2^depth]`, in the frame
/// `I -> origin + scale I`.
fn interval_family(w: &Weight, depth: u32, origin: f64, scale: f64) -> Vec<(f64, f64)> {
    let window = 2f64.powi(depth as i32) * scale;
    let support: Vec<(f64, f64)> = w
        .deviation_support()
        .unwrap_or_else(|| vec![(origin - window, origin + window)])
        .into_iter()
        .map(|(a, b)| (a.max(origin - window), b.min(origin + window)))
        .filter(|(a, b)| b > a)
        .collect();
    let mut out = Vec::new();
    for n in -(depth as i32)..=(depth as i32) {
        let len = 2f64.powi(-n);
        for shift in [0.0, 0.5] {
            for &(a, b) in &support {
                let lo = ((a - origin) / scale / len - shift - 1.0).floor() as i64;
                let hi = ((b - origin) / scale / len - shift).ceil() as i64;
                for j in lo..=hi {
                    let l = origin + scale * (j as f64 + shift) * len;
                    let r = l + scale * len;
                    if r > a && l < b {
                        out.push((l, r));
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    out.dedup();
    out
}

fn average(w: &Weight, a: f64, b: f64, s: f64) -> f64 {
    let h = (b - a) / 8.0;
    w.rule(a, b, s, h.max(1e-300)).integrate(|x| w.eval(x).powf(s)) / (b - a)
}

/// Lower bound for `[w]_{A_p}` over the dyadic search family.
pub fn a2_characteristic(w: &Weight, p: f64, depth: u32) -> Result<ApEstimate> {
    ap_characteristic_in_frame(w, p, depth, 0.0, 1.0)
}

/// As [`a2_characteristic`] with the interval family mapped by `I -> origin + scale I`.
pub fn ap_characteristic_in_frame(w: &Weight, p: f64, depth: u32, origin: f64, scale: f64) -> Result<ApEstimate> {
    if !(p > 1.0) || depth < 1 {
        return Err(KreinError::BadParameter("need p > 1 and depth >= 1".into()));
    }
    let s = 1.0 / (1.0 - p);
    for &(c, beta) in &w.singularities {
        if beta * s <= -1.0 {
            return Err(KreinError::NonIntegrable(format!("w^(1/(1-p)) at {c} with beta {beta}")));
        }
    }
    let fam = interval_family(w, depth, origin, scale);
    let best = fam
        .par_iter()
        .map(|&(a, b)| {
            let v = average(w, a, b, 1.0) * average(w, a, b, s).powf(p - 1.0);
            (v, (a, b))
        })
        .reduce(|| (1.0, (origin, origin + scale)), |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x });
    Ok(ApEstimate { p, value: best.0.max(1.0), search_depth: depth, argmax_interval: best.1 })
}

/// Lower bound for `||log w||_BMO` over the same family as the A_p search.
pub fn bmo_estimate(w: &Weight, depth: u32) -> f64 {
    let fam = interval_family(w, depth, 0.0, 1.0);
    fam.par_iter()
        .map(|&(a, b)| {
            let rule = w.rule(a, b, 0.0, (b - a) / 16.0);
            let len = b - a;
            let mean = rule.integrate(|x| w.eval(x).ln()) / len;
            rule.integrate(|x| (w.eval(x).ln() - mean).abs()) / len
        })
        .reduce(|| 0.0, f64::max)
}

/// `|| w^{1/pt} - w^{-1/pt'} ||_{L^p(<x>^q dx)}` over `[-window, window]`.
pub fn weight_gap_norm(w: &Weight, pt: f64, p: f64, q: f64, window: f64) -> Result<f64> {
    if !(pt > 1.0) || !(p >= 1.0) || !(q >= 0.0) {
        return Err(KreinError::BadParameter("need pt > 1, p >= 1, q >= 0".into()));
    }
    let ptd = pt / (pt - 1.0);
    let mut e_min: f64 = 0.0;
    for &(_, beta) in &w.singularities {
        let e = (beta / pt).min(-beta / ptd) * p;
        if e <= -1.0 {
            return Err(KreinError::NonFinite("weight gap integrand at a singularity".into()));
        }
        e_min = e_min.min(e);
    }
    let f = |x: f64| {
        let v = w.eval(x);
        (v.powf(1.0 / pt) - v.powf(-1.0 / ptd)).abs().powf(p) * jpow(x).powf(q)
    };
    let mut total = 0.0;
    for (a, b) in w.deviation_window(window) {
        for piece in w.pieces(a, b) {
            let mut r = Rule::default();
            let sa = piece.sing_a.map(|bt| (bt / pt).min(-bt / ptd) * p);
            let sb = piece.sing_b.map(|bt| (bt / pt).min(-bt / ptd) * p);
            match (sa, sb) {
                (None, None) => r.append(Rule::panels(piece.a, piece.b, 0.25)),
                (Some(e), None) => r.append(Rule::graded(piece.a, piece.b, true, Some(e), GRADE_LEVELS, 0.25)),
                (None, Some(e)) => r.append(Rule::graded(piece.a, piece.b, false, Some(e), GRADE_LEVELS, 0.25)),
                (Some(e1), Some(e2)) => {
                    let m = 0.5 * (piece.a + piece.b);
                    r.append(Rule::graded(piece.a, m, true, Some(e1), GRADE_LEVELS, 0.25));
                    r.append(Rule::graded(m, piece.b, false, Some(e2), GRADE_LEVELS, 0.25));
                }
            }
            total += r.integrate(f);
        }
    }
    let out = total.powf(1.0 / p);
    if !out.is_finite() {
        return Err(KreinError::NonFinite("weight gap norm".into()));
    }
    Ok(out)
}

/// Canonical split `w - 1 = u1 + u2` at the level `|w - 1| = 1`.
#[derive(Debug, Clone)]
pub struct Deviation {
    pub u1: GridFunction,
    pub u2: GridFunction,
    pub norm1: f64,
    pub norm2: f64,
}

pub fn decompose_deviation(w: &Weight, grid: &LambdaGrid) -> Deviation {
    let (p1, p2) = w.deviation_exponents;
    let mut u1 = vec![C64::new(0.0, 0.0); grid.n];
    let mut u2 = u1.clone();
    for (j, x) in grid.nodes().enumerate() {
        let d = w.eval(x) - 1.0;
        if d.abs() > 1.0 {
            u1[j] = C64::new(d, 0.0);
        } else {
            u2[j] = C64::new(d, 0.0);
        }
    }
    let window = grid.half_width;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (a, b) in w.deviation_window(window) {
        for piece in w.pieces(a, b) {
            // split further where |w - 1| crosses 1
            let mut cuts = vec![piece.a];
            let m = 512;
            let h = (piece.b - piece.a) / m as f64;
            let g = |x: f64| (w.eval(x) - 1.0).abs() - 1.0;
            for k in 0..m {
                let (mut lo, mut hi) = (piece.a + k as f64 * h, piece.a + (k + 1) as f64 * h);
                let lo_eval = lo.max(piece.a + 1e-13 * h);
                let hi_eval = hi.min(piece.b - 1e-13 * h);
                if g(lo_eval).signum() != g(hi_eval).signum() {
                    lo = lo_eval;
                    hi = hi_eval;
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid).signum() == g(lo).signum() { lo = mid } else { hi = mid }
                    }
                    cuts.push(0.5 * (lo + hi));
                }
            }
            cuts.push(piece.b);
            for (i, c) in cuts.windows(2).enumerate() {
                let left = if i == 0 { piece.sing_a } else { None };
                let right = if i + 2 == cuts.len() { piece.sing_b } else { None };
                let mid = 0.5 * (c[0] + c[1]);
                let big = g(mid) > 0.0;
                let pw = if big { p1 } else { p2 };
                let mk = |at_left: bool, e: f64| Rule::graded(c[0], c[1], at_left, Some(e * pw), GRADE_LEVELS, 0.25);
                let rule = match (left, right) {
                    (Some(e), _) if e < 0.0 => mk(true, e),
                    (_, Some(e)) if e < 0.0 => mk(false, e),
                    (Some(_), _) => mk(true, 0.0),
                    (_, Some(_)) => mk(false, 0.0),
                    _ => Rule::panels(c[0], c[1], 0.25),
                };
                let v = rule.integrate(|x| (w.eval(x) - 1.0).abs().powf(pw));
                if big { s1 += v } else { s2 += v }
            }
        }
    }
    Deviation {
        u1: GridFunction::new(*grid, u1),
        u2: GridFunction::new(*grid, u2),
        norm1: s1.powf(1.0 / p1),
        norm2: s2.powf(1.0 / p2),
    }
}
