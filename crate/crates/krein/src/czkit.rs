//! Dyadic Calderón–Zygmund decompositions for `mu = <x>^q dx`.
//!
//! Step functions with dyadic breakpoints are decomposed exactly: every
//! `f64` is a dyadic rational, and for even integer `q` the measure of an
//! interval is a polynomial in its endpoints, so all averages are compared
//! in `BigRational`. Other `q` fall back to `f64` with ties not selected.

use crate::error::{KreinError, Result};
use crate::quad::Rule;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::cmp::Ordering;

pub const DEFAULT_DEPTH: u32 = 96;
const FLOAT_TIE: f64 = 1e-12;

/// `[j 2^{-n}, (j + 1) 2^{-n}]`; `n` may be negative for long intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    pub n: i32,
    pub j: i64,
}

impl DyadicInterval {
    pub fn new(j: i64, n: i32) -> DyadicInterval {
        DyadicInterval { n, j }
    }

    pub fn parent(&self) -> DyadicInterval {
        DyadicInterval { n: self.n - 1, j: self.j.div_euclid(2) }
    }

    pub fn children(&self) -> [DyadicInterval; 2] {
        [DyadicInterval { n: self.n + 1, j: 2 * self.j }, DyadicInterval { n: self.n + 1, j: 2 * self.j + 1 }]
    }

    pub fn left(&self) -> f64 {
        self.j as f64 * (-(self.n as f64)).exp2()
    }

    pub fn right(&self) -> f64 {
        (self.j + 1) as f64 * (-(self.n as f64)).exp2()
    }

    pub fn length(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    /// Whether `other` is `self` or one of its descendants.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        if other.n < self.n {
            return false;
        }
        let shift = (other.n - self.n) as u32;
        if shift >= 63 {
            return false;
        }
        other.j.div_euclid(1i64 << shift) == self.j
    }
}

/// A finite step function: `values[i]` on `[breaks[i], breaks[i+1])`, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<StepFunction> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(KreinError::BadSpec(format!("{} breakpoints for {} values", breaks.len(), values.len())));
        }
        if breaks.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(KreinError::NonFinite("step function data".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KreinError::BadSpec("breakpoints must increase strictly".into()));
        }
        Ok(StepFunction { breaks, values })
    }

    pub fn indicator(a: f64, b: f64) -> StepFunction {
        StepFunction { breaks: vec![a, b], values: vec![1.0] }
    }

    pub fn zero() -> StepFunction {
        StepFunction { breaks: vec![0.0, 1.0], values: vec![0.0] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.breaks.iter().position(|b| *b > x) {
            Some(0) | None => 0.0,
            Some(k) => self.values[k - 1],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    /// `|u|^p` pointwise.
    pub fn abs_pow(&self, p: f64) -> StepFunction {
        StepFunction { breaks: self.breaks.clone(), values: self.values.iter().map(|v| v.abs().powf(p)).collect() }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let mut breaks: Vec<f64> = self.breaks.iter().chain(&other.breaks).cloned().collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let values = breaks.windows(2).map(|w| {
            let m = 0.5 * (w[0] + w[1]);
            self.eval(m) + other.eval(m)
        }).collect();
        StepFunction { breaks, values }
    }

    /// `x -> u(x / s)`: breakpoints scaled by `s`.
    pub fn dilate(&self, s: f64) -> StepFunction {
        StepFunction { breaks: self.breaks.iter().map(|b| b * s).collect(), values: self.values.clone() }
    }

    /// `∫ |u|^p dmu`.
    pub fn lp_mass(&self, p: f64, q: f64) -> f64 {
        self.values
            .iter()
            .zip(self.breaks.windows(2))
            .map(|(v, w)| v.abs().powf(p) * mu_float(w[0], w[1], q))
            .sum()
    }

    /// Whether any breakpoint lies strictly inside `(a, b)`.
    fn breaks_inside(&self, a: f64, b: f64) -> bool {
        self.breaks.iter().any(|x| *x > a && *x < b)
    }
}

/// `∫_a^b (1 + x^2)^{q/2} dx` by Gauss–Legendre in `x = sinh t`.
pub fn mu_float(a: f64, b: f64, q: f64) -> f64 {
    if q == 0.0 {
        return b - a;
    }
    let (ta, tb) = (a.asinh(), b.asinh());
    let h = 0.125f64.max((tb - ta) / 4096.0);
    Rule::panels(ta, tb, h).integrate(|t| t.cosh().powf(q + 1.0))
}

fn binomial(m: u32, k: u32) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(m - i) / BigInt::from(i + 1);
    }
    c
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// `∫_a^b (1 + x^2)^m dx` exactly.
fn mu_exact(a: &BigRational, b: &BigRational, m: u32) -> BigRational {
    let mut s = BigRational::zero();
    for k in 0..=m {
        let e = 2 * k as i32 + 1;
        let term = num_traits::pow(b.clone(), e as usize) - num_traits::pow(a.clone(), e as usize);
        s += term * BigRational::from_integer(binomial(m, k)) / BigRational::from_integer(BigInt::from(e));
    }
    s
}

/// Exact or floating comparisons of `∫_I |u| dmu` against `level mu(I)`.
trait Arith {
    type T: Clone;
    fn mu(&self, a: f64, b: f64) -> Self::T;
    fn mass(&self, u: &StepFunction, a: f64, b: f64) -> Self::T;
    /// `mass > level * measure`, strictly.
    fn exceeds(&self, mass: &Self::T, level: f64, measure: &Self::T) -> bool;
}

struct Exact {
    m: u32,
}

impl Arith for Exact {
    type T = BigRational;
    fn mu(&self, a: f64, b: f64) -> BigRational {
        mu_exact(&rat(a), &rat(b), self.m)
    }
    fn mass(&self, u: &StepFunction, a: f64, b: f64) -> BigRational {
        let mut s = BigRational::zero();
        for (v, w) in u.values.iter().zip(u.breaks.windows(2)) {
            let (lo, hi) = (w[0].max(a), w[1].min(b));
            if lo < hi && *v != 0.0 {
                s += rat(v.abs()) * self.mu(lo, hi);
            }
        }
        s
    }
    fn exceeds(&self, mass: &BigRational, level: f64, measure: &BigRational) -> bool {
        mass.cmp(&(rat(level) * measure)) == Ordering::Greater
    }
}

struct Float {
    q: f64,
}

impl Arith for Float {
    type T = f64;
    fn mu(&self, a: f64, b: f64) -> f64 {
        mu_float(a, b, self.q)
    }
    fn mass(&self, u: &StepFunction, a: f64, b: f64) -> f64 {
        let mut s = 0.0;
        for (v, w) in u.values.iter().zip(u.breaks.windows(2)) {
            let (lo, hi) = (w[0].max(a), w[1].min(b));
            if lo < hi && *v != 0.0 {
                s += v.abs() * self.mu(lo, hi);
            }
        }
        s
    }
    fn exceeds(&self, mass: &f64, level: f64, measure: &f64) -> bool {
        *mass > level * measure * (1.0 + FLOAT_TIE)
    }
}

fn exact_order(q: f64) -> Option<u32> {
    if (0.0..=64.0).contains(&q) && q.fract() == 0.0 && (q as u32) % 2 == 0 {
        Some(q as u32 / 2)
    } else {
        None
    }
}

/// Whether `<|u|>_{I, mu} > level`.
pub fn average_exceeds(u: &StepFunction, iv: &DyadicInterval, level: f64, q: f64) -> bool {
    fn go<A: Arith>(a: &A, u: &StepFunction, iv: &DyadicInterval, level: f64) -> bool {
        a.exceeds(&a.mass(u, iv.left(), iv.right()), level, &a.mu(iv.left(), iv.right()))
    }
    match exact_order(q) {
        Some(m) => go(&Exact { m }, u, iv, level),
        None => go(&Float { q }, u, iv, level),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    OneExponent,
    TwoExponent { p1: f64, p2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CZDecomposition {
    pub beta: f64,
    pub q: f64,
    /// Maximal intervals, ordered by `(n, j)`.
    pub intervals: Vec<DyadicInterval>,
    pub total_mu: f64,
    pub source: Source,
}

fn check_level(beta: f64, q: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(KreinError::BadParameter(format!("level beta = {beta} must be positive")));
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(KreinError::BadParameter(format!("exponent q = {q} must be nonnegative")));
    }
    Ok(())
}

/// Root scale `2^m` covering the support with average at most `beta`
/// (any interval with `mu(I) >= ||u||_{L^1_mu} / beta` qualifies).
fn root_scale(u: &StepFunction, beta: f64, q: f64) -> i32 {
    let extent = u.breaks[0].abs().max(u.breaks[u.breaks.len() - 1].abs());
    let need = (u.lp_mass(1.0, q) / beta).max(extent).max(1.0);
    need.log2().ceil() as i32 + 1
}

fn descend<A: Arith>(a: &A, u: &StepFunction, iv: DyadicInterval, beta: f64, left: u32, out: &mut Vec<DyadicInterval>) -> Result<()> {
    for c in iv.children() {
        let (l, r) = (c.left(), c.right());
        if a.exceeds(&a.mass(u, l, r), beta, &a.mu(l, r)) {
            out.push(c);
        } else if u.breaks_inside(l, r) {
            if left == 0 {
                return Err(KreinError::DepthExceeded { depth: c.n.max(0) as u32 });
            }
            descend(a, u, c, beta, left - 1, out)?;
        }
    }
    Ok(())
}

fn decompose_with<A: Arith>(a: &A, u: &StepFunction, beta: f64, q: f64, depth: u32) -> Result<Vec<DyadicInterval>> {
    let mut out = Vec::new();
    if u.is_zero() {
        return Ok(out);
    }
    let m = root_scale(u, beta, q);
    for root in [DyadicInterval::new(0, -m), DyadicInterval::new(-1, -m)] {
        debug_assert!(!a.exceeds(&a.mass(u, root.left(), root.right()), beta, &a.mu(root.left(), root.right())));
        if u.breaks_inside(root.left(), root.right()) {
            descend(a, u, root, beta, depth, &mut out)?;
        }
    }
    out.sort();
    Ok(out)
}

fn total_mu(intervals: &[DyadicInterval], q: f64) -> f64 {
    match exact_order(q) {
        Some(m) => intervals
            .iter()
            .map(|iv| Exact { m }.mu(iv.left(), iv.right()))
            .fold(BigRational::zero(), |s, v| s + v)
            .to_f64()
            .unwrap_or(f64::INFINITY),
        None => intervals.iter().map(|iv| mu_float(iv.left(), iv.right(), q)).sum(),
    }
}

/// Maximal dyadic intervals with `<|u|>_{I, mu} > beta`.
pub fn cz_decompose(u: &StepFunction, beta: f64, q: f64, depth: u32) -> Result<CZDecomposition> {
    check_level(beta, q)?;
    let intervals = match exact_order(q) {
        Some(m) => decompose_with(&Exact { m }, u, beta, q, depth)?,
        None => decompose_with(&Float { q }, u, beta, q, depth)?,
    };
    let total_mu = total_mu(&intervals, q);
    Ok(CZDecomposition { beta, q, intervals, total_mu, source: Source::OneExponent })
}

/// Keeps the intervals not contained in another one of the list.
pub fn maximal(mut list: Vec<DyadicInterval>) -> Vec<DyadicInterval> {
    list.sort();
    list.dedup();
    let keep: Vec<DyadicInterval> = list
        .iter()
        .filter(|iv| !list.iter().any(|o| o != *iv && o.contains(iv)))
        .cloned()
        .collect();
    keep
}

/// Two-exponent variant: decomposes `|u_i|^{p_i}` at `(beta/2)^{p_i}` and
/// keeps the maximal intervals of the union.
pub fn cz_decompose_split(u1: &StepFunction, u2: &StepFunction, p1: f64, p2: f64, beta: f64, q: f64, depth: u32) -> Result<CZDecomposition> {
    check_level(beta, q)?;
    if !(p1 >= 1.0 && p2 >= 1.0) {
        return Err(KreinError::BadParameter(format!("exponents ({p1}, {p2}) must be at least 1")));
    }
    let d1 = cz_decompose(&u1.abs_pow(p1), (0.5 * beta).powf(p1), q, depth)?;
    let d2 = cz_decompose(&u2.abs_pow(p2), (0.5 * beta).powf(p2), q, depth)?;
    let intervals = maximal(d1.intervals.into_iter().chain(d2.intervals).collect());
    let total_mu = total_mu(&intervals, q);
    Ok(CZDecomposition { beta, q, intervals, total_mu, source: Source::TwoExponent { p1, p2 } })
}

/// `<|u1 + u2|>_{K, mu} <= beta` on the parent `K` of every interval.
pub fn split_parents_bounded(dec: &CZDecomposition, u1: &StepFunction, u2: &StepFunction) -> bool {
    let u = u1.add(u2);
    dec.intervals.iter().all(|iv| !average_exceeds(&u, &iv.parent(), dec.beta, dec.q))
}

/// `C(p1, p2) beta^{-p2} (beta^{p2 - p1} ||u1||^{p1} + ||u2||^{p2})` with
/// `C = 2^{max(p1, p2)}`.
pub fn split_sum_bound(u1: &StepFunction, u2: &StepFunction, p1: f64, p2: f64, beta: f64, q: f64) -> f64 {
    let c = p1.max(p2).exp2();
    c * beta.powf(-p2) * (beta.powf(p2 - p1) * u1.lp_mass(p1, q) + u2.lp_mass(p2, q))
}

/// Smallest `D` with `<D>^q >= 100 L`.
pub fn flatness_threshold(l: f64, q: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let t = (100.0 * l).powf(2.0 / q) - 1.0;
    if t <= 0.0 {
        0.0
    } else {
        t.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CzReport {
    /// `{|u| > beta}` is covered by the intervals.
    pub containment: bool,
    /// Each interval has average above `beta`; its parent does not.
    pub selection: bool,
    /// No interval contains another.
    pub disjoint: bool,
    /// `Σ mu(I_j) <= ||u||_{L^1_mu} / beta`.
    pub sum_bound: bool,
}

impl CzReport {
    pub fn all(&self) -> bool {
        self.containment && self.selection && self.disjoint && self.sum_bound
    }
}

fn covered(a: f64, b: f64, ivs: &[DyadicInterval]) -> bool {
    let mut spans: Vec<(f64, f64)> = ivs.iter().map(|iv| (iv.left(), iv.right())).filter(|s| s.1 > a && s.0 < b).collect();
    spans.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut reach = a;
    for (l, r) in spans {
        if l > reach {
            return false;
        }
        reach = reach.max(r);
        if reach >= b {
            return true;
        }
    }
    reach >= b
}

pub fn cz_verify(dec: &CZDecomposition, u: &StepFunction) -> CzReport {
    let containment = u
        .values
        .iter()
        .zip(u.breaks.windows(2))
        .filter(|(v, _)| v.abs() > dec.beta)
        .all(|(_, w)| covered(w[0], w[1], &dec.intervals));
    let selection = dec
        .intervals
        .iter()
        .all(|iv| average_exceeds(u, iv, dec.beta, dec.q) && !average_exceeds(u, &iv.parent(), dec.beta, dec.q));
    let disjoint = dec
        .intervals
        .iter()
        .enumerate()
        .all(|(i, a)| dec.intervals.iter().enumerate().all(|(k, b)| i == k || !a.contains(b)));
    let sum_bound = match exact_order(dec.q) {
        Some(m) => {
            let ex = Exact { m };
            let lhs = dec.intervals.iter().fold(BigRational::zero(), |s, iv| s + ex.mu(iv.left(), iv.right()));
            let l1 = u
                .values
                .iter()
                .zip(u.breaks.windows(2))
                .fold(BigRational::zero(), |s, (v, w)| s + rat(v.abs()) * ex.mu(w[0], w[1]));
            lhs * rat(dec.beta) <= l1
        }
        None => dec.total_mu <= u.lp_mass(1.0, dec.q) / dec.beta * (1.0 + 1e-12),
    };
    CzReport { containment, selection, disjoint, sum_bound }
}

/// `mu([a, b])` in exact arithmetic for even integer `q`.
pub fn exact_measure(a: f64, b: f64, q: u32) -> BigRational {
    Exact { m: q / 2 }.mu(a, b)
}
