//! Brute-force maximality oracle for dyadic CZ decompositions, used by the
//! CZ acceptance criterion. Exact rational arithmetic, `q ∈ {0, 2}` only.

use krein::czkit::{DyadicInterval, StepFunction};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scales `2^-n` with `n` in `COARSEST..=finest` are scanned.
const COARSEST: i32 = -20;

fn q_rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite dyadic data")
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// `∫_a^b <x>^q dx`.
fn mu(a: &BigRational, b: &BigRational, q: u32) -> BigRational {
    match q {
        0 => b - a,
        2 => (b - a) + (b * b * b - a * a * a) / int(3),
        _ => panic!("oracle supports q = 0 and q = 2"),
    }
}

struct Scan {
    breaks: Vec<BigRational>,
    abs_values: Vec<BigRational>,
    beta: BigRational,
    q: u32,
}

impl Scan {
    fn new(u: &StepFunction, beta: f64, q: u32) -> Scan {
        Scan {
            breaks: u.breaks.iter().map(|&b| q_rational(b)).collect(),
            abs_values: u.values.iter().map(|v| q_rational(v.abs())).collect(),
            beta: q_rational(beta),
            q,
        }
    }

    /// Whether `∫_I |u| dmu > beta mu(I)` on `[j 2^-n, (j+1) 2^-n]`.
    fn heavy(&self, j: i64, n: i32) -> bool {
        let len = if n >= 0 { BigRational::new(BigInt::from(1), BigInt::from(1) << n as usize) } else { int(1i64 << (-n) as u32) };
        let a = int(j) * &len;
        let b = int(j + 1) * &len;
        let mut mass = int(0);
        for (k, v) in self.abs_values.iter().enumerate() {
            let lo = if self.breaks[k] > a { self.breaks[k].clone() } else { a.clone() };
            let hi = if self.breaks[k + 1] < b { self.breaks[k + 1].clone() } else { b.clone() };
            if lo < hi {
                mass += v * mu(&lo, &hi, self.q);
            }
        }
        mass > &self.beta * mu(&a, &b, self.q)
    }
}

/// Every heavy dyadic interval at scales `2^20 ..= 2^-finest` whose ancestors
/// up to scale `2^20` are all light. Breakpoints must lie on `2^-finest Z`.
pub fn maximal_heavy(u: &StepFunction, beta: f64, q: u32, finest: i32) -> Vec<DyadicInterval> {
    let scan = Scan::new(u, beta, q);
    let (lo, hi) = (u.breaks[0], u.breaks[u.breaks.len() - 1]);
    let mut out = Vec::new();
    for n in COARSEST..=finest {
        let len = (-(n as f64)).exp2();
        let first = (lo / len).floor() as i64;
        let last = (hi / len).ceil() as i64;
        for j in first..last {
            if !scan.heavy(j, n) {
                continue;
            }
            let maximal = (1..=(n - COARSEST)).all(|up| !scan.heavy(j >> up, n - up));
            if maximal {
                out.push(DyadicInterval::new(j, n));
            }
        }
    }
    out.sort();
    out
}

/// Up to 16 pieces, breakpoints on `2^-4 Z ∩ [-8, 8]`, values on `2^-2 Z ∩ [-3, 3]`.
pub fn random_step(rng: &mut ChaCha8Rng) -> StepFunction {
    loop {
        let pieces = rng.gen_range(1..=16usize);
        let mut knots: Vec<i64> = (0..=pieces).map(|_| rng.gen_range(-128..=128)).collect();
        knots.sort_unstable();
        knots.dedup();
        if knots.len() < 2 {
            continue;
        }
        let breaks = knots.iter().map(|&k| k as f64 / 16.0).collect::<Vec<_>>();
        let values = (1..breaks.len()).map(|_| rng.gen_range(-12..=12) as f64 / 4.0).collect();
        return StepFunction::new(breaks, values).expect("valid by construction");
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
