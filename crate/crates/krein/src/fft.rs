//! Thin wrappers over rustfft: cached plans, unnormalized transforms and a
//! chirp-z evaluator for sums on shifted uniform frequency grids.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::sync::Arc;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse { p.plan_fft_inverse(n) } else { p.plan_fft_forward(n) }
    })
}

/// In-place `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub fn fft(x: &mut [C64]) {
    if x.len() > 1 {
        plan(x.len(), false).process(x);
    }
}

/// In-place inverse transform including the `1/n` factor.
pub fn ifft(x: &mut [C64]) {
    let n = x.len();
    if n > 1 {
        plan(n, true).process(x);
    }
    let s = 1.0 / n as f64;
    x.iter_mut().for_each(|v| *v *= s);
}

/// `y_j = sum_i x_i e^{-i (omega0 + j domega) i}` for `j < m`, by Bluestein.
pub fn chirp_sum(x: &[C64], omega0: f64, domega: f64, m: usize) -> Vec<C64> {
    let n = x.len();
    if n == 0 || m == 0 {
        return vec![C64::new(0.0, 0.0); m];
    }
    let len = (n + m - 1).next_power_of_two();
    // e^{i domega k^2 / 2}, phase reduced with exact integer k^2
    let chirp = |k: i64| C64::from_polar(1.0, 0.5 * domega * (k * k) as f64);
    let mut a = vec![C64::new(0.0, 0.0); len];
    for (i, v) in x.iter().enumerate() {
        a[i] = v * C64::from_polar(1.0, -omega0 * i as f64) * chirp(i as i64).conj();
    }
    let mut b = vec![C64::new(0.0, 0.0); len];
    for k in 0..m {
        b[k] = chirp(k as i64);
    }
    for k in 1..n {
        b[len - k] = chirp(k as i64);
    }
    fft(&mut a);
    fft(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    ifft(&mut a);
    (0..m).map(|j| a[j] * chirp(j as i64).conj()).collect()
}
