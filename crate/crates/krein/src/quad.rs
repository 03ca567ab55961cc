//! Quadrature building blocks: Gauss rules, graded panels for endpoint power
//! singularities, Gregory end corrections, finite-difference stencils and the
//! cubic Filon rule used for every oscillatory integral over `[0, r]`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::sync::OnceLock;

pub const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Gauss–Jacobi rule for `∫_0^1 t^beta f(t) dt` (Golub–Welsch).
pub fn gauss_jacobi01(n: usize, beta: f64) -> (Vec<f64>, Vec<f64>) {
    // weight (1-x)^0 (1+x)^beta on [-1,1]
    let (a, b) = (0.0f64, beta);
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let alpha = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        j[(k, k)] = alpha;
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let bet = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            j[(k, k + 1)] = bet.sqrt();
            j[(k + 1, k)] = bet.sqrt();
        }
    }
    let eig = SymmetricEigen::new(j);
    let mu0 = 1.0 / (beta + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| ((eig.eigenvalues[k] + 1.0) / 2.0, mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    pairs.into_iter().unzip()
}

/// A list of nodes and weights approximating `∫ f`.
#[derive(Debug, Clone, Default)]
pub struct Rule {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn append(&mut self, other: Rule) {
        self.x.extend(other.x);
        self.w.extend(other.w);
    }

    /// One Gauss–Legendre panel.
    pub fn panel(a: f64, b: f64) -> Rule {
        let (gx, gw) = gl16();
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        Rule { x: gx.iter().map(|t| c + h * t).collect(), w: gw.iter().map(|v| h * v).collect() }
    }

    /// Uniform Gauss–Legendre panels no longer than `h_max`.
    pub fn panels(a: f64, b: f64, h_max: f64) -> Rule {
        let mut r = Rule::default();
        if b <= a {
            return r;
        }
        let m = ((b - a) / h_max).ceil().max(1.0) as usize;
        let h = (b - a) / m as f64;
        for i in 0..m {
            r.append(Rule::panel(a + i as f64 * h, a + (i + 1) as f64 * h));
        }
        r
    }

    /// Panels geometrically refined toward one end of `[a, b]`.
    ///
    /// With `exponent = Some(e)` the innermost panel is a Gauss–Jacobi panel,
    /// exact for integrands `|t - end|^e` times a polynomial. With `None` the
    /// grading goes `levels` deep and the innermost sliver is dropped, which
    /// suits logarithmic singularities.
    pub fn graded(a: f64, b: f64, at_left: bool, exponent: Option<f64>, levels: usize, h_max: f64) -> Rule {
        let mut r = Rule::default();
        if b <= a {
            return r;
        }
        let len = b - a;
        let map = |d: f64| if at_left { a + d } else { b - d };
        let mut outer = len;
        // uniform panels away from the singular end
        let near = len.min(h_max);
        if len > near {
            let far = if at_left { Rule::panels(a + near, b, h_max) } else { Rule::panels(a, b - near, h_max) };
            r.append(far);
            outer = near;
        }
        // stop before the nodes collapse onto the end point
        let floor = 1e-12 * map(0.0).abs();
        for _ in 0..levels {
            let inner = outer / 2.0;
            if exponent.is_some() && inner < floor {
                break;
            }
            let p = Rule::panel(map(inner).min(map(outer)), map(inner).max(map(outer)));
            r.append(p);
            outer = inner;
        }
        if let Some(e) = exponent {
            let (tx, tw) = gauss_jacobi01(GL_ORDER, e);
            let end = map(0.0);
            for (t, wt) in tx.iter().zip(&tw) {
                let x = map(t * outer);
                // the node as stored, not t * outer, is what the integrand sees
                let d = (x - end).abs() / outer;
                r.x.push(x);
                r.w.push(wt * outer / d.powf(e));
            }
        }
        r
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(*x)).sum()
    }

    pub fn integrate_c<F: Fn(f64) -> C64>(&self, f: F) -> C64 {
        self.x.iter().zip(&self.w).map(|(x, w)| f(*x) * *w).sum()
    }
}

/// Nyström weights on `n + 1` equispaced nodes of `[0, n]` (multiply by the step).
///
/// Order-4 Gregory end corrections for `n >= 5`; closed Newton–Cotes
/// (trapezoid, Simpson, 3/8, Boole) below that.
pub fn gregory_weights(n: usize) -> Vec<f64> {
    match n {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => [7.0, 32.0, 12.0, 32.0, 7.0].iter().map(|v| v * 2.0 / 45.0).collect(),
        _ => {
            let mut w = vec![1.0; n + 1];
            for (k, v) in [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0].iter().enumerate() {
                w[k] = *v;
                w[n - k] = *v;
            }
            w
        }
    }
}

/// End profile of the order-6 Gregory rule (first five weights of a panel).
pub const GREGORY6_END: [f64; 5] = [95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0, 793.0 / 720.0, 157.0 / 160.0];

/// Fornberg weights for the `deriv`-th derivative at `x0` from values at `xs`.
pub fn fornberg(x0: f64, xs: &[f64], deriv: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[deriv]).collect()
}

/// Monomial coefficients (in the local cell variable `u`) of the Lagrange
/// interpolant through `nodes` (local positions), as a matrix acting on values.
fn lagrange_monomials(nodes: &[f64]) -> Vec<Vec<f64>> {
    let m = nodes.len();
    let mut out = vec![vec![0.0; m]; m]; // out[k][j]: coefficient of u^k from value j
    for j in 0..m {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (i, xi) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (k, c) in poly.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * xi;
            }
            poly = next;
            denom *= nodes[j] - xi;
        }
        for k in 0..m {
            out[k][j] = poly[k] / denom;
        }
    }
    out
}

/// Piecewise-cubic Lagrange representation of samples on a uniform grid:
/// cell `i` covers `[i dr, (i+1) dr]` and carries coefficients of `u^k`.
#[derive(Debug, Clone)]
pub struct CubicCells {
    pub dr: f64,
    pub coeffs: Vec<[C64; 4]>,
}

impl CubicCells {
    pub fn new(g: &[C64], dr: f64) -> CubicCells {
        let n = g.len().saturating_sub(1);
        let mut coeffs = Vec::with_capacity(n);
        if n == 0 {
            return CubicCells { dr, coeffs };
        }
        let width = (n + 1).min(4);
        let mats: Vec<(isize, Vec<Vec<f64>>)> = (0..width as isize)
            .map(|o| {
                let nodes: Vec<f64> = (0..width).map(|m| (m as isize - o) as f64).collect();
                (o, lagrange_monomials(&nodes))
            })
            .collect();
        for i in 0..n {
            let j = if width < 4 { 0 } else { (i as isize - 1).clamp(0, n as isize - 3) as usize };
            let o = i - j;
            let mat = &mats[o].1;
            let mut a = [C64::new(0.0, 0.0); 4];
            for (k, ak) in a.iter_mut().enumerate().take(width) {
                for m in 0..width {
                    *ak += g[j + m] * mat[k][m];
                }
            }
            coeffs.push(a);
        }
        CubicCells { dr, coeffs }
    }

    pub fn cells(&self) -> usize {
        self.coeffs.len()
    }

    /// `∫_0^{n dr} p(s) e^{i sign lambda s} ds` by exact moments of each cubic.
    pub fn transform(&self, lambda: f64, sign: f64) -> C64 {
        let theta = sign * lambda * self.dr;
        let mu = filon_moments(theta);
        let step = C64::from_polar(1.0, theta);
        let mut ph = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (i, a) in self.coeffs.iter().enumerate() {
            if i % 64 == 0 {
                ph = C64::from_polar(1.0, theta * i as f64);
            }
            acc += ph * (a[0] * mu[0] + a[1] * mu[1] + a[2] * mu[2] + a[3] * mu[3]);
            ph *= step;
        }
        acc * self.dr
    }

    /// Running integral `∫_0^{s_i} p`, one value per node.
    pub fn cumulative(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        let mut acc = C64::new(0.0, 0.0);
        out.push(acc);
        for a in &self.coeffs {
            acc += (a[0] + a[1] / 2.0 + a[2] / 3.0 + a[3] / 4.0) * self.dr;
            out.push(acc);
        }
        out
    }
}

/// `mu_k(theta) = ∫_0^1 u^k e^{i theta u} du` for k = 0..3.
pub fn filon_moments(theta: f64) -> [C64; 4] {
    let mut mu = [C64::new(0.0, 0.0); 4];
    if theta.abs() < 1.0 {
        let it = C64::new(0.0, theta);
        for (k, m) in mu.iter_mut().enumerate() {
            let mut term = C64::new(1.0, 0.0);
            let mut s = C64::new(0.0, 0.0);
            for j in 0..30 {
                s += term / (j + k + 1) as f64;
                term = term * it / (j + 1) as f64;
            }
            *m = s;
        }
    } else {
        let e = C64::from_polar(1.0, theta);
        let it = C64::new(0.0, theta);
        mu[0] = (e - 1.0) / it;
        for k in 1..4 {
            mu[k] = (e - mu[k - 1] * k as f64) / it;
        }
    }
    mu
}
