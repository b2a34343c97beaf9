//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite rule with `panels` equal panels of `order` points each.
pub fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * s;
    }
    total
}

/// Tensor-product composite rule over an axis-aligned box.
pub fn composite_box(
    f: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    panels: usize,
    order: usize,
) -> f64 {
    let (x, w) = gauss_legendre(order);
    let n = lower.len();
    let per_axis = panels * order;
    let mut nodes = vec![Vec::with_capacity(per_axis); n];
    let mut weights = vec![Vec::with_capacity(per_axis); n];
    for d in 0..n {
        let width = (upper[d] - lower[d]) / panels as f64;
        for k in 0..panels {
            let mid = lower[d] + (k as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes[d].push(mid + 0.5 * width * xi);
                weights[d].push(0.5 * width * wi);
            }
        }
    }
    let mut idx = vec![0usize; n];
    let mut pt = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut wt = 1.0;
        for d in 0..n {
            pt[d] = nodes[d][idx[d]];
            wt *= weights[d][idx[d]];
        }
        total += wt * f(&pt);
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return total;
            }
        }
    }
}
