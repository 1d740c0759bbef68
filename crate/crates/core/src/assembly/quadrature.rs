use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_1d(order: usize) -> Result<Vec<(f64, f64)>> {
    if !(1..=10).contains(&order) {
        return Err(Error::QuadratureOrder(order));
    }
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor-product Gauss-Legendre rule on `[0, 1]^2`, exact for polynomials of
/// degree `2 * order - 1` in each variable.
pub fn gauss_rule(order: usize) -> Result<Vec<([f64; 2], f64)>> {
    let line = gauss_legendre_1d(order)?;
    Ok(line
        .iter()
        .flat_map(|&(y, wy)| line.iter().map(move |&(x, wx)| ([x, y], wx * wy)))
        .collect())
}
