//! Small numerical kernels: deterministic summation, interpolation, sampled-data integration
//! and least-squares line fits.

/// `a, a + h, …, b` with the step count rounded so the last point is exactly `b`.
pub fn uniform_grid(a: f64, b: f64, h: f64) -> Vec<f64> {
    let n = ((b - a) / h).round().max(1.0) as usize;
    (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect()
}

/// Pairwise (cascade) summation with a fixed reduction tree, so results depend only on the
/// order of the input and not on how callers chunk it.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if v.len() <= LEAF {
        let mut acc = 0.0;
        for x in v {
            acc += x;
        }
        acc
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

/// Dot product evaluated with [`pairwise_sum`].
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prod)
}

/// Lagrange basis weights for interpolating at `x` through the nodes `xs`.
pub fn lagrange_weights<const K: usize>(xs: &[f64; K], x: f64) -> [f64; K] {
    let mut w = [1.0; K];
    for (j, wj) in w.iter_mut().enumerate() {
        for (m, xm) in xs.iter().enumerate() {
            if m != j {
                *wj *= (x - xm) / (xs[j] - xm);
            }
        }
    }
    w
}

/// Value and first derivative weights of the cubic through four equispaced nodes at
/// offsets `-1, 0, 1, 2` (in units of the spacing), evaluated at offset `xi ∈ [0, 1]`.
pub fn cubic_equispaced(xi: f64) -> ([f64; 4], [f64; 4]) {
    let (a, b, c, d) = (xi + 1.0, xi, xi - 1.0, xi - 2.0);
    let val = [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0];
    let der = [
        -(c * d + b * d + b * c) / 6.0,
        (c * d + a * d + a * c) / 2.0,
        -(b * d + a * d + a * b) / 2.0,
        (b * c + a * c + a * b) / 6.0,
    ];
    (val, der)
}

/// Composite trapezoid rule on sampled data.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    let parts: Vec<f64> = x.windows(2).zip(f.windows(2)).map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1])).collect();
    pairwise_sum(&parts)
}

/// Integrals of sampled data over each interval `[x_i, x_{i+1}]`, using the cubic through the
/// four nearest samples (fourth order for smooth data). Falls back to lower order when fewer
/// than four samples exist.
pub fn interval_integrals(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (x[i], x[i + 1]);
        if n < 4 {
            out.push(0.5 * (b - a) * (f[i] + f[i + 1]));
            continue;
        }
        let start = i.saturating_sub(1).min(n - 4);
        let xs = [x[start], x[start + 1], x[start + 2], x[start + 3]];
        let fs = [f[start], f[start + 1], f[start + 2], f[start + 3]];
        // Three-point Gauss-Legendre on [a, b] integrates the cubic exactly.
        let g = (0.6_f64).sqrt();
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (t, wt) in [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)] {
            let lw = lagrange_weights(&xs, m + h * t);
            acc += wt * (0..4).map(|j| lw[j] * fs[j]).sum::<f64>();
        }
        out.push(h * acc);
    }
    out
}

/// `tail[i] = ∫_{x_i}^{x_last} f`, computed from [`interval_integrals`] by a backward sweep.
pub fn cumulative_tail(x: &[f64], f: &[f64]) -> Vec<f64> {
    let parts = interval_integrals(x, f);
    let mut tail = vec![0.0; x.len()];
    for i in (0..parts.len()).rev() {
        tail[i] = tail[i + 1] + parts[i];
    }
    tail
}

/// `∫_{x_i + lo}^{x_i + hi} f` for every sample `i` whose window lies inside the data, as
/// `(i, value)` pairs. Window ends between samples are handled by linear interpolation of the
/// cumulative integral.
pub fn window_integrals(x: &[f64], f: &[f64], lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let tail = cumulative_tail(x, f);
    let (first, last) = match (x.first(), x.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Vec::new(),
    };
    let tol = 1e-9;
    let tail_at = |t: f64| -> f64 {
        let j = x.partition_point(|v| *v < t - tol);
        if j >= x.len() {
            0.0
        } else if j == 0 || (x[j] - t).abs() < tol {
            tail[j]
        } else {
            let th = (t - x[j - 1]) / (x[j] - x[j - 1]);
            tail[j - 1] + th * (tail[j] - tail[j - 1])
        }
    };
    x.iter()
        .enumerate()
        .filter(|(_, xi)| **xi + lo >= first - tol && **xi + hi <= last + tol)
        .map(|(i, xi)| (i, tail_at(xi + lo) - tail_at(xi + hi)))
        .collect()
}

/// Ordinary least-squares line `y ≈ a + b x`; returns `(a, b, ssr, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let sxx: Vec<f64> = x.iter().map(|v| (v - mx) * (v - mx)).collect();
    let sxy: Vec<f64> = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).collect();
    let syy: Vec<f64> = y.iter().map(|v| (v - my) * (v - my)).collect();
    let (sxx, sxy, syy) = (pairwise_sum(&sxx), pairwise_sum(&sxy), pairwise_sum(&syy));
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res: Vec<f64> = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).collect();
    let ssr = pairwise_sum(&res);
    let r2 = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    (a, b, ssr, r2)
}

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..max_iter {
        if (hi - lo).abs() <= tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let f = |x: f64| 2.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        let df = |x: f64| -1.0 + x - 0.75 * x * x;
        for xi in [0.0, 0.3, 0.77, 1.0] {
            let (v, d) = cubic_equispaced(xi);
            let vals = [f(-1.0), f(0.0), f(1.0), f(2.0)];
            let iv: f64 = (0..4).map(|j| v[j] * vals[j]).sum();
            let id: f64 = (0..4).map(|j| d[j] * vals[j]).sum();
            assert!((iv - f(xi)).abs() < 1e-13);
            assert!((id - df(xi)).abs() < 1e-13);
        }
    }

    #[test]
    fn tail_integral_exact_for_cubics() {
        let x: Vec<f64> = (0..11).map(|i| 0.1 * i as f64 + 0.03 * ((i % 3) as f64)).collect();
        let f: Vec<f64> = x.iter().map(|v| v * v * v - v).collect();
        let tail = cumulative_tail(&x, &f);
        let prim = |v: f64| v.powi(4) / 4.0 - v * v / 2.0;
        for i in 0..x.len() {
            assert!((tail[i] - (prim(x[10]) - prim(x[i]))).abs() < 1e-13);
        }
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (a, b, ssr, r2) = linear_fit(&x, &y);
        assert!((a - 1.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14 && ssr < 1e-25 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_section(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
