//! Small numerical helpers shared across modules: compensated summation,
//! Gauss-Legendre rules, least-squares slope fits, and Richardson tableaus.

use num_complex::Complex64;

/// Kahan-compensated sum. Deterministic for a fixed iteration order and
/// accurate to a few ulps regardless of term count.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for t in terms {
        let y = t - carry;
        let s = sum + y;
        carry = (s - sum) - y;
        sum = s;
    }
    sum
}

/// Compensated sum for complex terms (component-wise Kahan).
pub fn kahan_sum_complex<I: IntoIterator<Item = Complex64>>(terms: I) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut carry = Complex64::new(0.0, 0.0);
    for t in terms {
        let y = t - carry;
        let s = sum + y;
        carry = (s - sum) - y;
        sum = s;
    }
    sum
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence. Exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P'_n(x) via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = if n == 1 {
                1.0
            } else {
                n as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        // Weight at x = 0 from the recurrence at the midpoint.
        let mut p0 = 1.0;
        let mut p1: f64 = 0.0;
        for j in 2..=n {
            let jf = j as f64;
            let p2 = -(jf - 1.0) * p0 / jf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * p0; // P'_n(0) = n * P_{n-1}(0)
        weights[n / 2] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Fixed-order Gauss-Legendre integral of `f` on `[a, b]`.
pub fn gl_integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, order: usize, mut f: F) -> f64 {
    if a == b {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    kahan_sum(
        xs.iter()
            .zip(ws.iter())
            .map(|(&x, &w)| w * half * f(mid + half * x)),
    )
}

/// Complex-valued Gauss-Legendre integral of `f` on `[a, b]`.
pub fn gl_integrate_complex<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    order: usize,
    mut f: F,
) -> Complex64 {
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    let (xs, ws) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    kahan_sum_complex(
        xs.iter()
            .zip(ws.iter())
            .map(|(&x, &w)| f(mid + half * x) * (w * half)),
    )
}

/// Adaptive composite quadrature by panel doubling: integrates `f` on
/// `[a, b]` with composite Gauss-Legendre rules, doubling the panel count
/// until two successive refinements differ by less than `tol`.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
    f: F,
) -> Option<f64> {
    let order = 8;
    let mut panels = 8;
    let mut prev = composite_gl(a, b, panels, order, &f);
    while panels <= max_panels {
        panels *= 2;
        let cur = composite_gl(a, b, panels, order, &f);
        if (cur - prev).abs() < tol * (1.0 + cur.abs()) {
            return Some(cur);
        }
        prev = cur;
    }
    None
}

fn composite_gl<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, order: usize, f: &F) -> f64 {
    let h = (b - a) / panels as f64;
    kahan_sum((0..panels).map(|j| {
        let lo = a + j as f64 * h;
        gl_integrate(lo, lo + h, order, f)
    }))
}

/// Least-squares fit of `y = slope * x + intercept`. Returns
/// `(slope, intercept, rms_residual)`; `None` if fewer than two points.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let sx = kahan_sum(points.iter().map(|p| p.0));
    let sy = kahan_sum(points.iter().map(|p| p.1));
    let mx = sx / nf;
    let my = sy / nf;
    let sxx = kahan_sum(points.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    let sxy = kahan_sum(points.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (kahan_sum(points.iter().map(|p| {
        let r = p.1 - (slope * p.0 + intercept);
        r * r
    })) / nf)
        .sqrt();
    Some((slope, intercept, rms))
}

/// Slope of `log y` against `log x`. Points with non-positive `y` are
/// dropped; returns `None` if fewer than two survive.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    linear_fit(&logs)
}

/// Result of a Richardson extrapolation pass.
#[derive(Debug, Clone)]
pub struct Extrapolation {
    /// Best available estimate (deepest converged tableau entry).
    pub value: Complex64,
    /// Difference between the last two diagonal entries.
    pub last_delta: f64,
    /// Whether the requested tolerance was met.
    pub converged: bool,
}

/// Richardson extrapolation for estimates `d(h_j)` with `h_j = h_0 * 2^{-j}`
/// and an error expansion in integer powers of `h`. The tableau entry
/// `T[j][m]` eliminates orders `h, ..., h^m`.
pub fn richardson(estimates: &[Complex64], tol: f64) -> Extrapolation {
    assert!(!estimates.is_empty());
    let n = estimates.len();
    let mut table: Vec<Vec<Complex64>> = vec![estimates.to_vec()];
    for m in 1..n {
        let factor = 2f64.powi(m as i32);
        let prev = &table[m - 1];
        let row: Vec<Complex64> = (m..n)
            .map(|j| (prev[j - m + 1] * factor - prev[j - m]) / (factor - 1.0))
            .collect();
        table.push(row);
    }
    let diag: Vec<Complex64> = (0..n).map(|m| table[m][table[m].len() - 1]).collect();
    let mut value = diag[0];
    let mut last_delta = f64::INFINITY;
    let mut converged = false;
    for w in diag.windows(2) {
        let delta = (w[1] - w[0]).norm();
        // Stop deepening once rounding noise dominates.
        if delta > 4.0 * last_delta && converged {
            break;
        }
        value = w[1];
        last_delta = delta;
        if delta < tol * (1.0 + value.norm()) {
            converged = true;
        }
    }
    Extrapolation {
        value,
        last_delta,
        converged,
    }
}

/// Monotone cubic (Fritsch-Carlson) interpolant on strictly increasing
/// sample points. Shape-preserving: no overshoot between samples.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert!(xs.len() == ys.len() && xs.len() >= 2);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        let n = xs.len();
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                ds[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        ds[0] = edge_slope(h[0], if n > 2 { h[1] } else { h[0] }, delta[0], if n > 2 { delta[1] } else { delta[0] });
        ds[n - 1] = edge_slope(
            h[n - 2],
            if n > 2 { h[n - 3] } else { h[n - 2] },
            delta[n - 2],
            if n > 2 { delta[n - 3] } else { delta[n - 2] },
        );
        MonotoneCubic { xs, ys, ds }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        // Clamp to the boundary cubic outside the sample hull.
        let i = if x <= self.xs[0] {
            0
        } else if x >= self.xs[n - 1] {
            n - 2
        } else {
            self.xs.partition_point(|&p| p <= x) - 1
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i], self.ds[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * h * (t3 - 2.0 * t2 + t)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + d1 * h * (t3 - t2)
    }
}

/// One-sided three-point end slope with the Fritsch-Carlson limiter.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// sin(x)/x with a series branch near zero to avoid cancellation.
/// Relative accuracy ~1e-16 on the series branch.
pub fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
