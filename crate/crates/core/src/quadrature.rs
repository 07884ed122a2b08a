//! Gauss-Legendre rules and a globally adaptive panel integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss-Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|wi| wi * half).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveResult {
    pub value: Complex64,
    pub est_error: f64,
    pub panels: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Legendre integration of a complex integrand.
///
/// Each panel is estimated by an `order`-point rule on the whole panel and on
/// its two halves; the halves give the value, the difference the error. The
/// panel with the largest error is bisected until the summed error drops
/// below `abs_tol` (or a few ulps of the integral) or `max_panels` is hit.
/// `breakpoints` seed the initial partition, e.g. at integrable singularities.
pub struct AdaptiveGaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl AdaptiveGaussLegendre {
    pub fn new(order: usize, abs_tol: f64, max_panels: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        AdaptiveGaussLegendre {
            nodes,
            weights,
            abs_tol,
            max_panels: max_panels.max(1),
        }
    }

    fn rule<F: Fn(f64) -> Complex64>(&self, f: &F, a: f64, b: f64) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    fn panel<F: Fn(f64) -> Complex64>(&self, f: &F, a: f64, b: f64) -> Panel {
        let m = 0.5 * (a + b);
        let whole = self.rule(f, a, b);
        let halves = self.rule(f, a, m) + self.rule(f, m, b);
        Panel {
            a,
            b,
            value: halves,
            error: (whole - halves).norm(),
        }
    }

    pub fn integrate<F: Fn(f64) -> Complex64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breakpoints: &[f64],
    ) -> AdaptiveResult {
        let mut cuts: Vec<f64> = std::iter::once(a)
            .chain(breakpoints.iter().copied().filter(|&x| x > a && x < b))
            .chain(std::iter::once(b))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut heap: BinaryHeap<Panel> = cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.panel(&f, w[0], w[1]))
            .collect();

        loop {
            let total_err: f64 = heap.iter().map(|p| p.error).sum();
            let magnitude: f64 = heap.iter().map(|p| p.value.norm()).sum();
            let floor = 8.0 * f64::EPSILON * magnitude;
            if total_err <= self.abs_tol.max(floor) {
                return self.finish(heap, total_err, true);
            }
            if heap.len() >= self.max_panels {
                return self.finish(heap, total_err, false);
            }
            let worst = match heap.pop() {
                Some(p) => p,
                None => return self.finish(heap, 0.0, true),
            };
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                // panel is at floating-point resolution; nothing left to refine
                heap.push(Panel { error: 0.0, ..worst });
                continue;
            }
            heap.push(self.panel(&f, worst.a, m));
            heap.push(self.panel(&f, m, worst.b));
        }
    }

    fn finish(&self, heap: BinaryHeap<Panel>, est_error: f64, converged: bool) -> AdaptiveResult {
        let panels = heap.len();
        let mut parts: Vec<Panel> = heap.into_vec();
        // deterministic summation order
        parts.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = parts.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.value);
        AdaptiveResult {
            value,
            est_error,
            panels,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 33, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = AdaptiveGaussLegendre::new(20, 1e-12, 500);
        // int_0^1 x^(-1/2) dx = 2
        let r = q.integrate(|x| Complex64::new(x.powf(-0.5), 0.0), 0.0, 1.0, &[]);
        assert!(r.converged);
        assert!((r.value.re - 2.0).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn adaptive_log_singularity_at_breakpoint() {
        let q = AdaptiveGaussLegendre::new(20, 1e-13, 500);
        // int_0^2 ln|x-1| dx = -2
        let r = q.integrate(|x| Complex64::new((x - 1.0).abs().ln(), 0.0), 0.0, 2.0, &[1.0]);
        assert!((r.value.re + 2.0).abs() < 1e-11, "{:?}", r);
    }

    #[test]
    fn adaptive_complex_integrand() {
        let q = AdaptiveGaussLegendre::new(20, 1e-13, 256);
        // int_0^1 dx / (x - i) = ln(1 - i) - ln(-i)
        let i = Complex64::new(0.0, 1.0);
        let r = q.integrate(|x| 1.0 / (x - i), 0.0, 1.0, &[]);
        let exact = (1.0 - i).ln() - (-i).ln();
        assert!((r.value - exact).norm() < 1e-13);
    }
}
