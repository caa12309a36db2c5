//! Gauss–Legendre rules, composite and adaptive drivers, and an adaptive
//! Simpson rule kept as an independent oracle family.

use std::sync::OnceLock;

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on [−1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
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
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>() * h
    }

    pub fn integrate_c<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            s += f(c + h * x) * w;
        }
        s * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 20-point rule.
pub fn gl20() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(20))
}

/// Shared 10-point rule, the coarse partner of `gl20` in adaptive refinement.
pub fn gl10() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(10))
}

/// Composite rule with `panels` equal panels.
pub fn composite_c<F: FnMut(f64) -> Complex64>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, mut f: F) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + h * k as f64;
        s += rule.integrate_c(lo, lo + h, &mut f);
    }
    s
}

pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        s += rule.integrate(lo, lo + h, &mut f);
    }
    s
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveResult {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive bisection comparing 10- and 20-point Gauss–Legendre on each panel.
pub fn adaptive_c<F: FnMut(f64) -> Complex64>(a: f64, b: f64, tol: f64, max_depth: u32, mut f: F) -> AdaptiveResult {
    fn rec<F: FnMut(f64) -> Complex64>(a: f64, b: f64, tol: f64, depth: u32, f: &mut F, acc: &mut AdaptiveResult) {
        let fine = gl20().integrate_c(a, b, &mut *f);
        let coarse = gl10().integrate_c(a, b, &mut *f);
        let err = (fine - coarse).norm();
        // Halving the tolerance per level eventually asks for less than the
        // rounding error of the panel itself.
        let tol = tol.max(8.0 * f64::EPSILON * fine.norm());
        if err <= tol || depth == 0 {
            acc.value += fine;
            acc.error += err;
            return;
        }
        let m = 0.5 * (a + b);
        rec(a, m, 0.5 * tol, depth - 1, f, acc);
        rec(m, b, 0.5 * tol, depth - 1, f, acc);
    }
    // Requests below the roundoff level of ∫|f| cannot be met; cap them there.
    let scale = composite(gl20(), a, b, 4, |x| f(x).norm());
    let tol = tol.max(16.0 * f64::EPSILON * scale);
    let mut acc = AdaptiveResult { value: Complex64::new(0.0, 0.0), error: 0.0, converged: true };
    rec(a, b, tol, max_depth, &mut f, &mut acc);
    // Panels that hit the depth limit count against the total, not individually.
    acc.converged = acc.error <= tol;
    acc
}

pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, max_depth: u32, mut f: F) -> f64 {
    adaptive_c(a, b, tol, max_depth, |x| Complex64::new(f(x), 0.0)).value.re
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson_c<F: FnMut(f64) -> Complex64>(a: f64, b: f64, tol: f64, max_depth: u32, mut f: F) -> Complex64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: FnMut(f64) -> Complex64>(
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
        f: &mut F,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
        let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
        let d = left + right - whole;
        if depth == 0 || d.norm() <= 15.0 * tol {
            return left + right + d / 15.0;
        }
        rec(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, f)
            + rec(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, f)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    rec(a, b, fa, fm, fb, whole, tol, max_depth, &mut f)
}

pub fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, max_depth: u32, mut f: F) -> f64 {
    simpson_c(a, b, tol, max_depth, |x| Complex64::new(f(x), 0.0)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 10, 20, 33] {
            let r = GaussLegendre::new(n);
            assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(10);
        let v = r.integrate(0.0, 2.0, |x| x.powi(19));
        assert_relative_eq!(v, 2f64.powi(20) / 20.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_sqrt_endpoint() {
        let v = adaptive(0.0, 1.0, 1e-12, 40, |x| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
        let w = simpson(0.0, 1.0, 1e-12, 50, |x| x.sqrt());
        assert!((w - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn composite_matches_closed_form() {
        let v = composite(gl20(), 0.0, 10.0, 8, |x| (-x).exp());
        assert_relative_eq!(v, 1.0 - (-10f64).exp(), max_relative = 1e-14);
    }
}
