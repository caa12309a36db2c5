//! Modified Bessel function K₁ on the positive real axis.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("K1 requires x > 0, got {0}")]
    Domain(f64),
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// K₁(x) with relative error below 1e-12.
///
/// Small arguments use the ascending series with the logarithmic term, larger
/// ones the trapezoid rule on ∫₀^∞ e^{−x cosh t} cosh t dt, which converges
/// geometrically because the integrand is entire in t.
pub fn bessel_k1(x: f64) -> Result<f64, BesselError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(BesselError::Domain(x));
    }
    if x <= 2.0 {
        Ok(k1_series(x))
    } else {
        Ok(k1_trapezoid(x))
    }
}

/// Infallible variant for callers that already guarantee x > 0.
pub fn k1(x: f64) -> f64 {
    bessel_k1(x).expect("K1 argument must be positive")
}

fn k1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    // I₁(x) = (x/2) Σ y^k / (k!(k+1)!)
    let mut term = 0.5 * x;
    let mut i1 = 0.0;
    // Σ (ψ(k+1)+ψ(k+2)) y^k / (k!(k+1)!)
    let mut t = 1.0;
    let mut s = 0.0;
    let mut h = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term *= y / (kf * (kf + 1.0));
            t *= y / (kf * (kf + 1.0));
            h += 1.0 / kf;
        }
        i1 += term;
        let psi1 = -EULER_GAMMA + h;
        let psi2 = psi1 + 1.0 / (kf + 1.0);
        s += (psi1 + psi2) * t;
        if t < 1e-18 * s.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * s
}

fn k1_trapezoid(x: f64) -> f64 {
    let h = 0.125;
    let mut sum = 0.5 * (-x).exp();
    let mut k = 1;
    loop {
        let t = h * k as f64;
        let c = t.cosh();
        let v = (-x * c).exp() * c;
        sum += v;
        if v < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    h * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    fn oracle(x: f64) -> f64 {
        let tmax = (2.0 * 60.0 / x).ln().max(1.0) + 2.0;
        (-x).exp() * simpson(0.0, tmax, 1e-15, 50, |t| (-x * (t.cosh() - 1.0)).exp() * t.cosh())
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(bessel_k1(0.0).is_err());
        assert!(bessel_k1(-1.0).is_err());
    }

    #[test]
    fn reference_value() {
        let v = bessel_k1(1.0).unwrap();
        assert!((v - 0.601_907_230_197_234_6).abs() < 1e-13);
        assert!((v - oracle(1.0)).abs() < 1e-10);
    }

    #[test]
    fn small_argument_limit() {
        let x = 1e-4;
        let v = x * bessel_k1(x).unwrap();
        assert!(v <= 1.0 && v >= 1.0 - 1e-3);
    }

    #[test]
    fn large_argument_bound() {
        assert!(bessel_k1(10.0).unwrap() < (-10f64).exp());
    }

    #[test]
    fn branches_agree_with_oracle() {
        for &x in &[0.05, 0.3, 1.7, 2.0, 2.01, 3.5, 8.0, 25.0] {
            let v = bessel_k1(x).unwrap();
            let o = oracle(x);
            assert!(((v - o) / o).abs() < 1e-11, "x={x}: {v} vs {o}");
        }
        // The two evaluation methods meet at x = 2.
        let a = k1_series(2.0);
        let b = k1_trapezoid(2.0);
        assert!(((a - b) / b).abs() < 1e-13);
    }
}
