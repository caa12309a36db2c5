//! Ooguri–Vafa Darboux coordinates and metric.
//!
//! Covers the semiflat electric coordinate, the one-step magnetic coordinate
//! by quadrature, its continuation around a = 0 and its limit on the singular
//! fiber. It also covers the Gibbons–Hawking potential and connection, and the
//! classical and generalized metrics near the nodal fiber.
//!
//! Conventions: Z_e = a, and the rays are ℓ₊ = {a/ζ ∈ ℝ₋} and ℓ₋ = {a/ζ ∈ ℝ₊}.
//! Gibbons–Hawking coordinates are x = (Re a, Im a, θ_e/2πR), and metric
//! matrices use the coordinate order (θ'_m, x¹, x², x³).

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bessel::k1;
use crate::quadrature::adaptive_c;
use crate::spectral_periods::{eval_poly, eval_poly_deriv, CentralChargeModel};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ZERO: C = C::new(0.0, 0.0);

/// Default cutoff for the resummed series; the tail is added analytically.
pub const DEFAULT_CUTOFF: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum OvError {
    #[error("R must be positive, got {0}")]
    NonPositiveR(f64),
    #[error("base point a = {0} lies outside the unit disk")]
    OutsideDisk(C),
    #[error("a = 0 needs the singular-fiber formula")]
    SingularFiber,
    #[error("zeta = {0} is not a valid twistor parameter here")]
    BadZeta(C),
    #[error("zeta = {0} lies on a BPS ray")]
    OnRay(C),
    #[error("the Gibbons-Hawking potential is singular at the origin")]
    Origin,
    #[error("model validity: B0 = {0} is not positive")]
    ModelValidity(f64),
    #[error("central charge model is not of Ooguri-Vafa type")]
    WrongModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvPoint {
    pub a: C,
    pub theta_e: f64,
    pub theta_m: f64,
    pub r: f64,
}

impl OvPoint {
    pub fn new(a: C, theta_e: f64, theta_m: f64, r: f64) -> Result<Self, OvError> {
        if !(r > 0.0) {
            return Err(OvError::NonPositiveR(r));
        }
        if a.norm() >= 1.0 {
            return Err(OvError::OutsideDisk(a));
        }
        Ok(OvPoint { a, theta_e: theta_e.rem_euclid(TAU), theta_m: theta_m.rem_euclid(TAU), r })
    }

    /// Point whose θ_m is obtained from the regular-gauge angle θ'_m.
    pub fn from_prime(a: C, theta_e: f64, theta_m_prime: f64, r: f64) -> Result<Self, OvError> {
        let te = theta_e.rem_euclid(TAU);
        let tm = theta_m_prime + (te - PI) * a.arg() / TAU;
        let mut p = OvPoint::new(a, te, 0.0, r)?;
        p.theta_m = tm.rem_euclid(TAU);
        Ok(p)
    }
}

/// Gibbons–Hawking data at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhFrame {
    pub v: f64,
    pub a_phi: f64,
    pub x: [f64; 3],
}

fn check_zeta(zeta: C) -> Result<(), OvError> {
    if zeta.norm() == 0.0 || !zeta.re.is_finite() || !zeta.im.is_finite() {
        Err(OvError::BadZeta(zeta))
    } else {
        Ok(())
    }
}

/// exp(πRa/ζ + iθ_e + πRζā).
pub fn xe_sf(p: &OvPoint, zeta: C) -> C {
    (PI * p.r * p.a / zeta + I * p.theta_e + PI * p.r * zeta * p.a.conj()).exp()
}

/// Semiflat magnetic coordinate for an Ooguri–Vafa type model.
pub fn xm_sf(model: &CentralChargeModel, p: &OvPoint, zeta: C) -> Result<C, OvError> {
    let zm = match model {
        CentralChargeModel::OvClassical | CentralChargeModel::OvGeneralized { .. } => {
            model.basis(p.a).map_err(|_| OvError::WrongModel)?[0]
        }
        _ => return Err(OvError::WrongModel),
    };
    Ok((PI * p.r * zm / zeta + I * p.theta_m + PI * p.r * zeta * zm.conj()).exp())
}

/// Phase of ℓ₊ in the ζ-plane.
pub fn ray_plus_phase(a: C) -> f64 {
    (a.arg() + PI).rem_euclid(TAU)
}

fn on_ray(a: C, zeta: C) -> bool {
    (a / zeta).im.abs() <= 1e-14 * (a / zeta).norm()
}

/// log of the correction factor X_m/X_m^sf: the two ray integrals, computed
/// by adaptive Gauss–Legendre in the logarithmic ray coordinate.
pub fn xm_correction_log(p: &OvPoint, zeta: C) -> Result<C, OvError> {
    check_zeta(zeta)?;
    if p.a.norm() == 0.0 {
        return Err(OvError::SingularFiber);
    }
    if on_ray(p.a, zeta) {
        return Err(OvError::OnRay(zeta));
    }
    let b = p.a / p.a.norm();
    let m = TAU * p.r * p.a.norm();
    let smax = (40.0 / m).max(1.0).acosh() + 0.5;
    let ep = (I * p.theta_e).exp();
    let em = (-I * p.theta_e).exp();
    // With ζ' = ∓b·e^s and ζ = ∓b·e^w the kernel is coth((s − w)/2).
    let ip = ray_integral((zeta / -b).ln(), smax, |s| (1.0 - ep * (-m * s.cosh()).exp()).ln());
    let im = ray_integral((zeta / b).ln(), smax, |s| (1.0 - em * (-m * s.cosh()).exp()).ln());
    Ok(I / (2.0 * TAU) * (ip - im))
}

/// ∫ coth((s − w)/2)·F(s) ds over [−smax, smax] for F analytic near the real
/// axis. When w sits close to the contour the pole is subtracted and its
/// contribution integrated in closed form, so points next to a BPS ray cost
/// the same as any other.
fn ray_integral(w: C, smax: f64, f: impl Fn(C) -> C) -> C {
    let tol = 1e-14;
    let split = w.re.clamp(-smax, smax);
    let coth = |s: f64| {
        let t = ((s - w) * 0.5).tanh();
        1.0 / t
    };
    if w.im.abs() < 0.5 && w.re.abs() < smax + 1.0 {
        let fw = f(w);
        let g = |s: f64| coth(s) * (f(C::new(s, 0.0)) - fw);
        let lnsinh = |s: f64| ((s - w) * 0.5).sinh().ln();
        let body = adaptive_c(-smax, split, tol, 40, g).value + adaptive_c(split, smax, tol, 40, g).value;
        return body + fw * 2.0 * (lnsinh(smax) - lnsinh(-smax));
    }
    let g = |s: f64| coth(s) * f(C::new(s, 0.0));
    adaptive_c(-smax, split, tol, 40, g).value + adaptive_c(split, smax, tol, 40, g).value
}

/// The magnetic Darboux coordinate after its single nontrivial iteration.
pub fn xm_quadrature(p: &OvPoint, zeta: C) -> Result<C, OvError> {
    xm_quadrature_model(&CentralChargeModel::OvClassical, p, zeta)
}

pub fn xm_quadrature_model(model: &CentralChargeModel, p: &OvPoint, zeta: C) -> Result<C, OvError> {
    check_zeta(zeta)?;
    if p.theta_e == 0.0 {
        return Ok(ZERO);
    }
    Ok(xm_sf(model, p, zeta)? * xm_correction_log(p, zeta)?.exp())
}

/// Sectors of the a-plane used to continue X_m across ℓ± and the log cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OvRegion {
    I,
    II,
    III,
}

/// Region of a for a given ζ. Going counterclockwise in a one meets I, II, III.
/// For arg ζ ∈ (0, π) region I is Im(a/ζ) < 0. For arg ζ ∈ (−π, 0) it is the
/// sector between the cut and the line a/ζ ∈ ℝ₊. For real ζ there are only
/// two sectors, labelled I and II when ζ > 0 and I and III when ζ < 0.
pub fn region_of(a: C, zeta: C) -> OvRegion {
    let al = zeta.arg();
    let ph = a.arg();
    if al == PI {
        return if ph > 0.0 && ph < PI { OvRegion::I } else { OvRegion::III };
    }
    if al == 0.0 {
        return if ph < 0.0 { OvRegion::I } else { OvRegion::II };
    }
    if al > 0.0 {
        if ph > al - PI && ph < al {
            OvRegion::I
        } else if ph > al {
            OvRegion::II
        } else {
            OvRegion::III
        }
    } else if ph < al {
        OvRegion::I
    } else if ph < al + PI {
        OvRegion::II
    } else {
        OvRegion::III
    }
}

/// Multiplies by 1, (1 − X_e⁻¹) or (1 − X_e) according to the region.
pub fn xm_continued(p: &OvPoint, zeta: C, region: OvRegion) -> Result<C, OvError> {
    let xm = xm_quadrature(p, zeta)?;
    let xe = xe_sf(p, zeta);
    Ok(xm * region_factor(region, xe, false))
}

fn region_factor(region: OvRegion, xe: C, lower: bool) -> C {
    match region {
        OvRegion::I => C::new(1.0, 0.0),
        OvRegion::II => 1.0 - 1.0 / xe,
        // Below the real ζ-axis the third sector is reached by crossing ℓ₊
        // rather than the log cut, which leaves −X_e⁻¹.
        OvRegion::III if lower => -1.0 / xe,
        OvRegion::III => 1.0 - xe,
    }
}

/// The continuous magnetic coordinate X̃_m on the punctured disk.
pub fn xm_tilde(model: &CentralChargeModel, p: &OvPoint, zeta: C) -> Result<C, OvError> {
    let xm = xm_quadrature_model(model, p, zeta)?;
    let region = region_of(p.a, zeta);
    let lower = zeta.arg() < 0.0;
    Ok(xm * region_factor(region, xe_sf(p, zeta), lower))
}

/// θ'_m = θ_m − (θ_e − π)·arg a/2π.
pub fn gauge_theta_prime(theta_m: f64, theta_e: f64, phase_a: f64) -> f64 {
    theta_m - (theta_e - PI) * phase_a / TAU
}

/// e^{iθ'_m} ζ^{(θ_e−π)/2π} (1 − e^{−iθ_e})^{1/2} with principal branches.
pub fn xm_at_zero(theta_e: f64, theta_m_prime: f64, zeta: C) -> Result<C, OvError> {
    check_zeta(zeta)?;
    let te = theta_e.rem_euclid(TAU);
    if te == 0.0 {
        return Ok(ZERO);
    }
    let pow = ((te - PI) / TAU) * zeta.ln();
    Ok((I * theta_m_prime + pow).exp() * (1.0 - (-I * te).exp()).sqrt())
}

/// Singular-fiber value for the generalized model, carrying the f(0) exponent.
pub fn xm_at_zero_generalized(theta_e: f64, theta_m_prime: f64, zeta: C, r: f64, f: &[[f64; 2]]) -> Result<C, OvError> {
    let f0 = eval_poly(f, ZERO);
    Ok(xm_at_zero(theta_e, theta_m_prime, zeta)? * (PI * r * f0 / zeta + PI * r * zeta * f0.conj()).exp())
}

/// Jump function on the combined line ζ = t·a/|a|: 1 − X_e⁻¹ for t > 0 and
/// 1 − X_e for t < 0. At a = 0 the direction is the positive real axis.
pub fn line_jump_g(p: &OvPoint, t: f64) -> C {
    let b = if p.a.norm() == 0.0 { C::new(1.0, 0.0) } else { p.a / p.a.norm() };
    let xe = if t == 0.0 || !t.is_finite() {
        (I * p.theta_e).exp()
    } else {
        xe_sf(p, b * t)
    };
    if t > 0.0 {
        1.0 - 1.0 / xe
    } else {
        1.0 - xe
    }
}

/// Discontinuities of the a = 0 jump function: Δ₀ = G(0⁺) − G(0⁻) and
/// Δ∞ = G(−∞) − G(+∞), the latter read in the direction of the line through ∞.
pub fn line_discontinuities(theta_e: f64) -> (C, C) {
    let p = OvPoint { a: ZERO, theta_e, theta_m: 0.0, r: 1.0 };
    let g_pos = line_jump_g(&p, 1.0);
    let g_neg = line_jump_g(&p, -1.0);
    (g_pos - g_neg, g_neg - g_pos)
}

/// The three da-coefficient terms that must cancel their log a divergence:
/// log a/ζ plus the two ray integrals of X_e^{±1}/(1 − X_e^{±1}).
pub fn last3(p: &OvPoint, zeta: C) -> Result<C, OvError> {
    check_zeta(zeta)?;
    if p.a.norm() == 0.0 {
        return Err(OvError::SingularFiber);
    }
    if on_ray(p.a, zeta) {
        return Err(OvError::OnRay(zeta));
    }
    let b = p.a / p.a.norm();
    let m = TAU * p.r * p.a.norm();
    let smax = (40.0 / m).max(1.0).acosh() + 0.5;
    let s0 = zeta.norm().ln().clamp(-smax, smax);
    let ep = (I * p.theta_e).exp();
    let em = (-I * p.theta_e).exp();
    let plus = |s: f64| {
        let zp = -b * s.exp();
        let x = ep * (-m * s.cosh()).exp();
        x / (1.0 - x) / (zp - zeta)
    };
    let minus = |s: f64| {
        let zp = b * s.exp();
        let x = em * (-m * s.cosh()).exp();
        x / (1.0 - x) / (zp - zeta)
    };
    let tol = 1e-14;
    let ip = adaptive_c(-smax, s0, tol, 40, plus).value + adaptive_c(s0, smax, tol, 40, plus).value;
    let im = adaptive_c(-smax, s0, tol, 40, minus).value + adaptive_c(s0, smax, tol, 40, minus).value;
    Ok(p.a.ln() / zeta + ip + im)
}

fn gh_parts(x: [f64; 3], r: f64) -> (f64, f64) {
    let rho = r * (x[0] * x[0] + x[1] * x[1]).sqrt();
    (rho, r * x[2])
}

fn cutoff_for(n: usize, rho: f64, c: f64) -> usize {
    n.max((20.0 * rho.max(c.abs())).ceil() as usize)
}

/// Gibbons–Hawking potential of the model,
///
///   V = −(R/4π)log|a|² + (R/π)Σ_{n≥1} cos(nθ_e) K₀(2πRn|a|),
///
/// evaluated through its Poisson resummation. Resummation with κ_n = 1/|n|
/// leaves the constant (R/2π)(γ_E + log(R/2)).
pub fn potential_v(x: [f64; 3], r: f64, cutoff: usize) -> Result<f64, OvError> {
    Ok(potential_resummed(x, r, cutoff)? + r / TAU * (EULER_GAMMA + (0.5 * r).ln()))
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The resummed series (R/4π)[1/√(…) + Σ_{n≠0}(1/√(…) − 1/|n|)] alone.
/// Terms n and −n are paired and the tail beyond the cutoff is added from
/// the exact antiderivative of the paired summand (midpoint rule, error
/// O(N⁻⁴)).
pub fn potential_resummed(x: [f64; 3], r: f64, cutoff: usize) -> Result<f64, OvError> {
    if !(r > 0.0) {
        return Err(OvError::NonPositiveR(r));
    }
    let (rho, c_raw) = gh_parts(x, r);
    // The series is 1-periodic in c = θ_e/2π.
    let c = c_raw - c_raw.round();
    if rho == 0.0 && c == 0.0 {
        return Err(OvError::Origin);
    }
    let n_max = cutoff_for(cutoff, rho, c);
    let f = |y: f64| 1.0 / (rho * rho + y * y).sqrt();
    let mut sum = f(c);
    for n in 1..=n_max {
        let nf = n as f64;
        sum += f(nf + c) + f(c - nf) - 2.0 / nf;
    }
    let m = n_max as f64 + 0.5;
    let prim = |y: f64| y + (rho * rho + y * y).sqrt();
    let g = (prim(m + c) / m).ln() + (prim(m - c) / m).ln();
    sum += 2.0 * 2f64.ln() - g;
    Ok(r / (2.0 * TAU) * sum)
}

/// dφ-coefficient of the connection in resummed form, (1/4π)(cos ϑ + D).
/// Paired summation makes the choice of κ_n irrelevant.
pub fn connection_a(x: [f64; 3], r: f64, cutoff: usize) -> Result<f64, OvError> {
    if !(r > 0.0) {
        return Err(OvError::NonPositiveR(r));
    }
    let (rho, c) = gh_parts(x, r);
    if rho == 0.0 && c == 0.0 {
        return Err(OvError::Origin);
    }
    let n_max = cutoff_for(cutoff, rho, c);
    let h = |y: f64| y / (rho * rho + y * y).sqrt();
    let mut sum = h(c);
    for n in 1..=n_max {
        let nf = n as f64;
        sum += h(nf + c) + h(c - nf);
    }
    let m = n_max as f64 + 0.5;
    let s1 = (rho * rho + (m + c) * (m + c)).sqrt();
    let s2 = (rho * rho + (m - c) * (m - c)).sqrt();
    sum += 2.0 * c - 4.0 * m * c / (s1 + s2);
    Ok(sum / (2.0 * TAU))
}

/// dφ-coefficient of the connection in the θ'_m gauge, from the Bessel sum
/// (θ_e − π)/4π² + (R|a|/π) Σ_{n≥1} sin(nθ_e) K₁(2πRn|a|). It vanishes on the
/// singular fiber for θ_e ∈ (0, 2π) and equals `connection_a` − 1/4π.
pub fn connection_a_bessel(x: [f64; 3], r: f64) -> Result<f64, OvError> {
    let absa = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if absa == 0.0 {
        return Err(OvError::SingularFiber);
    }
    let te = TAU * r * x[2];
    let step = TAU * r * absa;
    let mut sum = 0.0;
    let mut n = 1usize;
    loop {
        let arg = step * n as f64;
        if arg > 45.0 {
            break;
        }
        sum += (n as f64 * te).sin() * k1(arg);
        n += 1;
    }
    Ok((te - PI) / (4.0 * PI * PI) + r * absa / PI * sum)
}

/// Connection in the θ'_m gauge, valid on and off the axis.
pub fn connection_a_prime(x: [f64; 3], r: f64, cutoff: usize) -> Result<f64, OvError> {
    Ok(connection_a(x, r, cutoff)? - 1.0 / (2.0 * TAU))
}

pub fn gh_frame(x: [f64; 3], r: f64, cutoff: usize) -> Result<GhFrame, OvError> {
    Ok(GhFrame { v: potential_v(x, r, cutoff)?, a_phi: connection_a_prime(x, r, cutoff)?, x })
}

fn cartesian_a(x: [f64; 3], r: f64, cutoff: usize) -> Result<[f64; 3], OvError> {
    let rho2 = x[0] * x[0] + x[1] * x[1];
    if rho2 == 0.0 {
        return Ok([0.0; 3]);
    }
    let ap = connection_a(x, r, cutoff)?;
    Ok([-ap * x[1] / rho2, ap * x[0] / rho2, 0.0])
}

/// max component of dA − ⋆dV by central differences with step h.
pub fn check_curvature(x: [f64; 3], r: f64, h: f64, cutoff: usize) -> Result<f64, OvError> {
    let shift = |i: usize, d: f64| {
        let mut y = x;
        y[i] += d;
        y
    };
    let mut da = [[0.0; 3]; 3];
    let mut dv = [0.0; 3];
    for i in 0..3 {
        let ap = cartesian_a(shift(i, h), r, cutoff)?;
        let am = cartesian_a(shift(i, -h), r, cutoff)?;
        for j in 0..3 {
            da[i][j] = (ap[j] - am[j]) / (2.0 * h);
        }
        dv[i] = (potential_v(shift(i, h), r, cutoff)? - potential_v(shift(i, -h), r, cutoff)?) / (2.0 * h);
    }
    let f12 = da[0][1] - da[1][0];
    let f23 = da[1][2] - da[2][1];
    let f31 = da[2][0] - da[0][2];
    Ok((f12 - dv[2]).abs().max((f23 - dv[0]).abs()).max((f31 - dv[1]).abs()))
}

fn gibbons_hawking(v: f64, a_cart: [f64; 3]) -> Matrix4<f64> {
    let w = [1.0 / TAU, a_cart[0], a_cart[1], a_cart[2]];
    let mut g = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = w[i] * w[j] / v;
        }
    }
    for i in 1..4 {
        g[(i, i)] += v;
    }
    g
}

/// Gibbons–Hawking metric (1/V)(dθ'_m/2π + A')² + V dx² in the θ'_m gauge.
pub fn metric_ov(x: [f64; 3], r: f64) -> Result<Matrix4<f64>, OvError> {
    let v = potential_v(x, r, DEFAULT_CUTOFF)?;
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let a_cart = if rho2 == 0.0 {
        [0.0; 3]
    } else {
        let ap = connection_a_prime(x, r, DEFAULT_CUTOFF)?;
        [-ap * x[1] / rho2, ap * x[0] / rho2, 0.0]
    };
    Ok(gibbons_hawking(v, a_cart))
}

/// r(2dθ'_m + (cos ϑ − 1)dφ)² + dx²/r, the Taub-NUT comparison metric in the
/// same gauge as `metric_ov`.
pub fn taub_nut(x: [f64; 3]) -> Matrix4<f64> {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let rho2 = x[0] * x[0] + x[1] * x[1];
    let c = if rho2 == 0.0 { 0.0 } else { (x[2] / r - 1.0) / rho2 };
    let w = [2.0, -c * x[1], c * x[0], 0.0];
    let mut g = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            g[(i, j)] = r * w[i] * w[j];
        }
    }
    for i in 1..4 {
        g[(i, i)] += 1.0 / r;
    }
    g
}

/// V on the singular fiber as a function of θ_e.
pub fn v0(theta_e: f64, r: f64) -> Result<f64, OvError> {
    potential_v([0.0, 0.0, theta_e / (TAU * r)], r, DEFAULT_CUTOFF)
}

/// Data of the generalized model at a = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedMetric {
    pub v0: f64,
    pub c: [f64; 2],
    pub b0: f64,
    /// The extension hypothesis as stated, recorded rather than interpreted.
    pub hypothesis: String,
    pub metric: [[f64; 4]; 4],
}

/// C = −i/2 + πf'(0) and B₀ = V₀ + R·Im C/π.
pub fn generalized_constants(theta_e: f64, r: f64, f: &[[f64; 2]]) -> Result<(f64, C, f64), OvError> {
    let v = v0(theta_e, r)?;
    let c = C::new(0.0, -0.5) + PI * eval_poly_deriv(f, ZERO);
    Ok((v, c, v + r * c.im / PI))
}

/// Metric of the generalized model on the singular fiber,
/// (1/B₀)(dθ'_m/2π)² + B₀dx² + (R Re C/π)² dx₃²/B₀.
pub fn metric_ov_generalized(theta_e: f64, r: f64, f: &[[f64; 2]]) -> Result<GeneralizedMetric, OvError> {
    let (v, c, b0) = generalized_constants(theta_e, r, f)?;
    if !(b0 > 0.0) {
        return Err(OvError::ModelValidity(b0));
    }
    let mut g = [[0.0; 4]; 4];
    g[0][0] = 1.0 / (b0 * TAU * TAU);
    g[1][1] = b0;
    g[2][2] = b0;
    g[3][3] = b0 + (r * c.re / PI).powi(2) / b0;
    Ok(GeneralizedMetric {
        v0: v,
        c: [c.re, c.im],
        b0,
        hypothesis: "f'(0) > B_0".to_string(),
        metric: g,
    })
}

pub fn to_array(m: &Matrix4<f64>) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[(i, j)];
        }
    }
    out
}
