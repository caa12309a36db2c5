//! Central charges: closed-form Ooguri–Vafa models and Pentagon periods of
//! the cubic curve y² = z³ − 3z + u, with branch tracking along paths in u.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charge_lattice::Charge;
use crate::quadrature;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum PeriodError {
    #[error("period quadrature did not converge (error estimate {0:e})")]
    Quadrature(f64),
    #[error("central charge vanishes for {0}")]
    ZeroCharge(Charge),
    #[error("base point {0} lies on a branch cut of the period frame")]
    OnCut(C),
    #[error("no sign change of the wall function on the segment")]
    NoBracket,
}

/// Which central-charge model is active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CentralChargeModel {
    /// Z_e = a, Z_m = a(log a − 1)/(2πi).
    OvClassical,
    /// Z_e = a, Z_m = a log a/(2πi) + f(a) with f given by Taylor coefficients.
    OvGeneralized { f: Vec<[f64; 2]> },
    /// Periods of z³ − 3z + u, γ₁ = (1,0) vanishing at u = −2 and γ₂ = (0,1) at u = 2.
    PentagonCubic,
    /// Z_{γᵢ}(u) = cᵢ₀ + cᵢ₁u.
    UserLinear { z1: [[f64; 2]; 2], z2: [[f64; 2]; 2] },
}

impl CentralChargeModel {
    /// The generalized model that reproduces the classical one: f(a) = ia/2π.
    pub fn ov_generalized_classical() -> Self {
        CentralChargeModel::OvGeneralized { f: vec![[0.0, 0.0], [0.0, 1.0 / TAU]] }
    }

    /// Z on the two basis charges.
    pub fn basis(&self, u: C) -> Result<[C; 2], PeriodError> {
        match self {
            CentralChargeModel::OvClassical => {
                let zm = if u == C::new(0.0, 0.0) { C::new(0.0, 0.0) } else { u * (u.ln() - 1.0) / (TAU * I) };
                Ok([zm, u])
            }
            CentralChargeModel::OvGeneralized { f } => {
                let log_term = if u == C::new(0.0, 0.0) { C::new(0.0, 0.0) } else { u * u.ln() / (TAU * I) };
                Ok([log_term + eval_poly(f, u), u])
            }
            CentralChargeModel::PentagonCubic => pentagon_periods(u),
            CentralChargeModel::UserLinear { z1, z2 } => {
                let a = C::new(z1[0][0], z1[0][1]) + C::new(z1[1][0], z1[1][1]) * u;
                let b = C::new(z2[0][0], z2[0][1]) + C::new(z2[1][0], z2[1][1]) * u;
                Ok([a, b])
            }
        }
    }
}

/// f(a) from Taylor coefficients [re, im], lowest order first.
pub fn eval_poly(coeffs: &[[f64; 2]], a: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * a + C::new(c[0], c[1]))
}

/// f'(a) from the same coefficients.
pub fn eval_poly_deriv(coeffs: &[[f64; 2]], a: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * a + C::new(c[0], c[1]) * k as f64;
    }
    acc
}

/// Z_g from basis values, using additivity.
pub fn combine(z: [C; 2], g: Charge) -> C {
    z[0] * g.0 as f64 + z[1] * g.1 as f64
}

pub fn central_charge(model: &CentralChargeModel, u: C, g: Charge) -> Result<C, PeriodError> {
    Ok(combine(model.basis(u)?, g))
}

/// Roots of z³ − 3z + u sorted lexicographically by (re, im).
pub fn branch_points(u: C) -> [C; 3] {
    let mut r = cubic_roots(u);
    r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    r
}

fn cubic_roots(u: C) -> [C; 3] {
    // Trigonometric/Cardano form for z³ − 3z + u: z = w + 1/w with w³ = (−u ± √(u²−4))/2.
    let disc = (u * u - 4.0).sqrt();
    let mut w3 = (-u + disc) * 0.5;
    if w3.norm() < 0.5 {
        w3 = (-u - disc) * 0.5;
    }
    let w = w3.powf(1.0 / 3.0);
    let omega = C::from_polar(1.0, TAU / 3.0);
    let mut out = [C::new(0.0, 0.0); 3];
    let mut wk = w;
    for slot in out.iter_mut() {
        let mut z = wk + 1.0 / wk;
        for _ in 0..3 {
            let p = z * z * z - 3.0 * z + u;
            let d = 3.0 * z * z - 3.0;
            if d.norm() < 1e-12 {
                break;
            }
            let nz = z - p / d;
            let np = nz * nz * nz - 3.0 * nz + u;
            if np.norm() < p.norm() {
                z = nz;
            } else {
                break;
            }
        }
        *slot = z;
        wk *= omega;
    }
    out
}

/// Integral of √(z³−3z+u) over the segment [za, zb] times 2/π.
///
/// With z = mid + half·sin s the endpoint square roots cancel against dz and
/// the integrand is half²·cos²s·√(zc − mid)·√(1 − half·sin s/(zc − mid)).
/// The principal branch of the last factor is continuous on the segment, so
/// the branch of the whole period is fixed by the choice of `sq = √(zc−mid)`.
pub fn segment_period(za: C, zb: C, zc: C, sq: C, tol: f64) -> Result<C, PeriodError> {
    let mid = (za + zb) * 0.5;
    let half = (zb - za) * 0.5;
    if half.norm() == 0.0 {
        return Ok(C::new(0.0, 0.0));
    }
    let ratio = half / (zc - mid);
    let f = |s: f64| {
        let c = s.cos();
        (C::new(1.0, 0.0) - ratio * s.sin()).sqrt() * (c * c)
    };
    let res = quadrature::adaptive_c(-PI / 2.0, PI / 2.0, tol, 40, f);
    if !res.converged {
        return Err(PeriodError::Quadrature(res.error));
    }
    Ok(res.value * half * half * sq * (2.0 / PI))
}

/// Continuously tracked roots and square-root branches along a path in u.
#[derive(Clone, Debug)]
pub struct PeriodTracker {
    pub u: C,
    /// Roots labelled so that γ₁ ↔ (r₀, r₁) and γ₂ ↔ (r₁, r₂).
    pub roots: [C; 3],
    sq: [C; 2],
    pub tol: f64,
}

impl Default for PeriodTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl PeriodTracker {
    /// Start at u = 0 with roots −√3, 0, √3.
    pub fn new() -> Self {
        let s3 = 3f64.sqrt();
        let roots = [C::new(-s3, 0.0), C::new(0.0, 0.0), C::new(s3, 0.0)];
        let c = Self::sqrt_args(&roots);
        PeriodTracker { u: C::new(0.0, 0.0), roots, sq: [c[0].sqrt(), c[1].sqrt()], tol: 1e-13 }
    }

    fn sqrt_args(r: &[C; 3]) -> [C; 2] {
        [r[2] - (r[0] + r[1]) * 0.5, r[0] - (r[1] + r[2]) * 0.5]
    }

    fn step(&mut self, u: C) {
        let new = cubic_roots(u);
        let mut used = [false; 3];
        let mut out = self.roots;
        for (i, &x) in self.roots.iter().enumerate() {
            let mut best = usize::MAX;
            let mut bd = f64::INFINITY;
            for (k, &y) in new.iter().enumerate() {
                if !used[k] && (y - x).norm() < bd {
                    bd = (y - x).norm();
                    best = k;
                }
            }
            used[best] = true;
            out[i] = new[best];
        }
        self.roots = out;
        let c = Self::sqrt_args(&out);
        for i in 0..2 {
            let q = c[i].sqrt();
            self.sq[i] = if (q - self.sq[i]).norm() > (q + self.sq[i]).norm() { -q } else { q };
        }
        self.u = u;
    }

    fn max_step(&self) -> f64 {
        // Root velocity is 1/|P'(z)|; keep every root's motion well below the
        // smallest root separation.
        let r = &self.roots;
        let sep = (r[0] - r[1]).norm().min((r[1] - r[2]).norm()).min((r[0] - r[2]).norm());
        let mut vel: f64 = 0.0;
        for z in r {
            let d = (3.0 * z * z - 3.0).norm();
            vel = vel.max(1.0 / d.max(1e-300));
        }
        (0.05 * sep / vel).clamp(1e-9, 0.02)
    }

    /// Continue along the straight segment to `target`.
    pub fn move_to(&mut self, target: C) {
        let start = self.u;
        let total = (target - start).norm();
        if total == 0.0 {
            return;
        }
        let mut t = 0.0;
        while t < 1.0 {
            let dt = (self.max_step() / total).min(1.0 - t);
            t += dt;
            let next = if t >= 1.0 { target } else { start + (target - start) * t };
            self.step(next);
        }
    }

    /// Continue along a polyline through `points`.
    pub fn follow(&mut self, points: &[C]) {
        for &p in points {
            self.move_to(p);
        }
    }

    pub fn periods(&self) -> Result<[C; 2], PeriodError> {
        let r = &self.roots;
        let z1 = segment_period(r[0], r[1], r[2], self.sq[0], self.tol)?;
        let z2 = segment_period(r[1], r[2], r[0], self.sq[1], self.tol)?;
        Ok([z1, z2])
    }
}

/// True when the straight path from 0 to u would pass through u = ±2.
pub fn on_cut(u: C) -> bool {
    u.im == 0.0 && u.re.abs() > 2.0
}

/// Pentagon periods in the frame obtained by straight-line continuation from
/// u = 0; this frame has cuts along (−∞, −2] and [2, ∞).
pub fn pentagon_periods(u: C) -> Result<[C; 2], PeriodError> {
    if on_cut(u) {
        return Err(PeriodError::OnCut(u));
    }
    let mut t = PeriodTracker::new();
    t.move_to(u);
    t.periods()
}

/// Im(Z_g/Z_h); the wall is its zero set where Re(Z_g/Z_h) > 0.
pub fn on_wall(model: &CentralChargeModel, u: C, g: Charge, h: Charge) -> Result<f64, PeriodError> {
    let z = model.basis(u)?;
    let (zg, zh) = (combine(z, g), combine(z, h));
    if zh.norm() == 0.0 {
        return Err(PeriodError::ZeroCharge(h));
    }
    Ok((zg / zh).im)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WallPoint {
    pub u: C,
    pub im_ratio: f64,
    pub re_ratio: f64,
}

/// Bisection for a zero of Im(Z_g/Z_h) on the segment [u0, u1].
pub fn locate_wall(model: &CentralChargeModel, u0: C, u1: C, g: Charge, h: Charge, tol: f64) -> Result<WallPoint, PeriodError> {
    let f = |u: C| on_wall(model, u, g, h);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut fa = f(u0)?;
    let fb = f(u1)?;
    if fa.signum() == fb.signum() {
        return Err(PeriodError::NoBracket);
    }
    let pt = |t: f64| u0 + (u1 - u0) * t;
    while (b - a) * (u1 - u0).norm() > tol {
        let m = 0.5 * (a + b);
        let fm = f(pt(m))?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let u = pt(0.5 * (a + b));
    let z = model.basis(u)?;
    let r = combine(z, g) / combine(z, h);
    Ok(WallPoint { u, im_ratio: r.im, re_ratio: r.re })
}

/// BPS ray ℓ_γ = Z_γ ℝ₋.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RayGeometry {
    pub charge: Charge,
    pub phase: f64,
    pub modulus: f64,
}

pub fn ray_from_z(g: Charge, z: C) -> Result<RayGeometry, PeriodError> {
    if z.norm() == 0.0 {
        return Err(PeriodError::ZeroCharge(g));
    }
    Ok(RayGeometry { charge: g, phase: (z.arg() + PI).rem_euclid(TAU), modulus: z.norm() })
}

pub fn ray(model: &CentralChargeModel, u: C, g: Charge) -> Result<RayGeometry, PeriodError> {
    ray_from_z(g, central_charge(model, u, g)?)
}

/// Coefficient of dx∧dy in ⟨dZ∧dZ̄⟩ = dZ₁∧dZ̄₂ − dZ₂∧dZ̄₁, by central differences.
pub fn hermitian_area(model: &CentralChargeModel, u: C, h: f64) -> Result<f64, PeriodError> {
    let zp = model.basis(u + h)?;
    let zm = model.basis(u - h)?;
    let d1 = (zp[0] - zm[0]) / (2.0 * h);
    let d2 = (zp[1] - zm[1]) / (2.0 * h);
    Ok(4.0 * (d1 * d2.conj()).im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn branch_point_examples() {
        let r = branch_points(c(2.0, 0.0));
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-9);
        assert!((r[1] - c(1.0, 0.0)).norm() < 1e-6 && (r[2] - c(1.0, 0.0)).norm() < 1e-6);
        let r = branch_points(c(0.0, 0.0));
        let s3 = 3f64.sqrt();
        for (x, y) in r.iter().zip([-s3, 0.0, s3]) {
            assert!((x - c(y, 0.0)).norm() < 1e-12);
        }
        let r = branch_points(c(-2.0, 0.0));
        assert!((r[2] - c(2.0, 0.0)).norm() < 1e-9);
        assert!((r[0] - c(-1.0, 0.0)).norm() < 1e-6);
        for u in [c(0.3, 0.7), c(-4.0, 1.0), c(10.0, -3.0)] {
            for z in branch_points(u) {
                assert!((z * z * z - 3.0 * z + u).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn ov_values() {
        let m = CentralChargeModel::OvClassical;
        assert_eq!(central_charge(&m, c(1.0, 0.0), Charge(0, 1)).unwrap(), c(1.0, 0.0));
        let g = CentralChargeModel::ov_generalized_classical();
        let u = c(0.3, -0.2);
        let a = m.basis(u).unwrap();
        let b = g.basis(u).unwrap();
        assert!((a[0] - b[0]).norm() < 1e-15);
    }

    #[test]
    fn pentagon_at_origin() {
        let z = pentagon_periods(c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(z[0].re, 1.204_617_963_444_63, epsilon = 1e-11);
        assert_abs_diff_eq!(z[0].im, 0.0, epsilon = 1e-12);
        assert!((z[1] - I * z[0]).norm() < 1e-12);
    }

    #[test]
    fn gamma2_vanishes_at_two() {
        let z = pentagon_periods(c(2.0, 0.0)).unwrap();
        assert!(z[1].norm() < 1e-10);
        assert!(z[0].norm() > 1.0);
        let z = pentagon_periods(c(-2.0, 0.0)).unwrap();
        assert!(z[0].norm() < 1e-10);
        assert!(z[1].norm() > 1.0);
    }

    #[test]
    fn sum_cycle_by_detour_quadrature() {
        // Integrate (2/π)√P along semicircles from r₀ to r₂ on either side of r₁,
        // tracking √P by continuity. The two sides give Z₁ ± Z₂.
        let u = c(0.3, 0.2);
        let mut t = PeriodTracker::new();
        t.move_to(u);
        let z = t.periods().unwrap();
        let r = t.roots;
        let centre = (r[0] + r[2]) * 0.5;
        let rad = (r[2] - r[0]) * 0.5;
        let path = |phi: f64| centre - rad * C::from_polar(1.0, phi);
        let dpath = |phi: f64| -rad * I * C::from_polar(1.0, phi);
        let p = |zz: C| zz * zz * zz - 3.0 * zz + u;
        let mut sides = Vec::new();
        for sgn in [1.0, -1.0] {
            // The starting branch is arbitrary, so results are compared up to sign.
            let n = 200_000;
            let mut prev: Option<C> = None;
            let mut acc = c(0.0, 0.0);
            let h = PI / n as f64;
            for k in 0..n {
                let phi = sgn * (k as f64 + 0.5) * h;
                let zz = path(phi);
                let mut s = p(zz).sqrt();
                if let Some(q) = prev {
                    if (s - q).norm() > (s + q).norm() {
                        s = -s;
                    }
                }
                prev = Some(s);
                acc += s * dpath(phi) * (sgn * h);
            }
            sides.push(acc * (2.0 / PI));
        }
        let plus = z[0] + z[1];
        let minus = z[0] - z[1];
        let hit = |v: C, w: C| (v - w).norm() < 1e-6 || (v + w).norm() < 1e-6;
        let a = hit(sides[0], plus) && hit(sides[1], minus);
        let b = hit(sides[0], minus) && hit(sides[1], plus);
        assert!(a || b, "sides {:?} vs {plus} / {minus}", sides);
    }

    #[test]
    fn additivity_of_sum_charge() {
        let m = CentralChargeModel::PentagonCubic;
        let u = c(0.0, 0.0);
        let z = m.basis(u).unwrap();
        let s = central_charge(&m, u, Charge(1, 1)).unwrap();
        assert!((s - (z[0] + z[1])).norm() < 1e-15);
    }

    #[test]
    fn node_doubling_stability() {
        for u in [c(0.4, 0.3), c(-1.0, 1.2), c(1.5, -0.5)] {
            let mut t = PeriodTracker::new();
            t.move_to(u);
            let coarse = t.periods().unwrap();
            let r = t.roots;
            let rule = crate::quadrature::GaussLegendre::new(64);
            let sq = t.sq;
            let direct = |za: C, zb: C, zc: C, sq: C| {
                let mid = (za + zb) * 0.5;
                let half = (zb - za) * 0.5;
                let ratio = half / (zc - mid);
                crate::quadrature::composite_c(&rule, -PI / 2.0, PI / 2.0, 8, |s| {
                    (C::new(1.0, 0.0) - ratio * s.sin()).sqrt() * s.cos().powi(2)
                }) * half
                    * half
                    * sq
                    * (2.0 / PI)
            };
            let fine = [direct(r[0], r[1], r[2], sq[0]), direct(r[1], r[2], r[0], sq[1])];
            for i in 0..2 {
                assert!((coarse[i] - fine[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn wall_on_imaginary_axis() {
        let m = CentralChargeModel::PentagonCubic;
        let (g1, g2) = (Charge(1, 0), Charge(0, 1));
        let w = locate_wall(&m, c(0.0, 0.0), c(0.0, 3.0), g1, g2, 1e-12).unwrap();
        assert!(w.im_ratio.abs() < 1e-8);
        assert!(w.re_ratio > 0.0);
        assert!(w.u.im > 1.7 && w.u.im < 2.0);
        let w2 = locate_wall(&m, c(0.0, 0.0), c(0.0, -3.0), g1, -g2, 1e-12).unwrap();
        assert!(w2.im_ratio.abs() < 1e-8);
        assert!(w2.re_ratio > 0.0);
        // Inside the wall Im(Z₁/Z₂) < 0.
        assert!(on_wall(&m, c(0.0, 0.0), g1, g2).unwrap() < 0.0);
        assert_eq!(on_wall(&CentralChargeModel::OvClassical, c(0.2, 0.1), g2, g2).unwrap(), 0.0);
    }

    #[test]
    fn ray_examples() {
        let m = CentralChargeModel::OvClassical;
        let r = ray(&m, c(1.0, 0.0), Charge(0, 1)).unwrap();
        assert_abs_diff_eq!(r.phase, PI, epsilon = 1e-15);
        let r = ray(&m, c(0.0, 1.0), Charge(0, 1)).unwrap();
        assert_abs_diff_eq!(r.phase, 1.5 * PI, epsilon = 1e-15);
        let p = CentralChargeModel::PentagonCubic;
        let z = p.basis(c(0.0, 0.0)).unwrap();
        let r = ray(&p, c(0.0, 0.0), Charge(1, 0)).unwrap();
        assert_abs_diff_eq!(r.phase, (z[0].arg() + PI).rem_euclid(TAU), epsilon = 1e-15);
        let rn = ray(&p, c(0.0, 0.0), Charge(-1, 0)).unwrap();
        assert_abs_diff_eq!((rn.phase - r.phase).rem_euclid(TAU), PI, epsilon = 1e-12);
        assert!(ray(&m, c(0.0, 0.0), Charge(0, 1)).is_err());
    }

    #[test]
    fn positivity_of_hermitian_form() {
        let p = CentralChargeModel::PentagonCubic;
        for u in [c(0.0, 0.0), c(0.5, 0.5), c(-1.0, -0.7), c(1.5, 0.2), c(0.0, 2.5)] {
            assert!(hermitian_area(&p, u, 1e-4).unwrap() > 0.0, "u={u}");
        }
        let ov = CentralChargeModel::OvClassical;
        assert!(hermitian_area(&ov, c(0.3, 0.1), 1e-5).unwrap() > 0.0);
    }

    #[test]
    fn monodromy_at_infinity_by_transport() {
        // Clockwise transport around |u| = 5 realises γ₁ ↦ −γ₂, γ₂ ↦ γ₁+γ₂.
        let mut t = PeriodTracker::new();
        t.move_to(c(0.0, 5.0));
        let z0 = t.periods().unwrap();
        let n = 720;
        let pts: Vec<C> = (1..=n).map(|k| C::from_polar(5.0, PI / 2.0 - TAU * k as f64 / n as f64)).collect();
        t.follow(&pts);
        let z1 = t.periods().unwrap();
        assert!((z1[0] - (-z0[1])).norm() < 1e-9, "{:?} {:?}", z0, z1);
        assert!((z1[1] - (z0[0] + z0[1])).norm() < 1e-9);
    }
}
