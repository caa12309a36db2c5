//! Picard iteration for the Riemann–Hilbert integral equation
//!
//!   X_γ(ζ) = X_γ^sf(ζ) exp[ −(1/4πi) Σ Ω(γ')⟨γ,γ'⟩ ∫_{ℓ_γ'} (dζ'/ζ') (ζ'+ζ)/(ζ'−ζ) log(1 − X_γ'(ζ')) ].
//!
//! Each BPS ray is parametrized as ζ' = −e^{iφ}e^{s} with φ = arg Z_γ, so
//! dζ'/ζ' = ds, the Cauchy kernel becomes coth((s−w)/2) for ζ = −e^{iφ}e^{w},
//! and the semiflat factor on the ray is exp(−2πR|Z|cosh s + iθ). The field
//! stores the correction L_γ = log X_γ − log X_γ^sf at the nodes of γ's own
//! ray; it is linear in γ, and Υ_γ = θ_γ − iL_γ.
//!
//! Near a ray the trapezoid sum is replaced by singularity subtraction with a
//! closed-form kernel integral. On the ray itself that closed form yields the
//! two one-sided boundary values, selected by [`Side`].

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::charge_lattice::{pair, twisted_angle_raw, BpsSpectrum, Charge, TorusAngles};
use crate::spectral_periods::{combine, CentralChargeModel, PeriodError};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error("support charge {0} has vanishing central charge")]
    ZeroCharge(Charge),
    #[error("iteration is not contracting: deltas {deltas:?}")]
    NonContraction { deltas: Vec<f64> },
    #[error("no convergence after {iterations} iterations (last delta {last_delta:e})")]
    NoConvergence { iterations: usize, last_delta: f64 },
    #[error("log(1 - X) hit the branch point on ray {0}")]
    Branch(Charge),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Angular offset used for finite-offset diagnostics.
    pub delta: f64,
    /// Rays are cut where 2πR|Z|cosh s reaches this value.
    pub exponent_cut: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { nodes: 257, tol: 1e-10, max_iter: 60, delta: 1e-3, exponent_cut: 40.0 }
    }
}

/// Data of one RH problem at a fixed base point.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    /// Central charges of the basis charges γ₁ = (1,0), γ₂ = (0,1).
    pub z: [C; 2],
    pub spectrum: BpsSpectrum,
    pub r: f64,
    pub angles: TorusAngles,
    pub settings: SolverSettings,
}

impl ProblemSpec {
    pub fn new(z: [C; 2], spectrum: BpsSpectrum, r: f64, angles: TorusAngles) -> Self {
        ProblemSpec { z, spectrum, r, angles, settings: SolverSettings::default() }
    }

    pub fn from_model(
        model: &CentralChargeModel,
        u: C,
        spectrum: BpsSpectrum,
        r: f64,
        angles: TorusAngles,
    ) -> Result<Self, SolverError> {
        Ok(Self::new(model.basis(u)?, spectrum, r, angles))
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn central_charge(&self, g: Charge) -> C {
        combine(self.z, g)
    }

    pub fn theta(&self, g: Charge) -> f64 {
        twisted_angle_raw(self.angles.theta1, self.angles.theta2, g)
    }

    /// Support charges with nonzero Ω, in a deterministic order.
    pub fn support(&self) -> Vec<(Charge, i64)> {
        self.spectrum.entries.iter().filter(|(_, &o)| o != 0).map(|(&g, &o)| (g, o)).collect()
    }
}

/// exp(πRZ_g/ζ + iθ_g + πRζ·conj(Z_g)).
pub fn semiflat(spec: &ProblemSpec, g: Charge, zeta: C) -> C {
    log_semiflat(spec, g, zeta).exp()
}

pub fn log_semiflat(spec: &ProblemSpec, g: Charge, zeta: C) -> C {
    let z = spec.central_charge(g);
    PI * spec.r * z / zeta + I * spec.theta(g) + PI * spec.r * zeta * z.conj()
}

/// Samples along one BPS ray.
#[derive(Clone, Debug, Serialize)]
pub struct RayData {
    pub charge: Charge,
    pub omega: i64,
    /// arg Z_γ; the ray is at phase φ + π.
    pub phi: f64,
    pub modulus: f64,
    pub s_max: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
    /// L_γ at the ray's own nodes.
    pub l: Vec<C>,
    /// log(1 − X_γ) at the nodes, continuous along the ray.
    pub f: Vec<C>,
}

impl RayData {
    pub fn zeta(&self, j: usize) -> C {
        -C::from_polar(1.0, self.phi) * self.nodes[j].exp()
    }

    /// Phase of the ray in [0, 2π).
    pub fn ray_phase(&self) -> f64 {
        (self.phi + PI).rem_euclid(TAU)
    }

    /// Coordinate w with ζ = −e^{iφ}e^{w}, Im w ∈ (−π, π].
    pub fn w_of(&self, zeta: C) -> C {
        let mut t = zeta.arg() - self.phi - PI;
        t = (t + PI).rem_euclid(TAU) - PI;
        if t <= -PI {
            t += TAU;
        }
        C::new(zeta.norm().ln(), t)
    }
}

/// Which boundary value to take when ζ lies on a ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    /// Limit from the counterclockwise side.
    Ccw,
    /// Limit from the clockwise side.
    Cw,
}

#[derive(Clone, Debug, Serialize)]
pub struct DarbouxField {
    pub rays: Vec<RayData>,
    pub iteration_count: usize,
    pub last_delta: f64,
    /// L for (γ₁, γ₂) at the probe points, used in the convergence metric.
    pub probes: Vec<C>,
    pub probe_values: Vec<[C; 2]>,
}

fn ray_cut(exponent_cut: f64, r: f64, modulus: f64) -> f64 {
    let x = exponent_cut / (TAU * r * modulus);
    if x > 1.0 {
        x.acosh().max(1.0)
    } else {
        1.0
    }
}

impl DarbouxField {
    /// Seed X^(0) = X^sf.
    pub fn semiflat(spec: &ProblemSpec) -> Result<Self, SolverError> {
        let n = spec.settings.nodes.max(3);
        let mut rays = Vec::new();
        for (g, omega) in spec.support() {
            let z = spec.central_charge(g);
            if z.norm() == 0.0 {
                return Err(SolverError::ZeroCharge(g));
            }
            let s_max = ray_cut(spec.settings.exponent_cut, spec.r, z.norm());
            let h = 2.0 * s_max / (n - 1) as f64;
            let nodes: Vec<f64> = (0..n).map(|j| -s_max + h * j as f64).collect();
            let mut ray = RayData {
                charge: g,
                omega,
                phi: z.arg(),
                modulus: z.norm(),
                s_max,
                h,
                nodes,
                l: vec![ZERO; n],
                f: vec![ZERO; n],
            };
            refresh_logs(spec, &mut ray)?;
            rays.push(ray);
        }
        let probes = probe_points(&rays);
        let probe_values = vec![[ZERO; 2]; probes.len()];
        Ok(DarbouxField { rays, iteration_count: 0, last_delta: f64::INFINITY, probes, probe_values })
    }
}

/// Unit-circle probes kept away from every ray.
fn probe_points(rays: &[RayData]) -> Vec<C> {
    let mut out = Vec::new();
    for k in 0..16 {
        let a = (k as f64 + 0.5) * TAU / 16.0;
        let clear = rays.iter().all(|r| {
            let d = (a - r.ray_phase()).rem_euclid(TAU);
            d.min(TAU - d) > 0.05
        });
        if clear {
            for rad in [0.5, 1.0, 2.0] {
                out.push(C::from_polar(rad, a));
            }
        }
    }
    out
}

fn refresh_logs(spec: &ProblemSpec, ray: &mut RayData) -> Result<(), SolverError> {
    let theta = spec.theta(ray.charge);
    let a = TAU * spec.r * ray.modulus;
    let mut prev: Option<C> = None;
    for j in 0..ray.nodes.len() {
        let s = ray.nodes[j];
        let x = (C::new(-a * s.cosh(), theta) + ray.l[j]).exp();
        let one_minus = ONE - x;
        if one_minus.norm() == 0.0 {
            return Err(SolverError::Branch(ray.charge));
        }
        let mut v = one_minus.ln();
        if let Some(p) = prev {
            let k = ((p.im - v.im) / TAU).round();
            v.im += k * TAU;
        }
        ray.f[j] = v;
        prev = Some(v);
    }
    Ok(())
}

/// coth(x) without overflow.
fn coth(x: C) -> C {
    if x.re >= 0.0 {
        let e = (-2.0 * x).exp();
        (ONE + e) / (ONE - e)
    } else {
        let e = (2.0 * x).exp();
        -(ONE + e) / (ONE - e)
    }
}

fn csch2(x: C) -> C {
    let s = if x.re.abs() > 350.0 { return ZERO } else { x.sinh() };
    ONE / (s * s)
}

/// Barycentric interpolation of the ray samples at complex w.
fn interpolate(ray: &RayData, w: C) -> C {
    const M: usize = 12;
    let n = ray.nodes.len();
    let pos = (w.re + ray.s_max) / ray.h;
    let centre = pos.round() as isize;
    let mut start = centre - (M as isize) / 2;
    start = start.clamp(0, (n - M) as isize);
    let start = start as usize;
    let mut num = ZERO;
    let mut den = ZERO;
    let mut binom = 1.0;
    for k in 0..M {
        if k > 0 {
            binom = binom * (M - k) as f64 / k as f64;
        }
        let wk = if k % 2 == 0 { binom } else { -binom };
        let d = w - ray.nodes[start + k];
        if d.norm() < 1e-300 {
            return ray.f[start + k];
        }
        num += ray.f[start + k] * wk / d;
        den += wk / d;
    }
    num / den
}

/// ∫_{−S}^{S} coth((s−w)/2) ds with the principal branch, side-selected on the ray.
fn kernel_integral(s_max: f64, w: C) -> C {
    let a = ((s_max - w) * 0.5).sinh().ln();
    let b = ((-s_max - w) * 0.5).sinh().ln();
    (a - b) * 2.0
}

/// ∫_{ℓ} ds coth((s−w)/2) F(s) over one ray at ζ = −e^{iφ}e^{w}.
pub fn ray_integral(ray: &RayData, zeta: C, side: Option<Side>) -> C {
    let mut w = ray.w_of(zeta);
    let near = w.im.abs() < 6.0 * ray.h + 0.05 && w.re.abs() < ray.s_max - 7.0 * ray.h;
    if w.im == 0.0 || (w.im.abs() < 1e-13 && side.is_some()) {
        // On the ray: pick the boundary value.
        let sgn = match side {
            Some(Side::Cw) => -1.0,
            _ => 1.0,
        };
        w.im = sgn * 1e-14;
    }
    let h = ray.h;
    let n = ray.nodes.len();
    if !near {
        let mut acc = ZERO;
        for j in 0..n {
            let wt = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += coth((ray.nodes[j] - w) * 0.5) * ray.f[j] * wt;
        }
        return acc * h;
    }
    let fw = interpolate(ray, w);
    let mut acc = ZERO;
    for j in 0..n {
        let d = ray.nodes[j] - w;
        let wt = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        if d.norm() < 1e-9 {
            // Removable point: average the neighbours.
            let lo = j.saturating_sub(1);
            let hi = (j + 1).min(n - 1);
            let gl = coth((ray.nodes[lo] - w) * 0.5) * (ray.f[lo] - fw);
            let gh = coth((ray.nodes[hi] - w) * 0.5) * (ray.f[hi] - fw);
            acc += (gl + gh) * 0.5 * wt;
            continue;
        }
        acc += coth(d * 0.5) * (ray.f[j] - fw) * wt;
    }
    let s = ray.s_max;
    // Euler–Maclaurin endpoint term for g(s) = coth((s−w)/2)(F(s) − F(w)).
    let gp = |x: f64, fx: C| -csch2((x - w) * 0.5) * (fx - fw) * 0.5;
    let em = (gp(s, ray.f[n - 1]) - gp(-s, ray.f[0])) * (h * h / 12.0);
    acc * h - em + fw * kernel_integral(s, w)
}

/// L_g(ζ) with optional side selection for rays passing through ζ.
pub fn evaluate_l(spec: &ProblemSpec, field: &DarbouxField, g: Charge, zeta: C, side: Option<Side>) -> C {
    let mut acc = ZERO;
    for ray in &field.rays {
        let p = pair(g, ray.charge);
        if p == 0 {
            continue;
        }
        acc += ray_integral(ray, zeta, side) * (ray.omega * p) as f64;
    }
    let _ = spec;
    acc * (-1.0 / (4.0 * PI)) / I
}

/// X_g(ζ) from the integral equation.
pub fn evaluate(spec: &ProblemSpec, field: &DarbouxField, g: Charge, zeta: C) -> C {
    (log_semiflat(spec, g, zeta) + evaluate_l(spec, field, g, zeta, None)).exp()
}

pub fn evaluate_side(spec: &ProblemSpec, field: &DarbouxField, g: Charge, zeta: C, side: Side) -> C {
    (log_semiflat(spec, g, zeta) + evaluate_l(spec, field, g, zeta, Some(side))).exp()
}

/// Υ_g(ζ) = θ_g − iL_g(ζ).
pub fn upsilon(spec: &ProblemSpec, field: &DarbouxField, g: Charge, zeta: C) -> C {
    C::new(spec.theta(g), 0.0) - I * evaluate_l(spec, field, g, zeta, None)
}

/// One Picard step.
pub fn iterate_once(spec: &ProblemSpec, field: &DarbouxField) -> Result<DarbouxField, SolverError> {
    let mut next = field.clone();
    let mut delta: f64 = 0.0;
    for (ri, ray) in field.rays.iter().enumerate() {
        let new_l: Vec<C> = (0..ray.nodes.len())
            .into_par_iter()
            .map(|j| {
                let zeta = ray.zeta(j);
                let mut acc = ZERO;
                for (rk, other) in field.rays.iter().enumerate() {
                    if rk == ri {
                        continue;
                    }
                    let p = pair(ray.charge, other.charge);
                    if p == 0 {
                        continue;
                    }
                    // A node on a coincident ray takes the counterclockwise value.
                    acc += ray_integral(other, zeta, Some(Side::Ccw)) * (other.omega * p) as f64;
                }
                acc * (-1.0 / (4.0 * PI)) / I
            })
            .collect();
        for (a, b) in new_l.iter().zip(&ray.l) {
            delta = delta.max((a - b).norm());
        }
        next.rays[ri].l = new_l;
    }
    let new_probe: Vec<[C; 2]> = field
        .probes
        .par_iter()
        .map(|&z| [evaluate_l(spec, field, Charge::G1, z, None), evaluate_l(spec, field, Charge::G2, z, None)])
        .collect();
    for (a, b) in new_probe.iter().zip(&field.probe_values) {
        delta = delta.max((a[0] - b[0]).norm()).max((a[1] - b[1]).norm());
    }
    next.probe_values = new_probe;
    for ray in next.rays.iter_mut() {
        refresh_logs(spec, ray)?;
    }
    next.iteration_count = field.iteration_count + 1;
    next.last_delta = delta;
    Ok(next)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub deltas: Vec<f64>,
    /// Geometric mean of successive delta ratios above the rounding floor.
    pub ratio: Option<f64>,
    pub converged: bool,
}

/// Fitted contraction ratio from a delta history, skipping the first step.
pub fn fit_ratio(deltas: &[f64]) -> Option<f64> {
    let usable: Vec<f64> = deltas.iter().skip(1).copied().take_while(|&d| d > 1e-15).collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let xs: Vec<f64> = (0..usable.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|d| d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some((sxy / sxx).exp())
}

/// Iterate to a fixed point.
pub fn solve(spec: &ProblemSpec) -> Result<(DarbouxField, ConvergenceReport), SolverError> {
    solve_with(spec, spec.settings.tol, spec.settings.max_iter)
}

pub fn solve_with(spec: &ProblemSpec, tol: f64, max_iter: usize) -> Result<(DarbouxField, ConvergenceReport), SolverError> {
    let mut field = DarbouxField::semiflat(spec)?;
    let mut deltas = Vec::new();
    let mut growing = 0;
    for _ in 0..max_iter {
        field = iterate_once(spec, &field)?;
        let d = field.last_delta;
        if let Some(&prev) = deltas.last() {
            if d >= prev && d > tol && deltas.len() >= 2 {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        deltas.push(d);
        if growing >= 3 {
            return Err(SolverError::NonContraction { deltas });
        }
        if d < tol {
            let ratio = fit_ratio(&deltas);
            let report = ConvergenceReport { iterations: deltas.len(), deltas, ratio, converged: true };
            return Ok((field, report));
        }
    }
    Err(SolverError::NoConvergence { iterations: deltas.len(), last_delta: field.last_delta })
}

/// Run exactly `iters` Picard steps regardless of tolerance.
pub fn iterate_n(spec: &ProblemSpec, iters: usize) -> Result<(DarbouxField, Vec<f64>), SolverError> {
    let mut field = DarbouxField::semiflat(spec)?;
    let mut deltas = Vec::new();
    for _ in 0..iters {
        field = iterate_once(spec, &field)?;
        deltas.push(field.last_delta);
    }
    Ok((field, deltas))
}

/// A point (X_γ₁, X_γ₂) of the complex torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TorusPoint(pub C, pub C);

impl TorusPoint {
    /// X_(p,q) = (−1)^{pq} X₁^p X₂^q.
    pub fn x(&self, g: Charge) -> C {
        let sign = if (g.0 * g.1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        self.0.powi(g.0 as i32) * self.1.powi(g.1 as i32) * sign
    }

    /// Apply K_g^n: X_γ' ↦ X_γ'(1 − X_g)^{n⟨γ',g⟩}.
    pub fn apply_k(&self, g: Charge, n: i64) -> TorusPoint {
        let f = ONE - self.x(g);
        let e1 = (n * pair(Charge::G1, g)) as i32;
        let e2 = (n * pair(Charge::G2, g)) as i32;
        TorusPoint(self.0 * f.powi(e1), self.1 * f.powi(e2))
    }

    pub fn dist(&self, o: &TorusPoint) -> f64 {
        ((self.0 - o.0) / o.0).norm().max(((self.1 - o.1) / o.1).norm())
    }
}

pub fn evaluate_point(spec: &ProblemSpec, field: &DarbouxField, zeta: C, side: Option<Side>) -> TorusPoint {
    let l1 = evaluate_l(spec, field, Charge::G1, zeta, side);
    let l2 = evaluate_l(spec, field, Charge::G2, zeta, side);
    TorusPoint(
        (log_semiflat(spec, Charge::G1, zeta) + l1).exp(),
        (log_semiflat(spec, Charge::G2, zeta) + l2).exp(),
    )
}

/// Charges with Ω ≠ 0 whose ray sits at `phase`.
pub fn charges_on_ray(spec: &ProblemSpec, phase: f64, tol: f64) -> Vec<(Charge, i64)> {
    spec.support()
        .into_iter()
        .filter(|&(g, _)| {
            let z = spec.central_charge(g);
            let d = ((z.arg() + PI) - phase).rem_euclid(TAU);
            d.min(TAU - d) < tol
        })
        .collect()
}

/// Apply S_ℓ⁻¹ = ∏ K_γ^{−Ω} to a point.
pub fn apply_stokes_inverse(p: TorusPoint, factors: &[(Charge, i64)]) -> TorusPoint {
    factors.iter().fold(p, |acc, &(g, o)| acc.apply_k(g, -o))
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpReport {
    pub ray_phase: f64,
    /// max |X⁺ − S⁻¹X⁻| (relative) over probes using boundary values on the ray.
    pub residual: f64,
    /// Same comparison at finite offsets ζe^{±iδ}; includes the O(δ) motion of ζ.
    pub offset_residual: f64,
}

/// Check X⁺ = S_ℓ⁻¹ X⁻ along the ray at `phase`, with + the counterclockwise side.
pub fn jump_check(spec: &ProblemSpec, field: &DarbouxField, phase: f64, radii: &[f64]) -> JumpReport {
    let factors = charges_on_ray(spec, phase, 1e-9);
    let delta = spec.settings.delta;
    let mut residual: f64 = 0.0;
    let mut offset_residual: f64 = 0.0;
    for &r in radii {
        let zeta = C::from_polar(r, phase);
        let plus = evaluate_point(spec, field, zeta, Some(Side::Ccw));
        let minus = evaluate_point(spec, field, zeta, Some(Side::Cw));
        residual = residual.max(plus.dist(&apply_stokes_inverse(minus, &factors)));
        let po = evaluate_point(spec, field, C::from_polar(r, phase + delta), None);
        let mo = evaluate_point(spec, field, C::from_polar(r, phase - delta), None);
        offset_residual = offset_residual.max(po.dist(&apply_stokes_inverse(mo, &factors)));
    }
    JumpReport { ray_phase: phase, residual, offset_residual }
}

/// Distinct ray phases of the spectrum, sorted in [0, 2π).
pub fn ray_phases(spec: &ProblemSpec) -> Vec<f64> {
    let mut ph: Vec<f64> = spec.support().iter().map(|&(g, _)| (spec.central_charge(g).arg() + PI).rem_euclid(TAU)).collect();
    ph.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ph.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    ph
}

/// Composite jump across the sector (from, to), taken counterclockwise.
///
/// At ζ = r·e^{i·to} the actual value must equal the ordered composition of
/// the single-ray maps S⁻¹ applied to the function continued from the
/// clockwise edge. The continuation subtracts each crossed ray's boundary
/// jump 4πi·F(w). Returns the worst relative mismatch over `radii`.
pub fn sector_jump_check(spec: &ProblemSpec, field: &DarbouxField, from: f64, to: f64, radii: &[f64]) -> f64 {
    let width = (to - from).rem_euclid(TAU);
    let mut inside: Vec<f64> = ray_phases(spec)
        .into_iter()
        .map(|p| from + (p - from).rem_euclid(TAU))
        .filter(|&p| p > from && p < from + width)
        .collect();
    inside.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut worst: f64 = 0.0;
    for &r in radii {
        let zeta = C::from_polar(r, to);
        let actual = evaluate_point(spec, field, zeta, None);
        let mut p = evaluate_point_continued(spec, field, zeta, &inside);
        for &ph in &inside {
            let factors = charges_on_ray(spec, ph.rem_euclid(TAU), 1e-9);
            p = apply_stokes_inverse(p, &factors);
        }
        worst = worst.max(actual.dist(&p));
    }
    worst
}

/// The solution continued to ζ from the clockwise side of every ray in `phases`.
pub fn evaluate_point_continued(spec: &ProblemSpec, field: &DarbouxField, zeta: C, phases: &[f64]) -> TorusPoint {
    let mut l = [ZERO; 2];
    for ray in &field.rays {
        let crossed = phases.iter().any(|&p| {
            let d = (ray.ray_phase() - p.rem_euclid(TAU)).rem_euclid(TAU);
            d.min(TAU - d) < 1e-9
        });
        let mut val = ray_integral(ray, zeta, None);
        let w = ray.w_of(zeta);
        if crossed && w.im > 0.0 {
            val -= interpolate(ray, w) * (4.0 * PI) * I;
        }
        for (k, g) in [Charge::G1, Charge::G2].iter().enumerate() {
            let p = pair(*g, ray.charge);
            if p != 0 {
                l[k] += val * (ray.omega * p) as f64;
            }
        }
    }
    let scale = (-1.0 / (4.0 * PI)) / I;
    TorusPoint(
        (log_semiflat(spec, Charge::G1, zeta) + l[0] * scale).exp(),
        (log_semiflat(spec, Charge::G2, zeta) + l[1] * scale).exp(),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct RealityReport {
    pub residual: f64,
}

/// max |conj(X_{−γ}(−1/ζ̄)) − X_γ(ζ)| over probes and both basis charges.
pub fn reality_check(spec: &ProblemSpec, field: &DarbouxField, probes: &[C]) -> f64 {
    let mut worst: f64 = 0.0;
    for &z in probes {
        let zr = -ONE / z.conj();
        for g in [Charge::G1, Charge::G2, Charge::G1 + Charge::G2] {
            let a = evaluate(spec, field, -g, zr).conj();
            let b = evaluate(spec, field, g, z);
            worst = worst.max((a - b).norm() / b.norm().max(1e-300));
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticEstimate {
    pub direction: f64,
    /// log(X/X^sf) at the smallest radius.
    pub log_ratio: C,
    /// log(X/X^sf) at ζ = 0 from the Cauchy integral with kernel +1.
    pub limit: C,
}

/// log(X_γ/X_γ^sf) along ζ → 0 in the given directions.
pub fn asymptotics_check(spec: &ProblemSpec, field: &DarbouxField, g: Charge, directions: &[f64], radius: f64) -> Vec<AsymptoticEstimate> {
    let limit = zero_limit(field, g);
    directions
        .iter()
        .map(|&d| {
            let z = C::from_polar(radius, d);
            AsymptoticEstimate { direction: d, log_ratio: evaluate_l(spec, field, g, z, None), limit }
        })
        .collect()
}

/// L_γ(0) = −(1/4πi) Σ Ω⟨γ,γ'⟩ ∫ F ds.
pub fn zero_limit(field: &DarbouxField, g: Charge) -> C {
    let mut acc = ZERO;
    for ray in &field.rays {
        let p = pair(g, ray.charge);
        if p == 0 {
            continue;
        }
        let n = ray.f.len();
        let mut s = ZERO;
        for (j, f) in ray.f.iter().enumerate() {
            let wt = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            s += f * wt;
        }
        acc += s * ray.h * (ray.omega * p) as f64;
    }
    acc * (-1.0 / (4.0 * PI)) / I
}

/// Leading saddle-point value of Υ_γ after one iteration:
/// θ_γ − (1/4π) Σ Ω⟨γ,γ'⟩ K(ζ_γ', ζ) e^{iθ_γ'} e^{−2πR|Z'|}/√(R|Z'|), ζ_γ' = −Z'/|Z'|.
pub fn saddle_estimate(spec: &ProblemSpec, g: Charge, zeta: C) -> C {
    let mut acc = ZERO;
    for (gp, omega) in spec.support() {
        let p = pair(g, gp);
        if p == 0 {
            continue;
        }
        let z = spec.central_charge(gp);
        let m = z.norm();
        let zs = -z / m;
        let k = (zs + zeta) / (zs - zeta);
        let amp = (-TAU * spec.r * m).exp() / (spec.r * m).sqrt();
        acc += k * C::from_polar(amp, spec.theta(gp)) * (omega * p) as f64;
    }
    C::new(spec.theta(g), 0.0) - acc / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge_lattice::Region;
    use crate::spectral_periods::pentagon_periods;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn ov_spec(a: C, r: f64, te: f64, tm: f64) -> ProblemSpec {
        let model = CentralChargeModel::OvClassical;
        ProblemSpec::from_model(&model, a, BpsSpectrum::ooguri_vafa(), r, TorusAngles::new(tm, te)).unwrap()
    }

    fn pentagon_spec(u: C, r: f64) -> ProblemSpec {
        let z = pentagon_periods(u).unwrap();
        ProblemSpec::new(z, BpsSpectrum::pentagon(Region::Inside), r, TorusAngles::new(0.7, 2.2))
    }

    #[test]
    fn semiflat_examples() {
        let spec = ov_spec(c(0.3, 0.4), 1.3, 1.1, 0.4);
        let g = Charge::G2;
        let zg = spec.central_charge(g);
        for k in 0..8 {
            let z = C::from_polar(1.0, 0.3 + k as f64);
            let expect = (TAU * spec.r * zg.norm() * (z.arg() - zg.arg()).cos()).exp();
            assert!((semiflat(&spec, g, z).norm() - expect).abs() < 1e-12 * expect);
        }
        let zs = -zg / zg.norm();
        let v = semiflat(&spec, g, zs);
        let want = C::from_polar((-TAU * spec.r * zg.norm()).exp(), spec.theta(g));
        assert!((v - want).norm() < 1e-14);
    }

    #[test]
    fn zero_spectrum_is_semiflat() {
        let spec = ProblemSpec::new([c(1.0, 0.2), c(-0.3, 0.8)], BpsSpectrum::empty(), 1.0, TorusAngles::new(0.2, 0.3));
        let (field, rep) = solve(&spec).unwrap();
        assert!(rep.deltas.iter().all(|&d| d == 0.0));
        let z = c(0.4, 0.9);
        assert_eq!(evaluate(&spec, &field, Charge(1, 1), z), semiflat(&spec, Charge(1, 1), z));
        let same = iterate_once(&spec, &field).unwrap();
        assert_eq!(same.rays.len(), 0);
    }

    #[test]
    fn ov_electric_unchanged_and_one_iteration() {
        let spec = ov_spec(c(0.2, 0.1), 1.0, 1.9, 0.5);
        let (field, rep) = solve(&spec).unwrap();
        assert!(rep.iterations <= 2);
        for ray in &field.rays {
            assert!(ray.l.iter().all(|l| l.norm() == 0.0));
        }
        let (f1, _) = iterate_n(&spec, 1).unwrap();
        let (f2, d) = iterate_n(&spec, 2).unwrap();
        assert!(d[1] < 1e-14);
        let z = c(0.3, 0.6);
        let a = upsilon(&spec, &f1, Charge::G1, z);
        let b = upsilon(&spec, &f2, Charge::G1, z);
        assert!((a - b).norm() < 1e-14);
        assert!((upsilon(&spec, &f2, Charge::G2, z) - spec.theta(Charge::G2)).norm() < 1e-15);
    }

    #[test]
    fn twisted_multiplicativity() {
        let spec = pentagon_spec(c(0.1, 0.2), 1.0);
        let (field, _) = solve(&spec).unwrap();
        let z = c(0.6, -0.7);
        let (g, h) = (Charge(1, 0), Charge(0, 1));
        let lhs = evaluate(&spec, &field, g + h, z);
        let rhs = evaluate(&spec, &field, g, z) * evaluate(&spec, &field, h, z) * (-1.0);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn ov_jump_is_one_minus_xe_inverse() {
        let spec = ov_spec(c(0.3, 0.2), 1.0, 2.0, 0.7);
        let (field, _) = solve(&spec).unwrap();
        let ph = (spec.central_charge(Charge::G2).arg() + PI).rem_euclid(TAU);
        for r in [0.3, 1.0, 2.5] {
            let z = C::from_polar(r, ph);
            let plus = evaluate_side(&spec, &field, Charge::G1, z, Side::Ccw);
            let minus = evaluate_side(&spec, &field, Charge::G1, z, Side::Cw);
            let xe = evaluate(&spec, &field, Charge::G2, z);
            let ratio = plus / minus;
            assert!((ratio - ONE / (ONE - xe)).norm() < 1e-9, "{ratio} vs {}", ONE / (ONE - xe));
        }
        let rep = jump_check(&spec, &field, ph, &[0.5, 1.0, 2.0]);
        assert!(rep.residual < 1e-9);
    }

    #[test]
    fn pentagon_jumps_and_reality() {
        let spec = pentagon_spec(c(0.0, 0.0), 2.0);
        let (field, _) = solve(&spec).unwrap();
        for ph in ray_phases(&spec) {
            let rep = jump_check(&spec, &field, ph, &[0.3, 1.0, 3.0]);
            assert!(rep.residual < 1e-9, "phase {ph}: {}", rep.residual);
        }
        let probes: Vec<C> = (0..8).map(|k| C::from_polar(0.8, 0.3 + k as f64 * 0.77)).collect();
        assert!(reality_check(&spec, &field, &probes) < 1e-10);
    }

    #[test]
    fn saddle_estimate_limits() {
        let spec = ov_spec(c(0.3, 0.1), 1.0, 1.0, 0.5);
        let z = c(0.2, 0.9);
        assert_eq!(saddle_estimate(&spec, Charge::G2, z), c(spec.theta(Charge::G2), 0.0));
        let far = pentagon_spec(c(0.0, 0.0), 40.0);
        let v = saddle_estimate(&far, Charge::G2, z);
        assert!((v - far.theta(Charge::G2)).norm() < 1e-100);
    }

    #[test]
    fn kernel_integral_matches_quadrature() {
        let w = c(0.3, 0.4);
        let s = 2.5;
        let q = crate::quadrature::adaptive_c(-s, s, 1e-13, 30, |x| coth((x - w) * 0.5));
        assert!((q.value - kernel_integral(s, w)).norm() < 1e-11);
        // Boundary values differ by 4πi.
        let up = kernel_integral(s, c(0.2, 1e-14));
        let dn = kernel_integral(s, c(0.2, -1e-14));
        assert!((up - dn - c(0.0, 4.0 * PI)).norm() < 1e-10);
    }

    fn region_spec(u: C, r: f64) -> ProblemSpec {
        let z = pentagon_periods(u).unwrap();
        let region = crate::wall_gauge::pentagon_region(z, u);
        ProblemSpec::new(z, BpsSpectrum::pentagon(region), r, TorusAngles::new(0.7, 2.2))
    }

    #[test]
    fn grid_refinement_is_stable() {
        let spec = pentagon_spec(c(0.3, 0.2), 1.0);
        let fine = spec.clone().with_settings(SolverSettings { nodes: 513, ..spec.settings });
        let (a, _) = solve(&spec).unwrap();
        let (b, _) = solve(&fine).unwrap();
        for k in 0..8 {
            let z = C::from_polar(0.5 + 0.3 * k as f64, 0.2 + 0.8 * k as f64);
            let (x, y) = (evaluate_point(&spec, &a, z, None), evaluate_point(&fine, &b, z, None));
            assert!(x.dist(&y) < 10.0 * spec.settings.tol, "{}", x.dist(&y));
        }
    }

    #[test]
    fn solution_is_continuous_across_the_wall() {
        // The gap across the wall shrinks linearly with the separation: the
        // field is continuous there, not merely close.
        let wall = crate::wall_gauge::find_walls(0.3).unwrap().into_iter().find(|w| w.u.im > 0.0).unwrap();
        let normal = (wall.u - C::new(2.0, 0.0)) / (wall.u - C::new(2.0, 0.0)).norm();
        let gap = |sep: f64| {
            let (inner, outer) = (region_spec(wall.u - normal * (0.5 * sep), 2.0), region_spec(wall.u + normal * (0.5 * sep), 2.0));
            assert_ne!(inner.spectrum.region, outer.spectrum.region);
            let (fi, _) = solve(&inner).unwrap();
            let (fo, _) = solve(&outer).unwrap();
            let merged = (inner.central_charge(Charge::G1).arg() + PI).rem_euclid(TAU);
            (0..12)
                .map(|k| {
                    let z = C::from_polar(0.9, merged + 0.4 + (TAU - 0.8) * k as f64 / 11.0);
                    evaluate_point(&inner, &fi, z, None).dist(&evaluate_point(&outer, &fo, z, None))
                })
                .fold(0.0, f64::max)
        };
        let (g1, g2) = (gap(1e-3), gap(5e-4));
        assert!(g1 < 2e-2, "{g1}");
        assert!((1.8..2.2).contains(&(g1 / g2)), "{g1} {g2}");
    }

    #[test]
    fn composite_jump_across_nearly_merged_rays() {
        let wall = crate::wall_gauge::find_walls(0.3).unwrap().into_iter().find(|w| w.u.im > 0.0).unwrap();
        for shift in [-0.02, 0.02] {
            let spec = region_spec(wall.u + (wall.u - C::new(2.0, 0.0)) * shift, 2.0);
            let (field, _) = solve(&spec).unwrap();
            let ph: Vec<f64> = ray_phases(&spec);
            // A thin sector around the close pair. The continuation interpolates F
            // off the ray locally, so the edges stay within a few grid spacings.
            let mut best = (0, f64::INFINITY);
            for i in 0..ph.len() {
                let gap = (ph[(i + 1) % ph.len()] - ph[i]).rem_euclid(TAU);
                if gap < best.1 {
                    best = (i, gap);
                }
            }
            let from = ph[best.0] - 0.01;
            let to = ph[(best.0 + 1) % ph.len()] + 0.01;
            let r = sector_jump_check(&spec, &field, from, to, &[0.5, 1.0, 2.0]);
            assert!(r < 1e-9, "shift {shift}: {r}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn deltas_decrease_after_the_second_iteration(re in -1.0f64..1.0, im in -1.0f64..1.0, r in 0.6f64..3.0) {
            let spec = region_spec(c(re, im), r);
            let (_, rep) = solve_with(&spec, 1e-14, 40).unwrap();
            let live: Vec<f64> = rep.deltas.iter().skip(1).copied().take_while(|&d| d > 1e-15).collect();
            prop_assert!(live.windows(2).all(|w| w[1] < w[0]), "{:?}", rep.deltas);
        }
    }
}
