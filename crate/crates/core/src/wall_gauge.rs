//! Gauge machinery at the Pentagon singular fiber u = 2, where γ₂ = γ_e
//! vanishes. The ψ maps reparametrize θ_m so that the magnetic coordinate has
//! a limit as a = Z_e → 0, the final gauge removes the dependence on the
//! direction of approach, and the continued X_m is single valued around u = 2.

use std::cell::Cell;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::charge_lattice::{twisted_angle_raw, BpsSpectrum, Charge, Region, TorusAngles};
use crate::quadrature::adaptive_c;
use crate::rh_solver::{evaluate, evaluate_point, solve, upsilon, DarbouxField, ProblemSpec, SolverError, SolverSettings, TorusPoint};
use crate::spectral_periods::{combine, locate_wall, pentagon_periods, CentralChargeModel, PeriodError, PeriodTracker};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ONE: C = C::new(1.0, 0.0);

pub const ELECTRIC: Charge = Charge::G2;
pub const MAGNETIC: Charge = Charge::G1;
pub const SINGULAR_U: C = C::new(2.0, 0.0);

#[derive(Debug, Error)]
pub enum WallError {
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("a = 0: the gauge maps need a regular fiber")]
    SingularFiber,
    #[error("ψ diverges: 1 − X_{0} vanishes on its own ray")]
    Divergent(Charge),
    #[error("contour meets a zero of 1 − e^{{iΥ_e}} near ζ = {0}")]
    ContourZero(C),
    #[error("ray crossing ambiguous at path step {0}; refine the path")]
    Crossing(usize),
    #[error("no wall of marginal stability found on |u − 2| = {0}")]
    NoWall(f64),
    #[error("loop monodromy is not a Picard–Lefschetz shift: ΔZ₁/Z₂ = {0}")]
    Monodromy(C),
    #[error("θ_m fixed point did not converge (last step {0:e})")]
    GaugeSolve(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallSide {
    Inside,
    Outside,
}

/// Type I: γ_e+γ_m binds where Z_e ∥ Z_m. Type II: −γ_e+γ_m where Z_e ∥ −Z_m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WallType {
    I,
    II,
}

impl WallType {
    pub fn bound_state(self) -> Charge {
        match self {
            WallType::I => ELECTRIC + MAGNETIC,
            WallType::II => MAGNETIC - ELECTRIC,
        }
    }

    /// Orientation of the bound state whose ray merges with ℓ_e at the wall.
    /// ψ is odd under γ → −γ, so for type II this is e − m.
    pub fn psi_charge(self) -> Charge {
        match self {
            WallType::I => ELECTRIC + MAGNETIC,
            WallType::II => ELECTRIC - MAGNETIC,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeMap {
    pub region: WallSide,
    pub wall_type: WallType,
    pub value: f64,
}

/// Region of u in the period frame continued straight from u = 0. Inside
/// shares the sign of Im(Z₁/Z₂) with u = 0; outside, the frame's cut along
/// [2, ∞) separates the γ₁+γ₂ chamber above from the γ₁−γ₂ chamber below.
pub fn pentagon_region(z: [C; 2], u: C) -> Region {
    if (z[0] / z[1]).im < 0.0 {
        Region::Inside
    } else if u.im >= 0.0 {
        Region::OutsideI
    } else {
        Region::OutsideII
    }
}

pub fn wall_type_of(z: [C; 2]) -> WallType {
    if (z[0] / z[1]).re > 0.0 {
        WallType::I
    } else {
        WallType::II
    }
}

/// Solver inputs shared by every Pentagon evaluation.
#[derive(Clone, Debug)]
pub struct PentagonSetup {
    pub r: f64,
    pub settings: SolverSettings,
}

impl PentagonSetup {
    pub fn new(r: f64) -> Self {
        PentagonSetup { r, settings: SolverSettings::default() }
    }

    pub fn spec(&self, u: C, angles: TorusAngles) -> Result<ProblemSpec, WallError> {
        let z = pentagon_periods(u)?;
        let spectrum = BpsSpectrum::pentagon(pentagon_region(z, u));
        Ok(ProblemSpec::new(z, spectrum, self.r, angles).with_settings(self.settings))
    }

    pub fn solve(&self, u: C, angles: TorusAngles) -> Result<(ProblemSpec, DarbouxField), WallError> {
        let spec = self.spec(u, angles)?;
        let (field, _) = solve(&spec)?;
        Ok((spec, field))
    }
}

/// (1/2π)∫₀¹ (dt/t) log|(1 − X_g(−te^{iφ}))/(1 − X_{−g}(te^{iφ}))| with φ = arg Z_g,
/// integrated in x = −log t.
pub fn psi_term(spec: &ProblemSpec, field: &DarbouxField, g: Charge) -> Result<f64, WallError> {
    let z = spec.central_charge(g);
    if z.norm() == 0.0 {
        return Err(WallError::SingularFiber);
    }
    let dir = C::from_polar(1.0, z.arg());
    let xmax = (40.0 / (PI * spec.r * z.norm())).ln().max(0.0) + 2.0;
    let hit = Cell::new(false);
    let f = |x: f64| {
        let t = (-x).exp();
        let num = (ONE - evaluate(spec, field, g, -dir * t)).norm();
        let den = (ONE - evaluate(spec, field, -g, dir * t)).norm();
        if num == 0.0 || den == 0.0 || !num.is_finite() || !den.is_finite() {
            hit.set(true);
            return C::new(0.0, 0.0);
        }
        C::new((num / den).ln(), 0.0)
    };
    let v = adaptive_c(0.0, xmax, 1e-13, 30, f).value.re;
    if hit.get() {
        return Err(WallError::Divergent(g));
    }
    Ok(v / TAU)
}

/// ψ_in, or ψ_out with the bound-state term of the given wall type.
pub fn psi(side: WallSide, wall_type: WallType, spec: &ProblemSpec, field: &DarbouxField) -> Result<f64, WallError> {
    let mut v = psi_term(spec, field, ELECTRIC)?;
    if side == WallSide::Outside {
        v += psi_term(spec, field, wall_type.psi_charge())?;
    }
    Ok(v)
}

/// ψ at a base point, with the side and wall type read off the spectrum.
pub fn psi_at(spec: &ProblemSpec, field: &DarbouxField) -> Result<GaugeMap, WallError> {
    let (region, wall_type) = match spec.spectrum.region {
        Region::OutsideI => (WallSide::Outside, WallType::I),
        Region::OutsideII => (WallSide::Outside, WallType::II),
        _ => (WallSide::Inside, wall_type_of(spec.z)),
    };
    Ok(GaugeMap { region, wall_type, value: psi(region, wall_type, spec, field)? })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocatedWall {
    pub u: C,
    pub wall_type: WallType,
}

/// Walls of marginal stability crossing the circle |u − 2| = ρ, found by
/// scanning Im(Z₁/Z₂) for sign changes away from the frame cut.
pub fn find_walls(rho: f64) -> Result<Vec<LocatedWall>, WallError> {
    let model = CentralChargeModel::PentagonCubic;
    let n = 72;
    let ph: Vec<f64> = (0..n).map(|k| -PI + (k as f64 + 0.5) * TAU / n as f64).collect();
    let pts: Vec<C> = ph.iter().map(|&p| SINGULAR_U + C::from_polar(rho, p)).collect();
    let vals: Vec<f64> = pts.iter().map(|&u| pentagon_periods(u).map(|z| (z[0] / z[1]).im)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for k in 0..n - 1 {
        if ph[k] < 0.0 && ph[k + 1] > 0.0 {
            continue;
        }
        if vals[k].signum() != vals[k + 1].signum() {
            let w = locate_wall(&model, pts[k], pts[k + 1], Charge::G1, Charge::G2, 1e-14)?;
            out.push(LocatedWall { u: w.u, wall_type: if w.re_ratio > 0.0 { WallType::I } else { WallType::II } });
        }
    }
    if out.is_empty() {
        return Err(WallError::NoWall(rho));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct WallCheck {
    pub wall_point: [f64; 2],
    pub wall_type: WallType,
    pub psi_in: f64,
    pub psi_out: f64,
    pub discrepancy: f64,
}

/// ψ_in and ψ_out on either side of a wall point, `eps` apart in angle about u = 2.
pub fn wall_check(setup: &PentagonSetup, wall: LocatedWall, angles: TorusAngles, eps: f64) -> Result<WallCheck, WallError> {
    let d = wall.u - SINGULAR_U;
    let a = SINGULAR_U + d * C::from_polar(1.0, eps);
    let b = SINGULAR_U + d * C::from_polar(1.0, -eps);
    let (sa, fa) = setup.solve(a, angles)?;
    let (sb, fb) = setup.solve(b, angles)?;
    let (ga, gb) = (psi_at(&sa, &fa)?, psi_at(&sb, &fb)?);
    let (inside, outside) = if ga.region == WallSide::Inside { (ga, gb) } else { (gb, ga) };
    Ok(WallCheck {
        wall_point: [wall.u.re, wall.u.im],
        wall_type: wall.wall_type,
        psi_in: inside.value,
        psi_out: outside.value,
        discrepancy: (inside.value - outside.value).abs(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QMap {
    pub theta_m: Vec<f64>,
    pub q: Vec<f64>,
    pub dpsi_max: f64,
    pub monotone: bool,
    /// |Q(θ₀ + 2π) − Q(θ₀) − 2π|.
    pub period_defect: f64,
}

/// Q(θ_m) = θ_m + ψ(a, θ) on an n-point grid, with ∂ψ/∂θ_m by central differences.
pub fn q_map(setup: &PentagonSetup, u: C, theta_e: f64, n: usize, h: f64) -> Result<QMap, WallError> {
    let psi_of = |tm: f64| -> Result<f64, WallError> {
        let (spec, field) = setup.solve(u, TorusAngles::new(tm, theta_e))?;
        Ok(psi_at(&spec, &field)?.value)
    };
    let theta_m: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let rows: Vec<(f64, f64)> = theta_m
        .par_iter()
        .map(|&t| -> Result<(f64, f64), WallError> {
            let p = psi_of(t)?;
            let d = (psi_of(t + h)? - psi_of(t - h)?) / (2.0 * h);
            Ok((t + p, d))
        })
        .collect::<Result<_, _>>()?;
    let q: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dpsi_max = rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let wrapped = q[0] + psi_of(TAU)? - psi_of(0.0)? + TAU;
    let period_defect = (wrapped - q[0] - TAU).abs();
    let increasing = q.windows(2).all(|w| w[1] > w[0]) && q[0] + TAU > q[n - 1];
    Ok(QMap { theta_m, q, dpsi_max, monotone: increasing && dpsi_max < 1.0, period_defect })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeBracket {
    /// The real bracket entering θ̃_m.
    pub value: f64,
    /// Imaginary residue, zero up to the reality of the solution.
    pub imag: f64,
    /// Radius of the arc actually used, after zero avoidance.
    pub radius: f64,
}

/// ∫_{C_e}(dζ′/ζ′)log(1 − e^{iΥ_e}) − ∫_{C_{−e}}(dζ′/ζ′)log(1 − e^{−iΥ_e}).
///
/// C_e runs along the unit circle from the current ℓ_e phase to the ℓ_e
/// phase of the reference direction arg a = `ref_arg_a`, the short way.
/// C_{−e} = −1/conj(C_e), traversed in the same angular sense. With that
/// orientation the two integrals are conjugate and their difference is real.
pub fn gauge_bracket(spec: &ProblemSpec, field: &DarbouxField, ref_arg_a: f64) -> Result<GaugeBracket, WallError> {
    let a = spec.central_charge(ELECTRIC);
    if a.norm() == 0.0 {
        return Err(WallError::SingularFiber);
    }
    let start = a.arg() + PI;
    let span = {
        let d = (ref_arg_a + PI - start).rem_euclid(TAU);
        if d > PI {
            d - TAU
        } else {
            d
        }
    };
    if span == 0.0 {
        return Ok(GaugeBracket { value: 0.0, imag: 0.0, radius: 1.0 });
    }
    let ue = |z: C| (I * upsilon(spec, field, ELECTRIC, z)).exp();
    let clear = |rad: f64| {
        (0..=64).all(|k| {
            let al = start + span * k as f64 / 64.0;
            (ONE - ue(C::from_polar(rad, al))).norm() >= 1e-6
        })
    };
    let radius = if clear(1.0) {
        1.0
    } else if clear(1.0 + 1e-3) {
        1.0 + 1e-3
    } else {
        return Err(WallError::ContourZero(C::from_polar(1.0, start)));
    };
    let f = |al: f64| {
        let z = C::from_polar(radius, al);
        let zm = -ONE / z.conj();
        let l1 = (ONE - ue(z)).ln();
        let l2 = (ONE - ONE / ue(zm)).ln();
        I * (l1 - l2)
    };
    let v = adaptive_c(start, start + span, 1e-13, 30, f).value;
    Ok(GaugeBracket { value: v.re, imag: v.im, radius })
}

/// θ̃_m = θ′_m − bracket/2π.
pub fn final_gauge(theta_m_prime: f64, spec: &ProblemSpec, field: &DarbouxField, ref_arg_a: f64) -> Result<(f64, GaugeBracket), WallError> {
    let b = gauge_bracket(spec, field, ref_arg_a)?;
    Ok((theta_m_prime - b.value / TAU, b))
}

/// u with Z_e(u) = a near u = 2, by Newton iteration in the straight-line frame.
pub fn u_of_a(a: C) -> Result<C, WallError> {
    if a.norm() == 0.0 {
        return Err(WallError::SingularFiber);
    }
    let ze = |u: C| pentagon_periods(u).map(|z| z[1]);
    let slope = |u: C| -> Result<C, WallError> {
        let h = 1e-6 * (u - SINGULAR_U).norm().max(1e-6);
        Ok((ze(u + h)? - ze(u - h)?) / (2.0 * h))
    };
    let probe = SINGULAR_U - 0.05;
    let mut u = SINGULAR_U + a / slope(probe)?;
    for _ in 0..30 {
        let step = (ze(u)? - a) / slope(u)?;
        u -= step;
        if step.norm() < 1e-15 * (u - SINGULAR_U).norm().max(1e-300) {
            break;
        }
    }
    Ok(u)
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugedValue {
    pub u: C,
    pub theta_m: f64,
    pub psi: f64,
    pub bracket: f64,
    pub x_m: C,
}

/// X_m at Z_e = a with the bare θ_m chosen so that θ̃_m = `theta_tilde`.
pub fn gauged_magnetic(
    setup: &PentagonSetup,
    a: C,
    theta_e: f64,
    theta_tilde: f64,
    ref_arg_a: f64,
    zeta: C,
) -> Result<GaugedValue, WallError> {
    let u = u_of_a(a)?;
    let mut tm = theta_tilde;
    for _ in 0..8 {
        let (spec, field) = setup.solve(u, TorusAngles::new(tm, theta_e))?;
        let p = psi_at(&spec, &field)?.value;
        let (tt, b) = final_gauge(tm + p, &spec, &field, ref_arg_a)?;
        let step = theta_tilde - tt;
        if step.abs() < 1e-13 {
            let x_m = evaluate(&spec, &field, MAGNETIC, zeta);
            return Ok(GaugedValue { u, theta_m: tm, psi: p, bracket: b.value, x_m });
        }
        tm += step;
    }
    Err(WallError::GaugeSolve(f64::NAN))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Crossing {
    pub step: usize,
    pub charge: Charge,
    /// Power of K applied to the actual value to continue the earlier branch.
    pub exponent: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Continuation {
    pub crossings: Vec<Crossing>,
    /// Spectrum support (positive representatives) at the end, in the tracked frame.
    pub final_spectrum: Vec<Charge>,
    pub periods_start: [C; 2],
    pub periods_end: [C; 2],
    pub start: TorusPoint,
    pub end_raw: TorusPoint,
    pub continued: TorusPoint,
}

fn ray_phase(z: C) -> f64 {
    z.arg() + PI
}

fn signed_gap(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Continue (X₁, X₂)(ζ) along a path of base points.
///
/// Periods are tracked continuously from `path[0]`, reached from u = 0 by a
/// straight line. The spectrum follows the wall-crossing rule: a wall adds
/// A ± B when inside, and removes the state of largest |Z| when leaving the
/// outside chamber. Each time a BPS ray sweeps past ζ the actual value is
/// mapped back to the branch it continues, with K_γ^{∓Ω} for counterclockwise
/// or clockwise motion. Solves happen only at the two ends.
pub fn continue_xm(setup: &PentagonSetup, path: &[C], start_angles: TorusAngles, end_angles: TorusAngles, zeta: C) -> Result<Continuation, WallError> {
    let mut tracker = PeriodTracker::new();
    tracker.move_to(path[0]);
    let z0 = tracker.periods()?;
    let mut hyper: Vec<Charge> = match pentagon_region(z0, path[0]) {
        Region::Inside => vec![Charge::G1, Charge::G2],
        Region::OutsideI => vec![Charge::G1, Charge::G2, Charge::G1 + Charge::G2],
        _ => vec![Charge::G1, Charge::G2, Charge::G1 - Charge::G2],
    };
    let arg_zeta = zeta.arg();
    let mut crossings = Vec::new();
    let mut z_prev = z0;
    for (k, &u) in path.iter().enumerate().skip(1) {
        tracker.move_to(u);
        let z = tracker.periods()?;
        for &g in &hyper {
            for s in [g, -g] {
                let p0 = ray_phase(combine(z_prev, s));
                let d = signed_gap(p0, ray_phase(combine(z, s)));
                if d.abs() > 0.5 {
                    return Err(WallError::Crossing(k));
                }
                let x = signed_gap(p0, arg_zeta);
                let passed = if d > 0.0 { x > 0.0 && x <= d } else { x < 0.0 && x >= d };
                if passed {
                    crossings.push(Crossing { step: k, charge: s, exponent: if d > 0.0 { -1 } else { 1 } });
                }
            }
        }
        let (a, b) = (hyper[0], hyper[1]);
        let before = (combine(z_prev, a) / combine(z_prev, b)).im;
        let after = combine(z, a) / combine(z, b);
        if before.signum() != after.im.signum() {
            if hyper.len() == 2 {
                let s = if after.re > 0.0 { 1 } else { -1 };
                hyper.push(a + s * b);
            } else {
                let (idx, _) = hyper
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| (i, combine(z, g).norm()))
                    .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                hyper.remove(idx);
            }
        }
        z_prev = z;
    }
    let spectrum_of = |h: &[Charge]| BpsSpectrum::from_pairs(Region::Empty, &h.iter().map(|&g| (g, 1)).collect::<Vec<_>>());
    let start_spec = setup.spec(path[0], start_angles)?;
    let (start_field, _) = solve(&start_spec)?;
    let start = evaluate_point(&start_spec, &start_field, zeta, None);
    let end_spec = ProblemSpec::new(z_prev, spectrum_of(&hyper), setup.r, end_angles).with_settings(setup.settings);
    let (end_field, _) = solve(&end_spec)?;
    let end_raw = evaluate_point(&end_spec, &end_field, zeta, None);
    let continued = crossings.iter().rev().fold(end_raw, |p, c| p.apply_k(c.charge, c.exponent));
    Ok(Continuation { crossings, final_spectrum: hyper, periods_start: z0, periods_end: z_prev, start, end_raw, continued })
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub radius: f64,
    pub steps: usize,
    /// k in γ₁ ↦ γ₁ + kγ₂ after one counterclockwise loop.
    pub shift: i64,
    pub continuation: Continuation,
    /// Relative mismatch of the continued X_m with its start value.
    pub residual_m: f64,
    pub residual_e: f64,
}

/// Counterclockwise loop u = 2 − ρe^{iφ}, φ ∈ [0, 2π]. After the loop the
/// tracked γ₁ is γ₁ + kγ₂, so the same fiber point carries θ₁ + kθ₂ − πk on it.
pub fn loop_around_singularity(setup: &PentagonSetup, rho: f64, steps: usize, angles: TorusAngles, zeta: C) -> Result<LoopReport, WallError> {
    let path: Vec<C> = (0..=steps).map(|k| SINGULAR_U - C::from_polar(rho, TAU * k as f64 / steps as f64)).collect();
    let mut tracker = PeriodTracker::new();
    tracker.move_to(path[0]);
    let z0 = tracker.periods()?;
    tracker.follow(&path[1..]);
    let z1 = tracker.periods()?;
    let ratio = (z1[0] - z0[0]) / z0[1];
    let k = ratio.re.round();
    if (ratio - k).norm() > 1e-6 {
        return Err(WallError::Monodromy(ratio));
    }
    let k = k as i64;
    let end_angles = TorusAngles::new(twisted_angle_raw(angles.theta1, angles.theta2, Charge(1, k)), angles.theta2);
    let continuation = continue_xm(setup, &path, angles, end_angles, zeta)?;
    let residual_m = ((continuation.continued.0 - continuation.start.0) / continuation.start.0).norm();
    let residual_e = ((continuation.continued.1 - continuation.start.1) / continuation.start.1).norm();
    Ok(LoopReport { radius: rho, steps, shift: k, continuation, residual_m, residual_e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::simpson;

    fn upper_wall() -> LocatedWall {
        find_walls(0.3).unwrap().into_iter().find(|w| w.wall_type == WallType::I).unwrap()
    }

    #[test]
    fn walls_near_the_singular_point() {
        let walls = find_walls(0.3).unwrap();
        assert_eq!(walls.len(), 2);
        let up = walls.iter().find(|w| w.u.im > 0.0).unwrap();
        let down = walls.iter().find(|w| w.u.im < 0.0).unwrap();
        assert_eq!(up.wall_type, WallType::I);
        assert_eq!(down.wall_type, WallType::II);
        assert!(((up.u - SINGULAR_U).norm() - 0.3).abs() < 1e-3);
    }

    #[test]
    fn regions_follow_the_wall() {
        let u_in = C::new(1.7, 0.0);
        assert_eq!(pentagon_region(pentagon_periods(u_in).unwrap(), u_in), Region::Inside);
        let u_up = SINGULAR_U + C::from_polar(0.3, 0.8);
        assert_eq!(pentagon_region(pentagon_periods(u_up).unwrap(), u_up), Region::OutsideI);
        let u_dn = SINGULAR_U + C::from_polar(0.3, -0.8);
        assert_eq!(pentagon_region(pentagon_periods(u_dn).unwrap(), u_dn), Region::OutsideII);
    }

    #[test]
    fn psi_matches_simpson_oracle() {
        // ψ is exponentially small in R, so probe a small radius.
        let setup = PentagonSetup::new(0.3);
        let u = upper_wall().u * C::from_polar(1.0, 0.0) + C::new(-0.02, 0.0);
        let (spec, field) = setup.solve(u, TorusAngles::new(0.7, 2.1)).unwrap();
        let g = ELECTRIC;
        let z = spec.central_charge(g);
        let dir = C::from_polar(1.0, z.arg());
        let tmin = (-((40.0 / (PI * spec.r * z.norm())).ln() + 2.0)).exp();
        let oracle = simpson(tmin, 1.0, 1e-12, 40, |t| {
            let num = (ONE - evaluate(&spec, &field, g, -dir * t)).norm();
            let den = (ONE - evaluate(&spec, &field, -g, dir * t)).norm();
            (num / den).ln() / t
        }) / TAU;
        let v = psi_term(&spec, &field, g).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
        assert!(v.abs() > 1e-5, "{v}");
    }

    #[test]
    fn psi_vanishes_at_large_radius() {
        let setup = PentagonSetup::new(40.0);
        let (spec, field) = setup.solve(C::new(1.75, 0.05), TorusAngles::new(0.3, 1.0)).unwrap();
        assert!(psi_at(&spec, &field).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn psi_agrees_across_both_walls() {
        let setup = PentagonSetup::new(2.0);
        for w in find_walls(0.3).unwrap() {
            for &r in &[2.0, 0.3] {
                let s = PentagonSetup { r, ..setup.clone() };
                let c = wall_check(&s, w, TorusAngles::new(0.9, 2.4), 1e-7).unwrap();
                assert!(c.discrepancy < 1e-6, "{c:?}");
                if r < 1.0 {
                    assert!(c.psi_in.abs() > 1e-5, "{c:?}");
                }
            }
        }
    }

    #[test]
    fn q_map_is_a_circle_reparametrization() {
        let setup = PentagonSetup::new(1.0);
        let q = q_map(&setup, C::new(1.75, 0.05), 2.0, 8, 1e-3).unwrap();
        assert!(q.monotone && q.dpsi_max < 1.0);
        assert!(q.period_defect < 1e-10);
    }

    #[test]
    fn bracket_is_real_and_vanishes_on_zero_length() {
        let setup = PentagonSetup::new(2.0);
        let (spec, field) = setup.solve(C::new(1.8, 0.1), TorusAngles::new(0.5, 2.0)).unwrap();
        let arg_a = spec.central_charge(ELECTRIC).arg();
        let zero = gauge_bracket(&spec, &field, arg_a).unwrap();
        assert_eq!(zero.value, 0.0);
        let (t, _) = final_gauge(1.25, &spec, &field, arg_a).unwrap();
        assert_eq!(t, 1.25);
        let b = gauge_bracket(&spec, &field, arg_a - 0.6).unwrap();
        assert!(b.imag.abs() < 1e-10, "{b:?}");
        assert!(b.value.abs() > 1e-3);
    }

    #[test]
    fn gauged_limit_is_independent_of_arg_a() {
        let setup = PentagonSetup::new(2.0);
        let limit = |arg: f64, zeta: C| {
            let v = |m: f64| gauged_magnetic(&setup, C::from_polar(m, arg), 2.0, 1.0, PI / 8.0, zeta).unwrap().x_m;
            v(5e-5) * 2.0 - v(1e-4)
        };
        for &ph in &[PI / 2.0, 2.0 * PI / 3.0, -PI / 3.0] {
            let zeta = C::from_polar(1.0, ph);
            let (a, b) = (limit(0.0, zeta), limit(PI / 4.0, zeta));
            assert!((a - b).norm() < 1e-5 * a.norm(), "{ph}: {a} vs {b}");
        }
    }

    #[test]
    fn bracket_is_additive_along_the_arc() {
        // Path-deformation invariance: splitting the arc at an intermediate
        // reference gives the same total.
        let setup = PentagonSetup::new(2.0);
        let (spec, field) = setup.solve(C::new(1.8, 0.1), TorusAngles::new(0.5, 2.0)).unwrap();
        let arg_a = spec.central_charge(ELECTRIC).arg();
        let whole = gauge_bracket(&spec, &field, arg_a - 0.6).unwrap().value;
        let first = gauge_bracket(&spec, &field, arg_a - 0.25).unwrap().value;
        let gap = |r: f64| {
            let z = |al: f64| C::from_polar(1.0, al);
            let ue = |w: C| (I * upsilon(&spec, &field, ELECTRIC, w)).exp();
            adaptive_c(r + PI, arg_a - 0.6 + PI, 1e-13, 30, |al| {
                I * ((ONE - ue(z(al))).ln() - (ONE - ONE / ue(-ONE / z(al).conj())).ln())
            })
            .value
            .re
        };
        assert!((first + gap(arg_a - 0.25) - whole).abs() < 1e-10);
    }

    #[test]
    fn newton_inverts_the_vanishing_period() {
        for &a in &[C::new(1e-3, 0.0), C::from_polar(2e-4, PI / 4.0), C::from_polar(0.05, -2.0)] {
            let u = u_of_a(a).unwrap();
            let z = pentagon_periods(u).unwrap();
            assert!((z[1] - a).norm() < 1e-12 * a.norm().max(1e-3), "{a}: {}", z[1]);
        }
    }

    #[test]
    fn path_without_crossings_is_unchanged() {
        let setup = PentagonSetup::new(2.0);
        let path = [C::new(1.7, 0.0), C::new(1.7, 0.01), C::new(1.71, 0.01)];
        let angles = TorusAngles::new(0.4, 1.1);
        let c = continue_xm(&setup, &path, angles, angles, C::from_polar(0.8, 1.3)).unwrap();
        assert!(c.crossings.is_empty());
        assert_eq!(c.final_spectrum, vec![Charge::G1, Charge::G2]);
    }

    #[test]
    fn loop_around_u2_closes() {
        let setup = PentagonSetup::new(2.0);
        let rep = loop_around_singularity(&setup, 0.3, 240, TorusAngles::new(0.4, 2.2), C::from_polar(0.9, 2.0)).unwrap();
        assert_eq!(rep.shift.abs(), 1);
        assert_eq!(rep.continuation.crossings.len(), 2, "{:?}", rep.continuation.crossings);
        assert!(rep.residual_m < 1e-6 && rep.residual_e < 1e-6, "{rep:?}");
    }
}
