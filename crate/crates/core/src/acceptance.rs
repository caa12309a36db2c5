//! The seventeen acceptance criteria as runnable checks.
//!
//! Each check returns the measured worst-case quantity, the threshold it is
//! held to and a JSON detail block. A check passes when the measurement is
//! within threshold and the run finished inside its time budget.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bessel::bessel_k1;
use crate::charge_lattice::{monodromy_infinity, BpsSpectrum, Charge, Region, TorusAngles};
use crate::ks_algebra::pentagon_check;
use crate::metric_extract::{
    extract, ov_metric_at_zero, semiflat_omega3, BasePoint, ExtractOptions, FieldSource,
};
use crate::ov_exact::{
    check_curvature, metric_ov, potential_v, taub_nut, xm_at_zero, xm_tilde, OvPoint, DEFAULT_CUTOFF,
};
use crate::quadrature::simpson;
use crate::rh_solver::{
    asymptotics_check, iterate_n, jump_check, ray_phases, reality_check, saddle_estimate, semiflat, solve, solve_with,
    upsilon, ProblemSpec, SolverSettings,
};
use crate::spectral_periods::{pentagon_periods, CentralChargeModel};
use crate::wall_gauge::{find_walls, loop_around_singularity, q_map, wall_check, PentagonSetup};

type Outcome = Result<(f64, f64, Value), String>;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    // Wall time varies between runs, so it stays out of the serialized report.
    #[serde(skip)]
    pub seconds: f64,
    pub budget_seconds: f64,
    pub detail: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {:>2} {:<34} measured {:.3e} threshold {:.3e} ({:.1}s of {:.0}s)",
            self.id, self.name, self.measured, self.threshold, self.seconds, self.budget_seconds
        );
        if let Some(e) = &self.error {
            s.push_str(&format!(" error: {e}"));
        }
        s
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget_seconds: f64,
    run: fn() -> Outcome,
}

pub const CRITERIA: [Criterion; 17] = [
    Criterion { id: 1, name: "pentagon-identity", budget_seconds: 10.0, run: pentagon_identity },
    Criterion { id: 2, name: "monodromy-at-infinity", budget_seconds: 1.0, run: monodromy },
    Criterion { id: 3, name: "ov-electric-rigidity", budget_seconds: 60.0, run: ov_electric_rigidity },
    Criterion { id: 4, name: "ov-one-iteration", budget_seconds: 60.0, run: ov_one_iteration },
    Criterion { id: 5, name: "ov-singular-fiber-closed-form", budget_seconds: 300.0, run: ov_singular_fiber },
    Criterion { id: 6, name: "jump-conditions", budget_seconds: 300.0, run: jump_conditions },
    Criterion { id: 7, name: "reality-and-asymptotics", budget_seconds: 120.0, run: reality_and_asymptotics },
    Criterion { id: 8, name: "contraction-rate", budget_seconds: 300.0, run: contraction_rate },
    Criterion { id: 9, name: "saddle-point-estimate", budget_seconds: 60.0, run: saddle_point },
    Criterion { id: 10, name: "simple-poles", budget_seconds: 300.0, run: simple_poles },
    Criterion { id: 11, name: "semiflat-form-identity", budget_seconds: 60.0, run: semiflat_form },
    Criterion { id: 12, name: "ov-metric-at-singular-fiber", budget_seconds: 60.0, run: ov_metric_zero },
    Criterion { id: 13, name: "taub-nut-limit", budget_seconds: 120.0, run: taub_nut_limit },
    Criterion { id: 14, name: "curvature-identity", budget_seconds: 60.0, run: curvature },
    Criterion { id: 15, name: "wall-gauge-agreement", budget_seconds: 300.0, run: wall_gauge_agreement },
    Criterion { id: 16, name: "loop-monodromy-cancellation", budget_seconds: 300.0, run: loop_cancellation },
    Criterion { id: 17, name: "bessel-oracle", budget_seconds: 1.0, run: bessel_oracle },
];

pub fn run_criterion(c: &Criterion) -> CriterionResult {
    let start = Instant::now();
    let outcome = (c.run)();
    let seconds = start.elapsed().as_secs_f64();
    let in_time = seconds <= c.budget_seconds;
    match outcome {
        Ok((measured, threshold, detail)) => CriterionResult {
            id: c.id,
            name: c.name,
            passed: measured <= threshold && in_time,
            measured,
            threshold,
            seconds,
            budget_seconds: c.budget_seconds,
            detail,
            error: None,
        },
        Err(e) => CriterionResult {
            id: c.id,
            name: c.name,
            passed: false,
            measured: f64::NAN,
            threshold: f64::NAN,
            seconds,
            budget_seconds: c.budget_seconds,
            detail: Value::Null,
            error: Some(e),
        },
    }
}

/// Run the selected criteria (all when `ids` is empty) in id order.
pub fn run(ids: &[u8]) -> Vec<CriterionResult> {
    CRITERIA.iter().filter(|c| ids.is_empty() || ids.contains(&c.id)).map(run_criterion).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ov_spec(a: C, r: f64, theta_e: f64, theta_m: f64) -> Result<ProblemSpec, String> {
    ProblemSpec::from_model(&CentralChargeModel::OvClassical, a, BpsSpectrum::ooguri_vafa(), r, TorusAngles::new(theta_m, theta_e))
        .map_err(err)
}

fn pentagon_spec(u: C, r: f64, region: Region) -> Result<ProblemSpec, String> {
    let z = pentagon_periods(u).map_err(err)?;
    Ok(ProblemSpec::new(z, BpsSpectrum::pentagon(region), r, TorusAngles::new(0.7, 2.2)))
}

fn zm_at_origin() -> Result<f64, String> {
    Ok(pentagon_periods(C::new(0.0, 0.0)).map_err(err)?[0].norm())
}

fn pentagon_identity() -> Outcome {
    let rep = pentagon_check(8).map_err(err)?;
    // Exact comparison: any surviving coefficient is a failure.
    let measured = if rep.identity() { 0.0 } else { 1.0 };
    Ok((measured, 0.0, json!({ "degree": 8, "identity": rep.identity(), "report": rep })))
}

fn monodromy() -> Outcome {
    let s = BpsSpectrum::pentagon(Region::OutsideI);
    let mut before = s.support();
    let mut after: Vec<Charge> = before.iter().map(|&g| monodromy_infinity(g)).collect();
    before.sort();
    after.sort();
    let support_ok = before == after;
    let sixth_ok = [Charge::G1, Charge::G2].iter().all(|&g| (0..6).fold(g, |h, _| monodromy_infinity(h)) == g);
    let images: Vec<[i64; 2]> = [Charge::G1, Charge::G2].iter().map(|&g| monodromy_infinity(g)).map(|g| [g.0, g.1]).collect();
    let measured = if support_ok && sixth_ok { 0.0 } else { 1.0 };
    Ok((measured, 0.0, json!({ "support_invariant": support_ok, "sixth_power_identity": sixth_ok, "images_of_g1_g2": images })))
}

fn ov_electric_rigidity() -> Outcome {
    let n = 16;
    let grid: Vec<(C, f64)> = (0..n)
        .flat_map(|i| {
            let a = C::from_polar(0.05 + 0.6 * i as f64 / n as f64, 0.37 + TAU * i as f64 * 5.0 / n as f64);
            (0..n).map(move |j| (a, 0.1 + TAU * j as f64 / n as f64))
        })
        .collect();
    let worst = grid
        .par_iter()
        .map(|&(a, te)| -> Result<f64, String> {
            let spec = ov_spec(a, 1.0, te, 0.9)?;
            let (field, _) = solve(&spec).map_err(err)?;
            let mut w: f64 = 0.0;
            for k in 0..n {
                let zeta = C::from_polar(0.3 + 0.2 * k as f64, 0.11 + TAU * k as f64 * 3.0 / n as f64);
                let x = crate::rh_solver::evaluate(&spec, &field, Charge::G2, zeta);
                let sf = semiflat(&spec, Charge::G2, zeta);
                w = w.max((x - sf).norm() / sf.norm());
            }
            Ok(w)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst, 1e-12, json!({ "grid": [n, n, n], "sup_relative_residual": worst })))
}

fn ov_one_iteration() -> Outcome {
    let points = [(C::new(0.2, 0.1), 1.0, 1.9), (C::new(-0.4, 0.3), 2.0, 0.6), (C::new(0.05, -0.5), 0.5, 4.0)];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &(a, r, te) in &points {
        let spec = ov_spec(a, r, te, 0.5)?;
        let (_, d) = iterate_n(&spec, 2).map_err(err)?;
        worst = worst.max(d[1]);
        rows.push(json!({ "a": [a.re, a.im], "r": r, "theta_e": te, "deltas": d }));
    }
    Ok((worst, 1e-10, json!({ "points": rows })))
}

fn ov_singular_fiber() -> Outcome {
    let m = CentralChargeModel::OvClassical;
    let thetas = [PI / 2.0, PI, 1.5 * PI];
    let args = [0.0, PI / 3.0, 2.0 * PI / 3.0];
    let mut cases = Vec::new();
    for &te in &thetas {
        for k in 0..8 {
            cases.extend(args.iter().map(|&ph| (te, k, ph)));
        }
    }
    let worst = cases
        .par_iter()
        .map(|&(te, k, ph)| -> Result<f64, String> {
            let zeta = C::from_polar(1.0, (2 * k + 1) as f64 * PI / 8.0 - PI);
            let exact = xm_at_zero(te, 0.3, zeta).map_err(err)?;
            let at = |s: f64| -> Result<C, String> {
                let p = OvPoint::from_prime(C::from_polar(s, ph), te, 0.3, 1.0).map_err(err)?;
                xm_tilde(&m, &p, zeta).map_err(err)
            };
            // Richardson step from |a| = 1e-4 removes the O(|a|) approach.
            let limit = at(5e-5)? * 2.0 - at(1e-4)?;
            Ok((limit - exact).norm())
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst, 1e-5, json!({ "theta_e": thetas, "arg_a": args, "zeta_phases": 8, "abs_a": 1e-4, "max_deviation": worst })))
}

fn jump_conditions() -> Outcome {
    let radii = [0.3, 1.0, 3.0];
    let wall = find_walls(0.3).map_err(err)?.into_iter().next().ok_or("no wall located")?;
    // A point just inside the located wall, where the two rays nearly coincide.
    let near = wall.u + (crate::wall_gauge::SINGULAR_U - wall.u) * 0.05;
    let setup = PentagonSetup::new(2.0);
    let specs = vec![
        ("ov", ov_spec(C::new(0.3, 0.2), 2.0, 2.0, 0.7)?),
        ("pentagon-u0", setup.spec(C::new(0.0, 0.0), TorusAngles::new(0.7, 2.2)).map_err(err)?),
        ("pentagon-near-wall", setup.spec(near, TorusAngles::new(0.7, 2.2)).map_err(err)?),
    ];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, spec) in specs {
        let (field, _) = solve(&spec).map_err(err)?;
        for ph in ray_phases(&spec) {
            let rep = jump_check(&spec, &field, ph, &radii);
            worst = worst.max(rep.residual);
            rows.push(json!({ "case": label, "ray_phase": ph, "residual": rep.residual, "offset_residual": rep.offset_residual }));
        }
    }
    Ok((worst, 1e-6, json!({ "delta": SolverSettings::default().delta, "near_wall_u": [near.re, near.im], "rays": rows })))
}

fn reality_and_asymptotics() -> Outcome {
    let probes: Vec<C> = (0..8).map(|k| C::from_polar(0.8, 0.3 + k as f64 * 0.77)).collect();
    let dirs: Vec<f64> = (0..8).map(|k| 0.2 + k as f64 * TAU / 8.0).collect();
    let specs = vec![("ov", ov_spec(C::new(0.3, 0.2), 2.0, 2.0, 0.7)?), ("pentagon", pentagon_spec(C::new(0.0, 0.0), 2.0, Region::Inside)?)];
    let (mut reality, mut asym): (f64, f64) = (0.0, 0.0);
    let mut rows = Vec::new();
    for (label, spec) in specs {
        let (field, _) = solve(&spec).map_err(err)?;
        let r = reality_check(&spec, &field, &probes);
        let mut a: f64 = 0.0;
        for g in [Charge::G1, Charge::G2] {
            for e in asymptotics_check(&spec, &field, g, &dirs, 1e-3) {
                a = a.max(e.log_ratio.im.abs());
            }
        }
        reality = reality.max(r);
        asym = asym.max(a);
        rows.push(json!({ "case": label, "reality": r, "max_im_log_ratio": a }));
    }
    // Both parts must hold; report the worse fraction of its own threshold.
    let measured = (reality / 1e-8).max(asym / 1e-5);
    Ok((measured, 1.0, json!({ "reality_threshold": 1e-8, "asymptotic_threshold": 1e-5, "radius": 1e-3, "cases": rows })))
}

fn contraction_rate() -> Outcome {
    let zm = zm_at_origin()?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for r in [1.0, 2.0] {
        let spec = pentagon_spec(C::new(0.0, 0.0), r, Region::Inside)?;
        let (_, rep) = solve_with(&spec, 1e-15, 40).map_err(err)?;
        let ratio = rep.ratio.unwrap_or(rep.deltas[1] / rep.deltas[0]);
        let predicted = (-TAU * r * zm).exp();
        // Factor of disagreement in either direction.
        let factor = (ratio / predicted).max(predicted / ratio);
        worst = worst.max(factor);
        rows.push(json!({ "r": r, "deltas": rep.deltas, "fitted_ratio": ratio, "predicted": predicted, "factor": factor }));
    }
    Ok((worst, 3.0, json!({ "abs_zm": zm, "runs": rows })))
}

fn saddle_point() -> Outcome {
    let r = 3.0;
    let spec = pentagon_spec(C::new(0.0, 0.0), r, Region::Inside)?;
    let (field, _) = iterate_n(&spec, 1).map_err(err)?;
    let bound = 5.0 * (-TAU * r * zm_at_origin()?).exp() / r;
    let mut worst: f64 = 0.0;
    for k in 0..12 {
        let zeta = C::from_polar(0.4 + 0.15 * k as f64, 0.25 + k as f64 * TAU / 12.0);
        let v = upsilon(&spec, &field, Charge::G2, zeta);
        worst = worst.max((v - saddle_estimate(&spec, Charge::G2, zeta)).norm());
    }
    Ok((worst, bound, json!({ "r": r, "max_error": worst, "bound": bound })))
}

fn simple_poles() -> Outcome {
    let cases = vec![
        ("ov", CentralChargeModel::OvClassical, C::new(0.3, 0.2)),
        ("pentagon", CentralChargeModel::PentagonCubic, C::new(0.0, 0.0)),
    ];
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, model, u) in cases {
        let src = FieldSource::Solved { model, r: 2.0, settings: SolverSettings::default() };
        let ex = extract(&src, BasePoint::new(u, 2.0, 1.0), ExtractOptions::default()).map_err(err)?;
        worst = worst.max(ex.sample.pole_residual);
        rows.push(json!({ "case": label, "pole_residual": ex.sample.pole_residual, "laurent_residuals": ex.sample.laurent_residuals }));
    }
    Ok((worst, 1e-6, json!({ "orders": [2, 3, 4], "cases": rows })))
}

fn semiflat_form() -> Outcome {
    let cases = vec![
        (CentralChargeModel::OvClassical, C::new(0.5, 0.0)),
        (CentralChargeModel::PentagonCubic, C::new(0.3, 0.2)),
    ];
    let mut worst: f64 = 0.0;
    for (model, u) in cases {
        for r in [0.7, 2.0] {
            let src = FieldSource::Semiflat { model: model.clone(), r };
            let ex = extract(&src, BasePoint::new(u, 2.0, 1.0), ExtractOptions::default()).map_err(err)?;
            let want = semiflat_omega3(&model, u, r, 0.05).map_err(err)?;
            worst = worst.max(crate::metric_extract::max_entry_diff(&ex.sample.omega3, &want));
        }
    }
    Ok((worst, 1e-8, json!({ "max_entry_difference": worst })))
}

fn ov_metric_zero() -> Outcome {
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &(te, r) in &[(1.0, 1.0), (2.0, 2.0), (4.5, 1.0)] {
        let s = ov_metric_at_zero(te, 0.5, r, 1e-4).map_err(err)?;
        let d = (s.magnetic_ratio - 1.0).abs().max((s.electric_ratio - 1.0).abs());
        worst = worst.max(d);
        rows.push(json!({ "theta_e": te, "r": r, "v0": s.v0, "magnetic_ratio": s.magnetic_ratio, "electric_ratio": s.electric_ratio }));
    }
    Ok((worst, 1e-6, json!({ "points": rows })))
}

fn taub_nut_limit() -> Outcome {
    let mut rows = Vec::new();
    let mut potential_ok = true;
    for &r in &[1e-2, 1e-3, 1e-4] {
        let d = r / 3f64.sqrt();
        let v = potential_v([d, d, d], 1.0, DEFAULT_CUTOFF).map_err(err)?;
        let dev = (4.0 * PI * r * v - 1.0).abs();
        potential_ok &= dev < 5.0 * r;
        rows.push(json!({ "r": r, "deviation": dev, "bound": 5.0 * r }));
    }
    let mut norms = Vec::new();
    for k in 0..=8 {
        let r = 10f64.powf(-1.0 - 0.25 * k as f64);
        let d = r / 3f64.sqrt();
        let diff = metric_ov([d, d, d], 1.0).map_err(err)? * (4.0 * PI) - taub_nut([d, d, d]);
        norms.push(diff.abs().max());
    }
    // Bounded: no growth as r shrinks beyond the value at the outer end.
    let growth = norms.iter().fold(0.0f64, |m, &n| m.max(n)) / norms[0];
    let measured = if potential_ok { growth } else { f64::INFINITY };
    Ok((measured, 2.0, json!({ "potential": rows, "metric_difference_max_entry": norms, "growth": growth })))
}

fn curvature() -> Outcome {
    let n = 0.5 / (0.3f64 * 0.3 + 0.2 * 0.2 + 0.3 * 0.3).sqrt();
    let x = [0.3 * n, 0.2 * n, 0.3 * n];
    let r1 = check_curvature(x, 1.0, 1e-3, DEFAULT_CUTOFF).map_err(err)?;
    let r2 = check_curvature(x, 1.0, 5e-4, DEFAULT_CUTOFF).map_err(err)?;
    let ratio = r1 / r2;
    // Distance outside [3.5, 4.5]; zero inside.
    let measured = (3.5 - ratio).max(ratio - 4.5).max(0.0);
    Ok((measured, 0.0, json!({ "radius": 0.5, "residuals": [r1, r2], "ratio": ratio })))
}

fn wall_gauge_agreement() -> Outcome {
    let mut rows = Vec::new();
    let mut disc: f64 = 0.0;
    for w in find_walls(0.3).map_err(err)? {
        for r in [2.0, 0.3] {
            let c = wall_check(&PentagonSetup::new(r), w, TorusAngles::new(0.9, 2.4), 1e-7).map_err(err)?;
            disc = disc.max(c.discrepancy);
            rows.push(json!(c));
        }
    }
    let q = q_map(&PentagonSetup::new(1.0), C::new(1.75, 0.05), 2.0, 32, 1e-3).map_err(err)?;
    let measured = (disc / 1e-6).max(q.dpsi_max).max(q.period_defect / 1e-10);
    Ok((
        measured,
        1.0,
        json!({ "walls": rows, "dpsi_max": q.dpsi_max, "period_defect": q.period_defect, "monotone": q.monotone }),
    ))
}

fn loop_cancellation() -> Outcome {
    let rep = loop_around_singularity(&PentagonSetup::new(2.0), 0.3, 240, TorusAngles::new(0.4, 2.2), C::from_polar(0.9, 2.0))
        .map_err(err)?;
    let worst = rep.residual_m.max(rep.residual_e);
    Ok((
        worst,
        1e-6,
        json!({ "radius": rep.radius, "steps": rep.steps, "shift": rep.shift, "crossings": rep.continuation.crossings.len(),
                "residual_m": rep.residual_m, "residual_e": rep.residual_e }),
    ))
}

fn bessel_oracle() -> Outcome {
    // K₁(x) = ∫₀^∞ e^{−x cosh t} cosh t dt.
    let oracle = simpson(0.0, 7.0, 1e-15, 50, |t| (-t.cosh()).exp() * t.cosh());
    let k = bessel_k1(1.0).map_err(err)?;
    let dev = (k - oracle).abs();
    let x = 1e-4;
    let xk = x * bessel_k1(x).map_err(err)?;
    let small_ok = (1.0 - 1e-3..=1.0).contains(&xk);
    let measured = if small_ok { dev } else { f64::INFINITY };
    Ok((measured, 1e-10, json!({ "k1_at_1": k, "oracle": oracle, "x_k1_at_1e-4": xk })))
}
