//! Differentials of the Darboux coordinates, the holomorphic symplectic form
//!
//!   ϖ(ζ) = −(1/4π²R) dlog X_e ∧ dlog X_m = −(i/2ζ)ω₊ + ω₃ − (iζ/2)ω₋,
//!
//! its Laurent decomposition, and the metric g(v, w) = ω₃(v, J₃w).
//!
//! Coordinates are (Re u, Im u, θ_e, θ_m). For the closed-form Ooguri–Vafa
//! source the last one is the regular-gauge angle θ'_m. Derivatives are
//! central differences of log-ratios, which sidesteps branch bookkeeping, and
//! are Richardson-extrapolated from steps h and h/2.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::charge_lattice::{pair, BpsSpectrum, Charge, TorusAngles};
use crate::ov_exact::{xe_sf, xm_at_zero, xm_quadrature_model, xm_tilde, OvError, OvPoint};
use crate::rh_solver::{evaluate, iterate_n, semiflat, solve, DarbouxField, ProblemSpec, SolverError, SolverSettings};
use crate::spectral_periods::{CentralChargeModel, PeriodError, PeriodTracker};
use crate::wall_gauge::pentagon_region;

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ZERO: C = C::new(0.0, 0.0);

pub const ELECTRIC: Charge = Charge::G2;
pub const MAGNETIC: Charge = Charge::G1;
pub const FRAME: [&str; 4] = ["re_u", "im_u", "theta_e", "theta_m"];

pub type Covector = [C; 4];
pub type Form = [[C; 4]; 4];

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Ov(#[from] OvError),
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error("zeta = {0} lies between the ray positions of the stencil")]
    OnRay(C),
    #[error("stencil around u = {0} crosses a wall of marginal stability")]
    CrossesWall(C),
    #[error("stencil solve did not converge (delta {0:e})")]
    Unconverged(f64),
    #[error("Laurent fit is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("omega_plus is degenerate (singular values {0:?})")]
    Degenerate([f64; 4]),
    #[error("source does not support {0}")]
    Unsupported(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BasePoint {
    pub u: C,
    pub theta_e: f64,
    pub theta_m: f64,
}

impl BasePoint {
    pub fn new(u: C, theta_e: f64, theta_m: f64) -> Self {
        BasePoint { u, theta_e, theta_m }
    }

    fn coords(&self) -> [f64; 4] {
        [self.u.re, self.u.im, self.theta_e, self.theta_m]
    }

    fn from_coords(x: [f64; 4]) -> Self {
        BasePoint { u: C::new(x[0], x[1]), theta_e: x[2], theta_m: x[3] }
    }
}

/// Where the Darboux coordinates come from.
#[derive(Clone, Debug)]
pub enum FieldSource {
    Semiflat { model: CentralChargeModel, r: f64 },
    /// Riemann–Hilbert solution. OV-type models carry {±γ_e}; the Pentagon
    /// spectrum is read off the chamber of u.
    Solved { model: CentralChargeModel, r: f64, settings: SolverSettings },
    /// Closed-form OV coordinates in the θ'_m gauge. With `continued` the
    /// magnetic coordinate is X̃_m, which extends to a = 0.
    OvExact { r: f64, continued: bool },
}

impl FieldSource {
    pub fn r(&self) -> f64 {
        match self {
            FieldSource::Semiflat { r, .. } | FieldSource::Solved { r, .. } | FieldSource::OvExact { r, .. } => *r,
        }
    }

    fn spec(&self, model: &CentralChargeModel, r: f64, b: BasePoint) -> Result<ProblemSpec, MetricError> {
        let z = model.basis(b.u)?;
        let spectrum = match model {
            CentralChargeModel::PentagonCubic => BpsSpectrum::pentagon(pentagon_region(z, b.u)),
            CentralChargeModel::OvClassical | CentralChargeModel::OvGeneralized { .. } => BpsSpectrum::ooguri_vafa(),
            CentralChargeModel::UserLinear { .. } => return Err(MetricError::Unsupported("solving a user-linear model")),
        };
        Ok(ProblemSpec::new(z, spectrum, r, TorusAngles::new(b.theta_m, b.theta_e)))
    }

    fn probe(&self, b: BasePoint, iters: usize) -> Result<Probe, MetricError> {
        match self {
            FieldSource::Semiflat { model, r } => {
                let z = model.basis(b.u)?;
                Ok(Probe::Semiflat(ProblemSpec::new(z, BpsSpectrum::empty(), *r, TorusAngles::new(b.theta_m, b.theta_e))))
            }
            FieldSource::Solved { model, r, settings } => {
                let spec = self.spec(model, *r, b)?.with_settings(*settings);
                let (field, deltas) = iterate_n(&spec, iters)?;
                let last = deltas.last().copied().unwrap_or(0.0);
                if last > 1e-12 {
                    return Err(MetricError::Unconverged(last));
                }
                Ok(Probe::Field(Box::new((spec, field))))
            }
            FieldSource::OvExact { r, continued } => {
                let p = OvPoint::from_prime(b.u, b.theta_e, b.theta_m, *r)?;
                Ok(Probe::Ov { p, theta_m_prime: b.theta_m, continued: *continued })
            }
        }
    }

    /// Picard steps used for every stencil point, so the iteration error is
    /// the same smooth function of the base point across the stencil.
    fn iterations(&self, b: BasePoint) -> Result<usize, MetricError> {
        match self {
            FieldSource::Solved { model, r, settings } => {
                let spec = self.spec(model, *r, b)?.with_settings(*settings);
                let (_, rep) = solve(&spec)?;
                Ok(rep.iterations + 2)
            }
            _ => Ok(0),
        }
    }
}

enum Probe {
    Semiflat(ProblemSpec),
    Field(Box<(ProblemSpec, DarbouxField)>),
    Ov { p: OvPoint, theta_m_prime: f64, continued: bool },
}

impl Probe {
    fn x(&self, g: Charge, zeta: C) -> Result<C, MetricError> {
        match self {
            Probe::Semiflat(spec) => Ok(semiflat(spec, g, zeta)),
            Probe::Field(b) => Ok(evaluate(&b.0, &b.1, g, zeta)),
            Probe::Ov { p, theta_m_prime, continued } => {
                if g == ELECTRIC {
                    Ok(xe_sf(p, zeta))
                } else if g == MAGNETIC {
                    let model = CentralChargeModel::OvClassical;
                    if p.a == ZERO {
                        Ok(xm_at_zero(p.theta_e, *theta_m_prime, zeta)?)
                    } else if *continued {
                        Ok(xm_tilde(&model, p, zeta)?)
                    } else {
                        Ok(xm_quadrature_model(&model, p, zeta)?)
                    }
                } else {
                    Err(MetricError::Unsupported("charges other than the basis"))
                }
            }
        }
    }

    /// Phases of the rays across which X jumps.
    fn ray_phases(&self) -> Vec<f64> {
        match self {
            Probe::Semiflat(_) => Vec::new(),
            Probe::Field(b) => {
                let spec = &b.0;
                spec.support().iter().map(|&(g, _)| spec.central_charge(g).arg() + PI).collect()
            }
            Probe::Ov { continued: true, .. } => Vec::new(),
            Probe::Ov { p, .. } => {
                if p.a == ZERO {
                    Vec::new()
                } else {
                    vec![p.a.arg() + PI, p.a.arg()]
                }
            }
        }
    }
}

fn signed_gap(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Steps of 10⁻⁴ relative to the distance from the nearest singular fiber.
pub fn default_steps(source: &FieldSource, base: BasePoint) -> [f64; 4] {
    let scale = match source {
        FieldSource::Semiflat { model: CentralChargeModel::PentagonCubic, .. }
        | FieldSource::Solved { model: CentralChargeModel::PentagonCubic, .. } => {
            (base.u - 2.0).norm().min((base.u + 2.0).norm()).min(1.0)
        }
        FieldSource::OvExact { .. } if base.u == ZERO => 1.0,
        _ => base.u.norm().min(1.0),
    };
    let hu = 1e-4 * scale.max(1e-3);
    [hu, hu, 1e-4, 1e-4]
}

/// Solved fields at u ± h, u ± h/2 in each coordinate.
pub struct Stencil {
    pub base: BasePoint,
    pub h: [f64; 4],
    pub r: f64,
    /// Index 4i + k with k over (+h, −h, +h/2, −h/2).
    probes: Vec<Probe>,
    center: Probe,
}

impl Stencil {
    pub fn new(source: &FieldSource, base: BasePoint, h: [f64; 4]) -> Result<Self, MetricError> {
        let iters = source.iterations(base)?;
        let mut points = Vec::with_capacity(16);
        for i in 0..4 {
            for s in [h[i], -h[i], 0.5 * h[i], -0.5 * h[i]] {
                let mut x = base.coords();
                x[i] += s;
                points.push(BasePoint::from_coords(x));
            }
        }
        let probes: Vec<Probe> = points.par_iter().map(|&b| source.probe(b, iters)).collect::<Result<_, _>>()?;
        let center = source.probe(base, iters)?;
        if let Probe::Field(c) = &center {
            if probes.iter().any(|p| matches!(p, Probe::Field(b) if b.0.spectrum.region != c.0.spectrum.region)) {
                return Err(MetricError::CrossesWall(base.u));
            }
        }
        Ok(Stencil { base, h, r: source.r(), probes, center })
    }

    fn check_ray(&self, zeta: C) -> Result<(), MetricError> {
        let target = zeta.arg();
        let c = self.center.ray_phases();
        for (k, &phi) in c.iter().enumerate() {
            let d0 = signed_gap(phi, target);
            for p in &self.probes {
                let d = signed_gap(p.ray_phases()[k], target);
                if d.signum() != d0.signum() || d.abs() < 1e-12 {
                    return Err(MetricError::OnRay(zeta));
                }
            }
        }
        Ok(())
    }

    /// Plain central difference with step h (`half` = false) or h/2.
    pub fn dlog_central(&self, g: Charge, zeta: C, half: bool) -> Result<Covector, MetricError> {
        self.check_ray(zeta)?;
        let mut out = [ZERO; 4];
        let off = if half { 2 } else { 0 };
        let step = if half { 0.5 } else { 1.0 };
        for (i, o) in out.iter_mut().enumerate() {
            let plus = self.probes[4 * i + off].x(g, zeta)?;
            let minus = self.probes[4 * i + off + 1].x(g, zeta)?;
            *o = (plus / minus).ln() / (2.0 * step * self.h[i]);
        }
        Ok(out)
    }

    /// (4D(h/2) − D(h))/3.
    pub fn dlog(&self, g: Charge, zeta: C) -> Result<Covector, MetricError> {
        let d1 = self.dlog_central(g, zeta, false)?;
        let d2 = self.dlog_central(g, zeta, true)?;
        let mut out = [ZERO; 4];
        for i in 0..4 {
            out[i] = (d2[i] * 4.0 - d1[i]) / 3.0;
        }
        Ok(out)
    }

    pub fn x(&self, g: Charge, zeta: C) -> Result<C, MetricError> {
        self.center.x(g, zeta)
    }

    pub fn varpi(&self, zeta: C) -> Result<Form, MetricError> {
        let e = self.dlog(ELECTRIC, zeta)?;
        let m = self.dlog(MAGNETIC, zeta)?;
        Ok(scale(&wedge(&e, &m), C::new(-1.0 / (4.0 * PI * PI * self.r), 0.0)))
    }

    /// Sample phase offset keeping the circle samples away from every ray.
    fn phase_offset(&self, n: usize) -> f64 {
        let rays = self.center.ray_phases();
        let step = TAU / n as f64;
        let clearance = |off: f64| {
            (0..n)
                .map(|k| {
                    let ph = off + step * k as f64;
                    let mut m = rays.iter().map(|&r| signed_gap(r, ph).abs()).fold(f64::INFINITY, f64::min);
                    // The negative real axis carries the principal log cut at a = 0.
                    m = m.min(signed_gap(PI, ph).abs());
                    m
                })
                .fold(f64::INFINITY, f64::min)
        };
        (0..16)
            .map(|j| 0.1 + step * j as f64 / 16.0)
            .map(|o| (o, clearance(o)))
            .fold((0.1, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0
    }
}

pub fn wedge(a: &Covector, b: &Covector) -> Form {
    let mut w = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            w[i][j] = a[i] * b[j] - a[j] * b[i];
        }
    }
    w
}

fn scale(f: &Form, s: C) -> Form {
    let mut out = *f;
    out.iter_mut().flatten().for_each(|x| *x *= s);
    out
}

fn max_abs(f: &Form) -> f64 {
    f.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Coefficient of dx⁰∧dx¹∧dx²∧dx³ in ω∧ω, up to the factor 2.
pub fn pfaffian(f: &Form) -> C {
    f[0][1] * f[2][3] - f[0][2] * f[1][3] + f[0][3] * f[1][2]
}

pub fn dlog_field(source: &FieldSource, base: BasePoint, g: Charge, zeta: C, h: [f64; 4]) -> Result<Covector, MetricError> {
    Stencil::new(source, base, h)?.dlog(g, zeta)
}

pub fn varpi(source: &FieldSource, base: BasePoint, zeta: C, h: [f64; 4]) -> Result<Form, MetricError> {
    Stencil::new(source, base, h)?.varpi(zeta)
}

#[derive(Clone, Debug, Serialize)]
pub struct LaurentFit {
    /// Orders −K..=K.
    pub orders: Vec<i32>,
    pub coeffs: Vec<Form>,
    /// max_{2≤|k|≤K} ‖c_k‖/‖c₀‖ with the max-entry norm.
    pub pole_residual: f64,
    /// Per-order ratios ‖c_k‖/‖c₀‖, aligned with `orders`.
    pub ratios: Vec<f64>,
    /// Largest misfit at a sample point.
    pub fit_residual: f64,
    pub condition: f64,
    pub samples: usize,
}

impl LaurentFit {
    pub fn coeff(&self, k: i32) -> &Form {
        let idx = self.orders.iter().position(|&o| o == k).expect("order in fit range");
        &self.coeffs[idx]
    }
}

/// Least-squares fit of each entry to Σ c_k ζ^k over the given samples.
pub fn fit_laurent(samples: &[(C, Form)], k: usize) -> Result<LaurentFit, MetricError> {
    let orders: Vec<i32> = (-(k as i32)..=k as i32).collect();
    let (rows, cols) = (samples.len(), orders.len());
    let a = DMatrix::from_fn(rows, cols, |r, c| samples[r].0.powi(orders[c]));
    let b = DMatrix::from_fn(rows, 16, |r, c| samples[r].1[c / 4][c % 4]);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e10 {
        return Err(MetricError::IllConditioned(condition));
    }
    let x = svd.solve(&b, 0.0).map_err(|_| MetricError::IllConditioned(condition))?;
    let misfit = &a * &x - &b;
    let fit_residual = misfit.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let coeffs: Vec<Form> = (0..cols)
        .map(|c| {
            let mut f = [[ZERO; 4]; 4];
            for (e, v) in f.iter_mut().flatten().enumerate() {
                *v = x[(c, e)];
            }
            f
        })
        .collect();
    let c0 = max_abs(&coeffs[k]);
    let ratios: Vec<f64> = coeffs.iter().map(|f| max_abs(f) / c0).collect();
    let pole_residual = orders.iter().zip(&ratios).filter(|(o, _)| o.abs() >= 2).map(|(_, &r)| r).fold(0.0, f64::max);
    Ok(LaurentFit { orders, coeffs, pole_residual, ratios, fit_residual, condition, samples: rows })
}

pub const CIRCLES: [f64; 3] = [0.5, 1.0, 2.0];

/// Fit ϖ sampled at `per_circle` phases on each circle |ζ| ∈ {½, 1, 2}.
pub fn laurent_fit(stencil: &Stencil, k: usize, per_circle: usize) -> Result<LaurentFit, MetricError> {
    let n = per_circle.max(4 * k + 2);
    let off = stencil.phase_offset(n);
    let zetas: Vec<C> = CIRCLES
        .iter()
        .flat_map(|&rad| (0..n).map(move |j| C::from_polar(rad, off + TAU * j as f64 / n as f64)))
        .collect();
    let samples: Vec<(C, Form)> = zetas.par_iter().map(|&z| stencil.varpi(z).map(|w| (z, w))).collect::<Result<_, _>>()?;
    fit_laurent(&samples, k)
}

#[derive(Clone, Debug, Serialize)]
pub struct FormSample {
    pub base: BasePoint,
    pub omega_plus: [[[f64; 2]; 4]; 4],
    pub omega3: [[f64; 4]; 4],
    pub omega_minus: [[[f64; 2]; 4]; 4],
    /// Largest |Im| discarded from ω₃.
    pub omega3_imag: f64,
    /// max |ω₋ − conj(ω₊)|.
    pub conjugacy_defect: f64,
    pub laurent_residuals: Vec<f64>,
    pub pole_residual: f64,
}

fn pack(f: &Form) -> [[[f64; 2]; 4]; 4] {
    let mut out = [[[0.0; 2]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = [f[i][j].re, f[i][j].im];
        }
    }
    out
}

fn unpack(f: &[[[f64; 2]; 4]; 4]) -> Form {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = C::new(f[i][j][0], f[i][j][1]);
        }
    }
    out
}

impl FormSample {
    pub fn omega_plus(&self) -> Form {
        unpack(&self.omega_plus)
    }
}

/// ω₊ = 2i·c₋₁, ω₃ = c₀, ω₋ = 2i·c₁.
pub fn decompose(fit: &LaurentFit, base: BasePoint) -> FormSample {
    let two_i = C::new(0.0, 2.0);
    let wp = scale(fit.coeff(-1), two_i);
    let wm = scale(fit.coeff(1), two_i);
    let c0 = fit.coeff(0);
    let mut w3 = [[0.0; 4]; 4];
    let mut imag: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            w3[i][j] = c0[i][j].re;
            imag = imag.max(c0[i][j].im.abs());
            defect = defect.max((wm[i][j] - wp[i][j].conj()).norm());
        }
    }
    let residuals = fit.orders.iter().zip(&fit.ratios).filter(|(o, _)| o.abs() >= 2).map(|(_, &r)| r).collect();
    FormSample {
        base,
        omega_plus: pack(&wp),
        omega3: w3,
        omega_minus: pack(&wm),
        omega3_imag: imag,
        conjugacy_defect: defect,
        laurent_residuals: residuals,
        pole_residual: fit.pole_residual,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricFrame {
    pub labels: [&'static str; 4],
    pub g: [[f64; 4]; 4],
    pub j3: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
    pub positive: bool,
    /// ‖J₃² + 1‖ and the antisymmetric part of ω₃J₃ before symmetrizing.
    pub j_defect: f64,
    pub asymmetry: f64,
    /// Singular values of ω₊, largest first.
    pub omega_plus_singular: [f64; 4],
}

/// J₃ is +i on the conjugate of ker ω₊ and −i on ker ω₊; g = ω₃(·, J₃·).
pub fn metric_assemble(sample: &FormSample) -> Result<MetricFrame, MetricError> {
    let wp = Matrix4::from_fn(|i, j| sample.omega_plus()[i][j]);
    let svd = wp.svd(true, true);
    let mut idx: Vec<usize> = (0..4).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = [0, 1, 2, 3].map(|k| svd.singular_values[idx[k]]);
    if !(sv[1] > 1e-8 * sv[0]) || sv[2] > 1e-5 * sv[0] {
        return Err(MetricError::Degenerate(sv));
    }
    let vt = svd.v_t.expect("requested");
    let kernel = [idx[2], idx[3]].map(|r| [0, 1, 2, 3].map(|c| vt[(r, c)].conj()));
    let p = Matrix4::from_fn(|i, j| match j {
        0 | 1 => kernel[j][i].conj(),
        _ => kernel[j - 2][i],
    });
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(I, I, -I, -I));
    let pinv = p.try_inverse().ok_or(MetricError::Degenerate(sv))?;
    let jc = p * d * pinv;
    let j = jc.map(|z| z.re);
    let w3 = Matrix4::from_fn(|i, k| sample.omega3[i][k]);
    let gm = w3 * j;
    let sym = (gm + gm.transpose()) * 0.5;
    let asym = (gm - gm.transpose()).abs().max() * 0.5;
    let j_defect = (j * j + Matrix4::identity()).abs().max().max(jc.map(|z| z.im).abs().max());
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let mut ev = [eig[0], eig[1], eig[2], eig[3]];
    ev.sort_by(f64::total_cmp);
    let to = |m: &Matrix4<f64>| {
        let mut o = [[0.0; 4]; 4];
        for i in 0..4 {
            for k in 0..4 {
                o[i][k] = m[(i, k)];
            }
        }
        o
    };
    Ok(MetricFrame {
        labels: FRAME,
        g: to(&sym),
        j3: to(&j),
        eigenvalues: ev,
        positive: ev[0] > 0.0,
        j_defect,
        asymmetry: asym,
        omega_plus_singular: sv,
    })
}

/// Options for the full extraction pipeline.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtractOptions {
    pub order: usize,
    pub per_circle: usize,
    /// Overrides `default_steps` when set.
    pub steps: Option<[f64; 4]>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { order: 4, per_circle: 24, steps: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Extraction {
    pub sample: FormSample,
    pub metric: MetricFrame,
    pub fit_residual: f64,
    pub condition: f64,
}

pub fn extract(source: &FieldSource, base: BasePoint, opts: ExtractOptions) -> Result<Extraction, MetricError> {
    let h = opts.steps.unwrap_or_else(|| default_steps(source, base));
    let st = Stencil::new(source, base, h)?;
    let fit = laurent_fit(&st, opts.order, opts.per_circle)?;
    let sample = decompose(&fit, base);
    let metric = metric_assemble(&sample)?;
    Ok(Extraction { sample, metric, fit_residual: fit.fit_residual, condition: fit.condition })
}

/// Z′(u) for both basis charges by the Cauchy integral on a circle of radius ρ.
pub fn period_derivative(model: &CentralChargeModel, u: C, rho: f64) -> Result<[C; 2], MetricError> {
    let n = 64;
    let mut acc = [ZERO; 2];
    for j in 0..n {
        let w = C::from_polar(1.0, TAU * j as f64 / n as f64);
        let z = model.basis(u + w * rho)?;
        for k in 0..2 {
            acc[k] += z[k] / (w * rho);
        }
    }
    Ok(acc.map(|a| a / n as f64))
}

/// (R/4)⟨dZ∧dZ̄⟩ − (1/8π²R)⟨dθ∧dθ⟩ in the (Re u, Im u, θ_e, θ_m) frame.
pub fn semiflat_omega3(model: &CentralChargeModel, u: C, r: f64, rho: f64) -> Result<[[f64; 4]; 4], MetricError> {
    let [dzm, dze] = period_derivative(model, u, rho)?;
    let dz = |d: C| [d, I * d, ZERO, ZERO];
    let conj = |c: Covector| c.map(|x| x.conj());
    let (ze, zm) = (dz(dze), dz(dzm));
    let dth_e = [ZERO, ZERO, C::new(1.0, 0.0), ZERO];
    let dth_m = [ZERO, ZERO, ZERO, C::new(1.0, 0.0)];
    let em = pair(ELECTRIC, MAGNETIC) as f64;
    let me = pair(MAGNETIC, ELECTRIC) as f64;
    let zz = add(&scale(&wedge(&ze, &conj(zm)), C::new(em, 0.0)), &scale(&wedge(&zm, &conj(ze)), C::new(me, 0.0)));
    let tt = add(&scale(&wedge(&dth_e, &dth_m), C::new(em, 0.0)), &scale(&wedge(&dth_m, &dth_e), C::new(me, 0.0)));
    let total = add(&scale(&zz, C::new(r / 4.0, 0.0)), &scale(&tt, C::new(-1.0 / (8.0 * PI * PI * r), 0.0)));
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = total[i][j].re;
        }
    }
    Ok(out)
}

fn add(a: &Form, b: &Form) -> Form {
    let mut out = *a;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] += b[i][j];
        }
    }
    out
}

/// Metric of the closed-form OV coordinates on the singular fiber, with the
/// two normalized components that the Gibbons–Hawking form predicts to be 1.
#[derive(Clone, Debug, Serialize)]
pub struct SingularFiberMetric {
    pub theta_e: f64,
    pub r: f64,
    pub v0: f64,
    pub metric: MetricFrame,
    /// g(∂θ'_m, ∂θ'_m)·4π²V₀.
    pub magnetic_ratio: f64,
    /// g(∂θ_e, ∂θ_e)·4π²R²/V₀.
    pub electric_ratio: f64,
    pub pole_residual: f64,
}

pub fn ov_metric_at_zero(theta_e: f64, theta_m_prime: f64, r: f64, h: f64) -> Result<SingularFiberMetric, MetricError> {
    let source = FieldSource::OvExact { r, continued: true };
    let base = BasePoint::new(ZERO, theta_e, theta_m_prime);
    let ex = extract(&source, base, ExtractOptions { steps: Some([h, h, 1e-4, 1e-4]), ..Default::default() })?;
    let v0 = crate::ov_exact::v0(theta_e, r)?;
    let g = ex.metric.g;
    Ok(SingularFiberMetric {
        theta_e,
        r,
        v0,
        magnetic_ratio: g[3][3] * 4.0 * PI * PI * v0,
        electric_ratio: g[2][2] * 4.0 * PI * PI * r * r / v0,
        pole_residual: ex.sample.pole_residual,
        metric: ex.metric,
    })
}

/// Taylor coefficients of f(a) = Z_m(u(a)) − a log a/2πi for the Pentagon
/// periods near u = 2, so that the generalized OV model matches them.
pub fn pentagon_local_model(radius: f64, terms: usize) -> Result<(Vec<[f64; 2]>, f64), MetricError> {
    let n = 4 * terms.max(8);
    // Continue periods around |u − 2| = ρ from the real point left of 2,
    // where both the straight-line frame and the principal log are regular.
    let mut tracker = PeriodTracker::new();
    let start = C::new(2.0 - radius, 0.0);
    tracker.move_to(start);
    let mut vals = Vec::with_capacity(n + 1);
    let z0 = tracker.periods()?;
    let mut log_a = z0[1].ln();
    let mut prev_a = z0[1];
    for k in 0..=n {
        if k > 0 {
            let sub: Vec<C> = (1..=8).map(|s| 2.0 - C::from_polar(radius, TAU * (k as f64 - 1.0 + s as f64 / 8.0) / n as f64)).collect();
            tracker.follow(&sub);
        }
        let z = tracker.periods()?;
        log_a += (z[1] / prev_a).ln();
        prev_a = z[1];
        vals.push((z[1], z[0] - z[1] * log_a / (TAU * I)));
    }
    let closure = (vals[n].1 - vals[0].1).norm();
    // f as a function of a: sample values come at the images a_k of the u-circle,
    // so fit coefficients by least squares rather than a plain DFT.
    let a = DMatrix::from_fn(n, terms, |r, c| vals[r].0.powi(c as i32));
    let b = DMatrix::from_fn(n, 1, |r, _| vals[r].1);
    let sol = a.svd(true, true).solve(&b, 0.0).map_err(|_| MetricError::IllConditioned(f64::INFINITY))?;
    Ok(((0..terms).map(|c| [sol[(c, 0)].re, sol[(c, 0)].im]).collect(), closure))
}

/// Metric in the (Re a, Im a, θ_e, θ_m) frame from one in the u-frame, a = Z_e(u).
fn to_a_frame(g: &[[f64; 4]; 4], dadu: C) -> [[f64; 4]; 4] {
    // x_a = M x_u with M the real form of multiplication by da/du.
    let m = Matrix4::new(dadu.re, -dadu.im, 0.0, 0.0, dadu.im, dadu.re, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let minv = m.try_inverse().expect("da/du is nonzero near u = 2");
    let gu = Matrix4::from_fn(|i, j| g[i][j]);
    let ga = minv.transpose() * gu * minv;
    let mut o = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            o[i][j] = ga[(i, j)];
        }
    }
    o
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonPoint {
    pub u: C,
    pub a: C,
    pub r: f64,
    pub g_pentagon: [[f64; 4]; 4],
    pub g_ov: [[f64; 4]; 4],
    /// Largest entry of |g_pentagon − g_ov| in the (a, θ_e, θ_m) frame.
    pub difference: f64,
    /// The same after passing to θ'_m = θ_m − (θ_e − π)·arg a/2π, where the
    /// OV metric is Taub-NUT plus smooth terms.
    pub difference_regular: f64,
    /// max |λ − 1| over the eigenvalues λ of g_ov⁻¹g_pentagon, which does not
    /// depend on the frame.
    pub relative: f64,
}

/// Pull a metric in the (a, θ_e, θ_m) frame back to (a, θ_e, θ'_m).
fn to_regular_gauge(g: &[[f64; 4]; 4], a: C, theta_e: f64) -> [[f64; 4]; 4] {
    let k = (theta_e - PI) / TAU;
    let n = a.norm_sqr();
    let mut t = Matrix4::identity();
    t[(3, 0)] = k * a.im / n;
    t[(3, 1)] = -k * a.re / n;
    t[(3, 2)] = -a.arg() / TAU;
    let tinv = t.try_inverse().expect("unit lower triangular");
    let gm = Matrix4::from_fn(|i, j| g[i][j]);
    let out = tinv.transpose() * gm * tinv;
    let mut o = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            o[i][j] = out[(i, j)];
        }
    }
    o
}

pub fn max_entry_diff(x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((x[i][j] - y[i][j]).abs());
        }
    }
    d
}

fn relative_difference(gp: &[[f64; 4]; 4], go: &[[f64; 4]; 4]) -> Option<f64> {
    let p = Matrix4::from_fn(|i, j| gp[i][j]);
    let o = Matrix4::from_fn(|i, j| go[i][j]);
    let l = o.cholesky()?.l();
    let linv = l.try_inverse()?;
    let m = linv * p * linv.transpose();
    let ev = SymmetricEigen::new((m + m.transpose()) * 0.5).eigenvalues;
    Some(ev.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct PentagonComparison {
    pub local_model: Vec<[f64; 2]>,
    pub model_closure: f64,
    pub points: Vec<ComparisonPoint>,
}

/// Pentagon metric near u = 2 against the generalized OV metric with the
/// matching local periods, both in the (a, θ_e, θ_m) frame.
pub fn pentagon_vs_ov(
    bases: &[BasePoint],
    r: f64,
    corrections: bool,
    opts: ExtractOptions,
) -> Result<PentagonComparison, MetricError> {
    let (f, closure) = pentagon_local_model(0.2, 14)?;
    let settings = SolverSettings::default();
    let pent_model = CentralChargeModel::PentagonCubic;
    let ov_model = CentralChargeModel::OvGeneralized { f: f.clone() };
    let (pent, ov) = if corrections {
        (
            FieldSource::Solved { model: pent_model.clone(), r, settings },
            FieldSource::Solved { model: ov_model.clone(), r, settings },
        )
    } else {
        (FieldSource::Semiflat { model: pent_model.clone(), r }, FieldSource::Semiflat { model: ov_model.clone(), r })
    };
    let mut points = Vec::new();
    for &b in bases {
        let a = pent_model.basis(b.u)?[1];
        let dadu = period_derivative(&pent_model, b.u, 0.25 * (b.u - 2.0).norm())?[1];
        let gp = extract(&pent, b, opts)?.metric.g;
        let gp = to_a_frame(&gp, dadu);
        let ob = BasePoint::new(a, b.theta_e, b.theta_m);
        let ha = 1e-4 * a.norm().min(1.0);
        let go = extract(&ov, ob, ExtractOptions { steps: Some([ha, ha, 1e-4, 1e-4]), ..opts })?.metric.g;
        let difference = max_entry_diff(&gp, &go);
        let difference_regular = max_entry_diff(&to_regular_gauge(&gp, a, b.theta_e), &to_regular_gauge(&go, a, b.theta_e));
        let relative = relative_difference(&gp, &go).unwrap_or(f64::INFINITY);
        points.push(ComparisonPoint { u: b.u, a, r, g_pentagon: gp, g_ov: go, difference, difference_regular, relative });
    }
    Ok(PentagonComparison { local_model: f, model_closure: closure, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const OV: CentralChargeModel = CentralChargeModel::OvClassical;

    fn sf(model: CentralChargeModel, r: f64) -> FieldSource {
        FieldSource::Semiflat { model, r }
    }

    fn solved(model: CentralChargeModel, r: f64) -> FieldSource {
        FieldSource::Solved { model, r, settings: SolverSettings::default() }
    }

    fn max_diff(x: &[[f64; 4]; 4], y: &[[f64; 4]; 4]) -> f64 {
        max_entry_diff(x, y)
    }

    #[test]
    fn semiflat_electric_differential_is_exact() {
        let (r, zeta) = (2.0, C::from_polar(0.8, 0.4));
        let base = BasePoint::new(C::new(0.5, 0.0), 2.0, 1.0);
        let d = dlog_field(&sf(OV, r), base, ELECTRIC, zeta, [1e-4; 4]).unwrap();
        let want = [PI * r * (1.0 / zeta + zeta), PI * r * I * (1.0 / zeta - zeta), I, ZERO];
        for k in 0..4 {
            assert!((d[k] - want[k]).norm() < 1e-9, "{k}: {} vs {}", d[k], want[k]);
        }
    }

    #[test]
    fn central_differences_are_second_order() {
        // X_m^sf carries a log a, so its differential is not linear in a.
        let (r, zeta) = (1.0, C::from_polar(1.3, -0.7));
        let base = BasePoint::new(C::new(0.4, 0.3), 2.0, 1.0);
        let exact = PI * r * (base.u.ln() / (TAU * I) / zeta + zeta * (base.u.ln() / (TAU * I)).conj());
        let err = |h: f64| {
            let st = Stencil::new(&sf(OV, r), base, [h, h, 1e-4, 1e-4]).unwrap();
            (st.dlog_central(MAGNETIC, zeta, false).unwrap()[0] - exact).norm()
        };
        let ratio = err(2e-3) / err(1e-3);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn semiflat_laurent_series_stops_at_simple_poles() {
        let base = BasePoint::new(C::new(0.5, 0.0), 2.0, 1.0);
        let st = Stencil::new(&sf(OV, 2.0), base, default_steps(&sf(OV, 2.0), base)).unwrap();
        let fit = laurent_fit(&st, 4, 24).unwrap();
        for k in [-4, -3, -2, 2, 3, 4] {
            assert!(max_abs(fit.coeff(k)) < 1e-10, "order {k}");
        }
        let w = st.varpi(C::from_polar(1.0, 0.3)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(w[i][j], -w[j][i]);
            }
        }
    }

    #[test]
    fn semiflat_omega3_matches_closed_form() {
        for (model, u) in [(OV, C::new(0.5, 0.0)), (CentralChargeModel::PentagonCubic, C::new(0.3, 0.2))] {
            for r in [0.7, 2.0] {
                let src = sf(model.clone(), r);
                let ex = extract(&src, BasePoint::new(u, 2.0, 1.0), ExtractOptions::default()).unwrap();
                let want = semiflat_omega3(&model, u, r, 0.05).unwrap();
                assert!(max_diff(&ex.sample.omega3, &want) < 1e-8);
                assert!(ex.sample.conjugacy_defect < 1e-8);
                assert!(ex.sample.omega3_imag < 1e-10);
                assert!(ex.metric.positive, "{:?}", ex.metric.eigenvalues);
                assert!(pfaffian(&ex.sample.omega_plus()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn solved_fields_have_only_simple_poles() {
        let cases = [
            (solved(OV, 2.0), BasePoint::new(C::new(0.3, 0.2), 2.0, 1.0)),
            (solved(CentralChargeModel::PentagonCubic, 2.0), BasePoint::new(ZERO, 2.0, 1.0)),
        ];
        for (src, base) in cases {
            let ex = extract(&src, base, ExtractOptions::default()).unwrap();
            assert!(ex.sample.pole_residual < 1e-6, "{}", ex.sample.pole_residual);
            assert!(ex.sample.conjugacy_defect < 1e-8);
            assert!(ex.metric.positive && ex.metric.j_defect < 1e-8);
        }
    }

    #[test]
    fn singular_fiber_metric_matches_gibbons_hawking() {
        for (te, r) in [(1.0, 1.0), (2.0, 2.0), (4.5, 1.0)] {
            let s = ov_metric_at_zero(te, 0.5, r, 1e-4).unwrap();
            assert!((s.magnetic_ratio - 1.0).abs() < 1e-6, "{s:?}");
            assert!((s.electric_ratio - 1.0).abs() < 1e-6, "{s:?}");
        }
    }

    #[test]
    fn singular_fiber_omega_plus() {
        // ω₊ = (1/2π)da∧(dθ'_m − iV₀dθ_e/R), da = dx¹ + i dx².
        let (te, r) = (2.0, 1.5);
        let src = FieldSource::OvExact { r, continued: true };
        let ex = extract(&src, BasePoint::new(ZERO, te, 0.5), ExtractOptions::default()).unwrap();
        let v0 = crate::ov_exact::v0(te, r).unwrap();
        let da = [C::new(1.0, 0.0), I, ZERO, ZERO];
        let rhs = [ZERO, ZERO, -I * v0 / r, C::new(1.0, 0.0)];
        let want = scale(&wedge(&da, &rhs), C::new(1.0 / TAU, 0.0));
        let got = ex.sample.omega_plus();
        for i in 0..4 {
            for j in 0..4 {
                assert!((got[i][j] - want[i][j]).norm() < 1e-7, "{i}{j}: {} vs {}", got[i][j], want[i][j]);
            }
        }
    }

    #[test]
    fn continuation_leaves_the_form_unchanged() {
        let base = BasePoint::new(C::from_polar(0.3, 0.7), 2.0, 1.0);
        for zeta in [C::from_polar(1.0, 2.0), C::from_polar(0.6, -1.0)] {
            let a = varpi(&FieldSource::OvExact { r: 1.0, continued: false }, base, zeta, [1e-4; 4]).unwrap();
            let b = varpi(&FieldSource::OvExact { r: 1.0, continued: true }, base, zeta, [1e-4; 4]).unwrap();
            assert!(max_abs(&add(&a, &scale(&b, C::new(-1.0, 0.0)))) < 1e-8 * max_abs(&a));
        }
    }

    #[test]
    fn ray_inside_the_stencil_is_reported() {
        let base = BasePoint::new(C::new(0.3, 0.2), 2.0, 1.0);
        let st = Stencil::new(&solved(OV, 2.0), base, [1e-4; 4]).unwrap();
        let on = C::from_polar(1.0, base.u.arg() + PI);
        assert!(matches!(st.varpi(on), Err(MetricError::OnRay(_))));
    }

    #[test]
    fn local_model_reproduces_pentagon_periods() {
        let (f, closure) = pentagon_local_model(0.2, 14).unwrap();
        assert!(closure < 1e-10);
        let model = CentralChargeModel::OvGeneralized { f };
        for u in [C::new(1.9, 0.01), C::new(1.95, -0.03)] {
            let z = crate::spectral_periods::pentagon_periods(u).unwrap();
            let m = model.basis(z[1]).unwrap();
            assert!((m[0] - z[0]).norm() < 1e-9, "{u}: {} vs {}", m[0], z[0]);
        }
    }

    #[test]
    fn pentagon_approaches_ov_near_the_singular_fiber() {
        let bases: Vec<BasePoint> = [0.1, 0.03, 0.01].iter().map(|&rho| BasePoint::new(C::new(2.0 - rho, 0.02 * rho), 2.0, 1.0)).collect();
        let bare = pentagon_vs_ov(&bases, 1.0, false, ExtractOptions::default()).unwrap();
        assert!(bare.points.iter().all(|p| p.difference_regular < 1e-7));
        let near = pentagon_vs_ov(&bases, 1.0, true, ExtractOptions::default()).unwrap();
        let d: Vec<f64> = near.points.iter().map(|p| p.difference_regular).collect();
        let (lo, hi) = (d.iter().cloned().fold(f64::INFINITY, f64::min), d.iter().cloned().fold(0.0, f64::max));
        assert!(hi < 3.0 * lo && hi < 1e-6, "{d:?}");
        // Instanton rate in R at the outer radius.
        let small = pentagon_vs_ov(&bases[..1], 0.5, true, ExtractOptions::default()).unwrap().points[0].difference_regular;
        let zm = crate::spectral_periods::pentagon_periods(bases[0].u).unwrap()[0].norm();
        let rate = (d[0] / small) / (-PI * zm).exp();
        assert!((1.0 / 3.0..3.0).contains(&rate), "{rate}");
    }

    #[test]
    fn semiflat_metric_degenerates_at_unit_modulus() {
        // V_sf is proportional to −ln|a|, so the semiflat OV metric only exists inside |a| < 1.
        for (m, positive) in [(0.99, true), (1.01, false)] {
            let ex = extract(&sf(OV, 1.0), BasePoint::new(C::from_polar(m, 0.4), 0.2, 1.0), ExtractOptions::default()).unwrap();
            assert_eq!(ex.metric.positive, positive, "|a| = {m}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn semiflat_metric_is_positive(m in 0.1f64..0.95, arg in -1.2f64..1.2, te in 0.2f64..6.0, r in 0.5f64..3.0) {
            let base = BasePoint::new(C::from_polar(m, arg), te, 1.0);
            let ex = extract(&sf(OV, r), base, ExtractOptions::default()).unwrap();
            prop_assert!(ex.metric.positive);
            prop_assert!(ex.metric.asymmetry < 1e-8 * ex.metric.eigenvalues[3]);
        }
    }
}
