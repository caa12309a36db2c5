//! Command-line driver: configuration, orchestration, JSON reports, CSV data
//! and SVG plots.
//!
//! Every run prints one JSON document on stdout with a top-level
//! `"schema": 1`. Failures print an error document instead and exit nonzero:
//! 1 when a check owned by the subcommand fails, 2 for bad input, 3 when a
//! numerical routine errors, 4 on I/O failure.

pub mod config;
pub mod svg;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::acceptance;
use crate::charge_lattice::{BpsSpectrum, Charge, TorusAngles};
use crate::ks_algebra::{mutated_pentagon_check, pentagon_check};
use crate::metric_extract::{extract, ov_metric_at_zero, BasePoint, ExtractOptions, FieldSource};
use crate::ov_exact::{
    connection_a, metric_ov_generalized, potential_v, v0, xe_sf, xm_at_zero, xm_quadrature_model, OvPoint, DEFAULT_CUTOFF,
};
use crate::rh_solver::{evaluate, jump_check, ray_phases, reality_check, solve, ProblemSpec};
use crate::spectral_periods::{central_charge, CentralChargeModel};
use crate::wall_gauge::{find_walls, pentagon_region, q_map, wall_check, wall_type_of, PentagonSetup, SINGULAR_U};

use config::{FieldKind, ModelKind, RunConfig, SpectrumChoice};
use svg::{Axes, Series};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// One-line error document, schema first.
    pub fn to_json(&self) -> String {
        let doc = ErrorReport { schema: SCHEMA, error: ErrorBody { kind: self.kind(), message: self.to_string() } };
        serde_json::to_string(&doc).unwrap_or_default()
    }
}

#[derive(Serialize)]
struct ErrorReport {
    schema: u32,
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Numeric(e.to_string())
            }
        }
    )*};
}

numeric_from!(
    crate::spectral_periods::PeriodError,
    crate::rh_solver::SolverError,
    crate::ov_exact::OvError,
    crate::wall_gauge::WallError,
    crate::metric_extract::MetricError,
    crate::ks_algebra::KsError
);

#[derive(Debug, Parser)]
#[command(name = "gmn", version, about = "Darboux coordinates, wall crossing and hyperkahler metrics for the OV and Pentagon models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    /// Radius of the compactification circle.
    #[arg(long = "R", global = true, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Base point as RE,IM.
    #[arg(long, global = true, value_parser = parse_pair, allow_hyphen_values = true)]
    pub u: Option<[f64; 2]>,
    /// Solver tolerance on the sup-norm change per iteration.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tol: Option<f64>,
    /// Directory for report.json, CSV data and plots.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit SVG plots (into --out, or ./gmn-out).
    #[arg(long, global = true)]
    pub plots: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Central charges, chamber and the wall function around the singular fiber.
    Periods,
    /// Closed-form OV coordinates, potential and metric.
    Ov,
    /// Solve the Riemann–Hilbert problem at one base point.
    Solve,
    /// Check X⁺ = S⁻¹X⁻ across every BPS ray.
    JumpCheck,
    /// Wall gauge continuity and the circle map Q.
    WallCheck,
    /// Exact pentagon identity in the truncated quantum torus.
    KsPentagon {
        /// Truncation degree; overrides the config.
        #[arg(long)]
        degree: Option<i64>,
    },
    /// Extract the hyperkahler metric from ϖ(ζ).
    Metric,
    /// Run the acceptance criteria.
    AllAcceptance {
        /// Restrict to these criteria ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Periods => "periods",
            Command::Ov => "ov",
            Command::Solve => "solve",
            Command::JumpCheck => "jump-check",
            Command::WallCheck => "wall-check",
            Command::KsPentagon { .. } => "ks-pentagon",
            Command::Metric => "metric",
            Command::AllAcceptance { .. } => "all-acceptance",
        }
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected RE,IM, got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(a)?, p(b)?])
}

/// Cap the rayon pool at GMN_THREADS when set.
pub fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var("GMN_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError::Config(format!("GMN_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(CliError::Config("GMN_THREADS must be positive".into()));
    }
    // A pool built earlier in the process stays in place.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Merge the config file and flag overrides, then validate.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.model {
        cfg.model = m;
    }
    if let Some(r) = cli.r {
        cfg.r = r;
    }
    if let Some(u) = cli.u {
        cfg.u = u;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    cfg.plots |= cli.plots;
    match &cli.command {
        Command::KsPentagon { degree: Some(d) } => cfg.degree = *d,
        Command::AllAcceptance { only } if !only.is_empty() => cfg.criteria = only.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files produced by a run, keyed by name so they are written in a fixed order.
#[derive(Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
}

impl Artifacts {
    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.files.insert(name.to_string(), s);
    }

    fn plot(&mut self, name: &str, svg: Option<String>) {
        if let Some(s) = svg {
            self.files.insert(name.to_string(), s);
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        if self.files.is_empty() {
            return Ok(());
        }
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: &'static str,
    /// Whether the checks owned by the subcommand hold; absent when it owns none.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    pub config: RunConfig,
    pub result: Value,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.passed == Some(false) {
            1
        } else {
            0
        }
    }
}

struct Outcome {
    passed: Option<bool>,
    result: Value,
}

/// Run a subcommand and write its artifacts.
pub fn run(command: &Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let mut art = Artifacts::default();
    let out = match command {
        Command::Periods => periods(cfg, &mut art)?,
        Command::Ov => ov(cfg, &mut art)?,
        Command::Solve => solve_cmd(cfg, &mut art)?,
        Command::JumpCheck => jump(cfg)?,
        Command::WallCheck => wall(cfg, &mut art)?,
        Command::KsPentagon { .. } => ks(cfg)?,
        Command::Metric => metric(cfg, &mut art)?,
        Command::AllAcceptance { .. } => all_acceptance(cfg),
    };
    if !cfg.plots {
        art.files.retain(|k, _| !k.ends_with(".svg"));
    }
    let dir = cfg.out.clone().or_else(|| cfg.plots.then(|| PathBuf::from("gmn-out")));
    let mut report = Report {
        schema: SCHEMA,
        command: command.name(),
        passed: out.passed,
        config: cfg.clone(),
        result: out.result,
        artifacts: Vec::new(),
    };
    if let Some(dir) = dir {
        report.artifacts = art.files.keys().cloned().collect();
        report.artifacts.push("report.json".into());
        art.write(&dir)?;
        let body = to_pretty(&report)?;
        let p = dir.join("report.json");
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        std::fs::write(&p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(report)
}

pub fn to_pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Parse `args`, run, print the JSON document and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            println!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let result = configure_threads().and_then(|_| resolve_config(&cli)).and_then(|cfg| run(&cli.command, &cfg));
    match result.and_then(|rep| Ok((to_pretty(&rep)?, rep.exit_code()))) {
        Ok((body, code)) => {
            print!("{body}");
            code
        }
        Err(e) => {
            println!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn cj(z: C) -> Value {
    json!([z.re, z.im])
}

fn base_u(cfg: &RunConfig) -> C {
    C::new(cfg.u[0], cfg.u[1])
}

fn singular_point(model: ModelKind) -> C {
    match model {
        ModelKind::Pentagon => SINGULAR_U,
        ModelKind::Ov | ModelKind::OvGen => C::new(0.0, 0.0),
    }
}

fn build_spec(cfg: &RunConfig) -> Result<ProblemSpec, CliError> {
    let model = cfg.model();
    let u = base_u(cfg);
    let z = model.basis(u)?;
    let spectrum = match (cfg.spectrum, cfg.model) {
        (SpectrumChoice::Empty, _) => BpsSpectrum::empty(),
        (SpectrumChoice::Auto, ModelKind::Pentagon) => BpsSpectrum::pentagon(pentagon_region(z, u)),
        (SpectrumChoice::Auto, _) => BpsSpectrum::ooguri_vafa(),
    };
    Ok(ProblemSpec::new(z, spectrum, cfg.r, TorusAngles::new(cfg.theta_m, cfg.theta_e)).with_settings(cfg.settings()))
}

fn periods(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let model = cfg.model();
    let u = base_u(cfg);
    let charges = [Charge::G1, Charge::G2, Charge::G1 + Charge::G2, Charge::G1 - Charge::G2];
    let mut zs = Vec::new();
    for g in charges {
        let z = central_charge(&model, u, g)?;
        zs.push(json!({ "charge": [g.0, g.1], "z": cj(z), "abs": z.norm(), "arg": z.arg() }));
    }
    let mut result = json!({ "u": cfg.u, "central_charges": zs });
    let center = singular_point(cfg.model);
    let n = 360;
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let phi = -PI + (k as f64 + 0.5) * TAU / n as f64;
        let p = center + C::from_polar(cfg.wall_radius, phi);
        let z = model.basis(p)?;
        let ratio = z[0] / z[1];
        rows.push(vec![phi, p.re, p.im, ratio.im, ratio.re]);
    }
    let mut marks = Vec::new();
    if cfg.model == ModelKind::Pentagon {
        let z = model.basis(u)?;
        result["region"] = json!(pentagon_region(z, u));
        result["wall_type"] = json!(wall_type_of(z));
        let walls = find_walls(cfg.wall_radius)?;
        marks = walls.iter().map(|w| (w.u - center).arg()).collect();
        result["walls"] = json!(walls);
    }
    let curve = Series { label: "Im(Z1/Z2)".into(), points: rows.iter().map(|r| (r[0], r[3])).collect(), dashed: false };
    art.plot(
        "wall_function.svg",
        svg::line_chart("wall function around the singular fiber", "arg(u - u*)", "Im(Z1/Z2)", &[curve], &marks, Axes { log_x: false, log_y: false }),
    );
    art.csv("wall_function.csv", &["phi", "re_u", "im_u", "im_ratio", "re_ratio"], rows);
    Ok(Outcome { passed: None, result })
}

fn ov(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    if cfg.model == ModelKind::Pentagon {
        return Err(CliError::Config("ov needs --model ov or ov-gen".into()));
    }
    let model = cfg.model();
    let a = base_u(cfg);
    let p = OvPoint::new(a, cfg.theta_e, cfg.theta_m, cfg.r)?;
    let probes = cfg.probes();
    let at_zero = a == C::new(0.0, 0.0);
    let mut values = Vec::with_capacity(probes.len());
    for &z in &probes {
        let xm = if at_zero { xm_at_zero(cfg.theta_e, cfg.theta_m, z)? } else { xm_quadrature_model(&model, &p, z)? };
        values.push(json!({ "zeta": cj(z), "x_e": cj(xe_sf(&p, z)), "x_m": cj(xm) }));
    }
    let x3 = cfg.theta_e / (TAU * cfg.r);
    let x = [a.re, a.im, x3];
    let mut result = json!({ "a": cfg.u, "values": values });
    if at_zero {
        result["v0"] = json!(v0(cfg.theta_e, cfg.r)?);
    } else {
        result["potential"] = json!(potential_v(x, cfg.r, DEFAULT_CUTOFF)?);
        result["connection"] = json!(connection_a(x, cfg.r, DEFAULT_CUTOFF)?);
    }
    if cfg.model == ModelKind::OvGen {
        result["generalized_metric"] = json!(metric_ov_generalized(cfg.theta_e, cfg.r, &cfg.f)?);
    }
    // V along the diagonal ray through the origin of the x³ = 0 slice.
    let mut rows = Vec::new();
    for &r in &cfg.profile_radii {
        let d = r / 3f64.sqrt();
        let v = potential_v([d, d, d], cfg.r, DEFAULT_CUTOFF)?;
        rows.push(vec![r, v, 1.0 / (4.0 * PI * r)]);
    }
    let series = [
        Series { label: "V".into(), points: rows.iter().map(|r| (r[0], r[1])).collect(), dashed: false },
        Series { label: "1/(4 pi r)".into(), points: rows.iter().map(|r| (r[0], r[2])).collect(), dashed: true },
    ];
    art.plot("potential_profile.svg", svg::line_chart("Gibbons-Hawking potential", "r", "V", &series, &[], Axes { log_x: true, log_y: true }));
    art.csv("potential_profile.csv", &["r", "v", "reference"], rows);
    Ok(Outcome { passed: None, result })
}

fn solve_cmd(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let (field, rep) = solve(&spec)?;
    let probes = cfg.probes();
    let points: Vec<[C; 2]> = probes.par_iter().map(|&z| [evaluate(&spec, &field, Charge::G1, z), evaluate(&spec, &field, Charge::G2, z)]).collect();
    let phases = ray_phases(&spec);
    let reality = reality_check(&spec, &field, &probes[..probes.len().min(16)]);
    let values: Vec<Value> = probes.iter().zip(&points).map(|(z, x)| json!({ "zeta": cj(*z), "x_m": cj(x[0]), "x_e": cj(x[1]) })).collect();
    let spectrum = spec.spectrum.to_json_entries();
    let result = json!({
        "region": spec.spectrum.region,
        "spectrum": spectrum,
        "central_charges": [cj(spec.z[0]), cj(spec.z[1])],
        "convergence": rep,
        "ray_phases": phases,
        "reality_residual": reality,
        "values": values,
    });
    let rows: Vec<Vec<f64>> = probes.iter().zip(&points).map(|(z, x)| vec![z.norm(), z.arg().rem_euclid(TAU), x[0].norm(), x[0].arg(), x[1].norm(), x[1].arg()]).collect();
    let n = cfg.zeta_phases;
    let series: Vec<Series> = rows
        .chunks(n)
        .map(|c| {
            let mut pts: Vec<(f64, f64)> = c.iter().map(|r| (r[1], r[2])).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label: format!("|zeta| = {}", c[0][0]), points: pts, dashed: false }
        })
        .collect();
    art.plot("abs_xm_vs_phase.svg", svg::line_chart("|X_m| over arg zeta", "arg zeta", "|X_m|", &series, &phases, Axes { log_x: false, log_y: true }));
    let grid: Vec<Vec<f64>> = rows.chunks(n).map(|c| c.iter().map(|r| r[2].ln()).collect()).collect();
    art.plot("log_abs_xm_heatmap.svg", svg::heatmap("log|X_m| over (arg zeta, |zeta|)", "arg zeta", "|zeta| circle", &grid));
    art.csv("x_values.csv", &["abs_zeta", "arg_zeta", "abs_xm", "arg_xm", "abs_xe", "arg_xe"], rows);
    Ok(Outcome { passed: None, result })
}

fn jump(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = build_spec(cfg)?;
    let (field, _) = solve(&spec)?;
    let reps: Vec<_> = ray_phases(&spec).into_iter().map(|ph| jump_check(&spec, &field, ph, &cfg.jump_radii)).collect();
    let worst = reps.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(Outcome {
        passed: Some(worst < cfg.jump_tol),
        result: json!({ "max_residual": worst, "threshold": cfg.jump_tol, "rays": reps }),
    })
}

fn wall(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    if cfg.model != ModelKind::Pentagon {
        return Err(CliError::Config("wall-check needs --model pentagon".into()));
    }
    let setup = PentagonSetup { r: cfg.r, settings: cfg.settings() };
    let angles = TorusAngles::new(cfg.theta_m, cfg.theta_e);
    let checks = find_walls(cfg.wall_radius)?
        .into_iter()
        .map(|w| wall_check(&setup, w, angles, 1e-7))
        .collect::<Result<Vec<_>, _>>()?;
    let q = q_map(&setup, base_u(cfg), cfg.theta_e, cfg.theta_grid, 1e-3)?;
    let disc = checks.iter().map(|c| c.discrepancy).fold(0.0, f64::max);
    let passed = disc < 1e-6 && q.dpsi_max < 1.0 && q.period_defect < 1e-10;
    let rows: Vec<Vec<f64>> = q.theta_m.iter().zip(&q.q).map(|(&t, &v)| vec![t, v]).collect();
    let series = [Series { label: "Q".into(), points: rows.iter().map(|r| (r[0], r[1])).collect(), dashed: false }];
    art.plot("q_map.svg", svg::line_chart("circle map Q", "theta_m", "Q(theta_m)", &series, &[], Axes { log_x: false, log_y: false }));
    art.csv("q_map.csv", &["theta_m", "q"], rows);
    Ok(Outcome { passed: Some(passed), result: json!({ "walls": checks, "q_map": q }) })
}

fn ks(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rep = pentagon_check(cfg.degree)?;
    let mutated = mutated_pentagon_check(cfg.degree)?;
    Ok(Outcome {
        passed: Some(rep.identity()),
        result: json!({ "identity": rep.identity(), "degree": cfg.degree, "report": rep, "without_bound_state": mutated }),
    })
}

fn metric(cfg: &RunConfig, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let model = cfg.model();
    let source = match cfg.field {
        FieldKind::Solved => FieldSource::Solved { model: model.clone(), r: cfg.r, settings: cfg.settings() },
        FieldKind::Semiflat => FieldSource::Semiflat { model: model.clone(), r: cfg.r },
        FieldKind::OvExact if cfg.model == ModelKind::Ov => FieldSource::OvExact { r: cfg.r, continued: true },
        FieldKind::OvExact => return Err(CliError::Config("field = \"ov-exact\" needs --model ov".into())),
    };
    let mut us = vec![cfg.u];
    us.extend(cfg.bases.iter().copied());
    let opts = ExtractOptions { order: cfg.laurent_order, per_circle: cfg.laurent_samples, steps: None };
    let extractions = us
        .par_iter()
        .map(|u| extract(&source, BasePoint::new(C::new(u[0], u[1]), cfg.theta_e, cfg.theta_m), opts.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (u, ex) in us.iter().zip(&extractions) {
        for i in 0..4 {
            for j in 0..4 {
                rows.push(vec![u[0], u[1], i as f64, j as f64, ex.metric.g[i][j]]);
            }
        }
        points.push(json!({
            "u": u,
            "metric": ex.metric,
            "omega3": ex.sample.omega3,
            "pole_residual": ex.sample.pole_residual,
            "conjugacy_defect": ex.sample.conjugacy_defect,
            "fit_residual": ex.fit_residual,
            "condition": ex.condition,
        }));
    }
    let positive = extractions.iter().all(|e| e.metric.positive);
    let mut result = json!({ "frame": crate::metric_extract::FRAME, "points": points, "positive": positive });
    if cfg.model == ModelKind::Ov && cfg.u == [0.0, 0.0] && matches!(model, CentralChargeModel::OvClassical) {
        result["singular_fiber"] = json!(ov_metric_at_zero(cfg.theta_e, cfg.theta_m, cfg.r, 1e-4)?);
    }
    let center = singular_point(cfg.model);
    let mut prof: Vec<(f64, [f64; 4])> = us
        .iter()
        .zip(&extractions)
        .map(|(u, e)| ((C::new(u[0], u[1]) - center).norm(), [e.metric.g[0][0], e.metric.g[1][1], e.metric.g[2][2], e.metric.g[3][3]]))
        .collect();
    prof.sort_by(|a, b| a.0.total_cmp(&b.0));
    if prof.len() >= 2 {
        let series: Vec<Series> = crate::metric_extract::FRAME
            .iter()
            .enumerate()
            .map(|(k, l)| Series { label: format!("g_{l}"), points: prof.iter().map(|p| (p.0, p.1[k])).collect(), dashed: false })
            .collect();
        art.plot("metric_profile.svg", svg::line_chart("metric diagonal over distance to the singular fiber", "r", "g", &series, &[], Axes { log_x: true, log_y: true }));
    }
    art.csv("metric.csv", &["re_u", "im_u", "row", "col", "g"], rows);
    Ok(Outcome { passed: Some(positive), result })
}

fn all_acceptance(cfg: &RunConfig) -> Outcome {
    let results = acceptance::run(&cfg.criteria);
    for r in &results {
        eprintln!("{}", r.line());
    }
    let passed = results.iter().all(|r| r.passed);
    let table: Vec<Value> = results.iter().map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed })).collect();
    Outcome { passed: Some(passed), result: json!({ "table": table, "criteria": results }) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("gmn").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let cli = parse(&["solve", "--model", "ov", "--R", "1.5", "--u", "-0.3,0.2", "--tol", "1e-9"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.model, ModelKind::Ov);
        assert_eq!((cfg.r, cfg.u, cfg.tol), (1.5, [-0.3, 0.2], 1e-9));
    }

    #[test]
    fn invalid_flag_values_are_config_errors() {
        let cli = parse(&["solve", "--R", "-2"]);
        let e = resolve_config(&cli).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let doc: Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(doc["schema"], 1);
        assert!(e.to_json().starts_with("{\"schema\":1,"));
        assert!(Cli::try_parse_from(["gmn", "solve", "--u", "1"]).is_err());
    }

    #[test]
    fn ks_pentagon_reports_identity() {
        let cli = parse(&["ks-pentagon", "--degree", "8"]);
        let rep = run(&cli.command, &resolve_config(&cli).unwrap()).unwrap();
        assert_eq!(rep.result["identity"], true);
        assert_eq!(rep.exit_code(), 0);
        assert_eq!(serde_json::to_value(&rep).unwrap()["schema"], 1);
    }

    #[test]
    fn zero_spectrum_has_zero_deltas() {
        let cfg = RunConfig { spectrum: SpectrumChoice::Empty, ..Default::default() };
        let rep = run(&Command::Solve, &cfg).unwrap();
        let deltas = rep.result["convergence"]["deltas"].as_array().unwrap();
        assert!(deltas.iter().all(|d| d.as_f64() == Some(0.0)));
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let cfg = RunConfig { model: ModelKind::Pentagon, ..Default::default() };
        assert!(matches!(run(&Command::Ov, &cfg), Err(CliError::Config(_))));
    }
}
