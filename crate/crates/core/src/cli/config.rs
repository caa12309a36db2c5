//! Run configuration: a TOML file with flag overrides, validated before use.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::rh_solver::SolverSettings;
use crate::spectral_periods::CentralChargeModel;

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ov,
    OvGen,
    Pentagon,
}

/// Which BPS spectrum the solver uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumChoice {
    /// OV spectrum for OV models, the chamber of u for the Pentagon.
    Auto,
    Empty,
}

/// Darboux coordinates fed to the metric extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Solved,
    Semiflat,
    OvExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Taylor coefficients [re, im] of f(a) for the generalized OV model.
    pub f: Vec<[f64; 2]>,
    pub r: f64,
    pub u: [f64; 2],
    pub theta_e: f64,
    pub theta_m: f64,
    pub spectrum: SpectrumChoice,
    /// Solver tolerance on the sup-norm iteration delta.
    pub tol: f64,
    pub nodes: usize,
    pub max_iter: usize,
    pub exponent_cut: f64,
    /// Threshold for jump-check residuals.
    pub jump_tol: f64,
    pub jump_radii: Vec<f64>,
    /// ζ circles and the number of phases sampled on each.
    pub zeta_radii: Vec<f64>,
    pub zeta_phases: usize,
    /// θ_m grid size for the wall gauge map.
    pub theta_grid: usize,
    /// Radius of the circle around u = 2 scanned for walls.
    pub wall_radius: f64,
    /// Extra base points [re, im] for `metric`; `u` is always included.
    pub bases: Vec<[f64; 2]>,
    pub field: FieldKind,
    pub laurent_order: usize,
    pub laurent_samples: usize,
    /// Radii of the potential profile emitted by `ov`.
    pub profile_radii: Vec<f64>,
    pub degree: i64,
    /// Criteria for `all-acceptance`; empty runs all.
    pub criteria: Vec<u8>,
    pub out: Option<PathBuf>,
    pub plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        RunConfig {
            model: ModelKind::Pentagon,
            f: vec![[0.0, 0.0], [0.0, 1.0 / TAU]],
            r: 2.0,
            u: [0.0, 0.0],
            theta_e: 2.2,
            theta_m: 0.7,
            spectrum: SpectrumChoice::Auto,
            tol: s.tol,
            nodes: s.nodes,
            max_iter: s.max_iter,
            exponent_cut: s.exponent_cut,
            jump_tol: 1e-6,
            jump_radii: vec![0.3, 1.0, 3.0],
            zeta_radii: vec![0.5, 1.0, 2.0],
            zeta_phases: 64,
            theta_grid: 32,
            wall_radius: 0.3,
            bases: Vec::new(),
            field: FieldKind::Solved,
            laurent_order: 4,
            laurent_samples: 24,
            profile_radii: (0..13).map(|k| 10f64.powf(-0.25 * k as f64)).collect(),
            degree: 8,
            criteria: Vec::new(),
            out: None,
            plots: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let positive = [
            ("r", self.r),
            ("tol", self.tol),
            ("jump_tol", self.jump_tol),
            ("wall_radius", self.wall_radius),
            ("exponent_cut", self.exponent_cut),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !self.u.iter().chain([&self.theta_e, &self.theta_m]).all(|x| x.is_finite()) {
            return bad("u and the torus angles must be finite");
        }
        for (name, grid) in [("jump_radii", &self.jump_radii), ("zeta_radii", &self.zeta_radii), ("profile_radii", &self.profile_radii)] {
            if grid.is_empty() {
                return bad(&format!("{name} must be nonempty"));
            }
            if grid.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad(&format!("{name} entries must be positive"));
            }
        }
        if self.zeta_phases < 2 || self.theta_grid < 2 {
            return bad("zeta_phases and theta_grid need at least 2 points");
        }
        if self.nodes < 9 || self.max_iter == 0 {
            return bad("nodes must be at least 9 and max_iter positive");
        }
        if !(1..=24).contains(&self.degree) {
            return bad("degree must lie in 1..=24");
        }
        if !(2..=8).contains(&self.laurent_order) || self.laurent_samples < 4 {
            return bad("laurent_order must lie in 2..=8 and laurent_samples be at least 4");
        }
        if self.model == ModelKind::OvGen && self.f.iter().flatten().any(|x| !x.is_finite()) {
            return bad("f coefficients must be finite");
        }
        if let Some(c) = self.criteria.iter().find(|&&c| !(1..=17).contains(&c)) {
            return bad(&format!("unknown acceptance criterion {c}"));
        }
        Ok(())
    }

    pub fn model(&self) -> CentralChargeModel {
        match self.model {
            ModelKind::Ov => CentralChargeModel::OvClassical,
            ModelKind::OvGen => CentralChargeModel::OvGeneralized { f: self.f.clone() },
            ModelKind::Pentagon => CentralChargeModel::PentagonCubic,
        }
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            nodes: self.nodes,
            tol: self.tol,
            max_iter: self.max_iter,
            exponent_cut: self.exponent_cut,
            ..SolverSettings::default()
        }
    }

    /// ζ probes, circle by circle, phases starting just off the real axis.
    pub fn probes(&self) -> Vec<num_complex::Complex64> {
        let n = self.zeta_phases;
        self.zeta_radii
            .iter()
            .flat_map(|&r| (0..n).map(move |k| num_complex::Complex64::from_polar(r, 0.013 + TAU * k as f64 / n as f64)))
            .collect()
    }
}
