//! Scenario configuration: a flat TOML table, validated as a whole.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Run2d,
    Run3dBarotropic,
    Run3dGeneral,
    BracketCheck,
    LimitStudy,
    Baroclinic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EosName {
    #[default]
    GammaIdeal,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Arakawa,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeName {
    #[default]
    Spectral,
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Planar `Ψ = a sin x sin y`.
    TaylorGreen,
    /// Planar `Ψ = a cos x`.
    Shear,
    /// Band-limited random flow (planar stream function or solenoidal 3D velocity).
    Random,
    /// Arnold–Beltrami–Childress four-velocity.
    Abc,
    /// Fluid at rest.
    Static,
}

fn two_pi() -> f64 {
    2.0 * PI
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_c_frac_max() -> f64 {
    0.99
}
fn default_cfl() -> f64 {
    0.4
}
fn default_tol() -> f64 {
    1e-10
}
fn default_projection_max_iter() -> usize {
    50
}
fn default_max_iter() -> usize {
    200
}
fn default_k0() -> f64 {
    3.0
}
fn default_kcut() -> usize {
    8
}
fn default_samples() -> usize {
    20
}
fn default_pairs() -> usize {
    100
}
fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub nx: usize,
    pub ny: usize,
    /// 3D modes only; defaults to `nx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nz: Option<usize>,
    #[serde(default = "two_pi")]
    pub lx: f64,
    #[serde(default = "two_pi")]
    pub ly: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lz: Option<f64>,
    /// Run a 3D mode on a z-invariant planar grid.
    #[serde(default, skip_serializing_if = "is_false")]
    pub planar: bool,

    /// Speed of light; required unless `classical`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Planar modes: exact γ ≡ 1 dynamics.
    #[serde(default, skip_serializing_if = "is_false")]
    pub classical: bool,
    #[serde(default = "default_c_frac_max")]
    pub c_frac_max: f64,

    #[serde(default)]
    pub eos: EosName,
    #[serde(default = "one")]
    pub eos_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eos_exponent: Option<f64>,
    /// Constant density of the planar model.
    #[serde(default = "one")]
    pub k: f64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_every: usize,

    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default)]
    pub derivative: DerivativeName,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "yes")]
    pub projection: bool,
    #[serde(default = "default_tol")]
    pub projection_tol: f64,
    #[serde(default = "default_projection_max_iter")]
    pub projection_max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,

    #[serde(default)]
    pub seed: u64,
    pub initial_condition: Preset,
    /// Velocity scale of the preset (stream-function amplitude for the
    /// analytic planar presets, maximum speed for the random ones).
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_kcut")]
    pub kcut: usize,
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default = "one")]
    pub p0: f64,
    /// Relative amplitude of the random density perturbation.
    #[serde(default)]
    pub density_perturbation: f64,
    /// Relative amplitude of the random pressure perturbation (general mode).
    #[serde(default)]
    pub pressure_perturbation: f64,

    /// `limit_study`: the speeds of light compared against γ ≡ 1.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c_values: Vec<f64>,
    /// `bracket_check`: random states per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// `bracket_check`: random gradient pairs per antisymmetry check.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// `baroclinic`: samples with `|K_source|` below this are not scored.
    #[serde(default)]
    pub budget_floor: f64,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ScenarioConfig {
    pub fn is_planar(&self) -> bool {
        matches!(self.mode, Mode::Run2d | Mode::LimitStudy) || self.planar
    }

    pub fn is_three_d(&self) -> bool {
        matches!(
            self.mode,
            Mode::Run3dBarotropic | Mode::Run3dGeneral | Mode::Baroclinic
        )
    }

    /// Fills mode-dependent defaults so the echoed config is explicit.
    fn normalize(&mut self) {
        let needs_z = (self.is_three_d() && !self.planar) || self.mode == Mode::BracketCheck;
        if needs_z {
            self.nz.get_or_insert(self.nx);
            self.lz.get_or_insert(2.0 * PI);
        }
        if self.mode == Mode::LimitStudy && self.c_values.is_empty() {
            self.c_values = vec![1e3, 1e4];
        }
        if self.eos == EosName::GammaIdeal {
            self.eos_exponent = None;
        }
    }

    /// Every violated invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut axis = |name: &str, n: Option<usize>, l: Option<f64>| {
            if let Some(n) = n {
                if n < 8 || n % 2 != 0 {
                    v.push(format!(
                        "{name} = {n}: cell counts must be even and at least 8"
                    ));
                }
            }
            if let Some(l) = l {
                if !(l.is_finite() && l > 0.0) {
                    v.push(format!(
                        "domain length along {name} must be positive, got {l}"
                    ));
                }
            }
        };
        axis("nx", Some(self.nx), Some(self.lx));
        axis("ny", Some(self.ny), Some(self.ly));
        axis("nz", self.nz, self.lz);
        if self.planar && !self.is_three_d() {
            v.push("planar applies to 3D modes only".into());
        }
        if self.planar && (self.nz.is_some() || self.lz.is_some()) {
            v.push("planar runs take no nz/lz".into());
        }

        let planar_model = matches!(self.mode, Mode::Run2d | Mode::LimitStudy);
        if self.classical && !planar_model {
            v.push("classical (γ ≡ 1) is only available for planar stream-function runs".into());
        }
        match self.c {
            Some(c) if !(c.is_finite() && c > 0.0) => {
                v.push(format!("c must be positive, got {c}"))
            }
            None if !self.classical && self.mode != Mode::LimitStudy => {
                v.push("c is required unless classical = true".into())
            }
            _ => {}
        }
        if !(self.c_frac_max > 0.0 && self.c_frac_max < 1.0) {
            v.push(format!(
                "c_frac_max must lie in (0, 1), got {}",
                self.c_frac_max
            ));
        }
        if !(self.eos_a.is_finite() && self.eos_a > 0.0) {
            v.push(format!("eos_a must be positive, got {}", self.eos_a));
        }
        match (self.eos, self.eos_exponent) {
            (EosName::PowerLaw, None) => v.push("power_law needs eos_exponent".into()),
            (EosName::PowerLaw, Some(g)) if g.is_nan() || g <= 0.0 || g == 1.0 => v.push(format!(
                "eos_exponent must be positive and not 1 (use gamma_ideal), got {g}"
            )),
            _ => {}
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            v.push(format!("k must be positive, got {}", self.k));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                v.push(format!("dt must be positive, got {dt}"));
            }
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            v.push(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            v.push(format!("t_end must be non-negative, got {}", self.t_end));
        }
        for (name, tol) in [("tol", self.tol), ("projection_tol", self.projection_tol)] {
            if !(tol.is_finite() && tol > 0.0) {
                v.push(format!("{name} must be positive, got {tol}"));
            }
        }
        if self.max_iter == 0 || self.projection_max_iter == 0 {
            v.push("iteration limits must be positive".into());
        }
        if self.seed > i64::MAX as u64 {
            v.push(format!("seed must be below 2^63, got {}", self.seed));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            v.push(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            ));
        }
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            v.push(format!("k0 must be positive, got {}", self.k0));
        }
        if self.kcut == 0 {
            v.push("kcut must be at least 1".into());
        }
        if self.initial_condition == Preset::Random {
            let min_n = [Some(self.nx), Some(self.ny), self.nz]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(self.nx);
            if 2 * self.kcut >= min_n {
                v.push(format!(
                    "kcut = {} is not resolved by {min_n} cells (need 2·kcut < n)",
                    self.kcut
                ));
            }
        }
        for (name, x) in [("s0", self.s0), ("p0", self.p0)] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be positive, got {x}"));
            }
        }
        for (name, x) in [
            ("density_perturbation", self.density_perturbation),
            ("pressure_perturbation", self.pressure_perturbation),
        ] {
            if !(0.0..1.0).contains(&x) {
                v.push(format!("{name} must lie in [0, 1), got {x}"));
            }
        }
        if self.budget_floor < 0.0 {
            v.push("budget_floor must be non-negative".into());
        }
        if self.mode == Mode::BracketCheck && self.samples == 0 {
            v.push("samples must be positive".into());
        }

        let preset_ok = match self.initial_condition {
            Preset::TaylorGreen | Preset::Shear => planar_model,
            Preset::Abc => self.is_three_d() && !self.planar,
            Preset::Random | Preset::Static => true,
        };
        if !preset_ok {
            v.push(format!(
                "initial_condition {:?} is not available in mode {:?}",
                self.initial_condition, self.mode
            ));
        }

        // random presets set the maximum speed directly
        if self.initial_condition == Preset::Random {
            let speeds: Vec<f64> = match self.mode {
                Mode::LimitStudy => self.c_values.clone(),
                _ => self.c.into_iter().collect(),
            };
            for c in speeds {
                if self.amplitude > self.c_frac_max * c {
                    v.push(format!(
                        "amplitude {} exceeds c_frac_max · c = {}",
                        self.amplitude,
                        self.c_frac_max * c
                    ));
                }
            }
        }
        if self.mode == Mode::LimitStudy {
            if self.c_values.is_empty() {
                v.push("c_values must not be empty".into());
            }
            if self.c_values.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                v.push("c_values must be positive".into());
            }
        }
        v
    }

    /// Normalizes and validates.
    pub fn validated(mut self) -> Result<Self, CliError> {
        self.normalize();
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Validation(v))
        }
    }

    /// Normalized TOML echo; parses back to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

pub fn parse_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    cfg.validated()
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}
