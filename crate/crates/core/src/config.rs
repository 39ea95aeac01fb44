//! Run configuration: one TOML file with `plant`, `generator`, `sim` and
//! optional command blocks.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{AxisRange, BasinGrid, FitOptions, LinearGains};
use crate::family::{FamilySpec, GeneratorSpec};
use crate::plant::{PlantParams, State};
use crate::sim::SimConfig;

/// A configuration problem, located in the source where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field, when known.
    pub field: Option<String>,
    /// 1-based line in the config file.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub plant: PlantParams,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearGains>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basin: Option<BasinBlock>,
    #[serde(default)]
    pub verify: VerifyBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    /// `[s, theta, s_dot, theta_dot]`; overridden by `--x0`.
    pub x0: [f64; 4],
}

/// Target feedback gains for `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    #[serde(rename = "Kbp")]
    pub kbp: f64,
    #[serde(rename = "Kap")]
    pub kap: f64,
    #[serde(rename = "Kbd")]
    pub kbd: f64,
    #[serde(rename = "Kad")]
    pub kad: f64,
    #[serde(default = "FitBlock::default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "FitBlock::default_tol")]
    pub tol: f64,
    #[serde(default = "FitBlock::default_jacobian_step")]
    pub jacobian_step: f64,
}

impl FitBlock {
    fn default_max_iterations() -> usize {
        FitOptions::default().max_iterations
    }
    fn default_tol() -> f64 {
        FitOptions::default().tol
    }
    fn default_jacobian_step() -> f64 {
        FitOptions::default().jacobian_step
    }

    pub fn target(&self) -> LinearGains {
        LinearGains { a8: 0.0, kbp: self.kbp, kap: self.kap, kbd: self.kbd, kad: self.kad }
    }

    pub fn options(&self) -> FitOptions {
        FitOptions { max_iterations: self.max_iterations, tol: self.tol, jacobian_step: self.jacobian_step }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinBlock {
    pub capture_radius: f64,
    pub s: AxisRange,
    pub theta: AxisRange,
    pub s_dot: AxisRange,
    pub theta_dot: AxisRange,
}

impl BasinBlock {
    pub fn grid(&self) -> BasinGrid {
        BasinGrid { s: self.s, theta: self.theta, s_dot: self.s_dot, theta_dot: self.theta_dot }
    }
}

/// Grids and tolerances of the `verify` suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    pub s_range: [f64; 2],
    pub theta_range: [f64; 2],
    /// Points per axis of the matching grid.
    pub grid: usize,
    pub matching_tol: f64,
    pub dissipation_t_final: f64,
    pub dissipation_dt: f64,
    pub dissipation_tol: f64,
    pub derivative_points: usize,
    pub derivative_tol: f64,
    /// Multiplies ĝ11 in the matching check. Test hook; leave at 1.
    pub ghat11_scale: f64,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            s_range: [0.3, 0.9],
            theta_range: [-0.5, 0.5],
            grid: 20,
            matching_tol: 1e-6,
            dissipation_t_final: 10.0,
            dissipation_dt: 1e-3,
            dissipation_tol: 1e-4,
            derivative_points: 100,
            derivative_tol: 1e-5,
            ghat11_scale: 1.0,
        }
    }
}

impl RunConfig {
    pub fn spec(&self) -> FamilySpec {
        FamilySpec::new(self.plant, self.generator.clone())
    }

    pub fn x0(&self) -> State {
        match self.simulate {
            Some(b) => State::from_array(b.x0),
            None => self.spec().equilibrium(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
            field: None,
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&src)
    }

    /// Parse and validate. Errors carry the offending field and its line.
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(src).map_err(|e| ConfigError {
            field: None,
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate().map_err(|(field, message)| {
            let line = locate(src, &field);
            ConfigError { field: Some(field), line, message }
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), (String, String)> {
        if let Err(e) = self.plant.validate() {
            let msg = e.to_string();
            return Err((format!("plant.{}", leading_ident(msg_body(&msg))), msg));
        }
        if let Err(e) = self.spec().validate() {
            let msg = e.to_string();
            return Err((format!("generator.{}", leading_ident(msg_body(&msg))), msg));
        }
        if let Err(msg) = self.sim.validate() {
            return Err((format!("sim.{}", leading_ident(&msg)), msg));
        }
        if let Some(b) = &self.simulate {
            if !b.x0.iter().all(|v| v.is_finite()) {
                return Err(("simulate.x0".into(), "x0 must be finite".into()));
            }
        }
        if let Some(g) = &self.linear {
            if !g.is_finite() {
                return Err(("linear".into(), "linear gains must be finite".into()));
            }
        }
        if let Some(f) = &self.fit {
            if !f.target().is_finite() {
                return Err(("fit".into(), "target gains must be finite".into()));
            }
            if !(f.tol > 0.0) {
                return Err(("fit.tol".into(), "tol must be > 0".into()));
            }
            if !(f.jacobian_step > 0.0) {
                return Err(("fit.jacobian_step".into(), "jacobian_step must be > 0".into()));
            }
        }
        if let Some(b) = &self.basin {
            if !(b.capture_radius > 0.0) {
                return Err(("basin.capture_radius".into(), "capture_radius must be > 0".into()));
            }
            for (name, a) in [("s", b.s), ("theta", b.theta), ("s_dot", b.s_dot), ("theta_dot", b.theta_dot)] {
                if a.count == 0 || !a.min.is_finite() || !a.max.is_finite() || a.min > a.max {
                    return Err((
                        format!("basin.{name}"),
                        "axis needs finite min <= max and count >= 1".into(),
                    ));
                }
            }
        }
        let v = &self.verify;
        if v.grid < 2 || v.derivative_points == 0 {
            return Err(("verify.grid".into(), "grid must be >= 2 and derivative_points >= 1".into()));
        }
        if !(v.s_range[0] < v.s_range[1] && v.theta_range[0] < v.theta_range[1]) {
            return Err(("verify.s_range".into(), "ranges must be increasing".into()));
        }
        if !(v.ghat11_scale.is_finite() && v.ghat11_scale > 0.0) {
            return Err(("verify.ghat11_scale".into(), "ghat11_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Text after the error-kind prefix (`"invalid plant parameters: "`).
fn msg_body(msg: &str) -> &str {
    msg.split_once(": ").map(|(_, b)| b).unwrap_or(msg)
}

fn leading_ident(msg: &str) -> &str {
    let end = msg
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(msg.len());
    &msg[..end]
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of `section.key` (or of the `[section]` header) in `src`.
fn locate(src: &str, path: &str) -> Option<usize> {
    let (section, key) = path.split_once('.').unwrap_or((path, ""));
    let mut current = "";
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}
