use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use bkflow_core::specflow::FlowOptions;
use bkflow_core::{LatticePotential, SeededRng};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Index,
    Ssf,
    Scatter,
    Flow,
    VerifyThm0,
    VerifyE1,
    VerifyBk,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Index => "index",
            Command::Ssf => "ssf",
            Command::Scatter => "scatter",
            Command::Flow => "flow",
            Command::VerifyThm0 => "verify-thm0",
            Command::VerifyE1 => "verify-e1",
            Command::VerifyBk => "verify-bk",
            Command::Sweep => "sweep",
        }
    }
}

/// Operator model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    /// `{"kind": "potential", "sites": [...], "values": [...]}`.
    Potential { sites: Vec<i64>, values: Vec<f64> },
    /// Random lattice potential drawn from the seed.
    RandomPotential { max_sites: usize, span: i64, max_value: f64 },
    /// `A` Hermitian of size `dim`, `B = A + V` with `rank V = rank`.
    RandomMatrix { dim: usize, rank: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Energy interval `[a, b]` for grids.
    pub interval: Option<[f64; 2]>,
    pub points: usize,
    /// Box half-width for single-box runs.
    pub l: Option<usize>,
    pub l_sweep: Option<Vec<usize>>,
    pub delta_sweep: Option<Vec<f64>>,
    /// Smoothing half-width.
    pub w: f64,
    /// Target angle for `flow`.
    pub theta: f64,
    pub flow: FlowOptions,
    pub alpha_margin: f64,
    /// Random energy probes for matrix models.
    pub probes: usize,
    pub quadrature_points: usize,
    pub tolerance: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda1: None,
            lambda2: None,
            interval: None,
            points: 200,
            l: None,
            l_sweep: None,
            delta_sweep: None,
            w: 0.1,
            theta: PI,
            flow: FlowOptions::default(),
            alpha_margin: bkflow_core::xi::ALPHA_MARGIN,
            probes: 50,
            quadrature_points: 2000,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    pub model: Model,
    #[serde(default)]
    pub params: Params,
    #[serde(default = "yes")]
    pub csv: bool,
}

fn yes() -> bool {
    true
}

/// Problem with the configuration; maps to exit status 64.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Sets `key` (dot-separated path) to `raw`, parsed as JSON when possible
/// and as a string otherwise. Intermediate objects are created on demand.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| err(format!("override `{spec}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err(format!("override key `{key}` has an empty component")));
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| err(format!("override `{key}`: `{}` is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last component")
}

/// Reads, overrides and validates a config for `command`.
pub fn load(
    path: &Path,
    command: Command,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| err(format!("{}: malformed JSON: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let mut cfg: ExperimentConfig =
        serde_json::from_value(doc).map_err(|e| err(format!("{}: invalid config: {e}", path.display())))?;
    if let Some(c) = cfg.command {
        if c != command {
            return Err(err(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                command.name()
            )));
        }
    }
    cfg.command = Some(command);
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate(command)?;
    Ok(cfg)
}

fn in_band(name: &str, x: f64) -> Result<(), ConfigError> {
    if !(x.abs() < 2.0) {
        return Err(err(format!("params.{name} = {x}: λ outside open band (−2,2)")));
    }
    Ok(())
}

fn finite(name: &str, x: f64) -> Result<(), ConfigError> {
    if !x.is_finite() {
        return Err(err(format!("params.{name} = {x} is not finite")));
    }
    Ok(())
}

impl ExperimentConfig {
    fn need<T: Copy>(field: Option<T>, name: &str, command: Command) -> Result<T, ConfigError> {
        field.ok_or_else(|| err(format!("params.{name} is required for `{}`", command.name())))
    }

    pub fn lambda(&self, command: Command) -> Result<f64, ConfigError> {
        Self::need(self.params.lambda, "lambda", command)
    }

    pub fn interval(&self, command: Command) -> Result<[f64; 2], ConfigError> {
        if let Some(iv) = self.params.interval {
            return Ok(iv);
        }
        match (self.params.lambda1, self.params.lambda2) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(err(format!(
                "params.interval (or params.lambda1 and params.lambda2) is required for `{}`",
                command.name()
            ))),
        }
    }

    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let p = &self.params;
        match &self.model {
            Model::Potential { sites, values } => {
                LatticePotential::new(sites.clone(), values.clone()).map_err(|e| err(format!("model: {e}")))?;
            }
            Model::RandomPotential { max_sites, span, max_value } => {
                if *max_sites == 0 || *span < 0 || !(max_value.is_finite() && *max_value >= 0.0) {
                    return Err(err("model: random_potential needs max_sites ≥ 1, span ≥ 0, max_value ≥ 0"));
                }
                if (2 * *span + 1) < *max_sites as i64 {
                    return Err(err("model: random_potential span too small for max_sites"));
                }
            }
            Model::RandomMatrix { dim, rank } => {
                if *dim == 0 || rank > dim {
                    return Err(err("model: random_matrix needs dim ≥ 1 and rank ≤ dim"));
                }
            }
        }
        let matrix_model = matches!(self.model, Model::RandomMatrix { .. });
        let lattice_only = !matches!(command, Command::Index | Command::Ssf);
        if matrix_model && lattice_only {
            return Err(err(format!("`{}` needs a lattice model, not random_matrix", command.name())));
        }
        if !(p.w > 0.0 && p.w.is_finite()) {
            return Err(err(format!("params.w = {} must be positive", p.w)));
        }
        if p.points < 2 {
            return Err(err("params.points must be at least 2"));
        }
        match command {
            Command::Index | Command::Ssf if !matrix_model => {
                finite("lambda", self.lambda(command)?)?;
            }
            Command::Scatter | Command::Flow | Command::Sweep => {
                let [a, b] = self.interval(command)?;
                if command != Command::Sweep {
                    in_band("interval[0]", a)?;
                    in_band("interval[1]", b)?;
                }
                finite("interval[0]", a)?;
                finite("interval[1]", b)?;
                if !(a < b) {
                    return Err(err(format!("params.interval = [{a}, {b}] must be increasing")));
                }
            }
            Command::VerifyThm0 | Command::VerifyBk => in_band("lambda", self.lambda(command)?)?,
            Command::VerifyE1 => {
                let [a, b] = self.interval(command)?;
                finite("lambda1", a)?;
                finite("lambda2", b)?;
                // Both in the band: the flow comparison. Both in gaps: the
                // point-counting control. Mixed intervals are rejected.
                let gap = a.abs() > 2.0 && b.abs() > 2.0;
                if !gap {
                    in_band("lambda1", a)?;
                    in_band("lambda2", b)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The lattice potential, drawing it from stream 0 when random.
    pub fn potential(&self) -> Option<LatticePotential> {
        match &self.model {
            Model::Potential { sites, values } => LatticePotential::new(sites.clone(), values.clone()).ok(),
            Model::RandomPotential { max_sites, span, max_value } => {
                Some(SeededRng::new(self.seed, 0).potential(*max_sites, *span, *max_value))
            }
            Model::RandomMatrix { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_nested_and_scalar() {
        let mut doc = json!({"seed": 1, "params": {"lambda": 0.5}});
        apply_override(&mut doc, "params.lambda=0.75").unwrap();
        apply_override(&mut doc, "params.flow.step=0.005").unwrap();
        apply_override(&mut doc, "seed=9").unwrap();
        assert_eq!(doc, json!({"seed": 9, "params": {"lambda": 0.75, "flow": {"step": 0.005}}}));
        assert!(apply_override(&mut doc, "seed").is_err());
        assert!(apply_override(&mut doc, "seed.x=1").is_err());
    }

    #[test]
    fn model_parses_with_tag() {
        let m: Model = serde_json::from_value(json!({"kind": "potential", "sites": [0], "values": [1.0]})).unwrap();
        assert_eq!(m, Model::Potential { sites: vec![0], values: vec![1.0] });
        assert!(serde_json::from_value::<Model>(json!({"kind": "potential", "sites": [0], "values": [1.0], "x": 1})).is_err());
    }

    #[test]
    fn band_validation_message() {
        let cfg = ExperimentConfig {
            command: None,
            seed: 0,
            model: Model::Potential { sites: vec![0], values: vec![1.0] },
            params: Params { lambda: Some(3.0), ..Params::default() },
            csv: true,
        };
        let e = cfg.validate(Command::VerifyBk).unwrap_err();
        assert!(e.0.contains("λ outside open band (−2,2)"), "{e}");
    }
}
