//! Scenario configuration files (`qbsde-scenario/1`).

use std::collections::BTreeMap;
use std::path::Path;

use qbsde_core::harness::Relation;
use qbsde_core::transforms::{ClosedForm, LambdaWeight};
use qbsde_core::{Domain, GeneratorFamily, GeneratorSpec, GrowthEnvelope, Obstacle, ScalarFn, SolverConfig, TerminalCondition, TimeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_ID: &str = "qbsde-scenario/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub scenario_id: String,
    pub generator: GeneratorConfig,
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<GrowthEnvelope>,
    pub terminal: TerminalCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<Obstacle>,
    pub grid: GridConfig,
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub expect: Expectation,
    #[serde(default)]
    pub checks: Vec<CheckConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// JSON has no infinities, so a missing bound of `open_interval` means
/// the interval is unbounded on that side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    RealLine,
    PositiveHalfLine,
    OpenInterval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
}

impl DomainConfig {
    pub fn build(&self) -> qbsde_core::Result<Domain> {
        match *self {
            DomainConfig::RealLine => Ok(Domain::RealLine),
            DomainConfig::PositiveHalfLine => Ok(Domain::PositiveHalfLine),
            DomainConfig::OpenInterval { lower, upper } => {
                Domain::open_interval(lower.unwrap_or(f64::NEG_INFINITY), upper.unwrap_or(f64::INFINITY))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "M")]
    pub steps: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(rename = "N")]
    pub n_paths: usize,
    #[serde(default = "one")]
    pub d: usize,
    pub seed: u64,
}

/// What a run is supposed to produce. `divergence` marks scenarios past an
/// existence threshold: the run passes only if the solver diverges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Solution,
    Divergence,
}

fn three() -> f64 {
    3.0
}
fn skorokhod_tol() -> f64 {
    1e-12
}
fn default_t_max() -> f64 {
    5.0
}
fn default_ode_steps() -> usize {
    1000
}
fn default_thetas() -> Vec<f64> {
    vec![0.5, 0.9, 0.99]
}
fn default_true() -> bool {
    true
}
fn lattice_n() -> usize {
    5
}
fn random_points() -> usize {
    10_000
}
fn segments() -> usize {
    2000
}

/// Partial scenario used as the second side of a comparison.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal: Option<TerminalCondition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacle: Option<Obstacle>,
    /// Drop the obstacle of the base scenario.
    #[serde(default)]
    pub no_obstacle: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<ScalarFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub domain: DomainConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    /// `|Y_0 - expected| <= max(abs_tol, stderr_mult · stderr)`, and
    /// `stderr <= max_stderr` when given.
    OracleY0 {
        expected: f64,
        abs_tol: f64,
        #[serde(default = "three")]
        stderr_mult: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_stderr: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_z_clips: Option<usize>,
    },
    Bracketing {
        terminal_bounds: [f64; 2],
    },
    /// Threshold of the backward ODE `y' = -g(t, y, 0)` from the constant terminal value.
    BlowupThreshold {
        expected: f64,
        tol: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_ode_steps")]
        steps: usize,
    },
    Skorokhod {
        #[serde(default = "skorokhod_tol")]
        tol: f64,
    },
    /// Reflected solution against the plain solve on the same paths:
    /// equal bit for bit when the obstacle never binds.
    InactiveObstacle,
    /// Deterministic reflected run against the envelope ODE.
    EnvelopeReproduction {
        tol: f64,
        k_tol: f64,
    },
    PicardResidual {
        tol: f64,
    },
    UniquenessProbe,
    Comparison {
        relation: Relation,
        other: ScenarioOverride,
        #[serde(default = "default_true")]
        check_swapped: bool,
    },
    ThetaDomination {
        other_terminal: TerminalCondition,
        #[serde(default = "default_thetas")]
        thetas: Vec<f64>,
        #[serde(default)]
        expect_violations: bool,
    },
    Growth {
        y_range: [f64; 2],
        z_range: [f64; 2],
        #[serde(default = "lattice_n")]
        lattice_n: usize,
        #[serde(default = "random_points")]
        random_points: usize,
    },
    Convexity {
        y_range: [f64; 2],
        z_range: [f64; 2],
        #[serde(default = "segments")]
        segments: usize,
        #[serde(default = "default_thetas")]
        thetas: Vec<f64>,
    },
    Integrability {
        transform: TransformConfig,
        weight: LambdaWeight,
        q_list: Vec<f64>,
        p: f64,
    },
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn invalid(&self, message: String) -> CliError {
        CliError::ConfigInvalid { line: 0, column: 0, message: format!("{}: {message}", self.scenario_id) }
    }

    /// Rejects everything the solvers would reject, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_ID {
            return Err(self.invalid(format!("schema must be \"{SCHEMA_ID}\", got \"{}\"", self.schema)));
        }
        let id_ok = !self.scenario_id.is_empty()
            && self.scenario_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.');
        if !id_ok {
            return Err(self.invalid("scenario_id must be non-empty and use [A-Za-z0-9_.-]".into()));
        }
        let spec = self.generator_spec().map_err(|e| self.invalid(e.to_string()))?;
        self.grid().map_err(|e| self.invalid(e.to_string()))?;
        if self.monte_carlo.n_paths == 0 || self.monte_carlo.d == 0 {
            return Err(self.invalid("monte_carlo needs N >= 1 and d >= 1".into()));
        }
        self.solver.validate(&spec.domain).map_err(|e| self.invalid(e.to_string()))?;
        for check in &self.checks {
            match check {
                CheckConfig::Comparison { other, .. } => {
                    self.with_override(other).generator_spec().map_err(|e| self.invalid(e.to_string()))?;
                }
                CheckConfig::Integrability { transform, .. } => {
                    transform.domain.build().map_err(|e| self.invalid(e.to_string()))?;
                    if transform.closed_form.is_some() == transform.phi.is_some() {
                        return Err(self.invalid("transform needs exactly one of closed_form and phi".into()));
                    }
                }
                CheckConfig::Bracketing { .. } | CheckConfig::Growth { .. } if spec.envelope.is_none() => {
                    return Err(self.invalid("this check needs a declared growth envelope".into()));
                }
                CheckConfig::BlowupThreshold { .. } | CheckConfig::EnvelopeReproduction { .. }
                    if self.terminal.as_constant().is_none() =>
                {
                    return Err(self.invalid("this check needs a constant terminal value".into()));
                }
                CheckConfig::Skorokhod { .. } | CheckConfig::InactiveObstacle | CheckConfig::EnvelopeReproduction { .. }
                    if self.obstacle.is_none() =>
                {
                    return Err(self.invalid("this check needs an obstacle".into()));
                }
                CheckConfig::ThetaDomination { thetas, .. } | CheckConfig::Convexity { thetas, .. }
                    if thetas.iter().any(|t| !(*t > 0.0 && *t < 1.0)) =>
                {
                    return Err(self.invalid("thetas must lie in (0, 1)".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Generator with the explicit envelope, or the family's declared one.
    pub fn generator_spec(&self) -> qbsde_core::Result<GeneratorSpec> {
        let domain = self.domain.build()?;
        let family = GeneratorFamily::from_params(&self.generator.family, &self.generator.params)?;
        let envelope = self.envelope.clone().or_else(|| family.declared_envelope());
        let spec = GeneratorSpec::new(domain, family);
        match envelope {
            Some(env) => spec.with_envelope(env),
            None => Ok(spec),
        }
    }

    pub fn grid(&self) -> qbsde_core::Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.steps)
    }

    pub fn with_override(&self, o: &ScenarioOverride) -> ScenarioConfig {
        let mut out = self.clone();
        if let Some(g) = &o.generator {
            out.generator = g.clone();
            out.envelope = None;
        }
        if let Some(t) = &o.terminal {
            out.terminal = t.clone();
        }
        if o.no_obstacle {
            out.obstacle = None;
        }
        if let Some(ob) = &o.obstacle {
            out.obstacle = Some(ob.clone());
        }
        out.checks.clear();
        out
    }

    /// Pretty JSON of the effective configuration; stable field order.
    pub fn canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("configs hold no closures");
        s.push('\n');
        s
    }

    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": "qbsde-scenario/1",
        "scenario_id": "t",
        "generator": {"family": "affine", "params": {"a": 1.0}},
        "domain": {"kind": "real_line"},
        "terminal": {"kind": "deterministic_constant", "value": -0.5},
        "grid": {"T": 1.0, "M": 10},
        "monte_carlo": {"N": 1, "seed": 0}
    }"#;

    #[test]
    fn minimal_config_round_trips() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        let again = ScenarioConfig::from_json(&cfg.canonical_json()).unwrap();
        assert_eq!(cfg.config_hash(), again.config_hash());
        assert_eq!(cfg.config_hash().len(), 64);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = MINIMAL.replace("\"scenario_id\"", "\"colour\": 1, \"scenario_id\"");
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(CliError::ConfigInvalid { .. })));
    }

    #[test]
    fn malformed_json_reports_position() {
        match ScenarioConfig::from_json("{\n  \"schema\": ") {
            Err(CliError::ConfigInvalid { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn envelope_constraints_are_enforced() {
        let base: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let env = |b: f64, nu: f64, c: f64, kappa: f64| {
            let mut v = base.clone();
            v["envelope"] = serde_json::json!({
                "u": {"kind": "constant", "value": 1.0},
                "l": {"kind": "abs_affine", "intercept": 1.0, "slope": 1.0},
                "f": {"kind": "constant", "value": 0.0},
                "delta": {"kind": "constant", "value": 0.0},
                "gamma": {"kind": "constant", "value": 0.0},
                "kappa": kappa, "nu": nu, "b": b, "c": c
            });
            ScenarioConfig::from_json(&v.to_string())
        };
        assert!(env(0.3, 1.0, 1.0, 0.0).is_ok());
        match env(0.5, 1.0, 1.0, 0.0) {
            Err(CliError::ConfigInvalid { message, .. }) => assert!(message.contains("1/e"), "{message}"),
            other => panic!("{other:?}"),
        }
        assert!(env(0.3, 0.5, 1.0, 0.0).is_err());
        assert!(env(0.3, 1.0, 0.2, 0.0).is_err());
        assert!(env(0.3, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn half_open_interval_without_infinities() {
        let v = MINIMAL.replace(r#"{"kind": "real_line"}"#, r#"{"kind": "open_interval", "lower": -1.0}"#);
        let cfg = ScenarioConfig::from_json(&v).unwrap();
        assert_eq!(cfg.domain.build().unwrap().bounds(), (-1.0, f64::INFINITY));
    }
}
