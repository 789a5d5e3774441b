//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::shots::ShotPlan;
use crate::estimate::Engine;
use crate::fit::{FitConfig, FitTargets};
use crate::noise::NoiseSpec;
use crate::protocol::{InputState, TeleportMode};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Characterize,
    Teleport,
    Fit,
    Validate,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Characterize => "characterize",
            Scenario::Teleport => "teleport",
            Scenario::Fit => "fit",
            Scenario::Validate => "validate",
        }
    }
}

/// Which corrected values to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// Code-space projection only.
    #[default]
    Projection,
    /// Syndrome decoding plus recovery, reported next to the projected values.
    Active,
    Both,
}

impl Correction {
    pub fn includes_active(self) -> bool {
        self != Correction::Projection
    }
}

/// `"exact"`, one count for every setting, or separate counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Sampled { resource: u64, teleport: u64 },
}

impl Default for Shots {
    fn default() -> Self {
        let p = ShotPlan::default();
        Shots::Sampled { resource: p.resource_shots, teleport: p.teleport_shots }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ShotsRepr {
    Word(String),
    Count(u64),
    Split { resource: u64, teleport: u64 },
}

impl Serialize for Shots {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Shots::Exact => ShotsRepr::Word("exact".into()),
            Shots::Sampled { resource, teleport } => ShotsRepr::Split { resource, teleport },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let shots = match ShotsRepr::deserialize(d)? {
            ShotsRepr::Word(w) if w == "exact" => Shots::Exact,
            ShotsRepr::Word(w) => return Err(D::Error::custom(format!("shots must be a count or \"exact\", got {w:?}"))),
            ShotsRepr::Count(n) => Shots::Sampled { resource: n, teleport: n },
            ShotsRepr::Split { resource, teleport } => Shots::Sampled { resource, teleport },
        };
        if let Shots::Sampled { resource, teleport } = shots {
            if resource == 0 || teleport == 0 {
                return Err(D::Error::custom("shot counts must be at least 1"));
            }
        }
        Ok(shots)
    }
}

/// An input given by name, as `[θ, φ]`, or as `{name?, theta, phi}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSpec {
    Named(String),
    Angles([f64; 2]),
    Full {
        #[serde(default)]
        name: Option<String>,
        theta: f64,
        phi: f64,
    },
}

impl InputSpec {
    pub fn resolve(&self) -> Result<InputState> {
        let s = match self {
            InputSpec::Named(n) => InputState::named(n)?,
            InputSpec::Angles([t, p]) => InputState::custom(*t, *p),
            InputSpec::Full { name, theta, phi } => {
                let mut s = InputState::custom(*theta, *phi);
                if let Some(n) = name {
                    s.name = n.clone();
                }
                s
            }
        };
        if !(s.theta.is_finite() && s.phi.is_finite()) {
            return Err(Error::Config(format!("input {} has non-finite angles", s.name)));
        }
        Ok(s)
    }
}

fn default_inputs() -> Vec<InputSpec> {
    ["zero", "plus", "right"].iter().map(|s| InputSpec::Named(s.to_string())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn json(self) -> bool {
        self != OutputFormat::Csv
    }

    pub fn csv(self) -> bool {
        self != OutputFormat::Json
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Directory for reports; nothing is written when absent.
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "FitTargets::reference")]
    pub targets: FitTargets,
    #[serde(default)]
    pub search: FitConfig,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection { targets: FitTargets::reference(), search: FitConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Trajectories per grid point in the oracle-equivalence check.
    pub trajectories: usize,
    /// Depolarizing strengths combined into the (p_phys, p_input, q_logical) grid.
    pub grid: Vec<f64>,
    /// Repeated shot experiments in the calibration check.
    pub calibration_runs: usize,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection { trajectories: 20_000, grid: vec![0.0, 0.08], calibration_runs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: Scenario,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub shots: Shots,
    /// Expectation backend. With `trajectory`, shots must be `"exact"`.
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
    #[serde(default = "default_inputs")]
    pub inputs: Vec<InputSpec>,
    #[serde(default = "default_mode")]
    pub mode: TeleportMode,
    #[serde(default)]
    pub correction: Correction,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

fn default_engine() -> Engine {
    Engine::Analytic
}

fn default_trajectories() -> usize {
    100_000
}

fn default_resamples() -> usize {
    400
}

fn default_mode() -> TeleportMode {
    TeleportMode::PostselectPhiPlus
}

impl ExperimentConfig {
    /// Defaults for `scenario`.
    pub fn new(scenario: Scenario) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            scenario,
            noise: NoiseSpec::default(),
            shots: Shots::default(),
            engine: default_engine(),
            trajectories: default_trajectories(),
            resamples: default_resamples(),
            inputs: default_inputs(),
            mode: default_mode(),
            correction: Correction::default(),
            output: OutputSpec::default(),
            fit: FitSection::default(),
            validate: ValidateSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolved_inputs(&self) -> Result<Vec<InputState>> {
        let inputs = self.inputs.iter().map(InputSpec::resolve).collect::<Result<Vec<_>>>()?;
        for (i, a) in inputs.iter().enumerate() {
            if inputs[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Config(format!("duplicate input name {}", a.name)));
            }
        }
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        self.noise.validate()?;
        let inputs = self.resolved_inputs()?;
        if self.scenario == Scenario::Teleport && inputs.is_empty() {
            return Err(Error::Config("the teleport scenario needs at least one input".into()));
        }
        if self.engine == Engine::Trajectory {
            if self.shots != Shots::Exact {
                return Err(Error::Config("the trajectory engine needs shots = \"exact\"".into()));
            }
            if self.trajectories == 0 {
                return Err(Error::Config("trajectories must be at least 1".into()));
            }
        }
        if self.shots != Shots::Exact && self.resamples < 100 {
            return Err(Error::Config(format!("resamples must be at least 100, got {}", self.resamples)));
        }
        self.fit.targets.validate()?;
        self.fit.search.validate()?;
        let v = &self.validate;
        if v.grid.is_empty() || v.grid.iter().any(|p| !(0.0..=0.75).contains(p)) {
            return Err(Error::Config("validate.grid needs values in [0, 0.75]".into()));
        }
        if v.trajectories == 0 || v.calibration_runs < 2 {
            return Err(Error::Config("validate needs trajectories ≥ 1 and calibration_runs ≥ 2".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"schema_version": 1, "scenario": "characterize"}"#).unwrap();
        assert_eq!(c.shots, Shots::Sampled { resource: 1500, teleport: 60 });
        assert_eq!(c.resolved_inputs().unwrap().len(), 3);
        assert_eq!(c.engine, Engine::Analytic);
    }

    #[test]
    fn shots_and_inputs_forms() {
        let c = ExperimentConfig::from_json(
            r#"{"schema_version": 1, "scenario": "teleport", "shots": "exact",
                "inputs": ["magic", [1.0, 0.5], {"name": "mine", "theta": 0.3, "phi": 0.0}],
                "noise": {"p_phys": 0.05, "p_input": {"px": 0.01, "py": 0, "pz": 0.02}, "q_logical": 0.1}}"#,
        )
        .unwrap();
        assert_eq!(c.shots, Shots::Exact);
        let inputs = c.resolved_inputs().unwrap();
        assert_eq!(inputs[2].name, "mine");
        let c = ExperimentConfig::from_json(r#"{"schema_version": 1, "scenario": "fit", "shots": 10}"#).unwrap();
        assert_eq!(c.shots, Shots::Sampled { resource: 10, teleport: 10 });
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            r#"{"schema_version": 2, "scenario": "fit"}"#,
            r#"{"schema_version": 1, "scenario": "fit", "extra": 1}"#,
            r#"{"schema_version": 1, "scenario": "fit", "shots": 0}"#,
            r#"{"schema_version": 1, "scenario": "fit", "shots": "many"}"#,
            r#"{"schema_version": 1, "scenario": "teleport", "inputs": []}"#,
            r#"{"schema_version": 1, "scenario": "fit", "engine": "trajectory"}"#,
            r#"{"schema_version": 1, "scenario": "fit", "noise": {"q_logical": 2}}"#,
            r#"{"schema_version": 1, "scenario": "fit", "inputs": ["zero", "0"]}"#,
            r#"{"schema_version": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::new(Scenario::Teleport);
        c.shots = Shots::Exact;
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
