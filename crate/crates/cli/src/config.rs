//! Experiment configuration: a JSON file, then flag and environment overrides.

use std::path::Path;

use anyhow::Context;
use holosurf::analysis::default_m_grid;
use holosurf::lattice::{CutKind, Pos};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub trials: u64,
    pub lattice: LatticeConfig,
    pub rate_curve: RateCurveConfig,
    pub estimate: EstimateConfig,
    pub oracle: OracleConfig,
    pub montecarlo: MonteCarloConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            trials: 1000,
            lattice: LatticeConfig::default(),
            rate_curve: RateCurveConfig::default(),
            estimate: EstimateConfig::default(),
            oracle: OracleConfig::default(),
            montecarlo: MonteCarloConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSpec {
    pub kind: CutKind,
    pub holes: [Pos; 2],
    /// Enlarge both holes to this perimeter after creation.
    #[serde(default)]
    pub perimeter: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub l: usize,
    /// The first two defects are control and target for `braid-check`.
    pub defects: Vec<DefectSpec>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            l: 20,
            defects: vec![
                DefectSpec { kind: CutKind::Z, holes: [Pos::new(18, 11), Pos::new(18, 3)], perimeter: Some(8) },
                DefectSpec { kind: CutKind::X, holes: [Pos::new(19, 20), Pos::new(19, 30)], perimeter: Some(8) },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateCurveConfig {
    pub ds: Vec<u32>,
    pub cbjs: Vec<f64>,
    pub p: f64,
    pub m_grid: Vec<f64>,
}

impl Default for RateCurveConfig {
    fn default() -> Self {
        RateCurveConfig { ds: vec![7, 11, 15, 19], cbjs: vec![8.0, 12.0], p: 1e-3, m_grid: default_m_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub big_m: f64,
    pub delta: f64,
    pub p: f64,
    pub cbj: f64,
    pub m_grid: Vec<f64>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { big_m: 1e14, delta: 0.1, p: 1e-3, cbj: 12.0, m_grid: vec![1e8] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub j: f64,
    pub order: u32,
    pub gamma: f64,
    /// Step durations for the error curve.
    pub t_values: Vec<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { j: 1.0, order: 4, gamma: 1.0, t_values: vec![2.0, 4.0, 8.0, 16.0, 32.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McKind {
    Memory,
    Vote,
    Distill,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillCode {
    Steane,
    ReedMuller,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub kind: McKind,
    pub d: usize,
    pub p: f64,
    /// Syndrome rounds for `memory`; defaults to `d`.
    pub rounds: Option<usize>,
    pub cbj: f64,
    /// Flip rate of the corrupted row for the weighted `vote` estimator.
    pub bias: f64,
    pub code: DistillCode,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            kind: McKind::Memory,
            d: 3,
            p: 1e-3,
            rounds: None,
            cbj: 0.0,
            bias: 0.5,
            code: DistillCode::Steane,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Config> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        format!("{:x}", Sha256::digest(self.canonical_json().as_bytes()))
    }
}
