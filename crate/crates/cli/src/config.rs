//! Experiment config schemas. Every file carries a `schema_version` and is
//! parsed with unknown fields rejected, so a typo fails loudly instead of
//! silently running the defaults.

use std::path::Path;

use serde::Deserialize;
use torus_atlas::diophantine::DiophantineParams;
use torus_atlas::geometry::Perturbation;
use torus_atlas::kam::{ActionWindow, NewtonParams};

use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;

/// Read and parse one config file, returning the raw bytes as well so the
/// manifest can hash exactly what was read.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, Vec<u8>), Failure> {
    let raw = std::fs::read(path)
        .map_err(|err| Failure::Validation(format!("config {}: {err}", path.display())))?;
    let cfg = serde_json::from_slice(&raw)
        .map_err(|err| Failure::Validation(format!("config {}: {err}", path.display())))?;
    Ok((cfg, raw))
}

pub fn check_version(found: u32) -> Result<(), Failure> {
    if found != SCHEMA_VERSION {
        return Err(Failure::Validation(format!(
            "schema_version {found} not supported (this build reads {SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

/// Perturbation family names as they appear in config files.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    Q1Potential,
    Q1Q3Potential,
    Q3Kinetic,
}

impl FamilyId {
    pub fn perturbation(self) -> Perturbation {
        match self {
            FamilyId::Q1Potential => Perturbation::Q1Potential,
            FamilyId::Q1Q3Potential => Perturbation::Q1Q3Potential,
            FamilyId::Q3Kinetic => Perturbation::Q3Kinetic,
        }
    }
}

fn default_family() -> FamilyId {
    FamilyId::Q1Potential
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCfg {
    pub i_range: [f64; 2],
    pub e_range: [f64; 2],
    pub knots: [usize; 2],
}

impl WindowCfg {
    pub fn window(&self) -> ActionWindow {
        ActionWindow {
            i_range: self.i_range,
            e_range: self.e_range,
            knots: self.knots,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DioCfg {
    pub gamma: f64,
    pub tau: f64,
    pub k_max: u32,
}

impl Default for DioCfg {
    fn default() -> Self {
        let d = DiophantineParams::default();
        DioCfg {
            gamma: d.gamma,
            tau: d.tau,
            k_max: d.k_max,
        }
    }
}

impl DioCfg {
    pub fn params(&self) -> DiophantineParams {
        DiophantineParams {
            gamma: self.gamma,
            tau: self.tau,
            k_max: self.k_max,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonCfg {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for NewtonCfg {
    fn default() -> Self {
        let d = NewtonParams::default();
        NewtonCfg {
            tol: d.tol,
            max_iters: d.max_iters,
        }
    }
}

impl NewtonCfg {
    pub fn params(&self) -> NewtonParams {
        NewtonParams {
            tol: self.tol,
            max_iters: self.max_iters,
            ..NewtonParams::default()
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationConfig {
    pub schema_version: u32,
    pub i_range: [f64; 2],
    pub e_range: [f64; 2],
    pub grid: [usize; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreqmapConfig {
    pub schema_version: u32,
    pub i_range: [f64; 2],
    pub e_range: [f64; 2],
    pub grid: [usize; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiophantineConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub samples: usize,
    /// Sampling box for frequency vectors: [[w1 lo, w1 hi], [w2 lo, w2 hi]].
    pub omega_box: [[f64; 2]; 2],
    #[serde(default)]
    pub diophantine: DioCfg,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoopCfg {
    pub center: [f64; 2],
    pub radius: f64,
    pub vertices: usize,
}

impl Default for LoopCfg {
    fn default() -> Self {
        // Circles the isolated singular value once.
        LoopCfg {
            center: [0.0, 1.0],
            radius: 0.5,
            vertices: 32,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyConfig {
    pub schema_version: u32,
    #[serde(default, rename = "loop")]
    pub path: LoopCfg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveToriConfig {
    pub schema_version: u32,
    pub family: FamilyId,
    pub epsilon: f64,
    pub window: WindowCfg,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub diophantine: DioCfg,
    #[serde(default)]
    pub newton: NewtonCfg,
    /// Also write each solved torus as a binary coefficient dump.
    #[serde(default)]
    pub dump_tori: bool,
}

fn default_n() -> usize {
    128
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartCfg {
    pub id: usize,
    pub window: WindowCfg,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    pub fibers: Vec<[f64; 2]>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_points() -> usize {
    3
}

fn default_t_end() -> f64 {
    50.0
}

fn default_h() -> f64 {
    1e-3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlueConfig {
    pub schema_version: u32,
    pub family: FamilyId,
    pub epsilon: f64,
    pub charts: Vec<ChartCfg>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub diophantine: DioCfg,
    #[serde(default)]
    pub newton: NewtonCfg,
    #[serde(default = "default_lemma_tol")]
    pub lemma_tol: f64,
    #[serde(default = "default_subgrid")]
    pub subgrid: usize,
    /// Sampling resolution of the partition weight CSV.
    #[serde(default = "default_partition_grid")]
    pub partition_grid: [usize; 2],
    #[serde(default)]
    pub verify: Option<VerifyCfg>,
}

fn default_lemma_tol() -> f64 {
    1e-6
}

fn default_subgrid() -> usize {
    16
}

fn default_partition_grid() -> [usize; 2] {
    [21, 21]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyFreqConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_family")]
    pub family: FamilyId,
    #[serde(default)]
    pub epsilon: f64,
    /// How many oscillation-class label pairs to sample.
    pub count: usize,
    pub i_range: [f64; 2],
    pub e_range: [f64; 2],
    #[serde(default = "default_verify_t_end")]
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Spectral lines reported per observable in the line table.
    #[serde(default = "default_lines")]
    pub lines: usize,
}

fn default_verify_t_end() -> f64 {
    500.0
}

fn default_stride() -> usize {
    8
}

fn default_lines() -> usize {
    1
}
