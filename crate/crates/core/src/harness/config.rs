use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chains::io::{GroupFile, SpaceFile};
use crate::error::{Error, Result};
use crate::flatnorm::SolveMode;
use crate::foundation::{CoefficientGroup, NormedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lsc,
    Eilenberg,
    ConeBounds,
    Diffusion,
    Quantize,
    Compactness,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Lsc => "lsc",
            ExperimentKind::Eilenberg => "eilenberg",
            ExperimentKind::ConeBounds => "cone_bounds",
            ExperimentKind::Diffusion => "diffusion",
            ExperimentKind::Quantize => "quantize",
            ExperimentKind::Compactness => "compactness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// slack on mass inequalities
    pub mass: f64,
    /// slack on flat-norm inequalities
    pub flat: f64,
    /// allowed relative spread of constants across replicates
    pub stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass: 1e-6,
            flat: 1e-6,
            stability: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub max_summands: usize,
    /// bound `q` on `N(P)`
    pub max_n: f64,
    /// bounding box; the unit cube when absent
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    /// complex resolution for flat-norm measurements
    pub resolution: usize,
    /// generate lattice-aligned chains on the complex grid
    pub lattice: bool,
    /// subdivision stage for piecewise-linear approximations
    pub stage: usize,
    /// quantization radius (quantize)
    pub delta: f64,
    pub epsilons: Vec<f64>,
    /// compactness: `δ = delta_factor · ε`
    pub delta_factor: f64,
    /// compactness: also report the net over this many leading chains
    pub prefix: Option<usize>,
    /// independent replicates for constant-stability checks
    pub replicates: usize,
    /// solver mode; integer for discrete groups when absent
    pub mode: Option<String>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            max_summands: 3,
            max_n: 10.0,
            box_lo: None,
            box_hi: None,
            resolution: 8,
            lattice: false,
            stage: 3,
            delta: 0.25,
            epsilons: vec![0.5, 0.25],
            delta_factor: 0.25,
            prefix: None,
            replicates: 3,
            mode: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub space: SpaceFile,
    pub group: GroupFile,
    pub k: usize,
    pub instances: usize,
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, space: &NormedSpace, group: CoefficientGroup, k: usize, instances: usize, seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            space: SpaceFile::from_space(space),
            group: GroupFile::from_group(group),
            k,
            instances,
            seed,
            tolerances: Tolerances::default(),
            params: Params::default(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn normed_space(&self) -> Result<NormedSpace> {
        self.space.to_space()
    }

    pub fn coefficient_group(&self) -> Result<CoefficientGroup> {
        self.group.to_group()
    }

    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = self.space.dim;
        let lo = self.params.box_lo.clone().unwrap_or_else(|| vec![0.0; d]);
        let hi = self.params.box_hi.clone().unwrap_or_else(|| vec![1.0; d]);
        if lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if lo.len() != d { lo.len() } else { hi.len() },
            });
        }
        Ok((lo, hi))
    }

    pub fn solve_mode(&self) -> Result<SolveMode> {
        match &self.params.mode {
            Some(m) => m.parse(),
            None => Ok(match self.coefficient_group()? {
                CoefficientGroup::Reals => SolveMode::Real,
                _ => SolveMode::Integer,
            }),
        }
    }
}
