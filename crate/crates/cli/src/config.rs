//! Run configuration file (TOML). Every key is optional and every key can be
//! overridden by the matching command-line flag.

use std::path::{Path, PathBuf};

use handbmc::{CameraIntrinsics, LossWeights, ProjectionConfig, ReferencePair};
use serde::Deserialize;

use crate::failure::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub quantile: Option<f64>,
    pub lenient: Option<bool>,
    pub limits: Option<PathBuf>,
    /// `[fx, fy, cx, cy]` or the nine row-major entries of K.
    pub camera: Option<Vec<f64>>,
    pub reference: Option<[usize; 2]>,
    pub weights: Option<LossWeights>,
    pub projection: Option<ProjectionConfig>,
    pub grad_check: Option<GradCheckConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckConfig {
    pub samples: Option<usize>,
    pub step: Option<f64>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    /// Load a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| Failure::input(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(p) = config.limits.take() {
            config.limits = Some(if p.is_relative() { base.join(p) } else { p });
        }
        Ok(config)
    }

    pub fn weights(&self, file: Option<&Path>) -> Result<LossWeights, Failure> {
        let weights = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::input(format!("cannot read weights {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::input(format!("weights {}: {e}", path.display())))?
            }
            None => self.weights.unwrap_or_default(),
        };
        weights.validate()?;
        Ok(weights)
    }

    pub fn limits_path(&self, flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
        flag.or_else(|| self.limits.clone())
            .ok_or_else(|| Failure::input("a limit file is required (--limits or `limits` in the config)"))
    }

    pub fn camera(&self, flag: Option<Vec<f64>>) -> Result<CameraIntrinsics, Failure> {
        let values = flag
            .or_else(|| self.camera.clone())
            .ok_or_else(|| Failure::input("camera intrinsics are required (--camera or `camera` in the config)"))?;
        let camera = match values.len() {
            4 => CameraIntrinsics::pinhole(values[0], values[1], values[2], values[3]),
            9 => CameraIntrinsics::from_row_major(&values),
            n => return Err(Failure::input(format!("camera needs 4 or 9 numbers, got {n}"))),
        };
        Ok(camera?)
    }

    pub fn reference(&self, flag: Option<Vec<usize>>) -> Result<ReferencePair, Failure> {
        let pair = match flag {
            Some(v) if v.len() == 2 => [v[0], v[1]],
            Some(v) => return Err(Failure::input(format!("reference needs 2 joint indices, got {}", v.len()))),
            None => match self.reference {
                Some(p) => p,
                None => return Ok(ReferencePair::default()),
            },
        };
        Ok(ReferencePair::new(pair[0], pair[1])?)
    }
}
