//! Run configuration: one flat JSON object per run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sigmak_core::constants::PolePair;
use sigmak_core::curvature::{CurvatureModel, CurvatureSpec};
use sigmak_core::par::ExecMode;
use sigmak_core::solvers::log_grid;
use sigmak_core::ProblemParams;

pub const FORMAT_VERSION: u32 = 1;

/// Log-spaced grid `count` points from `lo` to `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.count >= 2) {
            bail!("bad lambda grid {self:?}");
        }
        Ok(log_grid(self.lo, self.hi, self.count))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub params: ProblemParams,
    #[serde(default)]
    pub curvature: Option<CurvatureSpec>,
    /// integrator tolerance
    #[serde(default)]
    pub tol: Option<f64>,
    /// threshold for in-run residual assertions
    #[serde(default)]
    pub check_tol: Option<f64>,
    /// bubble scale of the starting data (verify-identities)
    #[serde(default)]
    pub lambda: Option<f64>,
    /// t-interval for identities and curvature dumps
    #[serde(default)]
    pub t_window: Option<(f64, f64)>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// extra identity checks on random sub-windows, drawn from --seed
    #[serde(default)]
    pub random_windows: Option<usize>,
    #[serde(default)]
    pub bracket: Option<(f64, f64)>,
    #[serde(default)]
    pub lambda_grid: Option<Grid>,
    #[serde(default)]
    pub poles: Option<PolePair>,
    #[serde(default)]
    pub eps: Option<f64>,
    /// eps = eps_scale e^{-(n+2k) T} when eps is absent (nonexist-scan)
    #[serde(default)]
    pub eps_scale: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub beta2: Option<f64>,
    #[serde(default, rename = "T")]
    pub t_half: Option<f64>,
    #[serde(default)]
    pub t_range: Option<(f64, f64)>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub random_pairs: Option<usize>,
    #[serde(default)]
    pub exec: Option<ExecMode>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("parsing config")?;
        if cfg.format_version != FORMAT_VERSION {
            bail!("format_version {} unsupported (expected {FORMAT_VERSION})", cfg.format_version);
        }
        if let Some(spec) = &cfg.curvature {
            CurvatureModel::build(&cfg.params, spec).context("curvature")?;
        }
        Ok(cfg)
    }

    /// sha256 over the canonical serialization and the seed.
    pub fn hash(&self, seed: u64) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        h.update(seed.to_le_bytes());
        format!("{:x}", h.finalize())
    }

    pub fn exec(&self) -> ExecMode {
        self.exec.unwrap_or_default()
    }

    pub fn model(&self) -> Result<CurvatureModel> {
        let spec = self.curvature.as_ref().context("config needs a curvature")?;
        Ok(CurvatureModel::build(&self.params, spec)?)
    }

    pub fn model_or_round(&self) -> Result<CurvatureModel> {
        match &self.curvature {
            Some(spec) => Ok(CurvatureModel::build(&self.params, spec)?),
            None => Ok(CurvatureModel::constant(self.params.round_value())?),
        }
    }

    pub fn require<T: Copy>(&self, v: Option<T>, name: &str) -> Result<T> {
        v.with_context(|| format!("config needs `{name}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_fields_and_bad_params() {
        assert!(RunConfig::parse(r#"{"format_version":1,"params":{"n":7,"k":2},"bogus":1}"#).is_err());
        assert!(RunConfig::parse(r#"{"format_version":1,"params":{"n":4,"k":2}}"#).is_err());
        assert!(RunConfig::parse(r#"{"format_version":2,"params":{"n":7,"k":2}}"#).is_err());
        let c = RunConfig::parse(r#"{"format_version":1,"params":{"n":7,"k":2},"T":20.0}"#).unwrap();
        assert_eq!(c.t_half, Some(20.0));
    }

    #[test]
    fn hash_depends_on_seed_and_content() {
        let a = RunConfig::parse(r#"{"format_version":1,"params":{"n":7,"k":2}}"#).unwrap();
        let b = RunConfig::parse(r#"{"format_version":1,"params":{"n":9,"k":2}}"#).unwrap();
        assert_eq!(a.hash(1), a.hash(1));
        assert_ne!(a.hash(1), a.hash(2));
        assert_ne!(a.hash(1), b.hash(1));
        assert_eq!(a.hash(0).len(), 64);
    }
}
