use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vmor::splitters::QpSplitterParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PadmmEbb,
    CondatVu,
    Ppg,
    Fbhf,
    AfbasPd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Algorithm::Fbhf, Algorithm::Ppg, Algorithm::CondatVu, Algorithm::AfbasPd, Algorithm::PadmmEbb];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::PadmmEbb => "padmm-ebb",
            Algorithm::CondatVu => "condat-vu",
            Algorithm::Ppg => "ppg",
            Algorithm::Fbhf => "fbhf",
            Algorithm::AfbasPd => "afbas-pd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One solver run: what to solve, with which method and settings, and where
/// to write the results. Missing JSON fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub problem: String,
    pub sigma: f64,
    /// Fixed over-relaxation; adaptive (largest admissible) when absent.
    pub theta: Option<f64>,
    pub beta: f64,
    pub xi0: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub splitter: QpSplitterParams,
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::PadmmEbb,
            problem: "qp:p=2,n=5,m=3".into(),
            sigma: 0.5,
            theta: None,
            beta: 1.0,
            xi0: 0.01,
            tol: 1e-8,
            max_iters: 5000,
            seed: 0,
            splitter: QpSplitterParams::default(),
            trace: None,
            summary: None,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if !(0.0..1.0).contains(&self.sigma) {
            return bad(format!("sigma = {} must lie in [0, 1)", self.sigma));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be positive", self.beta));
        }
        if !(self.xi0 >= 0.0 && self.xi0.is_finite()) {
            return bad(format!("xi0 = {} must be nonnegative", self.xi0));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return bad(format!("tol = {} must be nonnegative", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if let Some(t) = self.theta {
            if !(t > -1.0 && t.is_finite()) {
                return bad(format!("theta = {t} must exceed -1"));
            }
        }
        Ok(())
    }
}
