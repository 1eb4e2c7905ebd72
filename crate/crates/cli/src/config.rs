use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Fsm,
    Mnist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Vanilla,
    Readaptation,
}

/// Everything a run needs. Missing JSON fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub trial_count: usize,
    /// 0 lets the thread pool decide.
    pub workers: usize,
    pub schedule: Schedule,
    /// Stochastic FSM transitions; also enables NCE blocking at `nce_cutoff`.
    pub random_variant: bool,
    pub n_classes: usize,
    /// Per-class block size; `None` picks the size for `n_classes`.
    pub n_sample: Option<usize>,
    pub test_per_class: Option<usize>,
    pub cycles: usize,
    pub t_ref: f64,
    pub t_sign: f64,
    pub nce_cutoff: f64,
    pub epsilon: f64,
    pub population: usize,
    pub data_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub export_dot: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Fsm,
            seed: 0,
            trial_count: 5,
            workers: 0,
            schedule: Schedule::Vanilla,
            random_variant: false,
            n_classes: 3,
            n_sample: None,
            test_per_class: None,
            cycles: 10,
            t_ref: 0.05,
            t_sign: 0.05,
            nce_cutoff: 0.25,
            epsilon: 0.1,
            population: 10,
            data_dir: None,
            out: PathBuf::from("runs/latest"),
            export_dot: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trial_count == 0 {
            bail!("trial_count must be at least 1");
        }
        for (name, v) in [("t_ref", self.t_ref), ("t_sign", self.t_sign), ("nce_cutoff", self.nce_cutoff)] {
            if !(v > 0.0 && v < 1.0) {
                bail!("{name} must lie in (0, 1), got {v}");
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            bail!("epsilon must lie in [0, 1], got {}", self.epsilon);
        }
        if self.population == 0 {
            bail!("population must be at least 1");
        }
        if self.mode == Mode::Mnist {
            if self.n_classes == 0 || self.n_classes > 10 {
                bail!("n_classes must be between 1 and 10, got {}", self.n_classes);
            }
            if self.cycles == 0 {
                bail!("cycles must be at least 1");
            }
            if self.n_sample == Some(0) || self.test_per_class == Some(0) {
                bail!("n_sample and test_per_class must be positive");
            }
        }
        Ok(())
    }
}
