use std::path::{Path, PathBuf};

use domaininfer::planner::SearchBudget;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Learned,
    Frequency,
}

/// Settings shared by every command. Loaded from `--config` and overlaid
/// with command-line flags; a flag that is given always wins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub max_expansions: Option<usize>,
    pub max_plan_length: Option<usize>,
    pub universe: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub demos: Vec<PathBuf>,
    pub validation: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub estimator: Option<EstimatorChoice>,
    pub negative_preconditions: Option<bool>,
    pub tasks: Vec<String>,
    pub per_task: Option<usize>,
    pub per_count: Option<usize>,
    pub validation_size: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub jobs: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($opt:ident),*; $($vec:ident),*) => {{
        $( if $over.$opt.is_some() { $base.$opt = $over.$opt; } )*
        $( if !$over.$vec.is_empty() { $base.$vec = $over.$vec; } )*
    }};
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn merge(mut self, over: RunConfig) -> Self {
        overlay!(self, over;
            seed, max_expansions, max_plan_length, universe, dataset, checkpoint, output, estimator,
            negative_preconditions, per_task, per_count, validation_size, epochs, learning_rate, jobs;
            demos, validation, tasks);
        self
    }

    pub fn budget(&self) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            max_expansions: self.max_expansions.unwrap_or(d.max_expansions),
            max_plan_length: self.max_plan_length.unwrap_or(d.max_plan_length),
        }
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Input("this command is stochastic: --seed is required".into()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Every input path named by the config must exist before work starts.
    pub fn check_inputs(&self) -> Result<(), CliError> {
        let singles = [&self.universe, &self.dataset, &self.checkpoint];
        for p in singles.into_iter().flatten().chain(&self.demos).chain(&self.validation) {
            if !p.exists() {
                return Err(CliError::Input(format!("{}: no such file", p.display())));
            }
        }
        Ok(())
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}
