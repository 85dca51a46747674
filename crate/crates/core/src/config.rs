//! Pipeline configuration, read from TOML. Every field has a default, so an
//! empty file (or no file) is a valid configuration.
//!
//! ```toml
//! seed = 1
//! labels = ["browser using", "music playing", "trouble shooting"]
//! margin = 0.15
//!
//! [preprocess]
//! steps = ["drop_column", "strip_quotes", "add_label", "merge"]
//! drop_columns = ["No."]
//! strip_quotes = ["Info"]
//!
//! [learner]
//! learner = "j48"
//! j48 = { confidence = 0.25, min_leaf_weight = 2.0 }
//!
//! [validation]
//! regime = "cross_validation"
//! k = 10
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::csv::DEFAULT_NOMINAL_THRESHOLD;
use crate::dataset::{LabelSet, DEFAULT_LABELS, DEFAULT_TRAIN_FRACTION};
use crate::error::{Error, Result};
use crate::evaluation::{Regime, DEFAULT_FOLDS};
use crate::model::LearnerConfig;
use crate::predictor::DEFAULT_MARGIN;

/// Seed used whenever none is given, so runs reproduce by default.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_CLASS_ATTRIBUTE: &str = "activity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    DropColumn,
    StripQuotes,
    AddLabel,
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub steps: Vec<Step>,
    pub drop_columns: Vec<String>,
    pub strip_quotes: Vec<String>,
    pub class_attribute: String,
    /// CSV columns with more distinct values than this are read as text.
    pub nominal_threshold: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            steps: vec![Step::DropColumn, Step::StripQuotes, Step::AddLabel, Step::Merge],
            drop_columns: vec!["No.".into()],
            strip_quotes: vec!["Info".into()],
            class_attribute: DEFAULT_CLASS_ATTRIBUTE.into(),
            nominal_threshold: DEFAULT_NOMINAL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    TrainingSet,
    PercentageSplit,
    #[default]
    CrossValidation,
    SuppliedTestSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub regime: RegimeKind,
    pub k: usize,
    pub train_fraction: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            regime: RegimeKind::default(),
            k: DEFAULT_FOLDS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }
}

impl ValidationConfig {
    pub fn regime(&self) -> Regime {
        match self.regime {
            RegimeKind::TrainingSet => Regime::TrainingSet,
            RegimeKind::PercentageSplit => Regime::PercentageSplit {
                train_fraction: self.train_fraction,
            },
            RegimeKind::CrossValidation => Regime::CrossValidation { k: self.k },
            RegimeKind::SuppliedTestSet => Regime::SuppliedTestSet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub labels: Vec<String>,
    pub margin: f64,
    /// Treat labels as mutually exclusive across predicted captures.
    pub exclusive: bool,
    pub preprocess: PreprocessConfig,
    pub learner: LearnerConfig,
    pub validation: ValidationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
            margin: DEFAULT_MARGIN,
            exclusive: false,
            preprocess: PreprocessConfig::default(),
            learner: LearnerConfig::default(),
            validation: ValidationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::new(self.labels.iter().cloned()).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.label_set()?;
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::Config(format!("margin must be non-negative, got {}", self.margin)));
        }
        self.learner.j48.validate().map_err(cfg_err)?;
        self.learner.naive_bayes.validate().map_err(cfg_err)?;
        if self.validation.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.validation.k)));
        }
        let f = self.validation.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {f}")));
        }
        let steps = &self.preprocess.steps;
        let position = |s: Step| steps.iter().position(|x| *x == s);
        for (i, s) in steps.iter().enumerate() {
            if steps[..i].contains(s) {
                return Err(Error::Config(format!("preprocessing step {s:?} listed twice")));
            }
        }
        if let (Some(label), Some(merge)) = (position(Step::AddLabel), position(Step::Merge)) {
            if label > merge {
                return Err(Error::Config("add_label must come before merge".into()));
            }
        }
        Ok(())
    }
}
