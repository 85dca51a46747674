//! Learner selection and model persistence.
//!
//! Models are saved as a JSON document:
//!
//! ```json
//! {"format": "netact-model", "version": 1, "kind": "j48",
//!  "fingerprint": "<sha256 of the schema>", "model": {...}}
//! ```
//!
//! Floats are written with enough digits to read back bit-identical, so a
//! loaded model predicts exactly like the saved one.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance, Schema};
use crate::error::{Error, Result};
use crate::j48::{train_tree, J48Params, TreeModel};
use crate::naive_bayes::{train_bayes_online, train_bayes_with, BayesModel, BayesParams};

pub const MODEL_FORMAT: &str = "netact-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    #[default]
    J48,
    NaiveBayes,
    NaiveBayesUpdateable,
}

impl Learner {
    pub const ALL: [Learner; 3] = [Learner::J48, Learner::NaiveBayes, Learner::NaiveBayesUpdateable];

    pub fn name(self) -> &'static str {
        match self {
            Learner::J48 => "j48",
            Learner::NaiveBayes => "naive_bayes",
            Learner::NaiveBayesUpdateable => "naive_bayes_updateable",
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Learner::ALL.into_iter().find(|l| l.name() == s).ok_or_else(|| {
            let names: Vec<_> = Learner::ALL.iter().map(|l| l.name()).collect();
            Error::invalid(format!("unknown learner `{s}` (expected one of: {})", names.join(", ")))
        })
    }
}

/// A learner together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub learner: Learner,
    pub j48: J48Params,
    pub naive_bayes: BayesParams,
}

impl LearnerConfig {
    pub fn new(learner: Learner) -> Self {
        LearnerConfig {
            learner,
            ..LearnerConfig::default()
        }
    }

    pub fn train(&self, dataset: &Dataset) -> Result<Model> {
        Ok(match self.learner {
            Learner::J48 => Model::Tree(train_tree(dataset, &self.j48)?),
            Learner::NaiveBayes => Model::Bayes(train_bayes_with(dataset, &self.naive_bayes)?),
            Learner::NaiveBayesUpdateable => Model::Bayes(train_bayes_online(dataset, &self.naive_bayes)?),
        })
    }
}

/// Anything that turns an instance into class probabilities.
pub trait Classifier {
    fn schema(&self) -> &Schema;
    fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>>;
}

impl Classifier for TreeModel {
    fn schema(&self) -> &Schema {
        TreeModel::schema(self)
    }

    fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>> {
        TreeModel::predict_distribution(self, instance)
    }
}

impl Classifier for BayesModel {
    fn schema(&self) -> &Schema {
        BayesModel::schema(self)
    }

    fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>> {
        BayesModel::predict_distribution(self, instance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Tree(TreeModel),
    Bayes(BayesModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Tree(_) => "j48",
            Model::Bayes(_) => "naive_bayes",
        }
    }

    pub fn fingerprint(&self) -> &str {
        match self {
            Model::Tree(m) => m.fingerprint(),
            Model::Bayes(m) => m.fingerprint(),
        }
    }

    pub fn class_names(&self) -> &[String] {
        self.schema().class_domain().unwrap_or(&[])
    }

    fn validate(&self) -> Result<()> {
        match self {
            Model::Tree(m) => m.validate(),
            Model::Bayes(m) => m.validate(),
        }
    }
}

impl Classifier for Model {
    fn schema(&self) -> &Schema {
        match self {
            Model::Tree(m) => m.schema(),
            Model::Bayes(m) => m.schema(),
        }
    }

    fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>> {
        match self {
            Model::Tree(m) => m.predict_distribution(instance),
            Model::Bayes(m) => m.predict_distribution(instance),
        }
    }
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    format: &'a str,
    version: u32,
    kind: &'a str,
    fingerprint: &'a str,
    model: &'a Model,
}

#[derive(Deserialize)]
struct DocumentIn {
    format: String,
    version: u32,
    kind: String,
    fingerprint: String,
    model: Model,
}

pub fn model_to_json(model: &Model) -> Result<String> {
    let doc = DocumentOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        kind: model.kind(),
        fingerprint: model.fingerprint(),
        model,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Integrity(format!("cannot serialize model: {e}")))
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let doc: DocumentIn =
        serde_json::from_str(text).map_err(|e| Error::Integrity(format!("unreadable model file: {e}")))?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::Integrity(format!("not a model file (format `{}`)", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported model version {} (this build reads {MODEL_VERSION})",
            doc.version
        )));
    }
    if doc.kind != doc.model.kind() {
        return Err(Error::Integrity(format!(
            "header says `{}` but the body holds a `{}` model",
            doc.kind,
            doc.model.kind()
        )));
    }
    doc.model.validate()?;
    if doc.fingerprint != doc.model.fingerprint() {
        return Err(Error::Integrity("schema fingerprint mismatch".into()));
    }
    Ok(doc.model)
}

pub fn save_model<W: Write>(model: &Model, mut sink: W) -> Result<()> {
    sink.write_all(model_to_json(model)?.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<Model> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Integrity(format!("unreadable model file: {e}")))?;
    model_from_json(&text)
}
