//! Network-activity classification from Wireshark packet exports: dataset
//! handling, J48 decision trees, naive Bayes, evaluation and capture-level
//! prediction.

pub mod config;
pub mod criteria;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod j48;
pub mod model;
pub mod naive_bayes;
pub mod pipeline;
pub mod predictor;
pub mod synthetic;

pub use error::{Error, Result};
