//! The end-to-end workflow behind the command-line tool: convert, preprocess,
//! train, evaluate and predict, each driven by a [`PipelineConfig`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::config::{PipelineConfig, Step};
use crate::dataset::arff::{read_arff, write_arff};
use crate::dataset::csv::{read_csv, CsvOptions};
use crate::dataset::{add_label, convert_column, drop_column, harmonize, merge, strip_quotes, AttributeKind, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_regime, EvaluationReport};
use crate::model::Model;
use crate::predictor::{classify_capture, refine_exclusive, CaptureVerdict};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Reads `.arff` files as ARFF and anything else as CSV.
pub fn read_dataset(path: &Path, nominal_threshold: usize) -> Result<Dataset> {
    let reader = open(path)?;
    let is_arff = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("arff"));
    if is_arff {
        read_arff(reader)
    } else {
        let options = CsvOptions {
            nominal_threshold,
            ..CsvOptions::default()
        };
        read_csv(reader, &options, &stem(path))
    }
}

pub fn write_arff_file(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut sink = BufWriter::new(file);
    write_arff(dataset, &mut sink)?;
    sink.flush()?;
    Ok(())
}

fn strip_column(dataset: &Dataset, column: &str) -> Result<Dataset> {
    let idx = dataset.schema().index_of(column).ok_or_else(|| Error::UnknownAttribute {
        name: column.to_string(),
        available: dataset
            .schema()
            .attributes()
            .iter()
            .map(|a| a.name.as_str())
            .collect::<Vec<_>>()
            .join(", "),
    })?;
    // Small captures may infer the column as nominal; quotes live in text.
    let text = if dataset.schema().attribute(idx).kind == AttributeKind::Text {
        dataset.clone()
    } else {
        convert_column(dataset, column, AttributeKind::Text)?
    };
    strip_quotes(&text, column)
}

/// Applies the configured steps, in order, to labelled captures:
/// `captures[i]` receives `labels[i]`. Without a merge step exactly one
/// capture is accepted.
pub fn preprocess(cfg: &PipelineConfig, captures: Vec<Dataset>, labels: &[String]) -> Result<Dataset> {
    let pp = &cfg.preprocess;
    if captures.is_empty() {
        return Err(Error::invalid("no captures to preprocess"));
    }
    let labelling = pp.steps.contains(&Step::AddLabel);
    if labelling {
        if labels.len() != captures.len() {
            return Err(Error::invalid(format!(
                "{} captures but {} labels; give exactly one label per capture",
                captures.len(),
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!(
                    "label `{l}` assigned to more than one capture; activities are mutually exclusive"
                )));
            }
        }
    }
    let label_set = cfg.label_set()?;
    let mut sets = captures;
    for step in &pp.steps {
        sets = match step {
            Step::DropColumn => sets
                .iter()
                .map(|ds| pp.drop_columns.iter().try_fold(ds.clone(), |d, c| drop_column(&d, c)))
                .collect::<Result<_>>()?,
            Step::StripQuotes => sets
                .iter()
                .map(|ds| pp.strip_quotes.iter().try_fold(ds.clone(), |d, c| strip_column(&d, c)))
                .collect::<Result<_>>()?,
            Step::AddLabel => sets
                .iter()
                .zip(labels)
                .map(|(ds, l)| add_label(ds, l, &label_set, &pp.class_attribute))
                .collect::<Result<_>>()?,
            Step::Merge => {
                let mut merged = merge(&harmonize(&sets, pp.nominal_threshold)?)?;
                merged.name = if sets.len() == 1 {
                    sets[0].name.clone()
                } else {
                    "merged".into()
                };
                vec![merged]
            }
        };
    }
    if sets.len() != 1 {
        return Err(Error::invalid(format!(
            "{} captures given but the steps have no merge",
            sets.len()
        )));
    }
    Ok(sets.remove(0))
}

/// Prepares an unlabeled capture for prediction: the configured column drops
/// and quote stripping, skipping columns the capture does not have.
pub fn prepare_capture(cfg: &PipelineConfig, capture: &Dataset) -> Result<Dataset> {
    let pp = &cfg.preprocess;
    let mut out = capture.clone();
    for step in &pp.steps {
        match step {
            Step::DropColumn => {
                for c in &pp.drop_columns {
                    if out.schema().index_of(c).is_some() {
                        out = drop_column(&out, c)?;
                    }
                }
            }
            Step::StripQuotes => {
                for c in &pp.strip_quotes {
                    if out.schema().index_of(c).is_some() {
                        out = strip_column(&out, c)?;
                    }
                }
            }
            Step::AddLabel | Step::Merge => {}
        }
    }
    Ok(out)
}

pub fn train(cfg: &PipelineConfig, dataset: &Dataset) -> Result<Model> {
    cfg.learner.train(dataset)
}

/// Runs the configured validation regime. A supplied test set is prepared
/// like a capture and matched to the training schema by name.
pub fn evaluate(cfg: &PipelineConfig, dataset: &Dataset, test: Option<&Dataset>) -> Result<EvaluationReport> {
    let test = test
        .map(|t| prepare_capture(cfg, t).and_then(|t| crate::dataset::align_to(&t, dataset.schema())))
        .transpose()?;
    evaluate_regime(
        dataset,
        |d| cfg.learner.train(d),
        cfg.validation.regime(),
        cfg.seed,
        test.as_ref(),
    )
}

pub fn predict(cfg: &PipelineConfig, model: &Model, captures: &[Dataset]) -> Result<Vec<CaptureVerdict>> {
    let mut verdicts = captures
        .iter()
        .map(|c| classify_capture(model, &prepare_capture(cfg, c)?, cfg.margin))
        .collect::<Result<Vec<_>>>()?;
    if cfg.exclusive {
        refine_exclusive(&mut verdicts, cfg.margin);
    }
    Ok(verdicts)
}
