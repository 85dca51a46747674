//! Validation regimes and the metric set: accuracy, support-weighted
//! precision, recall and F-measure, one-vs-rest ROC area, and timings.
//!
//! Cross-validation pools every fold's predictions into a single confusion
//! matrix (Weka reports it the same way) instead of averaging per-fold scores.

mod report;

use std::fmt;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use report::{render_report, report_to_json};

use crate::dataset::{percentage_split, Dataset};
use crate::error::{Error, Result};
use crate::model::Classifier;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regime {
    TrainingSet,
    PercentageSplit { train_fraction: f64 },
    CrossValidation { k: usize },
    SuppliedTestSet,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::TrainingSet => write!(f, "evaluation on training set"),
            Regime::PercentageSplit { train_fraction } => {
                write!(f, "percentage split ({}% train)", format_percent(*train_fraction))
            }
            Regime::CrossValidation { k } => write!(f, "{k}-fold stratified cross-validation"),
            Regime::SuppliedTestSet => write!(f, "supplied test set"),
        }
    }
}

fn format_percent(fraction: f64) -> String {
    let p = (fraction * 1000.0).round() / 10.0;
    if p.fract() == 0.0 {
        format!("{p:.0}")
    } else {
        format!("{p}")
    }
}

/// One scored test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub actual: usize,
    pub scores: Vec<f64>,
    pub weight: f64,
}

impl Scored {
    pub fn new(actual: usize, scores: Vec<f64>) -> Self {
        Scored {
            actual,
            scores,
            weight: 1.0,
        }
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.scores)
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Weighted counts; rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    cells: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[String]) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes: classes.to_vec(),
            cells: vec![vec![0.0; k]; k],
        }
    }

    pub fn from_cells(classes: &[String], cells: Vec<Vec<f64>>) -> Result<Self> {
        let k = classes.len();
        if cells.len() != k || cells.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("confusion matrix must be {k}x{k}")));
        }
        if cells.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("confusion counts must be finite and non-negative"));
        }
        Ok(ConfusionMatrix {
            classes: classes.to_vec(),
            cells,
        })
    }

    pub fn add(&mut self, actual: usize, predicted: usize, weight: f64) {
        self.cells[actual][predicted] += weight;
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }

    pub fn get(&self, actual: usize, predicted: usize) -> f64 {
        self.cells[actual][predicted]
    }

    pub fn row_sum(&self, actual: usize) -> f64 {
        self.cells[actual].iter().sum()
    }

    pub fn column_sum(&self, predicted: usize) -> f64 {
        self.cells.iter().map(|r| r[predicted]).sum()
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().map(|r| r.iter().sum::<f64>()).sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.classes.len()).map(|c| self.cells[c][c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.trace() / total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// `None` when the class has no positives or no negatives.
    pub roc_area: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_seconds: f64,
    pub test_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub regime: Regime,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// `None` when no class has both positives and negatives.
    pub roc_area: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
    /// Classes never predicted; their precision is reported as 0.
    pub empty_predictions: Vec<String>,
    pub timing: Option<Timing>,
}

impl EvaluationReport {
    /// Validation data is the training data.
    pub fn is_optimistic(&self) -> bool {
        matches!(self.regime, Regime::TrainingSet)
    }

    pub fn evaluated_weight(&self) -> f64 {
        self.confusion.total()
    }
}

/// Metrics derived from a confusion matrix alone (no ROC, no timing).
pub fn metrics_from_confusion(confusion: &ConfusionMatrix) -> (f64, f64, f64, f64, Vec<ClassMetrics>) {
    let total = confusion.total();
    let k = confusion.classes().len();
    let mut per_class = Vec::with_capacity(k);
    let (mut wp, mut wf) = (0.0, 0.0);
    for c in 0..k {
        let tp = confusion.get(c, c);
        let support = confusion.row_sum(c);
        let predicted = confusion.column_sum(c);
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if support > 0.0 { tp / support } else { 0.0 };
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        wp += support * precision;
        wf += support * f_measure;
        per_class.push(ClassMetrics {
            class: confusion.classes()[c].clone(),
            support,
            precision,
            recall,
            f_measure,
            roc_area: None,
        });
    }
    if total <= 0.0 {
        return (0.0, 0.0, 0.0, 0.0, per_class);
    }
    // Support-weighted recall: sum_c (n_c/N)(TP_c/n_c) reduces to trace/N.
    // Evaluating the reduced form keeps it bit-identical to accuracy.
    let accuracy = confusion.accuracy();
    let recall = confusion.trace() / total;
    (accuracy, wp / total, recall, wf / total, per_class)
}

/// Builds a report from scored predictions. The regime defaults to a
/// supplied test set and timing is absent; callers adjust both.
pub fn evaluate_on(predictions: &[Scored], classes: &[String]) -> Result<EvaluationReport> {
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    let k = classes.len();
    let mut confusion = ConfusionMatrix::new(classes);
    for (i, p) in predictions.iter().enumerate() {
        if p.scores.len() != k || p.actual >= k {
            return Err(Error::invalid(format!(
                "prediction {i} does not fit {k} classes"
            )));
        }
        confusion.add(p.actual, p.predicted(), p.weight);
    }
    let (accuracy, precision, recall, f_measure, mut per_class) = metrics_from_confusion(&confusion);
    let per_class_roc = class_roc_areas(predictions, k);
    for (m, r) in per_class.iter_mut().zip(&per_class_roc) {
        m.roc_area = *r;
    }
    let roc_area = weighted_roc(predictions, &per_class_roc);
    let empty_predictions = (0..k)
        .filter(|&c| confusion.column_sum(c) == 0.0)
        .map(|c| classes[c].clone())
        .collect();
    Ok(EvaluationReport {
        regime: Regime::SuppliedTestSet,
        confusion,
        accuracy,
        precision,
        recall,
        f_measure,
        roc_area,
        per_class,
        empty_predictions,
        timing: None,
    })
}

/// Weighted Mann-Whitney AUC of `class` against the rest; ties count half.
fn class_auc(scored: &[Scored], class: usize) -> Option<f64> {
    let mut pairs: Vec<(f64, bool, f64)> = scored
        .iter()
        .map(|s| (s.scores[class], s.actual == class, s.weight))
        .collect();
    let pos: f64 = pairs.iter().filter(|p| p.1).map(|p| p.2).sum();
    let neg: f64 = pairs.iter().filter(|p| !p.1).map(|p| p.2).sum();
    if pos <= 0.0 || neg <= 0.0 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut below = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0.0, 0.0);
        while j < pairs.len() && pairs[j].0 == pairs[i].0 {
            if pairs[j].1 {
                gp += pairs[j].2;
            } else {
                gn += pairs[j].2;
            }
            j += 1;
        }
        area += gp * (below + 0.5 * gn);
        below += gn;
        i = j;
    }
    Some(area / (pos * neg))
}

fn class_roc_areas(scored: &[Scored], k: usize) -> Vec<Option<f64>> {
    (0..k).map(|c| class_auc(scored, c)).collect()
}

fn weighted_roc(scored: &[Scored], per_class: &[Option<f64>]) -> Option<f64> {
    let mut support = vec![0.0; per_class.len()];
    for s in scored {
        support[s.actual] += s.weight;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (auc, w) in per_class.iter().zip(&support) {
        if let Some(a) = auc {
            num += w * a;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Support-weighted one-vs-rest ROC area over classes that have both
/// positives and negatives.
pub fn roc_area(scored: &[Scored], classes: &[String]) -> Result<f64> {
    let k = classes.len();
    if scored.iter().any(|s| s.scores.len() != k || s.actual >= k) {
        return Err(Error::invalid(format!("scores do not fit {k} classes")));
    }
    weighted_roc(scored, &class_roc_areas(scored, k))
        .ok_or_else(|| Error::invalid("ROC area is undefined: no class has both positives and negatives"))
}

/// Test-fold index for every instance.
///
/// Instances are grouped by class (unlabeled ones form their own group),
/// each group is shuffled, and groups are dealt round-robin with one counter
/// running across all groups.
pub fn fold_assignment(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    let num_classes = dataset.schema().num_classes();
    if dataset.schema().class_index().is_none() {
        return Err(Error::invalid("stratified folds need a labeled dataset"));
    }
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::invalid(format!(
            "{k} folds requested but the dataset has {} instances",
            dataset.len()
        )));
    }
    let mut groups = vec![Vec::new(); num_classes + 1];
    for (i, inst) in dataset.instances().iter().enumerate() {
        groups[dataset.class_of(inst).unwrap_or(num_classes)].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; dataset.len()];
    let mut next = 0;
    for group in &mut groups {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds)
}

/// `(train, test)` pairs, one per fold.
pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    let folds = fold_assignment(dataset, k, seed)?;
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| folds[i] == f);
            (dataset.subset(&train), dataset.subset(&test))
        })
        .collect())
}

/// Scores every labeled instance of `test`. Returns predictions and seconds.
pub fn score_dataset<M: Classifier>(model: &M, test: &Dataset) -> Result<(Vec<Scored>, f64)> {
    let start = Instant::now();
    let mut out = Vec::with_capacity(test.len());
    for inst in test.instances() {
        if let Some(actual) = test.class_of(inst) {
            out.push(Scored {
                actual,
                scores: model.predict_distribution(inst)?,
                weight: inst.weight,
            });
        }
    }
    Ok((out, start.elapsed().as_secs_f64()))
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let value = f()?;
    Ok((value, start.elapsed().as_secs_f64()))
}

fn class_domain(dataset: &Dataset) -> Result<&[String]> {
    dataset
        .class_names()
        .ok_or_else(|| Error::invalid("evaluation needs a labeled dataset"))
}

/// Stratified k-fold cross-validation with pooled predictions.
pub fn cross_validate<M, F>(dataset: &Dataset, learner: F, k: usize, seed: u64) -> Result<EvaluationReport>
where
    M: Classifier,
    F: Fn(&Dataset) -> Result<M>,
{
    let classes = class_domain(dataset)?;
    let mut pooled = Vec::with_capacity(dataset.len());
    let (mut train_s, mut test_s) = (0.0, 0.0);
    for (train, test) in stratified_folds(dataset, k, seed)? {
        let (model, t) = timed(|| learner(&train))?;
        train_s += t;
        let (scored, t) = score_dataset(&model, &test)?;
        test_s += t;
        pooled.extend(scored);
    }
    let mut report = evaluate_on(&pooled, classes)?;
    report.regime = Regime::CrossValidation { k };
    report.timing = Some(Timing {
        train_seconds: train_s,
        test_seconds: test_s,
    });
    Ok(report)
}

/// Runs one validation regime. `test` is required for a supplied test set.
pub fn evaluate_regime<M, F>(
    dataset: &Dataset,
    learner: F,
    regime: Regime,
    seed: u64,
    test: Option<&Dataset>,
) -> Result<EvaluationReport>
where
    M: Classifier,
    F: Fn(&Dataset) -> Result<M>,
{
    let (train, test) = match regime {
        Regime::CrossValidation { k } => return cross_validate(dataset, learner, k, seed),
        Regime::TrainingSet => (dataset.clone(), dataset.clone()),
        Regime::PercentageSplit { train_fraction } => percentage_split(dataset, train_fraction, seed)?,
        Regime::SuppliedTestSet => {
            let test = test.ok_or_else(|| Error::invalid("supplied-test-set regime needs a test dataset"))?;
            (dataset.clone(), test.clone())
        }
    };
    let classes = class_domain(dataset)?;
    let (model, train_seconds) = timed(|| learner(&train))?;
    let (scored, test_seconds) = score_dataset(&model, &test)?;
    let mut report = evaluate_on(&scored, classes)?;
    report.regime = regime;
    report.timing = Some(Timing {
        train_seconds,
        test_seconds,
    });
    Ok(report)
}

#[cfg(test)]
mod tests;
