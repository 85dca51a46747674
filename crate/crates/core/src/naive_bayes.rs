//! Naive Bayes over mixed numeric and nominal attributes.
//!
//! Numeric attributes use one Gaussian per class, nominal attributes use
//! Laplace-smoothed category frequencies, text attributes are ignored. The
//! batch trainer and the per-instance updater produce the same sufficient
//! statistics up to floating-point rounding.

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeKind, Cell, Dataset, Instance, Schema};
use crate::error::{Error, Result};

/// Relative variance floor, scaled by the squared range of the attribute.
const RELATIVE_VARIANCE_FLOOR: f64 = 1e-6;
const ABSOLUTE_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesParams {
    /// Additive smoothing for nominal likelihoods.
    pub alpha: f64,
}

impl Default for BayesParams {
    fn default() -> Self {
        BayesParams { alpha: 1.0 }
    }
}

impl BayesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Weighted mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianStat {
    pub weight: f64,
    pub mean: f64,
    pub m2: f64,
}

impl GaussianStat {
    /// Weighted Welford step.
    pub fn push(&mut self, x: f64, w: f64) {
        let weight = self.weight + w;
        let delta = x - self.mean;
        self.mean += delta * (w / weight);
        self.m2 += w * delta * (x - self.mean);
        self.weight = weight;
    }

    /// Combines two disjoint summaries (Chan et al.).
    pub fn merge(&self, other: &GaussianStat) -> GaussianStat {
        if other.weight == 0.0 {
            return *self;
        }
        if self.weight == 0.0 {
            return *other;
        }
        let weight = self.weight + other.weight;
        let delta = other.mean - self.mean;
        GaussianStat {
            weight,
            mean: self.mean + delta * (other.weight / weight),
            m2: self.m2 + other.m2 + delta * delta * self.weight * other.weight / weight,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.weight > 0.0 {
            (self.m2 / self.weight).max(0.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NominalStat {
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AttributeStats {
    Ignored,
    Numeric {
        per_class: Vec<GaussianStat>,
        /// Observed `[min, max]` over all classes, for the variance floor.
        range: Option<[f64; 2]>,
    },
    Nominal {
        per_class: Vec<NominalStat>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    schema: Schema,
    fingerprint: String,
    params: BayesParams,
    priors: Vec<f64>,
    attributes: Vec<AttributeStats>,
    dropped_unlabeled: usize,
}

impl BayesModel {
    /// A model with no observations, ready for [`BayesModel::update`].
    pub fn empty(schema: &Schema, params: &BayesParams) -> Result<Self> {
        params.validate()?;
        let k = schema.num_classes();
        if k == 0 {
            return Err(Error::invalid("naive Bayes needs a labeled schema"));
        }
        let attributes = schema
            .attributes()
            .iter()
            .enumerate()
            .map(|(i, a)| match &a.kind {
                _ if Some(i) == schema.class_index() => AttributeStats::Ignored,
                AttributeKind::Numeric => AttributeStats::Numeric {
                    per_class: vec![GaussianStat::default(); k],
                    range: None,
                },
                AttributeKind::Nominal(d) => AttributeStats::Nominal {
                    per_class: vec![NominalStat { counts: vec![0.0; d.len()] }; k],
                },
                AttributeKind::Text => AttributeStats::Ignored,
            })
            .collect();
        Ok(BayesModel {
            fingerprint: schema.fingerprint(),
            schema: schema.clone(),
            params: params.clone(),
            priors: vec![0.0; k],
            attributes,
            dropped_unlabeled: 0,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn params(&self) -> &BayesParams {
        &self.params
    }

    /// Weighted class counts.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn total_weight(&self) -> f64 {
        self.priors.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dropped_unlabeled(&self) -> usize {
        self.dropped_unlabeled
    }

    pub fn gaussian(&self, class: usize, attribute: usize) -> Option<&GaussianStat> {
        match self.attributes.get(attribute)? {
            AttributeStats::Numeric { per_class, .. } => per_class.get(class),
            _ => None,
        }
    }

    pub fn nominal(&self, class: usize, attribute: usize) -> Option<&NominalStat> {
        match self.attributes.get(attribute)? {
            AttributeStats::Nominal { per_class } => per_class.get(class),
            _ => None,
        }
    }

    /// Structural check used after deserializing.
    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Integrity(m.into()));
        if self.fingerprint != self.schema.fingerprint() {
            return bad("naive Bayes fingerprint does not match its schema");
        }
        self.params.validate().map_err(|e| Error::Integrity(e.to_string()))?;
        let k = self.schema.num_classes();
        if k == 0 || self.priors.len() != k || self.attributes.len() != self.schema.len() {
            return bad("naive Bayes statistics do not fit the schema");
        }
        if self.priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("negative or non-finite class prior");
        }
        for (stats, attr) in self.attributes.iter().zip(self.schema.attributes()) {
            let fits = match (stats, &attr.kind) {
                (AttributeStats::Ignored, _) => true,
                (AttributeStats::Numeric { per_class, .. }, AttributeKind::Numeric) => {
                    per_class.len() == k && per_class.iter().all(|g| g.weight >= 0.0 && g.m2 >= 0.0)
                }
                (AttributeStats::Nominal { per_class }, AttributeKind::Nominal(d)) => {
                    per_class.len() == k
                        && per_class
                            .iter()
                            .all(|s| s.counts.len() == d.len() && s.counts.iter().all(|c| *c >= 0.0))
                }
                _ => false,
            };
            if !fits {
                return Err(Error::Integrity(format!("statistics for `{}` do not fit the schema", attr.name)));
            }
        }
        Ok(())
    }

    fn check_width(&self, instance: &Instance) -> Result<()> {
        if instance.values.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} values, model expects {}",
                instance.values.len(),
                self.schema.len()
            )));
        }
        Ok(())
    }

    fn class_of(&self, instance: &Instance) -> Option<usize> {
        self.schema
            .class_index()
            .and_then(|ci| instance.values[ci].as_category())
    }

    /// Adds one labeled instance in O(#attributes).
    pub fn update(&mut self, instance: &Instance) -> Result<()> {
        self.check_width(instance)?;
        let class = self
            .class_of(instance)
            .ok_or_else(|| Error::invalid("cannot update naive Bayes with an unlabeled instance"))?;
        let w = instance.weight;
        self.priors[class] += w;
        for (stats, cell) in self.attributes.iter_mut().zip(&instance.values) {
            match (stats, cell) {
                (AttributeStats::Numeric { per_class, range }, Cell::Number(x)) => {
                    per_class[class].push(*x, w);
                    widen(range, *x);
                }
                (AttributeStats::Nominal { per_class }, Cell::Category(c)) => {
                    let counts = &mut per_class[class].counts;
                    if *c >= counts.len() {
                        return Err(Error::SchemaMismatch(format!("category index {c} outside domain")));
                    }
                    counts[*c] += w;
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Normalized class posteriors for `instance`.
    ///
    /// A class with no training weight gets posterior 0 because priors are
    /// unsmoothed. A Gaussian with no weight for a class contributes nothing.
    pub fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>> {
        self.check_width(instance)?;
        let total = self.total_weight();
        let mut log_post: Vec<f64> = self
            .priors
            .iter()
            .map(|&p| if total > 0.0 { (p / total).ln() } else { 0.0 })
            .collect();
        let alpha = self.params.alpha;
        for (stats, cell) in self.attributes.iter().zip(&instance.values) {
            match (stats, cell) {
                (AttributeStats::Numeric { per_class, range }, Cell::Number(x)) => {
                    let range = range.map_or(0.0, |[lo, hi]| hi - lo);
                    let floor = (RELATIVE_VARIANCE_FLOOR * range * range).max(ABSOLUTE_VARIANCE_FLOOR);
                    for (lp, g) in log_post.iter_mut().zip(per_class) {
                        if g.weight > 0.0 {
                            *lp += log_gaussian(*x, g.mean, g.variance().max(floor));
                        }
                    }
                }
                (AttributeStats::Nominal { per_class }, Cell::Category(c)) => {
                    for (lp, s) in log_post.iter_mut().zip(per_class) {
                        let d = s.counts.len() as f64;
                        let seen: f64 = s.counts.iter().sum();
                        let count = s
                            .counts
                            .get(*c)
                            .ok_or_else(|| Error::SchemaMismatch(format!("category index {c} outside domain")))?;
                        *lp += ((count + alpha) / (seen + alpha * d)).ln();
                    }
                }
                _ => {}
            }
        }
        Ok(normalize_log(&log_post))
    }
}

fn widen(range: &mut Option<[f64; 2]>, x: f64) {
    *range = Some(match *range {
        Some([lo, hi]) => [lo.min(x), hi.max(x)],
        None => [x, x],
    });
}

fn log_gaussian(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
}

/// exp-normalizes log scores with max subtraction; `-inf` entries become 0.
fn normalize_log(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let k = log_scores.len() as f64;
        return vec![1.0 / k; log_scores.len()];
    }
    let exps: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn labeled_rows(dataset: &Dataset) -> Result<(Vec<(usize, &Instance)>, usize)> {
    if dataset.schema().class_index().is_none() {
        return Err(Error::invalid("cannot train on an unlabeled dataset"));
    }
    let rows: Vec<_> = dataset
        .instances()
        .iter()
        .filter_map(|i| dataset.class_of(i).map(|c| (c, i)))
        .collect();
    if rows.is_empty() {
        return Err(Error::invalid("no training rows carry a class label"));
    }
    let dropped = dataset.len() - rows.len();
    if dropped > 0 {
        log::warn!("naive Bayes: skipped {dropped} instances with a missing class");
    }
    Ok((rows, dropped))
}

/// Batch trainer with default parameters.
pub fn train_bayes(dataset: &Dataset) -> Result<BayesModel> {
    train_bayes_with(dataset, &BayesParams::default())
}

/// Two-pass batch trainer: means first, then squared deviations.
pub fn train_bayes_with(dataset: &Dataset, params: &BayesParams) -> Result<BayesModel> {
    let (rows, dropped) = labeled_rows(dataset)?;
    let mut model = BayesModel::empty(dataset.schema(), params)?;
    model.dropped_unlabeled = dropped;
    for &(c, inst) in &rows {
        model.priors[c] += inst.weight;
    }
    for (a, stats) in model.attributes.iter_mut().enumerate() {
        match stats {
            AttributeStats::Numeric { per_class, range } => {
                let mut sums = vec![0.0; per_class.len()];
                for &(c, inst) in &rows {
                    if let Cell::Number(x) = inst.values[a] {
                        per_class[c].weight += inst.weight;
                        sums[c] += inst.weight * x;
                        widen(range, x);
                    }
                }
                for (g, s) in per_class.iter_mut().zip(&sums) {
                    if g.weight > 0.0 {
                        g.mean = s / g.weight;
                    }
                }
                for &(c, inst) in &rows {
                    if let Cell::Number(x) = inst.values[a] {
                        let d = x - per_class[c].mean;
                        per_class[c].m2 += inst.weight * d * d;
                    }
                }
            }
            AttributeStats::Nominal { per_class } => {
                for &(c, inst) in &rows {
                    if let Cell::Category(v) = inst.values[a] {
                        per_class[c].counts[v] += inst.weight;
                    }
                }
            }
            AttributeStats::Ignored => {}
        }
    }
    Ok(model)
}

/// Online trainer: folds [`update_one`] over the dataset in order.
pub fn train_bayes_online(dataset: &Dataset, params: &BayesParams) -> Result<BayesModel> {
    let (rows, dropped) = labeled_rows(dataset)?;
    let mut model = BayesModel::empty(dataset.schema(), params)?;
    model.dropped_unlabeled = dropped;
    for (_, inst) in rows {
        model.update(inst)?;
    }
    Ok(model)
}

/// Functional form of [`BayesModel::update`].
pub fn update_one(mut model: BayesModel, instance: &Instance) -> Result<BayesModel> {
    model.update(instance)?;
    Ok(model)
}
