//! Split-quality measures in bits: entropy, information gain, split
//! information and gain ratio.
//!
//! `0 · log₂ 0` is taken as 0 everywhere, so pure and empty branches
//! contribute nothing. Split information uses the product form
//! `−Σ (|Sᵥ|/|S|) log₂(|Sᵥ|/|S|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this split information a gain ratio is undefined.
pub const MIN_SPLIT_INFO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// ID3: raw information gain.
    InformationGain,
    /// C4.5 / J48: information gain normalised by split information.
    #[default]
    GainRatio,
}

/// Weighted class counts, index-aligned with the class domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    counts: Vec<f64>,
    total: f64,
}

impl ClassDistribution {
    pub fn new(num_classes: usize) -> Self {
        ClassDistribution {
            counts: vec![0.0; num_classes],
            total: 0.0,
        }
    }

    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if let Some(c) = counts.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(format!("class count {c} is negative or not finite")));
        }
        let total = counts.iter().sum();
        Ok(ClassDistribution { counts, total })
    }

    pub fn add(&mut self, class: usize, weight: f64) {
        self.counts[class] += weight;
        self.total += weight;
    }

    pub fn add_all(&mut self, other: &ClassDistribution) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
    }

    pub fn subtract_all(&mut self, other: &ClassDistribution) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c = (*c - o).max(0.0);
        }
        self.total = self.counts.iter().sum();
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    /// Most frequent class; ties go to the lowest index.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Weight not belonging to the majority class.
    pub fn errors(&self) -> f64 {
        (self.total - self.counts[self.majority()]).max(0.0)
    }

    /// Weight not belonging to `class`.
    pub fn errors_against(&self, class: usize) -> f64 {
        (self.total - self.counts[class]).max(0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0.0).count() <= 1
    }

    pub fn scaled(&self, factor: f64) -> ClassDistribution {
        ClassDistribution {
            counts: self.counts.iter().map(|c| c * factor).collect(),
            total: self.total * factor,
        }
    }
}

/// One class distribution per branch of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPartition {
    pub branches: Vec<ClassDistribution>,
}

impl SplitPartition {
    pub fn new(branches: Vec<ClassDistribution>) -> Self {
        SplitPartition { branches }
    }

    pub fn total(&self) -> f64 {
        self.branches.iter().map(ClassDistribution::total).sum()
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

fn entropy_of_weights(weights: impl Iterator<Item = f64>, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let h = -weights.map(|w| plogp(w / total)).sum::<f64>();
    h.max(0.0)
}

pub fn entropy(dist: &ClassDistribution) -> f64 {
    entropy_of_weights(dist.counts.iter().copied(), dist.total)
}

fn check_partition(parent_total: f64, split: &SplitPartition) -> Result<()> {
    let sum = split.total();
    if (sum - parent_total).abs() > 1e-9 * parent_total.abs().max(1.0) {
        return Err(Error::invalid(format!(
            "branch weights sum to {sum}, parent holds {parent_total}"
        )));
    }
    Ok(())
}

/// `Entropy(S) − Σ (|Sᵥ|/|S|)·Entropy(Sᵥ)`.
pub fn information_gain(parent: &ClassDistribution, split: &SplitPartition) -> Result<f64> {
    check_partition(parent.total, split)?;
    if parent.total <= 0.0 {
        return Ok(0.0);
    }
    let conditional: f64 = split
        .branches
        .iter()
        .map(|b| b.total / parent.total * entropy(b))
        .sum();
    Ok(entropy(parent) - conditional)
}

/// Entropy of the branch sizes themselves.
pub fn split_info(split: &SplitPartition) -> Result<f64> {
    let total = split.total();
    if total <= 0.0 {
        return Err(Error::invalid("split information of an all-empty partition"));
    }
    Ok(entropy_of_weights(split.branches.iter().map(|b| b.total), total))
}

/// Information gain over split information; `None` (undefined) when the split
/// information is below [`MIN_SPLIT_INFO`]. Callers rank `None` last.
pub fn gain_ratio(parent: &ClassDistribution, split: &SplitPartition) -> Result<Option<f64>> {
    let gain = information_gain(parent, split)?;
    let si = split_info(split)?;
    Ok(ratio(gain, si))
}

pub(crate) fn ratio(gain: f64, split_info: f64) -> Option<f64> {
    (split_info >= MIN_SPLIT_INFO).then(|| gain / split_info)
}

impl Criterion {
    pub fn score(self, parent: &ClassDistribution, split: &SplitPartition) -> Result<Option<f64>> {
        match self {
            Criterion::InformationGain => information_gain(parent, split).map(Some),
            Criterion::GainRatio => gain_ratio(parent, split),
        }
    }
}
