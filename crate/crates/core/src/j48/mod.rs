//! C4.5-style decision trees (Weka's J48).
//!
//! Growth picks, at each node, the test maximising the configured criterion
//! over every usable attribute: one multiway test per nominal attribute and one
//! binary `<=` test per midpoint between consecutive distinct values of a
//! numeric attribute. Text attributes are never split on. Instances whose test
//! value is missing travel down every branch with weight proportional to the
//! branch's known weight, both while growing and while predicting.
//!
//! With pruning on, each subtree is checked as soon as it is grown and is
//! replaced by a leaf or by its largest child when the pessimistic error
//! estimate does not increase.

mod prune;
mod render;

use log::warn;
use serde::{Deserialize, Serialize};

pub use prune::prune;
pub use render::{parse_rendered, render_text, RenderedNode};

use crate::criteria::{ratio, ClassDistribution, Criterion};
use crate::dataset::{AttributeKind, Cell, Dataset, Instance, Schema};
use crate::error::{Error, Result};

/// Candidates whose information gain does not exceed this are ignored.
pub const MIN_GAIN: f64 = 1e-10;
/// Criterion scores closer than this are ties, resolved by attribute index
/// and then by threshold.
pub const SCORE_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct J48Params {
    pub criterion: Criterion,
    /// Confidence factor for pessimistic pruning, in (0, 0.5].
    pub confidence: f64,
    /// Minimum weight two branches must hold for a split to be considered.
    pub min_leaf_weight: f64,
    pub pruning: bool,
    pub max_depth: Option<usize>,
}

impl Default for J48Params {
    fn default() -> Self {
        J48Params {
            criterion: Criterion::GainRatio,
            confidence: 0.25,
            min_leaf_weight: 2.0,
            pruning: true,
            max_depth: None,
        }
    }
}

impl J48Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence <= 0.5) {
            return Err(Error::invalid(format!(
                "confidence must lie in (0, 0.5], got {}",
                self.confidence
            )));
        }
        if self.min_leaf_weight.is_nan() || self.min_leaf_weight < 1.0 {
            return Err(Error::invalid(format!(
                "min_leaf_weight must be at least 1, got {}",
                self.min_leaf_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    /// One child per domain value of a nominal attribute.
    Nominal { attribute: usize },
    /// Two children: `value <= threshold` and `value > threshold`.
    Threshold { attribute: usize, threshold: f64 },
}

impl SplitTest {
    pub fn attribute(&self) -> usize {
        match self {
            SplitTest::Nominal { attribute } | SplitTest::Threshold { attribute, .. } => *attribute,
        }
    }

    /// Branch taken by `cell`, `None` when the value is missing or unknown.
    fn branch(&self, cell: &Cell, arity: usize) -> Option<usize> {
        match (self, cell) {
            (SplitTest::Nominal { .. }, Cell::Category(c)) if *c < arity => Some(*c),
            (SplitTest::Threshold { threshold, .. }, Cell::Number(x)) => Some(usize::from(*x > *threshold)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Training weight per class reaching this leaf (may be all zero for
        /// an empty nominal branch).
        distribution: ClassDistribution,
        /// Majority class; an empty leaf predicts its parent's majority.
        predicted: usize,
    },
    Internal {
        test: SplitTest,
        distribution: ClassDistribution,
        /// Fraction of known-valued training weight per branch, used to
        /// spread instances with a missing test value.
        branch_weights: Vec<f64>,
        children: Vec<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(distribution: ClassDistribution, predicted: usize) -> Self {
        TreeNode::Leaf {
            distribution,
            predicted,
        }
    }

    pub fn distribution(&self) -> &ClassDistribution {
        match self {
            TreeNode::Leaf { distribution, .. } | TreeNode::Internal { distribution, .. } => distribution,
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::num_leaves).sum(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => 1 + children.iter().map(TreeNode::num_nodes).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => 1 + children.iter().map(TreeNode::depth).max().unwrap_or(0),
        }
    }

    pub fn test(&self) -> Option<&SplitTest> {
        match self {
            TreeNode::Internal { test, .. } => Some(test),
            TreeNode::Leaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    schema: Schema,
    fingerprint: String,
    params: J48Params,
    root: TreeNode,
    /// Training rows skipped because their class was missing.
    dropped_unlabeled: usize,
}

impl TreeModel {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn params(&self) -> &J48Params {
        &self.params
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn dropped_unlabeled(&self) -> usize {
        self.dropped_unlabeled
    }

    pub fn num_classes(&self) -> usize {
        self.schema.num_classes()
    }

    /// Assembles a model from parts, checking the tree against the schema.
    pub fn from_parts(schema: Schema, params: J48Params, root: TreeNode) -> Result<Self> {
        let k = schema.num_classes();
        if k == 0 {
            return Err(Error::invalid("tree model needs a labeled schema"));
        }
        check_node(&root, &schema, k)?;
        Ok(TreeModel {
            fingerprint: schema.fingerprint(),
            schema,
            params,
            root,
            dropped_unlabeled: 0,
        })
    }

    /// Structural check used after deserializing.
    pub(crate) fn validate(&self) -> Result<()> {
        if self.fingerprint != self.schema.fingerprint() {
            return Err(Error::Integrity("tree fingerprint does not match its schema".into()));
        }
        self.params.validate().map_err(|e| Error::Integrity(e.to_string()))?;
        let k = self.num_classes();
        if k == 0 {
            return Err(Error::Integrity("tree schema has no class attribute".into()));
        }
        check_node(&self.root, &self.schema, k)
    }

    /// Laplace-smoothed class probabilities for `instance`.
    pub fn predict_distribution(&self, instance: &Instance) -> Result<Vec<f64>> {
        if instance.values.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "instance has {} values, model expects {}",
                instance.values.len(),
                self.schema.len()
            )));
        }
        let k = self.num_classes();
        let mut out = vec![0.0; k];
        self.descend(&self.root, instance, 1.0, self.root.distribution(), &mut out);
        let sum: f64 = out.iter().sum();
        for p in &mut out {
            *p /= sum;
        }
        Ok(out)
    }

    fn descend(&self, node: &TreeNode, inst: &Instance, weight: f64, parent: &ClassDistribution, out: &mut [f64]) {
        match node {
            TreeNode::Leaf { distribution, .. } => {
                let dist = if distribution.total() > 0.0 { distribution } else { parent };
                let k = out.len() as f64;
                let denom = dist.total() + k;
                for (o, c) in out.iter_mut().zip(dist.counts()) {
                    *o += weight * (c + 1.0) / denom;
                }
            }
            TreeNode::Internal {
                test,
                distribution,
                branch_weights,
                children,
            } => match test.branch(&inst.values[test.attribute()], children.len()) {
                Some(b) => self.descend(&children[b], inst, weight, distribution, out),
                None => {
                    for (child, &bw) in children.iter().zip(branch_weights) {
                        if bw > 0.0 {
                            self.descend(child, inst, weight * bw, distribution, out);
                        }
                    }
                }
            },
        }
    }
}

fn check_node(node: &TreeNode, schema: &Schema, k: usize) -> Result<()> {
    if node.distribution().num_classes() != k {
        return Err(Error::Integrity("node distribution width differs from class count".into()));
    }
    let TreeNode::Internal {
        test,
        branch_weights,
        children,
        ..
    } = node
    else {
        return Ok(());
    };
    let a = test.attribute();
    if a >= schema.len() || Some(a) == schema.class_index() {
        return Err(Error::Integrity(format!("split on invalid attribute index {a}")));
    }
    let arity = match (test, &schema.attribute(a).kind) {
        (SplitTest::Nominal { .. }, AttributeKind::Nominal(d)) => d.len(),
        (SplitTest::Threshold { threshold, .. }, AttributeKind::Numeric) if threshold.is_finite() => 2,
        _ => return Err(Error::Integrity(format!("split test does not fit attribute {a}"))),
    };
    if children.len() != arity || branch_weights.len() != arity {
        return Err(Error::Integrity(format!(
            "node on attribute {a} has {} children, expected {arity}",
            children.len()
        )));
    }
    children.iter().try_for_each(|c| check_node(c, schema, k))
}

// ---------------------------------------------------------------------------
// Growth

type Items = Vec<(u32, f64)>;

enum Column {
    Numeric(Vec<f64>),
    Nominal { values: Vec<u32>, arity: usize },
}

const NOMINAL_MISSING: u32 = u32::MAX;

struct Grower<'a> {
    columns: Vec<Option<Column>>,
    classes: Vec<usize>,
    num_classes: usize,
    params: &'a J48Params,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    attribute: usize,
    threshold: Option<f64>,
    score: f64,
}

/// Keeps every candidate within [`SCORE_TIE`] of the best score seen so far,
/// in the order offered; the first survivor wins.
struct Ranking {
    best: f64,
    kept: Vec<Candidate>,
}

impl Ranking {
    fn new() -> Self {
        Ranking {
            best: f64::NEG_INFINITY,
            kept: Vec::new(),
        }
    }

    fn offer(&mut self, c: Candidate) {
        if c.score > self.best {
            self.best = c.score;
            let floor = self.best - SCORE_TIE;
            self.kept.retain(|k| k.score >= floor);
        }
        if c.score >= self.best - SCORE_TIE {
            self.kept.push(c);
        }
    }

    fn winner(&self) -> Option<Candidate> {
        self.kept.first().copied()
    }
}

fn entropy_counts(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

fn split_entropy(totals: impl Iterator<Item = f64>, total: f64) -> f64 {
    entropy_counts(&totals.collect::<Vec<_>>(), total)
}

/// Trains a J48 tree. Rows with a missing class are skipped (and counted).
pub fn train_tree(dataset: &Dataset, params: &J48Params) -> Result<TreeModel> {
    params.validate()?;
    let schema = dataset.schema();
    let Some(class_index) = schema.class_index() else {
        return Err(Error::invalid("cannot train on an unlabeled dataset"));
    };
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let num_classes = schema.num_classes();

    let mut rows = Vec::with_capacity(dataset.len());
    let mut classes = Vec::with_capacity(dataset.len());
    let mut dropped = 0;
    for inst in dataset.instances() {
        match inst.values[class_index].as_category() {
            Some(c) => {
                rows.push(inst);
                classes.push(c);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("j48: skipped {dropped} training rows with a missing class");
    }
    if rows.is_empty() {
        return Err(Error::invalid("no training rows carry a class label"));
    }

    let columns = schema
        .attributes()
        .iter()
        .enumerate()
        .map(|(j, attr)| {
            if j == class_index {
                return None;
            }
            match &attr.kind {
                AttributeKind::Numeric => Some(Column::Numeric(
                    rows.iter().map(|r| r.values[j].as_number().unwrap_or(f64::NAN)).collect(),
                )),
                AttributeKind::Nominal(domain) => Some(Column::Nominal {
                    values: rows
                        .iter()
                        .map(|r| r.values[j].as_category().map_or(NOMINAL_MISSING, |c| c as u32))
                        .collect(),
                    arity: domain.len(),
                }),
                AttributeKind::Text => None,
            }
        })
        .collect();

    let grower = Grower {
        columns,
        classes,
        num_classes,
        params,
    };
    let items: Items = rows.iter().enumerate().map(|(i, r)| (i as u32, r.weight)).collect();
    let root_dist = grower.distribution(&items);
    let root = grower.grow(&items, 0, root_dist.majority());

    Ok(TreeModel {
        schema: schema.clone(),
        fingerprint: schema.fingerprint(),
        params: params.clone(),
        root,
        dropped_unlabeled: dropped,
    })
}

impl Grower<'_> {
    fn distribution(&self, items: &Items) -> ClassDistribution {
        let mut d = ClassDistribution::new(self.num_classes);
        for &(i, w) in items {
            d.add(self.classes[i as usize], w);
        }
        d
    }

    fn grow(&self, items: &Items, depth: usize, parent_majority: usize) -> TreeNode {
        let dist = self.distribution(items);
        if dist.total() <= 0.0 {
            return TreeNode::leaf(dist, parent_majority);
        }
        let predicted = dist.majority();
        let at_depth_limit = self.params.max_depth.is_some_and(|d| depth >= d);
        if dist.is_pure() || dist.total() < 2.0 * self.params.min_leaf_weight || at_depth_limit {
            return TreeNode::leaf(dist, predicted);
        }

        let Some(best) = self.best_split(items, &dist) else {
            return TreeNode::leaf(dist, predicted);
        };
        let test = match best.threshold {
            Some(threshold) => SplitTest::Threshold {
                attribute: best.attribute,
                threshold,
            },
            None => SplitTest::Nominal {
                attribute: best.attribute,
            },
        };
        let (parts, branch_weights) = self.route(&test, items, None);
        let children = parts
            .iter()
            .map(|part| self.grow(part, depth + 1, predicted))
            .collect();
        let node = TreeNode::Internal {
            test,
            distribution: dist,
            branch_weights,
            children,
        };
        if self.params.pruning {
            self.prune_node(node, items)
        } else {
            node
        }
    }

    /// Splits `items` by `test`. Missing values are spread over branches in
    /// proportion to known weight; with no known weight, `fallback` is used.
    fn route(&self, test: &SplitTest, items: &Items, fallback: Option<&[f64]>) -> (Vec<Items>, Vec<f64>) {
        let column = self.columns[test.attribute()].as_ref().expect("split on usable attribute");
        let arity = match column {
            Column::Nominal { arity, .. } => *arity,
            Column::Numeric(_) => 2,
        };
        let branch_of = |i: u32| -> Option<usize> {
            match (column, test) {
                (Column::Nominal { values, .. }, _) => {
                    let v = values[i as usize];
                    (v != NOMINAL_MISSING).then_some(v as usize)
                }
                (Column::Numeric(values), SplitTest::Threshold { threshold, .. }) => {
                    let x = values[i as usize];
                    (!x.is_nan()).then(|| usize::from(x > *threshold))
                }
                _ => None,
            }
        };

        let mut parts: Vec<Items> = vec![Vec::new(); arity];
        let mut known = vec![0.0; arity];
        let mut unknown = Vec::new();
        for &(i, w) in items {
            match branch_of(i) {
                Some(b) => {
                    parts[b].push((i, w));
                    known[b] += w;
                }
                None => unknown.push((i, w)),
            }
        }
        let known_total: f64 = known.iter().sum();
        let fractions: Vec<f64> = if known_total > 0.0 {
            known.iter().map(|k| k / known_total).collect()
        } else if let Some(f) = fallback {
            f.to_vec()
        } else {
            vec![1.0 / arity as f64; arity]
        };
        for (i, w) in unknown {
            for (b, &f) in fractions.iter().enumerate() {
                if f > 0.0 {
                    parts[b].push((i, w * f));
                }
            }
        }
        (parts, fractions)
    }

    fn best_split(&self, items: &Items, dist: &ClassDistribution) -> Option<Candidate> {
        let mut ranking = Ranking::new();
        for (attribute, column) in self.columns.iter().enumerate() {
            match column {
                Some(Column::Nominal { values, arity }) => {
                    self.nominal_candidate(attribute, values, *arity, items, dist.total(), &mut ranking)
                }
                Some(Column::Numeric(values)) => {
                    self.numeric_candidates(attribute, values, items, dist.total(), &mut ranking)
                }
                None => {}
            }
        }
        ranking.winner()
    }

    /// Gain on known values scaled by the known fraction; split information
    /// counts missing-valued weight as one extra branch.
    fn score(&self, known_parent_entropy: f64, known_total: f64, total: f64, branches: &[&[f64]], missing: f64) -> Option<f64> {
        let branch_totals: Vec<f64> = branches.iter().map(|b| b.iter().sum()).collect();
        let min_leaf = self.params.min_leaf_weight;
        if branch_totals.iter().filter(|&&t| t >= min_leaf).count() < 2 {
            return None;
        }
        let conditional: f64 = branches
            .iter()
            .zip(&branch_totals)
            .map(|(b, &t)| t / known_total * entropy_counts(b, t))
            .sum();
        let gain = (known_parent_entropy - conditional) * (known_total / total);
        if gain <= MIN_GAIN {
            return None;
        }
        match self.params.criterion {
            Criterion::InformationGain => Some(gain),
            Criterion::GainRatio => {
                let totals = branch_totals.iter().copied().chain((missing > 0.0).then_some(missing));
                ratio(gain, split_entropy(totals, total))
            }
        }
    }

    fn nominal_candidate(&self, attribute: usize, values: &[u32], arity: usize, items: &Items, total: f64, ranking: &mut Ranking) {
        let k = self.num_classes;
        let mut counts = vec![0.0; arity * k];
        let mut missing = 0.0;
        for &(i, w) in items {
            let v = values[i as usize];
            if v == NOMINAL_MISSING {
                missing += w;
            } else {
                counts[v as usize * k + self.classes[i as usize]] += w;
            }
        }
        let known_total = total - missing;
        if known_total <= 0.0 {
            return;
        }
        let mut parent = vec![0.0; k];
        for row in counts.chunks(k) {
            for (p, c) in parent.iter_mut().zip(row) {
                *p += c;
            }
        }
        let branches: Vec<&[f64]> = counts.chunks(k).collect();
        if let Some(score) = self.score(entropy_counts(&parent, known_total), known_total, total, &branches, missing) {
            ranking.offer(Candidate {
                attribute,
                threshold: None,
                score,
            });
        }
    }

    fn numeric_candidates(&self, attribute: usize, values: &[f64], items: &Items, total: f64, ranking: &mut Ranking) {
        let k = self.num_classes;
        let mut known: Vec<(f64, usize, f64)> = items
            .iter()
            .filter_map(|&(i, w)| {
                let x = values[i as usize];
                (!x.is_nan()).then(|| (x, self.classes[i as usize], w))
            })
            .collect();
        if known.len() < 2 {
            return;
        }
        known.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut parent = vec![0.0; k];
        for &(_, c, w) in &known {
            parent[c] += w;
        }
        let known_total: f64 = parent.iter().sum();
        let missing = (total - known_total).max(0.0);
        let parent_entropy = entropy_counts(&parent, known_total);

        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];
        for idx in 0..known.len() - 1 {
            let (x, c, w) = known[idx];
            left[c] += w;
            let next = known[idx + 1].0;
            if next <= x {
                continue;
            }
            for ((r, p), l) in right.iter_mut().zip(&parent).zip(&left) {
                *r = (p - l).max(0.0);
            }
            if let Some(score) = self.score(parent_entropy, known_total, total, &[&left, &right], missing) {
                let mid = x + (next - x) / 2.0;
                let threshold = if mid < next { mid } else { x };
                ranking.offer(Candidate {
                    attribute,
                    threshold: Some(threshold),
                    score,
                });
            }
        }
    }

    // -----------------------------------------------------------------------
    // Pruning with access to the training items

    /// Keeps the subtree, collapses it to a leaf, or raises its largest child,
    /// whichever has the lowest pessimistic error (preferring the simpler).
    fn prune_node(&self, node: TreeNode, items: &Items) -> TreeNode {
        let cf = self.params.confidence;
        let TreeNode::Internal {
            distribution,
            branch_weights,
            children,
            ..
        } = &node
        else {
            return node;
        };
        if prune::no_training_gain(&node) {
            return TreeNode::leaf(distribution.clone(), distribution.majority());
        }
        let as_leaf = prune::leaf_estimate(distribution, cf);
        let as_is = prune::subtree_estimate(&node, cf);
        let largest = branch_weights
            .iter()
            .enumerate()
            .fold(0, |best, (i, &w)| if w > branch_weights[best] { i } else { best });
        let raised = match &children[largest] {
            child @ TreeNode::Internal { .. } => self.estimate_with(child, items),
            TreeNode::Leaf { .. } => f64::INFINITY,
        };
        const EPS: f64 = 1e-9;
        if as_leaf <= as_is + EPS && as_leaf <= raised + EPS {
            return TreeNode::leaf(distribution.clone(), distribution.majority());
        }
        if raised <= as_is + EPS {
            return self.redistribute(&children[largest], items, distribution.majority());
        }
        node
    }

    /// Pessimistic error of `node`'s subtree if it classified `items`.
    fn estimate_with(&self, node: &TreeNode, items: &Items) -> f64 {
        let cf = self.params.confidence;
        match node {
            TreeNode::Leaf { .. } => prune::leaf_estimate(&self.distribution(items), cf),
            TreeNode::Internal {
                test,
                branch_weights,
                children,
                ..
            } => {
                let (parts, _) = self.route(test, items, Some(branch_weights));
                children.iter().zip(&parts).map(|(c, p)| self.estimate_with(c, p)).sum()
            }
        }
    }

    /// Copy of `node` with every distribution recomputed from `items`.
    fn redistribute(&self, node: &TreeNode, items: &Items, parent_majority: usize) -> TreeNode {
        let dist = self.distribution(items);
        let predicted = if dist.total() > 0.0 { dist.majority() } else { parent_majority };
        match node {
            TreeNode::Leaf { .. } => TreeNode::leaf(dist, predicted),
            TreeNode::Internal {
                test,
                branch_weights,
                children,
                ..
            } => {
                let (parts, fractions) = self.route(test, items, Some(branch_weights));
                let children = children
                    .iter()
                    .zip(&parts)
                    .map(|(c, p)| self.redistribute(c, p, predicted))
                    .collect();
                TreeNode::Internal {
                    test: test.clone(),
                    distribution: dist,
                    branch_weights: fractions,
                    children,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;
