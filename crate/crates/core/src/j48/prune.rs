//! C4.5 pessimistic error estimates and distribution-only pruning.

use super::TreeNode;
use crate::criteria::ClassDistribution;

/// Slack used by C4.5's collapse step: a subtree that does not lower training
/// errors by at least this much is replaced by a leaf.
const COLLAPSE_SLACK: f64 = 1e-3;
const EPS: f64 = 1e-9;

/// Standard normal quantile (Acklam's rational approximation, |rel err| < 1.2e-9).
pub(crate) fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Extra errors to add to `errors` observed among `total` weight so that the
/// sum is the upper confidence bound (at `confidence`) on the leaf's error.
pub(crate) fn added_errors(total: f64, errors: f64, confidence: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    if errors < 1.0 {
        let base = total * (1.0 - confidence.powf(1.0 / total));
        if errors == 0.0 {
            return base;
        }
        return base + errors * (added_errors(total, 1.0, confidence) - base);
    }
    if errors + 0.5 >= total {
        return (total - errors).max(0.0);
    }
    let z = normal_quantile(1.0 - confidence);
    let f = (errors + 0.5) / total;
    let z2 = z * z;
    let r = (f + z2 / (2.0 * total) + z * (f / total - f * f / total + z2 / (4.0 * total * total)).sqrt())
        / (1.0 + z2 / total);
    r * total - errors
}

/// Pessimistic error count of a leaf holding `dist`.
pub(crate) fn leaf_estimate(dist: &ClassDistribution, confidence: f64) -> f64 {
    let e = dist.errors();
    e + added_errors(dist.total(), e, confidence)
}

pub(crate) fn subtree_estimate(node: &TreeNode, confidence: f64) -> f64 {
    match node {
        TreeNode::Leaf { distribution, .. } => leaf_estimate(distribution, confidence),
        TreeNode::Internal { children, .. } => children.iter().map(|c| subtree_estimate(c, confidence)).sum(),
    }
}

pub(crate) fn training_errors(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { distribution, .. } => distribution.errors(),
        TreeNode::Internal { children, .. } => children.iter().map(training_errors).sum(),
    }
}

/// True when the subtree rooted here should become a leaf: either it does
/// not reduce training errors, or the leaf's pessimistic estimate is no worse.
pub(crate) fn should_collapse(node: &TreeNode, confidence: f64) -> bool {
    let TreeNode::Internal { distribution, .. } = node else {
        return false;
    };
    no_training_gain(node) || leaf_estimate(distribution, confidence) <= subtree_estimate(node, confidence) + EPS
}

/// The subtree classifies its training weight no better than a single leaf.
pub(crate) fn no_training_gain(node: &TreeNode) -> bool {
    training_errors(node) >= node.distribution().errors() - COLLAPSE_SLACK
}

/// Bottom-up pruning using only the class distributions stored in the tree:
/// each internal node is replaced by a leaf when that does not raise the
/// estimated error. Never increases the leaf count.
///
/// Replacing a node by its largest child needs the training instances and is
/// done during [`super::train_tree`].
pub fn prune(root: &TreeNode, confidence: f64) -> TreeNode {
    match root {
        TreeNode::Leaf { .. } => root.clone(),
        TreeNode::Internal {
            test,
            distribution,
            branch_weights,
            children,
        } => {
            let node = TreeNode::Internal {
                test: test.clone(),
                distribution: distribution.clone(),
                branch_weights: branch_weights.clone(),
                children: children.iter().map(|c| prune(c, confidence)).collect(),
            };
            if should_collapse(&node, confidence) {
                TreeNode::leaf(distribution.clone(), distribution.majority())
            } else {
                node
            }
        }
    }
}
