//! Whole-capture verdicts.
//!
//! Every packet record of a capture is scored, the per-record posteriors are
//! averaged into one score per class, and the capture is assigned the class
//! with the highest average. The verdict is high-confidence only when that
//! average leads the runner-up by more than a margin.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::dataset::{align_to, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::argmax;
use crate::model::Classifier;

pub const DEFAULT_MARGIN: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    High,
    Low,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::High => "high",
            Confidence::Low => "low",
        })
    }
}

/// Outcome of the decision rule on one score vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub class: usize,
    pub confidence: Confidence,
    /// Lead of the top score over the runner-up (the top score itself when
    /// there is no runner-up).
    pub gap: f64,
}

/// Argmax (ties to the lowest index) over classes not `excluded`, with
/// confidence from the lead over the best remaining rival.
pub fn decide_excluding(scores: &[f64], margin: f64, excluded: &[bool]) -> Option<Decision> {
    let open = |i: &usize| !excluded.get(*i).copied().unwrap_or(false);
    let mut candidates = (0..scores.len()).filter(open);
    let mut best = candidates.next()?;
    for i in candidates {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let runner_up = (0..scores.len())
        .filter(open)
        .filter(|&i| i != best)
        .map(|i| scores[i])
        .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))));
    let gap = scores[best] - runner_up.unwrap_or(0.0);
    Some(Decision {
        class: best,
        confidence: if gap > margin { Confidence::High } else { Confidence::Low },
        gap,
    })
}

/// The decision rule over all classes.
pub fn decide(scores: &[f64], margin: f64) -> Result<Decision> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::invalid(format!("margin must be a non-negative number, got {margin}")));
    }
    decide_excluding(scores, margin, &[]).ok_or_else(|| Error::invalid("cannot decide on an empty score vector"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureVerdict {
    pub capture: String,
    pub classes: Vec<String>,
    /// Mean per-record posterior (the primary aggregate).
    pub mean_posterior: Vec<f64>,
    /// Share of records whose most likely class is each class.
    pub predicted_fraction: Vec<f64>,
    pub decision: Decision,
    pub instances: usize,
    /// Set when exclusive refinement changed the decision.
    #[serde(default)]
    pub refined: bool,
}

impl CaptureVerdict {
    pub fn label(&self) -> &str {
        &self.classes[self.decision.class]
    }

    pub fn confidence(&self) -> Confidence {
        self.decision.confidence
    }
}

/// Scores every record of `capture` and aggregates. The capture is matched
/// to the model schema by attribute name; its class column may be absent.
pub fn classify_capture<M: Classifier>(model: &M, capture: &Dataset, margin: f64) -> Result<CaptureVerdict> {
    if capture.is_empty() {
        return Err(Error::invalid(format!("capture `{}` has no records", capture.name)));
    }
    let schema = model.schema();
    let classes = schema
        .class_domain()
        .ok_or_else(|| Error::invalid("model has no class attribute"))?
        .to_vec();
    let aligned = align_to(capture, schema)?;
    let k = classes.len();
    let mut mean = vec![0.0; k];
    let mut votes = vec![0.0; k];
    let mut total = 0.0;
    for inst in aligned.instances() {
        let p = model.predict_distribution(inst)?;
        for (m, v) in mean.iter_mut().zip(&p) {
            *m += inst.weight * v;
        }
        votes[argmax(&p)] += inst.weight;
        total += inst.weight;
    }
    for v in mean.iter_mut().chain(votes.iter_mut()) {
        *v /= total;
    }
    let decision = decide(&mean, margin)?;
    Ok(CaptureVerdict {
        capture: capture.name.clone(),
        classes,
        mean_posterior: mean,
        predicted_fraction: votes,
        decision,
        instances: capture.len(),
        refined: false,
    })
}

/// Treats labels as mutually exclusive across captures.
///
/// Repeatedly takes the unsettled high-confidence verdict with the largest
/// lead, settles it and removes its label from every other capture's
/// choices; the rest are re-decided over the labels still open. Stops when
/// no unsettled verdict is high-confidence or when no label is left.
pub fn refine_exclusive(verdicts: &mut [CaptureVerdict], margin: f64) {
    let Some(k) = verdicts.first().map(|v| v.classes.len()) else {
        return;
    };
    let original: Vec<usize> = verdicts.iter().map(|v| v.decision.class).collect();
    let mut taken = vec![false; k];
    let mut settled = vec![false; verdicts.len()];
    loop {
        let pick = (0..verdicts.len())
            .filter(|&i| !settled[i] && verdicts[i].decision.confidence == Confidence::High)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if verdicts[b].decision.gap >= verdicts[i].decision.gap => Some(b),
                _ => Some(i),
            });
        let Some(i) = pick else { break };
        settled[i] = true;
        taken[verdicts[i].decision.class] = true;
        for (j, v) in verdicts.iter_mut().enumerate() {
            if settled[j] {
                continue;
            }
            if let Some(d) = decide_excluding(&v.mean_posterior, margin, &taken) {
                v.decision = d;
            }
        }
        if taken.iter().all(|t| *t) {
            break;
        }
    }
    for (v, o) in verdicts.iter_mut().zip(original) {
        v.refined = v.decision.class != o;
    }
}

/// Classes as rows, captures as columns, mean posteriors to three decimals,
/// with the decided label and confidence underneath each column.
pub fn render_verdict_table(verdicts: &[CaptureVerdict]) -> String {
    let Some(first) = verdicts.first() else {
        return String::new();
    };
    let row_labels = ["decision", "confidence", "records"];
    let label_width = first
        .classes
        .iter()
        .map(|c| c.chars().count())
        .chain(row_labels.iter().map(|l| l.len()))
        .max()
        .unwrap_or(0);
    let columns: Vec<Vec<String>> = verdicts
        .iter()
        .map(|v| {
            let mut col = vec![v.capture.clone()];
            col.extend(v.mean_posterior.iter().map(|p| format!("{p:.3}")));
            col.push(if v.refined {
                format!("{}*", v.label())
            } else {
                v.label().to_string()
            });
            col.push(v.confidence().to_string());
            col.push(v.instances.to_string());
            col
        })
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .map(|c| c.iter().map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    let line = |out: &mut String, label: &str, cells: Vec<&str>| {
        let _ = write!(out, "{label:<label_width$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    };
    line(&mut out, "", columns.iter().map(|c| c[0].as_str()).collect());
    let k = first.classes.len();
    for (r, class) in first.classes.iter().enumerate() {
        line(&mut out, class, columns.iter().map(|c| c[1 + r].as_str()).collect());
    }
    let rule: usize = label_width + widths.iter().map(|w| w + 2).sum::<usize>();
    let _ = writeln!(out, "{}", "-".repeat(rule));
    for (i, label) in row_labels.iter().enumerate() {
        line(&mut out, label, columns.iter().map(|c| c[1 + k + i].as_str()).collect());
    }
    if verdicts.iter().any(|v| v.refined) {
        out.push_str("* changed by exclusive-label refinement\n");
    }
    out
}

pub fn verdicts_to_json(verdicts: &[CaptureVerdict]) -> Result<String> {
    serde_json::to_string_pretty(verdicts).map_err(|e| Error::invalid(e.to_string()))
}

/// 0 when every verdict is high-confidence, 2 otherwise.
pub fn verdict_exit_code(verdicts: &[CaptureVerdict]) -> i32 {
    if verdicts.iter().all(|v| v.confidence() == Confidence::High) {
        0
    } else {
        2
    }
}
