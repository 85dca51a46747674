//! Plain-text and JSON rendering of an [`EvaluationReport`].

use std::fmt::Write as _;

use super::EvaluationReport;
use crate::error::{Error, Result};

fn fmt_count(w: f64) -> String {
    let r = (w * 100.0).round() / 100.0;
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.2}")
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "?".to_string(), |x| format!("{x:.3}"))
}

/// Weka-style column letters: a..z, then aa, ab, ...
fn column_tag(mut i: usize) -> String {
    let mut tag = Vec::new();
    loop {
        tag.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    tag.reverse();
    String::from_utf8(tag).unwrap_or_default()
}

/// Aligned text report. Timings are left out when `include_timing` is false
/// so that repeated runs produce identical bytes.
pub fn render_report(report: &EvaluationReport, include_timing: bool) -> String {
    let mut out = String::new();
    let row = |out: &mut String, label: &str, value: String| {
        let _ = writeln!(out, "{label:<12}{value}");
    };
    row(&mut out, "Regime", report.regime.to_string());
    row(&mut out, "Instances", fmt_count(report.evaluated_weight()));
    row(&mut out, "Accuracy", format!("{:.6}", report.accuracy));
    if include_timing {
        if let Some(t) = report.timing {
            row(
                &mut out,
                "Run time",
                format!(
                    "{:.3} s (train {:.3} s, test {:.3} s)",
                    t.train_seconds + t.test_seconds,
                    t.train_seconds,
                    t.test_seconds
                ),
            );
        }
    }
    row(&mut out, "Precision", fmt_metric(Some(report.precision)));
    row(&mut out, "Recall", fmt_metric(Some(report.recall)));
    row(&mut out, "F-measure", fmt_metric(Some(report.f_measure)));
    row(&mut out, "ROC Area", fmt_metric(report.roc_area));

    let name_width = report
        .per_class
        .iter()
        .map(|m| m.class.chars().count())
        .max()
        .unwrap_or(0)
        .max(5);
    let _ = writeln!(
        out,
        "\n{:<name_width$}  {:>9}  {:>6}  {:>9}  {:>8}  {:>7}",
        "Class", "Precision", "Recall", "F-measure", "ROC Area", "Support"
    );
    for m in &report.per_class {
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>9}  {:>6}  {:>9}  {:>8}  {:>7}",
            m.class,
            fmt_metric(Some(m.precision)),
            fmt_metric(Some(m.recall)),
            fmt_metric(Some(m.f_measure)),
            fmt_metric(m.roc_area),
            fmt_count(m.support)
        );
    }

    let classes = report.confusion.classes();
    let cells: Vec<Vec<String>> = report
        .confusion
        .cells()
        .iter()
        .map(|r| r.iter().map(|c| fmt_count(*c)).collect())
        .collect();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain((0..classes.len()).map(|i| column_tag(i).len()))
        .max()
        .unwrap_or(1)
        + 1;
    let _ = writeln!(out, "\nConfusion matrix (rows = actual, columns = predicted)");
    for i in 0..classes.len() {
        let _ = write!(out, "{:>width$}", column_tag(i));
    }
    let _ = writeln!(out, "   <-- classified as");
    for (i, r) in cells.iter().enumerate() {
        for c in r {
            let _ = write!(out, "{c:>width$}");
        }
        let _ = writeln!(out, " | {} = {}", column_tag(i), classes[i]);
    }

    if report.is_optimistic() {
        let _ = writeln!(
            out,
            "\nNote: validated on the training data; these figures are optimistic."
        );
    }
    if !report.empty_predictions.is_empty() {
        let _ = writeln!(
            out,
            "\nNote: never predicted (precision reported as 0): {}",
            report.empty_predictions.join(", ")
        );
    }
    out
}

/// JSON form of the report, with the same timing switch as [`render_report`].
pub fn report_to_json(report: &EvaluationReport, include_timing: bool) -> Result<String> {
    let mut value = serde_json::to_value(report).map_err(|e| Error::invalid(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        if !include_timing {
            obj.remove("timing");
        }
        obj.insert("optimistic".into(), report.is_optimistic().into());
    }
    serde_json::to_string_pretty(&value).map_err(|e| Error::invalid(e.to_string()))
}
