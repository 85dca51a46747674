//! Weka-style tree printout, one test per line:
//!
//! ```text
//! Length <= 128.5
//! |   Protocol = DNS: trouble shooting (14.0)
//! |   Protocol = TCP: browser using (3.0/1.0)
//! Length > 128.5: music playing (20.0)
//! ```
//!
//! Leaves show `(weight)` or `(weight/errors)`. A single-leaf tree renders as
//! `: label (weight)`.

use super::{SplitTest, TreeModel, TreeNode};
use crate::dataset::{format_number, Schema};
use crate::error::{Error, Result};

const INDENT: &str = "|   ";

fn fmt_weight(w: f64) -> String {
    let r = (w * 100.0).round() / 100.0;
    if r.fract() == 0.0 {
        format!("{r:.1}")
    } else {
        format_number(r)
    }
}

fn leaf_text(label: &str, weight: f64, errors: f64) -> String {
    let errors = (errors * 100.0).round() / 100.0;
    if errors > 0.0 {
        format!("{label} ({}/{})", fmt_weight(weight), fmt_weight(errors))
    } else {
        format!("{label} ({})", fmt_weight(weight))
    }
}

fn branch_text(test: &SplitTest, branch: usize, schema: &Schema) -> String {
    let attr = schema.attribute(test.attribute());
    match test {
        SplitTest::Nominal { .. } => {
            let value = attr.kind.domain().map_or("?", |d| d[branch].as_str());
            format!("{} = {}", attr.name, value)
        }
        SplitTest::Threshold { threshold, .. } => {
            let op = if branch == 0 { "<=" } else { ">" };
            format!("{} {} {}", attr.name, op, format_number(*threshold))
        }
    }
}

pub fn render_text(model: &TreeModel) -> String {
    let classes = model.schema().class_domain().unwrap_or(&[]);
    let mut out = String::new();
    match model.root() {
        TreeNode::Leaf { distribution, predicted } => {
            out.push_str(": ");
            out.push_str(&leaf_text(&classes[*predicted], distribution.total(), distribution.errors_against(*predicted)));
            out.push('\n');
        }
        root => render_node(root, model.schema(), classes, 0, &mut out),
    }
    out
}

fn render_node(node: &TreeNode, schema: &Schema, classes: &[String], depth: usize, out: &mut String) {
    let TreeNode::Internal { test, children, .. } = node else {
        return;
    };
    for (b, child) in children.iter().enumerate() {
        out.push_str(&INDENT.repeat(depth));
        out.push_str(&branch_text(test, b, schema));
        match child {
            TreeNode::Leaf { distribution, predicted } => {
                out.push_str(": ");
                out.push_str(&leaf_text(
                    &classes[*predicted],
                    distribution.total(),
                    distribution.errors_against(*predicted),
                ));
                out.push('\n');
            }
            internal => {
                out.push('\n');
                render_node(internal, schema, classes, depth + 1, out);
            }
        }
    }
}

/// Structure recovered from [`render_text`] output.
#[derive(Debug, Clone, PartialEq)]
pub enum RenderedNode {
    Leaf { label: String, weight: f64, errors: f64 },
    Split { branches: Vec<(String, RenderedNode)> },
}

impl RenderedNode {
    pub fn num_leaves(&self) -> usize {
        match self {
            RenderedNode::Leaf { .. } => 1,
            RenderedNode::Split { branches } => branches.iter().map(|(_, n)| n.num_leaves()).sum(),
        }
    }

    /// Renders back to the text [`parse_rendered`] accepted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match self {
            RenderedNode::Leaf { label, weight, errors } => {
                out.push_str(": ");
                out.push_str(&leaf_text(label, *weight, *errors));
                out.push('\n');
            }
            split => split.render_into(0, &mut out),
        }
        out
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        let RenderedNode::Split { branches } = self else {
            return;
        };
        for (test, child) in branches {
            out.push_str(&INDENT.repeat(depth));
            out.push_str(test);
            match child {
                RenderedNode::Leaf { label, weight, errors } => {
                    out.push_str(": ");
                    out.push_str(&leaf_text(label, *weight, *errors));
                    out.push('\n');
                }
                split => {
                    out.push('\n');
                    split.render_into(depth + 1, out);
                }
            }
        }
    }
}

/// Splits `... : label (w[/e])` into its test, label, weight and errors.
fn split_leaf(line: &str, line_no: usize) -> Result<Option<(&str, RenderedNode)>> {
    if !line.ends_with(')') {
        return Ok(None);
    }
    let Some(open) = line.rfind(" (") else {
        return Ok(None);
    };
    let Some(colon) = line[..open].rfind(": ").or_else(|| line.starts_with(": ").then_some(0)) else {
        return Ok(None);
    };
    let label = &line[colon + 2..open];
    let numbers = &line[open + 2..line.len() - 1];
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::parse(line_no, format!("bad leaf weight `{s}`")))
    };
    let (weight, errors) = match numbers.split_once('/') {
        Some((w, e)) => (parse(w)?, parse(e)?),
        None => (parse(numbers)?, 0.0),
    };
    Ok(Some((
        &line[..colon],
        RenderedNode::Leaf {
            label: label.to_string(),
            weight,
            errors,
        },
    )))
}

pub fn parse_rendered(text: &str) -> Result<RenderedNode> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::parse(1, "empty tree text"));
    }
    if lines.len() == 1 && lines[0].starts_with(": ") {
        let (_, leaf) = split_leaf(lines[0], 1)?.ok_or_else(|| Error::parse(1, "malformed leaf line"))?;
        return Ok(leaf);
    }
    let mut pos = 0;
    let node = parse_block(&lines, &mut pos, 0)?;
    if pos != lines.len() {
        return Err(Error::parse(pos + 1, "unexpected indentation"));
    }
    Ok(node)
}

fn depth_of(line: &str) -> (usize, &str) {
    let mut depth = 0;
    let mut rest = line;
    while let Some(r) = rest.strip_prefix(INDENT) {
        depth += 1;
        rest = r;
    }
    (depth, rest)
}

fn parse_block(lines: &[&str], pos: &mut usize, depth: usize) -> Result<RenderedNode> {
    let mut branches = Vec::new();
    while *pos < lines.len() {
        let (d, body) = depth_of(lines[*pos]);
        if d < depth {
            break;
        }
        if d > depth {
            return Err(Error::parse(*pos + 1, "unexpected indentation"));
        }
        let line_no = *pos + 1;
        *pos += 1;
        match split_leaf(body, line_no)? {
            Some((test, leaf)) => branches.push((test.to_string(), leaf)),
            None => {
                let child = parse_block(lines, pos, depth + 1)?;
                branches.push((body.to_string(), child));
            }
        }
    }
    if branches.is_empty() {
        return Err(Error::parse(*pos + 1, "split line without branches"));
    }
    Ok(RenderedNode::Split { branches })
}
