//! Weka ARFF subset: `@relation`, `@attribute <name> numeric|{...}|string`,
//! dense `@data` rows, `?` for missing, `%` comments and optional trailing
//! `{weight}` per row.
//!
//! The class attribute is carried in a `% class-attribute: <name>` comment so
//! that files written here read back with the same class index. Files without
//! it read back unlabeled.

use std::io::{Read, Write};

use super::{format_number, parse_number, AttributeKind, AttributeSpec, Cell, Dataset, Instance, Schema};
use crate::error::{Error, Result};

const CLASS_PRAGMA: &str = "class-attribute:";

pub fn read_arff<R: Read>(mut source: R) -> Result<Dataset> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, format!("cannot read ARFF input: {e}")))?;

    let mut relation = String::new();
    let mut attributes: Vec<AttributeSpec> = Vec::new();
    let mut class_name: Option<String> = None;
    let mut in_data = false;
    let mut instances = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('%') {
            if !in_data {
                if let Some(rest) = comment.trim().strip_prefix(CLASS_PRAGMA) {
                    let tokens = Tokens::new(rest, line_no).collect_all()?;
                    class_name = tokens.into_iter().next().map(|t| t.text);
                }
            }
            continue;
        }
        if in_data {
            instances.push(parse_row(line, line_no, &attributes)?);
            continue;
        }
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            let mut tokens = Tokens::new(&line["@relation".len()..], line_no);
            relation = tokens.next_token()?.map(|t| t.text).unwrap_or_default();
        } else if lower.starts_with("@attribute") {
            attributes.push(parse_attribute(&line["@attribute".len()..], line_no)?);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::parse(line_no, format!("unexpected header line `{line}`")));
        }
    }
    if attributes.is_empty() {
        return Err(Error::parse(1, "no @attribute declarations"));
    }

    let class_index = match class_name {
        Some(name) => Some(
            attributes
                .iter()
                .position(|a| a.name == name)
                .ok_or_else(|| Error::parse(1, format!("class attribute `{name}` is not declared")))?,
        ),
        None => None,
    };
    let schema = Schema::new(attributes, class_index)?;
    Dataset::new(relation, schema, instances)
}

fn parse_attribute(rest: &str, line_no: usize) -> Result<AttributeSpec> {
    let mut tokens = Tokens::new(rest, line_no);
    let name = tokens
        .next_token()?
        .ok_or_else(|| Error::parse(line_no, "@attribute without a name"))?
        .text;
    let remainder = tokens.remainder().trim();
    if let Some(body) = remainder.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| Error::parse(line_no, format!("unterminated nominal domain for `{name}`")))?;
        let values: Vec<String> = Tokens::new(body, line_no)
            .collect_all()?
            .into_iter()
            .map(|t| t.text)
            .collect();
        return Ok(AttributeSpec::nominal(name, values));
    }
    match remainder.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(AttributeSpec::numeric(name)),
        "string" => Ok(AttributeSpec::text(name)),
        other => Err(Error::parse(
            line_no,
            format!("unknown attribute kind `{other}` for `{name}`"),
        )),
    }
}

fn parse_row(line: &str, line_no: usize, attributes: &[AttributeSpec]) -> Result<Instance> {
    if line.starts_with('{') {
        return Err(Error::parse(line_no, "sparse ARFF rows are not supported"));
    }
    let mut fields = Tokens::new(line, line_no).collect_all()?;
    let mut weight = 1.0;
    if fields.len() == attributes.len() + 1 {
        let last = fields.pop().unwrap();
        let w = last
            .text
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .filter(|_| !last.quoted)
            .and_then(parse_number)
            .filter(|w| *w > 0.0)
            .ok_or_else(|| Error::parse(line_no, format!("bad instance weight `{}`", last.text)))?;
        weight = w;
    }
    if fields.len() != attributes.len() {
        return Err(Error::parse(
            line_no,
            format!("expected {} values, found {}", attributes.len(), fields.len()),
        ));
    }
    let values = fields
        .into_iter()
        .zip(attributes)
        .map(|(field, attr)| {
            if !field.quoted && field.text == "?" {
                return Ok(Cell::Missing);
            }
            match &attr.kind {
                AttributeKind::Numeric => parse_number(&field.text).map(Cell::Number).ok_or_else(|| {
                    Error::parse(line_no, format!("`{}` is not a number for `{}`", field.text, attr.name))
                }),
                AttributeKind::Nominal(domain) => domain
                    .iter()
                    .position(|v| *v == field.text)
                    .map(Cell::Category)
                    .ok_or_else(|| {
                        Error::parse(
                            line_no,
                            format!("value `{}` is not in the domain of `{}`", field.text, attr.name),
                        )
                    }),
                AttributeKind::Text => Ok(Cell::Text(field.text)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::with_weight(values, weight))
}

struct Token {
    text: String,
    quoted: bool,
}

/// Comma/whitespace separated tokens with `'...'` or `"..."` quoting and
/// backslash escapes. `{...}` is kept whole as one unquoted token.
struct Tokens<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn new(s: &'a str, line: usize) -> Self {
        Tokens { rest: s, line }
    }

    fn remainder(&self) -> &'a str {
        self.rest
    }

    fn collect_all(mut self) -> Result<Vec<Token>> {
        let mut out = Vec::new();
        while let Some(t) = self.next_token()? {
            out.push(t);
        }
        Ok(out)
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        let s = self.rest.trim_start_matches(|c: char| c.is_whitespace() || c == ',');
        let mut chars = s.char_indices();
        let Some((_, first)) = chars.next() else {
            self.rest = s;
            return Ok(None);
        };
        if first == '\'' || first == '"' {
            let mut text = String::new();
            let mut escaped = false;
            for (i, c) in chars {
                if escaped {
                    text.push(match c {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        other => other,
                    });
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == first {
                    self.rest = &s[i + c.len_utf8()..];
                    return Ok(Some(Token { text, quoted: true }));
                } else {
                    text.push(c);
                }
            }
            return Err(Error::parse(self.line, "unterminated quoted value"));
        }
        let end = if first == '{' {
            s.find('}').map(|i| i + 1).unwrap_or(s.len())
        } else {
            s.find(|c: char| c == ',' || c.is_whitespace()).unwrap_or(s.len())
        };
        let text = s[..end].trim().to_string();
        self.rest = &s[end..];
        Ok(Some(Token { text, quoted: false }))
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s.chars().any(|c| {
            c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '\\' | '%' | '{' | '}')
        })
}

fn quote(s: &str) -> String {
    if !needs_quotes(s) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

pub fn write_arff<W: Write>(dataset: &Dataset, mut sink: W) -> Result<()> {
    let schema = dataset.schema();
    writeln!(sink, "@relation {}", quote(&dataset.name))?;
    if let Some(ci) = schema.class_index() {
        writeln!(sink, "% {} {}", CLASS_PRAGMA, quote(&schema.attribute(ci).name))?;
    }
    writeln!(sink)?;
    for attr in schema.attributes() {
        let kind = match &attr.kind {
            AttributeKind::Numeric => "numeric".to_string(),
            AttributeKind::Text => "string".to_string(),
            AttributeKind::Nominal(domain) => {
                let values: Vec<String> = domain.iter().map(|v| quote(v)).collect();
                format!("{{{}}}", values.join(","))
            }
        };
        writeln!(sink, "@attribute {} {}", quote(&attr.name), kind)?;
    }
    writeln!(sink)?;
    writeln!(sink, "@data")?;
    let mut line = String::new();
    for inst in dataset.instances() {
        line.clear();
        for (j, (cell, attr)) in inst.values.iter().zip(schema.attributes()).enumerate() {
            if j > 0 {
                line.push(',');
            }
            match cell {
                Cell::Missing => line.push('?'),
                Cell::Number(x) => line.push_str(&format_number(*x)),
                Cell::Category(c) => line.push_str(&quote(&attr.kind.domain().unwrap()[*c])),
                Cell::Text(s) => line.push_str(&quote(s)),
            }
        }
        if inst.weight != 1.0 {
            line.push_str(&format!(",{{{}}}", format_number(inst.weight)));
        }
        writeln!(sink, "{line}")?;
    }
    sink.flush()?;
    Ok(())
}
