//! Wireshark CSV exports. Field splitting is delegated to the `csv` crate; this
//! module adds line-numbered diagnostics and per-column type inference.

use std::collections::BTreeSet;
use std::io::Read;

use super::{parse_number, AttributeKind, AttributeSpec, Cell, Dataset, Instance, Schema};
use crate::error::{Error, Result};

pub const DEFAULT_NOMINAL_THRESHOLD: usize = 64;

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    pub quote_char: u8,
    /// Non-numeric columns with more distinct values than this become text.
    pub nominal_threshold: usize,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            quote_char: b'"',
            nominal_threshold: DEFAULT_NOMINAL_THRESHOLD,
        }
    }
}

/// Parses a comma-separated table and infers a schema: a column is numeric iff
/// every non-empty cell parses as a finite real; otherwise nominal (sorted
/// domain) up to `nominal_threshold` distinct values, else text. Empty cells
/// are missing.
pub fn read_csv<R: Read>(mut source: R, options: &CsvOptions, name: &str) -> Result<Dataset> {
    let mut raw = Vec::new();
    source.read_to_end(&mut raw)?;
    let text = String::from_utf8(raw).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        Error::parse(line, "input is not valid UTF-8")
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    check_quotes(text, options.quote_char as char)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .quote(options.quote_char)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        // A blank line in the middle of the file is a one-field empty record.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::parse(
                    line,
                    format!("expected {} fields, found {}", w, record.len()),
                ))
            }
            _ => {}
        }
        rows.push(record.iter().map(str::to_string).collect());
    }

    let Some(width) = width else {
        return Err(Error::parse(1, "no header or data rows"));
    };
    let names: Vec<String> = if options.has_header {
        rows.remove(0)
    } else {
        (1..=width).map(|i| format!("col_{i}")).collect()
    };

    let mut kinds = Vec::with_capacity(width);
    for j in 0..width {
        kinds.push(infer_kind(rows.iter().map(|r| r[j].as_str()), options.nominal_threshold));
    }

    let attributes: Vec<AttributeSpec> = names
        .into_iter()
        .zip(kinds)
        .map(|(name, kind)| AttributeSpec { name, kind })
        .collect();
    let schema = Schema::new(attributes, None)?;

    let instances = rows
        .into_iter()
        .map(|row| {
            let values = row
                .into_iter()
                .zip(schema.attributes())
                .map(|(field, attr)| to_cell(field, &attr.kind))
                .collect();
            Instance::new(values)
        })
        .collect();
    Dataset::new(name, schema, instances)
}

fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone, nominal_threshold: usize) -> AttributeKind {
    let present = cells.filter(|c| !c.is_empty());
    if present.clone().all(|c| parse_number(c).is_some()) {
        return AttributeKind::Numeric;
    }
    let distinct: BTreeSet<&str> = present.collect();
    if distinct.len() <= nominal_threshold {
        AttributeKind::Nominal(distinct.into_iter().map(str::to_string).collect())
    } else {
        AttributeKind::Text
    }
}

fn to_cell(field: String, kind: &AttributeKind) -> Cell {
    if field.is_empty() {
        return Cell::Missing;
    }
    match kind {
        AttributeKind::Numeric => parse_number(&field).map_or(Cell::Missing, Cell::Number),
        AttributeKind::Nominal(domain) => domain
            .binary_search(&field)
            .map_or(Cell::Missing, Cell::Category),
        AttributeKind::Text => Cell::Text(field),
    }
}

/// Reports the line on which an unterminated quoted field starts. The `csv`
/// crate silently reads such a field to end of input.
fn check_quotes(text: &str, quote: char) -> Result<()> {
    let mut line = 1;
    let mut at_field_start = true;
    let mut open_since: Option<usize> = None;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if open_since.is_some() {
            if c == quote {
                if chars.peek() == Some(&quote) {
                    chars.next();
                } else {
                    open_since = None;
                }
            } else if c == '\n' {
                line += 1;
            }
            continue;
        }
        match c {
            '\n' => {
                line += 1;
                at_field_start = true;
            }
            ',' => at_field_start = true,
            c if c == quote && at_field_start => {
                open_since = Some(line);
                at_field_start = false;
            }
            _ => at_field_start = false,
        }
    }
    match open_since {
        Some(start) => Err(Error::parse(start, "unbalanced quote: quoted field is never closed")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "\"No.\",\"Time\",\"Source\",\"Destination\",\"Protocol\",\"Length\",\"Info\"\n";

    fn read(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), &CsvOptions::default(), "cap")
    }

    #[test]
    fn wireshark_header_and_rows() {
        let text = format!(
            "{HEADER}\"1\",\"0.000000\",\"10.0.0.2\",\"93.184.216.34\",\"TCP\",\"66\",\"443 > 51234 [SYN]\"\n\
             \"2\",\"0.013400\",\"93.184.216.34\",\"10.0.0.2\",\"TLSv1.3\",\"1514\",\"Application Data\"\n"
        );
        let ds = read(&text).unwrap();
        assert_eq!(ds.schema().len(), 7);
        assert_eq!(ds.len(), 2);
        for name in ["No.", "Time", "Length"] {
            let i = ds.schema().index_of(name).unwrap();
            assert_eq!(ds.schema().attribute(i).kind, AttributeKind::Numeric, "{name}");
        }
        let proto = ds.schema().index_of("Protocol").unwrap();
        assert_eq!(
            ds.schema().attribute(proto).kind,
            AttributeKind::Nominal(vec!["TCP".into(), "TLSv1.3".into()])
        );
        assert_eq!(ds.instances()[1].values[1], Cell::Number(0.0134));
    }

    #[test]
    fn header_only_is_empty() {
        let ds = read(HEADER).unwrap();
        assert_eq!(ds.schema().len(), 7);
        assert!(ds.is_empty());
    }

    #[test]
    fn embedded_comma_stays_in_one_field() {
        let ds = read("a,Info\n1,\"TCP, retransmission\"\n").unwrap();
        assert_eq!(ds.schema().len(), 2);
        let kind = &ds.schema().attribute(1).kind;
        assert_eq!(ds.instances()[0].values[1].render(kind).unwrap(), "TCP, retransmission");
    }

    #[test]
    fn ragged_row_names_line() {
        let err = read("a,b\n1,2\n3\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbalanced_quote_names_line() {
        let err = read("a,b\n1,2\n3,\"open\n4,5\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("unbalanced"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escaped_quotes_are_balanced() {
        let ds = read("a,b\n1,\"say \"\"hi\"\"\"\n").unwrap();
        let kind = &ds.schema().attribute(1).kind;
        assert_eq!(ds.instances()[0].values[1].render(kind).unwrap(), "say \"hi\"");
    }

    #[test]
    fn empty_cells_are_missing_and_headerless_names() {
        let opts = CsvOptions {
            has_header: false,
            ..CsvOptions::default()
        };
        let ds = read_csv("1,,x\n2,3,\n".as_bytes(), &opts, "n").unwrap();
        let names: Vec<_> = ds.schema().attributes().iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["col_1", "col_2", "col_3"]);
        assert_eq!(ds.instances()[0].values[1], Cell::Missing);
        assert_eq!(ds.instances()[1].values[2], Cell::Missing);
        assert_eq!(ds.schema().attribute(1).kind, AttributeKind::Numeric);
    }

    #[test]
    fn threshold_switches_to_text() {
        let opts = CsvOptions {
            nominal_threshold: 2,
            ..CsvOptions::default()
        };
        let ds = read_csv("s\na\nb\nc\n".as_bytes(), &opts, "n").unwrap();
        assert_eq!(ds.schema().attribute(0).kind, AttributeKind::Text);
        let ds = read("s\na\nb\nc\n").unwrap();
        assert!(ds.schema().attribute(0).kind.is_nominal());
    }

    #[test]
    fn mixed_column_is_not_numeric() {
        let ds = read("x\n1\nabc\n").unwrap();
        assert!(ds.schema().attribute(0).kind.is_nominal());
        let ds = read("x\n1\nNaN\n").unwrap();
        assert!(ds.schema().attribute(0).kind.is_nominal());
    }
}
