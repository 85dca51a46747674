//! Packet-record tables: schema, instances, and the preprocessing steps applied
//! to Wireshark exports before training (ID column removal, quote stripping,
//! labelling, and merging of per-activity captures).

pub mod arff;
pub mod csv;

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column order produced by Wireshark's "Export Packet Dissections as CSV".
pub const WIRESHARK_COLUMNS: [&str; 7] = [
    "No.",
    "Time",
    "Source",
    "Destination",
    "Protocol",
    "Length",
    "Info",
];

/// The three activities a capture can be attributed to.
pub const DEFAULT_LABELS: [&str; 3] = ["browser using", "music playing", "trouble shooting"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric,
    /// Ordered, duplicate-free category names; a `Cell::Category` indexes this list.
    Nominal(Vec<String>),
    Text,
}

impl AttributeKind {
    pub fn is_nominal(&self) -> bool {
        matches!(self, AttributeKind::Nominal(_))
    }

    pub fn domain(&self) -> Option<&[String]> {
        match self {
            AttributeKind::Nominal(d) => Some(d),
            _ => None,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            AttributeKind::Numeric => "numeric",
            AttributeKind::Nominal(_) => "nominal",
            AttributeKind::Text => "text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn text(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Text,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, domain: impl IntoIterator<Item = S>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal(domain.into_iter().map(Into::into).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    class_index: Option<usize>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>, class_index: Option<usize>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if let Some(prev) = seen.insert(attr.name.as_str(), i) {
                return Err(Error::Schema(format!(
                    "attribute name `{}` used at positions {} and {}",
                    attr.name, prev, i
                )));
            }
            if let AttributeKind::Nominal(domain) = &attr.kind {
                if domain.is_empty() {
                    return Err(Error::Schema(format!(
                        "nominal attribute `{}` has an empty domain",
                        attr.name
                    )));
                }
                let mut values = HashMap::new();
                for v in domain {
                    if values.insert(v.as_str(), ()).is_some() {
                        return Err(Error::Schema(format!(
                            "nominal attribute `{}` lists `{}` twice",
                            attr.name, v
                        )));
                    }
                }
            }
        }
        if let Some(ci) = class_index {
            match attributes.get(ci) {
                None => {
                    return Err(Error::Schema(format!(
                        "class index {} out of range for {} attributes",
                        ci,
                        attributes.len()
                    )))
                }
                Some(a) if !a.kind.is_nominal() => {
                    return Err(Error::Schema(format!(
                        "class attribute `{}` must be nominal",
                        a.name
                    )))
                }
                _ => {}
            }
        }
        Ok(Schema {
            attributes,
            class_index,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, index: usize) -> &AttributeSpec {
        &self.attributes[index]
    }

    pub fn class_index(&self) -> Option<usize> {
        self.class_index
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Class names, when a class attribute is set.
    pub fn class_domain(&self) -> Option<&[String]> {
        self.class_index.and_then(|ci| self.attributes[ci].kind.domain())
    }

    pub fn num_classes(&self) -> usize {
        self.class_domain().map_or(0, |d| d.len())
    }

    fn names(&self) -> String {
        self.attributes
            .iter()
            .map(|a| a.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownAttribute {
            name: name.to_string(),
            available: self.names(),
        })
    }

    /// Hex SHA-256 over attribute names, kinds, nominal domains and class index.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for a in &self.attributes {
            hasher.update(a.name.as_bytes());
            hasher.update([0x1f]);
            hasher.update(a.kind.tag().as_bytes());
            if let AttributeKind::Nominal(domain) = &a.kind {
                for v in domain {
                    hasher.update([0x1f]);
                    hasher.update(v.as_bytes());
                }
            }
            hasher.update([0x1e]);
        }
        match self.class_index {
            Some(ci) => hasher.update(format!("class={ci}").as_bytes()),
            None => hasher.update(b"class=none"),
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Number(f64),
    Category(usize),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<usize> {
        match self {
            Cell::Category(c) => Some(*c),
            _ => None,
        }
    }

    /// String form of the cell under `kind`; `None` for missing.
    pub fn render<'a>(&'a self, kind: &'a AttributeKind) -> Option<Cow<'a, str>> {
        match (self, kind) {
            (Cell::Missing, _) => None,
            (Cell::Number(x), _) => Some(Cow::Owned(format_number(*x))),
            (Cell::Category(c), AttributeKind::Nominal(d)) => d.get(*c).map(|s| Cow::Borrowed(s.as_str())),
            (Cell::Category(c), _) => Some(Cow::Owned(c.to_string())),
            (Cell::Text(s), _) => Some(Cow::Borrowed(s.as_str())),
        }
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub(crate) fn format_number(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<Cell>,
    pub weight: f64,
}

impl Instance {
    pub fn new(values: Vec<Cell>) -> Self {
        Instance { values, weight: 1.0 }
    }

    pub fn with_weight(values: Vec<Cell>, weight: f64) -> Self {
        Instance { values, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    schema: Schema,
    instances: Vec<Instance>,
}

fn check_cell(attr: &AttributeSpec, cell: &Cell) -> std::result::Result<(), String> {
    match (&attr.kind, cell) {
        (_, Cell::Missing) => Ok(()),
        (AttributeKind::Numeric, Cell::Number(x)) if x.is_finite() => Ok(()),
        (AttributeKind::Nominal(d), Cell::Category(c)) if *c < d.len() => Ok(()),
        (AttributeKind::Text, Cell::Text(_)) => Ok(()),
        (kind, cell) => Err(format!(
            "cell {:?} does not fit {} attribute `{}`",
            cell,
            kind.tag(),
            attr.name
        )),
    }
}

impl Dataset {
    pub fn new(name: impl Into<String>, schema: Schema, instances: Vec<Instance>) -> Result<Self> {
        for (row, inst) in instances.iter().enumerate() {
            if inst.values.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "instance {} has {} values, schema has {} attributes",
                    row,
                    inst.values.len(),
                    schema.len()
                )));
            }
            if !(inst.weight.is_finite() && inst.weight > 0.0) {
                return Err(Error::Schema(format!(
                    "instance {} has non-positive weight {}",
                    row, inst.weight
                )));
            }
            for (attr, cell) in schema.attributes.iter().zip(&inst.values) {
                check_cell(attr, cell).map_err(|m| Error::Schema(format!("instance {row}: {m}")))?;
            }
        }
        Ok(Dataset {
            name: name.into(),
            schema,
            instances,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.instances.iter().map(|i| i.weight).sum()
    }

    /// Class index of an instance, `None` when unlabeled or the cell is missing.
    pub fn class_of(&self, instance: &Instance) -> Option<usize> {
        self.schema
            .class_index
            .and_then(|ci| instance.values[ci].as_category())
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.schema.class_domain()
    }

    /// Builds a dataset over the same schema from a subset of instances.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            schema: self.schema.clone(),
            instances: indices.iter().map(|&i| self.instances[i].clone()).collect(),
        }
    }

    /// Sets the class attribute by name.
    pub fn with_class(mut self, name: &str) -> Result<Self> {
        let idx = self.schema.require(name)?;
        self.schema = Schema::new(self.schema.attributes, Some(idx))?;
        Ok(self)
    }
}

/// Configured activity label set. Order fixes class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(Vec<String>);

impl Default for LabelSet {
    fn default() -> Self {
        LabelSet(DEFAULT_LABELS.iter().map(|s| s.to_string()).collect())
    }
}

impl LabelSet {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::invalid("label set is empty"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::invalid(format!("label `{l}` listed twice")));
            }
        }
        Ok(LabelSet(labels))
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(", "))
    }
}

/// Removes an attribute, re-mapping the class index.
pub fn drop_column(dataset: &Dataset, name: &str) -> Result<Dataset> {
    let idx = dataset.schema.require(name)?;
    if dataset.schema.len() == 1 {
        return Err(Error::invalid(format!(
            "cannot drop `{name}`: a dataset must keep at least one attribute"
        )));
    }
    let mut attributes = dataset.schema.attributes.clone();
    attributes.remove(idx);
    let class_index = match dataset.schema.class_index {
        Some(ci) if ci == idx => None,
        Some(ci) if ci > idx => Some(ci - 1),
        other => other,
    };
    let instances = dataset
        .instances
        .iter()
        .map(|inst| {
            let mut values = inst.values.clone();
            values.remove(idx);
            Instance::with_weight(values, inst.weight)
        })
        .collect();
    Ok(Dataset {
        name: dataset.name.clone(),
        schema: Schema::new(attributes, class_index)?,
        instances,
    })
}

/// Removes every `"` from a text column. A cell that held only quotes becomes
/// an empty string, not missing.
pub fn strip_quotes(dataset: &Dataset, column: &str) -> Result<Dataset> {
    let idx = dataset.schema.require(column)?;
    if dataset.schema.attributes[idx].kind != AttributeKind::Text {
        return Err(Error::invalid(format!(
            "strip_quotes needs a text attribute, `{}` is {}",
            column,
            dataset.schema.attributes[idx].kind.tag()
        )));
    }
    let mut out = dataset.clone();
    for inst in &mut out.instances {
        if let Cell::Text(s) = &mut inst.values[idx] {
            if s.contains('"') {
                s.retain(|c| c != '"');
            }
        }
    }
    Ok(out)
}

/// Converts one column to `target` kind through the cells' string form.
/// Values that do not fit the target become missing.
pub fn convert_column(dataset: &Dataset, column: &str, target: AttributeKind) -> Result<Dataset> {
    let idx = dataset.schema.require(column)?;
    if Some(idx) == dataset.schema.class_index && !target.is_nominal() {
        return Err(Error::invalid(format!("class attribute `{column}` must stay nominal")));
    }
    let source = dataset.schema.attributes[idx].kind.clone();
    let lookup = domain_lookup(&target);
    let mut out = dataset.clone();
    for inst in &mut out.instances {
        let converted = convert_cell(&inst.values[idx], &source, &target, lookup.as_ref());
        inst.values[idx] = converted;
    }
    out.schema.attributes[idx].kind = target;
    Ok(out)
}

fn domain_lookup(kind: &AttributeKind) -> Option<HashMap<&str, usize>> {
    kind.domain()
        .map(|d| d.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect())
}

fn convert_cell(
    cell: &Cell,
    source: &AttributeKind,
    target: &AttributeKind,
    lookup: Option<&HashMap<&str, usize>>,
) -> Cell {
    let Some(text) = cell.render(source) else {
        return Cell::Missing;
    };
    match target {
        AttributeKind::Numeric => match cell {
            Cell::Number(x) => Cell::Number(*x),
            _ => parse_number(&text).map_or(Cell::Missing, Cell::Number),
        },
        AttributeKind::Nominal(_) => lookup
            .and_then(|l| l.get(text.as_ref()).copied())
            .map_or(Cell::Missing, Cell::Category),
        AttributeKind::Text => Cell::Text(text.into_owned()),
    }
}

/// Appends a nominal class attribute over `labels` with every instance set to `label`.
pub fn add_label(
    dataset: &Dataset,
    label: &str,
    labels: &LabelSet,
    class_attribute_name: &str,
) -> Result<Dataset> {
    if let Some(ci) = dataset.schema.class_index {
        return Err(Error::invalid(format!(
            "dataset already has class attribute `{}`",
            dataset.schema.attributes[ci].name
        )));
    }
    let class = labels.index_of(label).ok_or_else(|| {
        Error::invalid(format!("label `{label}` is not in the label set ({labels})"))
    })?;
    let mut attributes = dataset.schema.attributes.clone();
    attributes.push(AttributeSpec::nominal(class_attribute_name, labels.labels().iter().cloned()));
    let class_index = attributes.len() - 1;
    let instances = dataset
        .instances
        .iter()
        .map(|inst| {
            let mut values = inst.values.clone();
            values.push(Cell::Category(class));
            Instance::with_weight(values, inst.weight)
        })
        .collect();
    Ok(Dataset {
        name: dataset.name.clone(),
        schema: Schema::new(attributes, Some(class_index))?,
        instances,
    })
}

/// Concatenates datasets with identical attribute names, kinds and order.
/// Nominal domains are unioned in first-seen order and categories re-mapped.
pub fn merge(datasets: &[Dataset]) -> Result<Dataset> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::invalid("merge needs at least one dataset"))?;
    let width = first.schema.len();
    for ds in &datasets[1..] {
        if ds.schema.len() != width {
            return Err(Error::Schema(format!(
                "cannot merge `{}` ({} attributes) into `{}` ({} attributes)",
                ds.name,
                ds.schema.len(),
                first.name,
                width
            )));
        }
        for (a, b) in first.schema.attributes.iter().zip(&ds.schema.attributes) {
            if a.name != b.name || a.kind.tag() != b.kind.tag() {
                return Err(Error::Schema(format!(
                    "attribute mismatch: `{}` ({}) vs `{}` ({}) in `{}`",
                    a.name,
                    a.kind.tag(),
                    b.name,
                    b.kind.tag(),
                    ds.name
                )));
            }
        }
        if ds.schema.class_index != first.schema.class_index {
            return Err(Error::Schema(format!(
                "class attribute differs between `{}` and `{}`",
                first.name, ds.name
            )));
        }
    }

    // Unioned domains plus, per dataset and attribute, a map from old to new index.
    let mut attributes = first.schema.attributes.clone();
    let mut remaps: Vec<Vec<Option<Vec<usize>>>> = Vec::with_capacity(datasets.len());
    for _ in datasets {
        remaps.push(vec![None; width]);
    }
    for (j, attr) in attributes.iter_mut().enumerate() {
        let AttributeKind::Nominal(domain) = &mut attr.kind else {
            continue;
        };
        let mut index: HashMap<String, usize> =
            domain.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        for (d, ds) in datasets.iter().enumerate() {
            let src = ds.schema.attributes[j].kind.domain().unwrap_or(&[]);
            let map = src
                .iter()
                .map(|v| {
                    *index.entry(v.clone()).or_insert_with(|| {
                        domain.push(v.clone());
                        domain.len() - 1
                    })
                })
                .collect();
            remaps[d][j] = Some(map);
        }
    }

    let mut instances = Vec::with_capacity(datasets.iter().map(Dataset::len).sum());
    for (d, ds) in datasets.iter().enumerate() {
        for inst in &ds.instances {
            let values = inst
                .values
                .iter()
                .enumerate()
                .map(|(j, cell)| match (cell, &remaps[d][j]) {
                    (Cell::Category(c), Some(map)) => Cell::Category(map[*c]),
                    _ => cell.clone(),
                })
                .collect();
            instances.push(Instance::with_weight(values, inst.weight));
        }
    }
    Ok(Dataset {
        name: first.name.clone(),
        schema: Schema::new(attributes, first.schema.class_index)?,
        instances,
    })
}

/// Widens per-position attribute kinds so separately-inferred captures can be
/// merged: any text makes the column text; nominal (or numeric mixed with
/// nominal) makes it nominal unless the unioned domain exceeds
/// `nominal_threshold`, in which case it becomes text.
pub fn harmonize(datasets: &[Dataset], nominal_threshold: usize) -> Result<Vec<Dataset>> {
    let Some(first) = datasets.first() else {
        return Ok(Vec::new());
    };
    let mut out: Vec<Dataset> = datasets.to_vec();
    for (j, attr) in first.schema.attributes.iter().enumerate() {
        let kinds: Vec<&AttributeKind> = datasets
            .iter()
            .filter_map(|d| d.schema.attributes.get(j))
            .filter(|a| a.name == attr.name)
            .map(|a| &a.kind)
            .collect();
        if kinds.len() != datasets.len() || kinds.iter().all(|k| k.tag() == kinds[0].tag()) {
            continue;
        }
        let target = if kinds.iter().any(|k| **k == AttributeKind::Text) {
            AttributeKind::Text
        } else {
            // Numeric mixed with nominal: collect every rendered value.
            let mut domain: Vec<String> = Vec::new();
            let mut seen = HashSet::new();
            for ds in datasets {
                let kind = &ds.schema.attributes[j].kind;
                for inst in &ds.instances {
                    if let Some(v) = inst.values[j].render(kind) {
                        if seen.insert(v.to_string()) {
                            domain.push(v.into_owned());
                        }
                    }
                }
            }
            domain.sort();
            if domain.len() > nominal_threshold || domain.is_empty() {
                AttributeKind::Text
            } else {
                AttributeKind::Nominal(domain)
            }
        };
        for ds in &mut out {
            *ds = convert_column(ds, &attr.name, target.clone())?;
        }
    }
    Ok(out)
}

/// Re-expresses `dataset` in `target`'s schema by attribute name. The target's
/// class attribute may be absent from `dataset` (filled with missing). Nominal
/// values outside the target domain become missing.
pub fn align_to(dataset: &Dataset, target: &Schema) -> Result<Dataset> {
    let mut sources = Vec::with_capacity(target.len());
    let mut missing = Vec::new();
    for (j, attr) in target.attributes.iter().enumerate() {
        match dataset.schema.index_of(&attr.name) {
            Some(i) => sources.push(Some(i)),
            None if Some(j) == target.class_index => sources.push(None),
            None => {
                missing.push(attr.name.clone());
                sources.push(None);
            }
        }
    }
    let extra: Vec<String> = dataset
        .schema
        .attributes
        .iter()
        .filter(|a| target.index_of(&a.name).is_none())
        .map(|a| a.name.clone())
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(format!("missing attributes: {}", missing.join(", ")));
        }
        if !extra.is_empty() {
            parts.push(format!("unexpected attributes: {}", extra.join(", ")));
        }
        parts.push(format!("expected: {}", target.names()));
        return Err(Error::SchemaMismatch(parts.join("; ")));
    }

    let lookups: Vec<_> = target.attributes.iter().map(|a| domain_lookup(&a.kind)).collect();
    let instances = dataset
        .instances
        .iter()
        .map(|inst| {
            let values = target
                .attributes
                .iter()
                .zip(&sources)
                .zip(&lookups)
                .map(|((attr, src), lookup)| match src {
                    Some(i) => convert_cell(
                        &inst.values[*i],
                        &dataset.schema.attributes[*i].kind,
                        &attr.kind,
                        lookup.as_ref(),
                    ),
                    None => Cell::Missing,
                })
                .collect();
            Instance::with_weight(values, inst.weight)
        })
        .collect();
    Ok(Dataset {
        name: dataset.name.clone(),
        schema: target.clone(),
        instances,
    })
}

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.67;

/// Seeded shuffle, then the first `ceil(train_fraction * n)` instances train.
pub fn percentage_split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // 0.67 * 100 is 67.00000000000001 in binary floating point.
    let n_train = ((train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let n_train = n_train.min(n);
    let (train, test) = order.split_at(n_train);
    Ok((dataset.subset(train), dataset.subset(test)))
}
