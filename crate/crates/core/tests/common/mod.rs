//! Independent oracles and generators shared by the integration tests.
//!
//! The oracle formulas are written differently from the library on purpose:
//! entropy as `log2 N - (1/N) sum c log2 c`, and the root split by listing
//! every candidate test explicitly.

#![allow(dead_code)]

use netact_core::config::PipelineConfig;
use netact_core::dataset::csv::{read_csv, CsvOptions};
use netact_core::dataset::{AttributeKind, AttributeSpec, Cell, Dataset, Instance, Schema};
use netact_core::pipeline::preprocess;
use netact_core::synthetic::capture_csv;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

pub fn oracle_entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    (xlog2x(n) - counts.iter().map(|&c| xlog2x(c)).sum::<f64>()) / n
}

pub fn oracle_gain(parent: &[f64], branches: &[Vec<f64>]) -> f64 {
    let n: f64 = parent.iter().sum();
    oracle_entropy(parent)
        - branches
            .iter()
            .map(|b| b.iter().sum::<f64>() / n * oracle_entropy(b))
            .sum::<f64>()
}

pub fn oracle_split_info(branches: &[Vec<f64>]) -> f64 {
    let sizes: Vec<f64> = branches.iter().map(|b| b.iter().sum()).collect();
    oracle_entropy(&sizes)
}

/// Gain ratio, or `None` when split information is (numerically) zero.
pub fn oracle_gain_ratio(parent: &[f64], branches: &[Vec<f64>]) -> Option<f64> {
    let si = oracle_split_info(branches);
    (si >= 1e-10).then(|| oracle_gain(parent, branches) / si)
}

/// Every vector of `k` non-negative integers summing to at most `max_total`.
pub fn count_vectors(k: usize, max_total: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=left {
            prefix.push(c as f64);
            rec(k, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, max_total, &mut Vec::new(), &mut out);
    out
}

/// Candidate root test found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleTest {
    Nominal(usize),
    Threshold(usize, f64),
}

/// The test J48 must place at the root of an unpruned tree on a dataset with
/// no missing values, or `None` when the root must be a leaf.
///
/// Admissible tests have at least two branches holding `min_leaf` weight,
/// gain above 1e-10 and (for gain ratio) split information of at least
/// 1e-10. Among admissible tests, listed by attribute and then threshold, the
/// first whose score is within 1e-12 of the maximum wins.
pub fn oracle_root(ds: &Dataset, min_leaf: f64, use_ratio: bool) -> Option<OracleTest> {
    let schema = ds.schema();
    let ci = schema.class_index().unwrap();
    let k = schema.num_classes();
    let rows: Vec<(&Instance, usize)> = ds
        .instances()
        .iter()
        .map(|i| (i, i.values[ci].as_category().unwrap()))
        .collect();
    let mut parent = vec![0.0; k];
    for (inst, c) in &rows {
        parent[*c] += inst.weight;
    }
    let total: f64 = parent.iter().sum();
    if parent.iter().filter(|&&c| c > 0.0).count() <= 1 || total < 2.0 * min_leaf {
        return None;
    }
    let mut candidates: Vec<(OracleTest, f64)> = Vec::new();
    let mut consider = |test: OracleTest, branches: Vec<Vec<f64>>| {
        let big = branches.iter().filter(|b| b.iter().sum::<f64>() >= min_leaf).count();
        if big < 2 {
            return;
        }
        let gain = oracle_gain(&parent, &branches);
        if gain <= 1e-10 {
            return;
        }
        let score = if use_ratio {
            match oracle_gain_ratio(&parent, &branches) {
                Some(r) => r,
                None => return,
            }
        } else {
            gain
        };
        candidates.push((test, score));
    };
    for (a, attr) in schema.attributes().iter().enumerate() {
        if a == ci {
            continue;
        }
        match &attr.kind {
            AttributeKind::Nominal(d) => {
                let mut branches = vec![vec![0.0; k]; d.len()];
                for (inst, c) in &rows {
                    branches[inst.values[a].as_category().unwrap()][*c] += inst.weight;
                }
                consider(OracleTest::Nominal(a), branches);
            }
            AttributeKind::Numeric => {
                let mut xs: Vec<f64> = rows.iter().map(|(i, _)| i.values[a].as_number().unwrap()).collect();
                xs.sort_by(f64::total_cmp);
                xs.dedup();
                for w in xs.windows(2) {
                    let t = (w[0] + w[1]) / 2.0;
                    let mut branches = vec![vec![0.0; k]; 2];
                    for (inst, c) in &rows {
                        let b = usize::from(inst.values[a].as_number().unwrap() > t);
                        branches[b][*c] += inst.weight;
                    }
                    consider(OracleTest::Threshold(a, t), branches);
                }
            }
            AttributeKind::Text => {}
        }
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    candidates.into_iter().find(|c| c.1 >= best - 1e-12).map(|c| c.0)
}

/// Small random dataset: up to `max_attrs` nominal or numeric attributes
/// (integer-valued numerics, so thresholds tie often), 2 or 3 classes.
pub fn random_small_dataset(rng: &mut ChaCha8Rng, max_attrs: usize, max_rows: usize) -> Dataset {
    let n_attrs = rng.random_range(1..=max_attrs);
    let k = rng.random_range(2..=3);
    let mut attrs = Vec::new();
    for a in 0..n_attrs {
        if rng.random_bool(0.5) {
            let arity = rng.random_range(2..=4);
            attrs.push(AttributeSpec::nominal(format!("n{a}"), (0..arity).map(|v| format!("v{v}"))));
        } else {
            attrs.push(AttributeSpec::numeric(format!("x{a}")));
        }
    }
    attrs.push(AttributeSpec::nominal("class", (0..k).map(|c| format!("c{c}"))));
    let schema = Schema::new(attrs, Some(n_attrs)).unwrap();
    let n = rng.random_range(2..=max_rows);
    let rows = (0..n)
        .map(|_| {
            let class = rng.random_range(0..k);
            let mut values: Vec<Cell> = schema.attributes()[..n_attrs]
                .iter()
                .map(|attr| match &attr.kind {
                    AttributeKind::Nominal(d) => {
                        // Bias toward the class so splits carry signal.
                        if rng.random_bool(0.4) {
                            Cell::Category(class % d.len())
                        } else {
                            Cell::Category(rng.random_range(0..d.len()))
                        }
                    }
                    _ => Cell::Number(f64::from(rng.random_range(0..8u8)) + class as f64 * f64::from(rng.random_range(0..3u8))),
                })
                .collect();
            values.push(Cell::Category(class));
            Instance::new(values)
        })
        .collect();
    Dataset::new("random", schema, rows).unwrap()
}

/// Mixed-attribute dataset with missing cells and fractional weights.
pub fn random_mixed_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    let schema = Schema::new(
        vec![
            AttributeSpec::numeric("Length"),
            AttributeSpec::numeric("Time"),
            AttributeSpec::nominal("Protocol", ["TCP", "UDP", "DNS", "ICMP"]),
            AttributeSpec::nominal("Flag", ["yes", "no"]),
            AttributeSpec::nominal("class", ["browser using", "music playing", "trouble shooting"]),
        ],
        Some(4),
    )
    .unwrap();
    let rows = (0..n)
        .map(|_| {
            let c = rng.random_range(0..3usize);
            let length = Cell::Number(rng.random_range(0.0..400.0) + 300.0 * c as f64);
            let time = Cell::Number(rng.random_range(-5.0..5.0) * (1.0 + c as f64));
            let protocol = Cell::Category((c + rng.random_range(0..2usize)) % 4);
            let flag = Cell::Category(rng.random_range(0..2usize));
            let mut values: Vec<Cell> = [length, time, protocol, flag]
                .into_iter()
                .map(|v| if rng.random_bool(0.05) { Cell::Missing } else { v })
                .collect();
            values.push(Cell::Category(c));
            let weight = if rng.random_bool(0.2) { 0.5 } else { 1.0 };
            Instance::with_weight(values, weight)
        })
        .collect();
    Dataset::new("mixed", schema, rows).unwrap()
}

/// Reads generated CSV captures and runs the default preprocessing.
pub fn synthetic_corpus(per_class: usize, seed: u64) -> Dataset {
    let cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    let mut captures = Vec::new();
    for a in 0..3 {
        let text = capture_csv(a, per_class, seed).unwrap();
        captures.push(read_csv(text.as_bytes(), &CsvOptions::default(), &format!("capture{a}")).unwrap());
    }
    preprocess(&cfg, captures, &cfg.labels).unwrap()
}
