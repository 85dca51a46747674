//! `netact`: classify network activity from Wireshark packet exports.
//!
//! Exit codes: 0 on success (or when every verdict is high-confidence),
//! 1 on any error, 2 when `predict` returns a low-confidence verdict.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use netact_core::config::{PipelineConfig, RegimeKind};
use netact_core::dataset::{Dataset, DEFAULT_LABELS};
use netact_core::evaluation::{render_report, report_to_json};
use netact_core::j48::render_text;
use netact_core::model::{load_model, save_model, Learner, Model};
use netact_core::naive_bayes::BayesModel;
use netact_core::pipeline;
use netact_core::predictor::{render_verdict_table, verdict_exit_code, verdicts_to_json};
use netact_core::synthetic::capture_csv;

#[derive(Parser)]
#[command(name = "netact", version, about = "Classify network activity from Wireshark packet exports")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override the configuration file.
#[derive(clap::Args)]
struct Overrides {
    /// TOML configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// j48, naive_bayes or naive_bayes_updateable.
    #[arg(long, global = true, value_parser = parse_learner)]
    learner: Option<Learner>,

    /// J48 pruning confidence factor, in (0, 0.5].
    #[arg(long, global = true)]
    confidence: Option<f64>,

    /// Lead over the runner-up class needed for a high-confidence verdict.
    #[arg(long, global = true)]
    margin: Option<f64>,

    /// Comma-separated activity labels, one per capture.
    #[arg(long, global = true, value_delimiter = ',')]
    labels: Option<Vec<String>>,

    /// Treat labels as mutually exclusive across predicted captures.
    #[arg(long, global = true)]
    exclusive: bool,

    /// Drop the Time column during preprocessing.
    #[arg(long, global = true)]
    drop_time: bool,

    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    TrainingSet,
    PercentageSplit,
    CrossValidation,
    SuppliedTestSet,
}

impl From<RegimeArg> for RegimeKind {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::TrainingSet => RegimeKind::TrainingSet,
            RegimeArg::PercentageSplit => RegimeKind::PercentageSplit,
            RegimeArg::CrossValidation => RegimeKind::CrossValidation,
            RegimeArg::SuppliedTestSet => RegimeKind::SuppliedTestSet,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a CSV export to ARFF.
    Convert { input: PathBuf, output: PathBuf },

    /// Drop columns, strip quotes, label and merge captures into one ARFF.
    Preprocess {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },

    /// Train the configured learner and save the model.
    Train {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },

    /// Evaluate the configured learner and print the metric report.
    Cv {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        regime: Option<RegimeArg>,
        /// Training share for the percentage-split regime.
        #[arg(long)]
        train_fraction: Option<f64>,
        /// Test set for the supplied-test-set regime.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Include wall-clock run times (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },

    /// Classify whole captures with a saved model.
    Predict {
        model: PathBuf,
        #[arg(required = true)]
        captures: Vec<PathBuf>,
    },

    /// Print a saved model.
    Inspect { model: PathBuf },

    /// Write a synthetic capture of one default activity as CSV.
    Generate {
        /// Activity label, e.g. "music playing".
        activity: String,
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        records: usize,
    },
}

fn parse_learner(s: &str) -> std::result::Result<Learner, String> {
    s.parse().map_err(|e: netact_core::Error| e.to_string())
}

fn config(opts: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = match &opts.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(k) = opts.k {
        cfg.validation.k = k;
    }
    if let Some(learner) = opts.learner {
        cfg.learner.learner = learner;
    }
    if let Some(c) = opts.confidence {
        cfg.learner.j48.confidence = c;
    }
    if let Some(m) = opts.margin {
        cfg.margin = m;
    }
    if let Some(labels) = &opts.labels {
        // New labels join the class domain after the configured ones.
        for l in labels {
            if !cfg.labels.contains(l) {
                cfg.labels.push(l.clone());
            }
        }
    }
    if opts.exclusive {
        cfg.exclusive = true;
    }
    if opts.drop_time && !cfg.preprocess.drop_columns.iter().any(|c| c == "Time") {
        cfg.preprocess.drop_columns.push("Time".into());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn existing(path: &Path) -> Result<&Path> {
    if !path.exists() {
        bail!("{}: no such file", path.display());
    }
    Ok(path)
}

fn read(path: &Path, cfg: &PipelineConfig) -> Result<Dataset> {
    pipeline::read_dataset(existing(path)?, cfg.preprocess.nominal_threshold)
        .with_context(|| format!("cannot read {}", path.display()))
}

fn read_model(path: &Path) -> Result<Model> {
    let file = File::open(existing(path)?).with_context(|| format!("cannot open {}", path.display()))?;
    load_model(BufReader::new(file)).with_context(|| format!("cannot load model {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_arff(dataset: &Dataset, path: &Path) -> Result<()> {
    pipeline::write_arff_file(dataset, path).with_context(|| format!("cannot write {}", path.display()))
}

fn bayes_summary(model: &BayesModel) -> String {
    let schema = model.schema();
    let classes = schema.class_domain().unwrap_or(&[]);
    let ci = schema.class_index();
    let mut out = String::new();
    let _ = writeln!(out, "Naive Bayes ({} classes, {} instances)", classes.len(), model.total_weight());
    let _ = writeln!(out);
    let total = model.total_weight();
    for (c, class) in classes.iter().enumerate() {
        let prior = if total > 0.0 { model.priors()[c] / total } else { 0.0 };
        let _ = writeln!(out, "Class {class}: prior {prior:.4} (weight {})", model.priors()[c]);
        for (a, attr) in schema.attributes().iter().enumerate() {
            if Some(a) == ci {
                continue;
            }
            if let Some(g) = model.gaussian(c, a) {
                let _ = writeln!(
                    out,
                    "  {}: mean {:.4}, std dev {:.4}, weight {}",
                    attr.name,
                    g.mean,
                    g.variance().sqrt(),
                    g.weight
                );
            } else if let Some(n) = model.nominal(c, a) {
                let domain = attr.kind.domain().unwrap_or(&[]);
                let counts: Vec<String> = domain
                    .iter()
                    .zip(&n.counts)
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(v, w)| format!("{v} {w}"))
                    .collect();
                let _ = writeln!(out, "  {}: {}", attr.name, counts.join(", "));
            }
        }
    }
    out
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = config(&cli.opts)?;
    let json = cli.opts.json;
    match cli.command {
        Command::Convert { input, output } => {
            let ds = read(&input, &cfg)?;
            write_arff(&ds, &output)?;
            println!(
                "{}: {} instances, {} attributes -> {}",
                input.display(),
                ds.len(),
                ds.schema().len(),
                output.display()
            );
        }
        Command::Preprocess { inputs, output } => {
            let captures = inputs.iter().map(|p| read(p, &cfg)).collect::<Result<Vec<_>>>()?;
            let labels = cli.opts.labels.clone().unwrap_or_else(|| cfg.labels.clone());
            let ds = pipeline::preprocess(&cfg, captures, &labels)?;
            write_arff(&ds, &output)?;
            println!(
                "{} captures: {} instances, {} attributes -> {}",
                inputs.len(),
                ds.len(),
                ds.schema().len(),
                output.display()
            );
        }
        Command::Train { dataset, output } => {
            let ds = read(&dataset, &cfg)?;
            let start = Instant::now();
            let model = pipeline::train(&cfg, &ds)?;
            info!("trained in {:.3} s", start.elapsed().as_secs_f64());
            let file = File::create(&output).with_context(|| format!("cannot write {}", output.display()))?;
            let mut sink = BufWriter::new(file);
            save_model(&model, &mut sink)?;
            sink.flush()?;
            let shape = match &model {
                Model::Tree(t) => format!(", {} leaves, {} nodes", t.root().num_leaves(), t.root().num_nodes()),
                Model::Bayes(_) => String::new(),
            };
            println!(
                "{} on {} instances{shape} -> {}",
                cfg.learner.learner,
                ds.len(),
                output.display()
            );
        }
        Command::Cv {
            dataset,
            regime,
            train_fraction,
            test,
            timing,
        } => {
            let mut cfg = cfg;
            if let Some(r) = regime {
                cfg.validation.regime = r.into();
            }
            if let Some(f) = train_fraction {
                cfg.validation.train_fraction = f;
            }
            if test.is_some() && regime.is_none() {
                cfg.validation.regime = RegimeKind::SuppliedTestSet;
            }
            cfg.validate()?;
            let ds = read(&dataset, &cfg)?;
            let test = test.map(|p| read(&p, &cfg)).transpose()?;
            let report = pipeline::evaluate(&cfg, &ds, test.as_ref())?;
            if json {
                println!("{}", report_to_json(&report, timing)?);
            } else {
                print!("{}", render_report(&report, timing));
            }
        }
        Command::Predict { model, captures } => {
            let model = read_model(&model)?;
            let captures = captures.iter().map(|p| read(p, &cfg)).collect::<Result<Vec<_>>>()?;
            let verdicts = pipeline::predict(&cfg, &model, &captures)?;
            if json {
                println!("{}", verdicts_to_json(&verdicts)?);
            } else {
                print!("{}", render_verdict_table(&verdicts));
            }
            return Ok(u8::try_from(verdict_exit_code(&verdicts)).unwrap_or(1));
        }
        Command::Inspect { model } => {
            let model = read_model(&model)?;
            if json {
                println!("{}", netact_core::model::model_to_json(&model)?);
            } else {
                match &model {
                    Model::Tree(t) => {
                        println!("J48 tree\n");
                        print!("{}", render_text(t));
                        println!();
                        println!("Number of Leaves  : {}", t.root().num_leaves());
                        println!("Size of the tree  : {}", t.root().num_nodes());
                    }
                    Model::Bayes(b) => print!("{}", bayes_summary(b)),
                }
            }
        }
        Command::Generate {
            activity,
            output,
            records,
        } => {
            let Some(index) = DEFAULT_LABELS.iter().position(|l| *l == activity) else {
                bail!(
                    "unknown activity `{activity}` (expected one of: {})",
                    DEFAULT_LABELS.join(", ")
                );
            };
            write_text(&output, &capture_csv(index, records, cfg.seed)?)?;
            println!("{activity}: {records} records -> {}", output.display());
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.opts.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
