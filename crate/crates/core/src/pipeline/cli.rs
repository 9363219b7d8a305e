//! Command-line front end. [`run`] returns the process exit code.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::corpus;
use crate::molgraph::parse_smiles;
use crate::reaction::dataset::{build_rare_subset, preprocess, read_records, write_records, ProcessedRecord, Split};
use crate::reaction::Vocabulary;

use super::{
    beam_search, evaluate_topn, load_checkpoint, parse_predictions, read_file, save_checkpoint, train,
    write_file, write_predictions, Accuracy, Example, GraphRetro, PipelineError, Prediction, TrainConfig,
};

#[derive(Debug, Parser)]
#[command(name = "graphretro", version, about = "Single-step retrosynthesis by graph edits and leaving groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract edits and leaving groups from mapped reactions.
    Preprocess(PreprocessArgs),
    /// Train a model on a processed dataset.
    Train(TrainArgs),
    /// Predict ranked reactants for products.
    Predict(PredictArgs),
    /// Top-n accuracy of a prediction file.
    Evaluate(EvaluateArgs),
    /// Summary of a processed dataset.
    Stats(StatsArgs),
    /// Write the built-in synthetic reaction corpus.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// `reactants>>product[<TAB>class]` lines with atom maps.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Train, dev and test fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// `key=value` file; `--set` overrides it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// One product per line, optionally followed by a tab and a class. A
    /// reaction line contributes its product.
    #[arg(long, conflicts_with = "records")]
    pub input: Option<PathBuf>,
    /// Processed dataset; products of `--split` are predicted.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value_t = 10)]
    pub beam: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// One reactant set per line, in prediction-block order.
    #[arg(long, conflicts_with = "records")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10,50")]
    pub n: Vec<usize>,
    /// Also report edit-only and group-only accuracy (needs `--records`).
    #[arg(long, requires = "records")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Signature count at or below which a reaction is rare.
    #[arg(long, default_value_t = 10)]
    pub rare_threshold: usize,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Number of reactions; all when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parse arguments and run. Usage errors give 1.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn parse_split(s: &str) -> Result<Split, PipelineError> {
    Split::from_name(s).ok_or_else(|| PipelineError::Config(format!("unknown split {s:?}")))
}

fn load_records(path: &Path) -> Result<Vec<ProcessedRecord>, PipelineError> {
    Ok(read_records(&read_file(&path_str(path))?)?)
}

fn load_model(path: &Path) -> Result<GraphRetro, PipelineError> {
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path_str(path),
        source,
    })?;
    let model = load_checkpoint(&bytes)?;
    log::info!("checkpoint config hash {} seed {}", model.config.hash(), model.config.seed);
    Ok(model)
}

pub fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Preprocess(a) => run_preprocess(a),
        Command::Train(a) => run_train(a),
        Command::Predict(a) => run_predict(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Stats(a) => run_stats(a),
        Command::Corpus(a) => {
            let lines = match a.n {
                Some(n) => corpus::generate(n, a.seed),
                None => corpus::all_reactions(),
            };
            log::info!("corpus seed {}", a.seed);
            write_file(&path_str(&a.output), lines.join("\n") + "\n")
        }
    }
}

fn run_preprocess(a: PreprocessArgs) -> Result<(), PipelineError> {
    let ratios: [f64; 3] = a
        .ratios
        .as_slice()
        .try_into()
        .map_err(|_| PipelineError::Config("--ratios needs three values".into()))?;
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || ratios.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(PipelineError::Config(format!("bad split ratios {ratios:?}")));
    }
    log::info!("preprocess seed {} ratios {ratios:?}", a.seed);
    let lines: Vec<String> = read_file(&path_str(&a.input))?.lines().map(str::to_string).collect();
    let prepared = preprocess(&lines, ratios, a.seed);
    std::fs::create_dir_all(&a.out_dir).map_err(|source| PipelineError::Io {
        path: path_str(&a.out_dir),
        source,
    })?;
    let out = |name: &str| path_str(&a.out_dir.join(name));
    write_file(&out("vocab.txt"), prepared.vocab.to_text())?;
    write_file(&out("records.tsv"), write_records(&prepared.records, &prepared.vocab))?;
    write_file(&out("stats.tsv"), prepared.stats.to_string())?;
    print!("{}", prepared.stats);
    Ok(())
}

fn run_train(a: TrainArgs) -> Result<(), PipelineError> {
    let mut config = match &a.config {
        Some(p) => TrainConfig::from_text(&read_file(&path_str(p))?)?,
        None => TrainConfig::default(),
    };
    for o in &a.overrides {
        config.apply(o)?;
    }
    config.validate()?;
    let vocab = Vocabulary::from_text(&read_file(&path_str(&a.vocab))?)?;
    let records = load_records(&a.records)?;
    let (model, report) = train(config, &records, vocab)?;
    write_file(&path_str(&a.output), save_checkpoint(&model))?;
    println!("best_epoch\t{}", report.best_epoch);
    println!("edit_accuracy\t{:.4}", report.best_accuracy.edit);
    println!("group_accuracy\t{:.4}", report.best_accuracy.group);
    Ok(())
}

/// `(input line, product SMILES, class)` from a plain input file.
fn read_inputs(path: &Path) -> Result<Vec<(String, String, Option<u8>)>, PipelineError> {
    let text = read_file(&path_str(path))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut fields = line.split('\t');
        let mol = fields.next().unwrap_or_default().trim();
        let product = mol.rsplit(">>").next().unwrap_or(mol).to_string();
        let class = match fields.next().map(str::trim) {
            None | Some("") | Some("-") => None,
            Some(c) => Some(
                c.parse::<u8>()
                    .map_err(|_| PipelineError::Data(format!("line {}: bad class {c:?}", n + 1)))?,
            ),
        };
        out.push((line.to_string(), product, class));
    }
    Ok(out)
}

/// Beam predictions for each input, computed in parallel and returned in
/// input order. Inputs that fail give an empty list.
pub fn predict_all(model: &GraphRetro, inputs: &[(String, String, Option<u8>)], beam: usize) -> Vec<(String, Vec<Prediction>)> {
    inputs
        .par_iter()
        .map(|(line, smiles, class)| {
            let preds = parse_smiles(smiles)
                .map_err(PipelineError::from)
                .and_then(|p| beam_search(model, &p, *class, beam));
            match preds {
                Ok(p) => (line.clone(), p),
                Err(e) => {
                    log::warn!("{smiles}: {e}");
                    (line.clone(), Vec::new())
                }
            }
        })
        .collect()
}

fn run_predict(a: PredictArgs) -> Result<(), PipelineError> {
    if a.beam == 0 {
        return Err(PipelineError::Config("--beam must be at least 1".into()));
    }
    let model = load_model(&a.checkpoint)?;
    let inputs = match (&a.input, &a.records) {
        (Some(p), _) => read_inputs(p)?,
        (None, Some(r)) => {
            let split = parse_split(&a.split)?;
            load_records(r)?
                .iter()
                .filter(|r| r.split == split)
                .map(|r| {
                    let s = crate::molgraph::write_smiles(&r.product, true, true);
                    (s.clone(), s, r.reaction_class)
                })
                .collect()
        }
        (None, None) => return Err(PipelineError::Config("one of --input or --records is required".into())),
    };
    let blocks = predict_all(&model, &inputs, a.beam);
    write_file(&path_str(&a.output), write_predictions(&blocks))
}

fn run_evaluate(a: EvaluateArgs) -> Result<(), PipelineError> {
    let blocks = parse_predictions(&read_file(&path_str(&a.predictions))?);
    let (truth, examples) = match (&a.truth, &a.records) {
        (Some(t), _) => {
            let text = read_file(&path_str(t))?;
            (text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().to_string()).collect(), None)
        }
        (None, Some(r)) => {
            let split = parse_split(&a.split)?;
            let records: Vec<ProcessedRecord> = load_records(r)?.into_iter().filter(|r| r.split == split).collect();
            let truth: Vec<String> = records.iter().map(|r| crate::molgraph::write_smiles(&r.reactants, true, false)).collect();
            (truth, Some(records))
        }
        (None, None) => return Err(PipelineError::Config("one of --truth or --records is required".into())),
    };
    if blocks.len() != truth.len() {
        log::warn!("{} prediction blocks for {} references", blocks.len(), truth.len());
    }
    let mut report = evaluate_topn(&blocks, &truth, &a.n);
    if let (Some(ck), Some(records)) = (&a.checkpoint, &examples) {
        let model = load_model(ck)?;
        let examples: Vec<Example> = records
            .iter()
            .filter_map(|r| Example::from_record(r, &model.vocab).ok())
            .collect();
        let refs: Vec<&Example> = examples.iter().collect();
        report.modules = Some(Accuracy::measure(&model, &refs, model.config.batch_size)?);
    }
    print!("{report}");
    Ok(())
}

fn run_stats(a: StatsArgs) -> Result<(), PipelineError> {
    let records = load_records(&a.records)?;
    let count = |s: Split| records.iter().filter(|r| r.split == s).count();
    println!("records\t{}", records.len());
    for s in [Split::Train, Split::Dev, Split::Test] {
        println!("{}\t{}", s.name(), count(s));
    }
    let max_edits = records.iter().map(|r| r.edits.len()).max().unwrap_or(0);
    for k in 1..=max_edits {
        println!("edits_{k}\t{}", records.iter().filter(|r| r.edits.len() == k).count());
    }
    let max_comp = records.iter().map(|r| r.group_keys.len()).max().unwrap_or(0);
    for k in 1..=max_comp {
        println!("synthons_{k}\t{}", records.iter().filter(|r| r.group_keys.len() == k).count());
    }
    if let Some(v) = &a.vocab {
        let vocab = Vocabulary::from_text(&read_file(&path_str(v))?)?;
        println!("vocab_size\t{}", vocab.len());
        let covered = records
            .iter()
            .filter(|r| r.group_labels(&vocab).iter().all(Option::is_some))
            .count();
        println!("vocab_coverage\t{covered}");
    }
    let rare = build_rare_subset(&records, a.rare_threshold);
    for (s, idx) in [Split::Train, Split::Dev, Split::Test].iter().zip(&rare) {
        println!("rare_{}\t{}", s.name(), idx.len());
    }
    Ok(())
}
