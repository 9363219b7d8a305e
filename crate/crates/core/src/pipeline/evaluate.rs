use std::fmt;

use crate::molgraph::{canonical_smiles, parse_smiles};

use super::{Example, GraphRetro, PipelineError, Prediction};

/// Predictions for one input as read back from a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBlock {
    pub input: String,
    /// `(rank, score, reactants)`.
    pub predictions: Vec<(usize, f64, String)>,
}

/// Prediction file text: per input, the input line, then one
/// `rank<TAB>score<TAB>reactants<TAB>edits<TAB>tokens` line per candidate,
/// then a blank line.
pub fn write_predictions(blocks: &[(String, Vec<Prediction>)]) -> String {
    let mut out = String::new();
    for (input, preds) in blocks {
        out.push_str(input);
        out.push('\n');
        for p in preds {
            let tokens: Vec<String> = p.tokens.iter().map(|t| t.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                p.rank,
                p.score,
                p.reactants,
                p.edits,
                tokens.join(",")
            ));
        }
        out.push('\n');
    }
    out
}

/// Parse a prediction file. Only the first three columns are read;
/// malformed candidate lines are skipped with a warning.
pub fn parse_predictions(text: &str) -> Vec<PredictionBlock> {
    let mut blocks: Vec<PredictionBlock> = Vec::new();
    let mut open = false;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            open = false;
            continue;
        }
        if !open {
            blocks.push(PredictionBlock {
                input: line.to_string(),
                predictions: Vec::new(),
            });
            open = true;
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let parsed = (f.len() >= 3)
            .then(|| Some((f[0].parse::<usize>().ok()?, f[1].parse::<f64>().ok()?, f[2].to_string())))
            .flatten();
        match parsed {
            Some(p) if p.0 >= 1 => blocks.last_mut().unwrap().predictions.push(p),
            _ => log::warn!("prediction line {} is malformed; counted as a miss", n + 1),
        }
    }
    blocks
}

fn canonical(s: &str) -> Option<String> {
    parse_smiles(s).ok().map(|m| canonical_smiles(&m, false))
}

/// Top-n accuracies, optionally with per-module accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct TopNReport {
    pub total: usize,
    /// `(n, accuracy)`.
    pub rows: Vec<(usize, f64)>,
    pub modules: Option<Accuracy>,
}

impl fmt::Display for TopNReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n\taccuracy")?;
        for (n, acc) in &self.rows {
            writeln!(f, "{n}\t{acc:.4}")?;
        }
        if let Some(m) = &self.modules {
            writeln!(f, "edit_accuracy\t{:.4}", m.edit)?;
            writeln!(f, "group_accuracy\t{:.4}", m.group)?;
        }
        Ok(())
    }
}

/// Fraction of inputs whose true reactants appear at rank `≤ n`, compared
/// as canonical SMILES without atom maps. Block `i` answers `truth[i]`;
/// missing blocks are misses.
pub fn evaluate_topn(blocks: &[PredictionBlock], truth: &[String], ns: &[usize]) -> TopNReport {
    let mut hits = vec![0usize; ns.len()];
    for (i, t) in truth.iter().enumerate() {
        let Some(t) = canonical(t) else {
            log::warn!("true reactants {t:?} do not parse; counted as a miss");
            continue;
        };
        let Some(block) = blocks.get(i) else { continue };
        let first = block
            .predictions
            .iter()
            .filter(|p| canonical(&p.2).as_deref() == Some(t.as_str()))
            .map(|p| p.0)
            .min();
        if let Some(rank) = first {
            for (k, &n) in ns.iter().enumerate() {
                if rank <= n {
                    hits[k] += 1;
                }
            }
        }
    }
    let total = truth.len();
    let rows = ns
        .iter()
        .zip(hits)
        .map(|(&n, h)| (n, if total == 0 { 0.0 } else { h as f64 / total as f64 }))
        .collect();
    TopNReport {
        total,
        rows,
        modules: None,
    }
}

/// Top-1 accuracy of each module alone: edits against the true edits, and
/// leaving groups predicted on the true synthons against the true groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub edit: f64,
    pub group: f64,
}

impl Accuracy {
    pub fn measure(model: &GraphRetro, examples: &[&Example], batch: usize) -> Result<Accuracy, PipelineError> {
        if examples.is_empty() {
            return Ok(Accuracy { edit: 0.0, group: 0.0 });
        }
        let (mut edit_hits, mut group_hits) = (0, 0);
        for chunk in examples.chunks(batch.max(1)) {
            let edits = model.predict_edits(chunk)?;
            let groups = model.predict_groups(chunk)?;
            for ((e, pe), pg) in chunk.iter().zip(edits).zip(groups) {
                edit_hits += usize::from(pe.as_ref() == Some(&e.edits));
                let truth: Option<Vec<usize>> = e.labels.iter().copied().collect();
                group_hits += usize::from(truth.as_ref() == Some(&pg));
            }
        }
        let n = examples.len() as f64;
        Ok(Accuracy {
            edit: edit_hits as f64 / n,
            group: group_hits as f64 / n,
        })
    }
}
